#include "idcrn/graph.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "idcrn/rng.hpp"

namespace idcrn {

Graph build_graph(Matrix features, std::vector<Edge> edges, std::optional<Labels> labels,
                  std::optional<int> num_classes) {
  const Index n = features.rows();
  if (!features.allFinite()) throw std::invalid_argument("features contain non-finite values");

  for (auto& [u, v] : edges) {
    if (u < 0 || v < 0 || u >= n || v >= n) {
      throw std::invalid_argument("index out of range: edge (" + std::to_string(u) + ", " + std::to_string(v) +
                                  ") on a graph with " + std::to_string(n) + " nodes");
    }
    if (u == v) throw std::invalid_argument("self-loop on node " + std::to_string(u) + " is not allowed");
    if (u > v) std::swap(u, v);
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

  int classes = 1;
  if (labels) {
    if (static_cast<Index>(labels->size()) != n) {
      throw std::invalid_argument("labels length " + std::to_string(labels->size()) + " does not match " +
                                  std::to_string(n) + " nodes");
    }
    int max_label = -1;
    for (int l : *labels) {
      if (l < 0) throw std::invalid_argument("negative label " + std::to_string(l));
      max_label = std::max(max_label, l);
    }
    classes = std::max(1, max_label + 1);
  }
  if (num_classes) {
    if (*num_classes < 1) throw std::invalid_argument("num_classes must be positive");
    if (labels && classes > *num_classes) {
      throw std::invalid_argument("label " + std::to_string(classes - 1) + " is not below num_classes " +
                                  std::to_string(*num_classes));
    }
    classes = *num_classes;
  }

  Graph g;
  g.features_ = std::move(features);
  g.edges_ = std::move(edges);
  g.labels_ = std::move(labels);
  g.num_classes_ = classes;
  return g;
}

Graph build_graph(const std::vector<std::vector<double>>& feature_rows, std::vector<Edge> edges,
                  std::optional<Labels> labels, std::optional<int> num_classes) {
  const Index n = static_cast<Index>(feature_rows.size());
  const Index d = n == 0 ? 0 : static_cast<Index>(feature_rows.front().size());
  Matrix x(n, d);
  for (Index i = 0; i < n; ++i) {
    if (static_cast<Index>(feature_rows[i].size()) != d) {
      throw std::invalid_argument("ragged feature rows: row " + std::to_string(i) + " has " +
                                  std::to_string(feature_rows[i].size()) + " columns, expected " + std::to_string(d));
    }
    for (Index j = 0; j < d; ++j) x(i, j) = feature_rows[i][j];
  }
  return build_graph(std::move(x), std::move(edges), std::move(labels), num_classes);
}

SparseMatrix Graph::adjacency() const {
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(edges_.size() * 2);
  for (const auto& [u, v] : edges_) {
    triplets.emplace_back(u, v, 1.0);
    triplets.emplace_back(v, u, 1.0);
  }
  SparseMatrix a(num_nodes(), num_nodes());
  a.setFromTriplets(triplets.begin(), triplets.end());
  return a;
}

SparseMatrix Graph::self_looped_adjacency() const {
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(edges_.size() * 2 + num_nodes());
  for (const auto& [u, v] : edges_) {
    triplets.emplace_back(u, v, 1.0);
    triplets.emplace_back(v, u, 1.0);
  }
  for (Index i = 0; i < num_nodes(); ++i) triplets.emplace_back(i, i, 1.0);
  SparseMatrix a(num_nodes(), num_nodes());
  a.setFromTriplets(triplets.begin(), triplets.end());
  return a;
}

NormalizedAdjacency normalize_adjacency(const Graph& g) {
  SparseMatrix a = g.self_looped_adjacency();
  const Index n = a.rows();
  Vector inv_sqrt_degree(n);
  for (Index i = 0; i < n; ++i) inv_sqrt_degree(i) = 1.0 / std::sqrt(a.row(i).sum());
  for (Index i = 0; i < n; ++i) {
    for (SparseMatrix::InnerIterator it(a, i); it; ++it) {
      it.valueRef() *= inv_sqrt_degree(i) * inv_sqrt_degree(it.col());
    }
  }
  return NormalizedAdjacency(std::move(a));
}

Graph sbm_generate(const SbmParams& params) {
  const auto blocks = static_cast<Index>(params.block_sizes.size());
  if (blocks == 0) throw std::invalid_argument("sbm_generate: no blocks");
  for (Index s : params.block_sizes) {
    if (s <= 0) throw std::invalid_argument("sbm_generate: empty block");
  }
  if (!(params.p_out >= 0.0 && params.p_out <= params.p_in && params.p_in <= 1.0)) {
    throw std::invalid_argument("sbm_generate: require 0 <= p_out <= p_in <= 1");
  }
  if (static_cast<Index>(params.feature_means.size()) != blocks) {
    throw std::invalid_argument("sbm_generate: feature_means count must equal block count");
  }
  if (params.feature_std < 0.0) throw std::invalid_argument("sbm_generate: negative feature_std");
  const Index dim = params.feature_means.front().size();
  for (const auto& m : params.feature_means) {
    if (m.size() != dim) throw std::invalid_argument("sbm_generate: feature_means must share one dimension");
  }

  Labels labels;
  for (Index b = 0; b < blocks; ++b) labels.insert(labels.end(), params.block_sizes[b], static_cast<int>(b));
  const Index n = static_cast<Index>(labels.size());

  Rng edge_rng(params.seed, stream::kSbmEdges);
  std::vector<Edge> edges;
  for (Index u = 0; u < n; ++u) {
    for (Index v = u + 1; v < n; ++v) {
      const double p = labels[u] == labels[v] ? params.p_in : params.p_out;
      if (edge_rng.bernoulli(p)) edges.emplace_back(u, v);
    }
  }

  Rng feature_rng(params.seed, stream::kSbmFeatures);
  Matrix x(n, dim);
  for (Index i = 0; i < n; ++i) {
    const Vector& mean = params.feature_means[labels[i]];
    for (Index j = 0; j < dim; ++j) x(i, j) = mean(j) + feature_rng.normal(0.0, 1.0) * params.feature_std;
  }
  return build_graph(std::move(x), std::move(edges), std::move(labels), static_cast<int>(blocks));
}

std::vector<Vector> equidistant_means(int num_blocks, Index dim, double separation) {
  if (num_blocks < 1 || dim < num_blocks) throw std::invalid_argument("equidistant_means: need dim >= blocks >= 1");
  std::vector<Vector> means;
  for (int b = 0; b < num_blocks; ++b) {
    Vector m = Vector::Zero(dim);
    m(b) = separation / std::sqrt(2.0);
    means.push_back(std::move(m));
  }
  return means;
}

}  // namespace idcrn
