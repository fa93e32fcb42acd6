#pragma once

#include <vector>

#include "idcrn/graph.hpp"
#include "idcrn/rng.hpp"

namespace idcrn::testing {

inline Matrix random_matrix(Index rows, Index cols, Rng& rng, double scale = 1.0) {
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = rng.normal(0.0, scale);
  return m;
}

inline std::vector<Edge> random_edges(Index n, double p, Rng& rng) {
  std::vector<Edge> edges;
  for (Index u = 0; u < n; ++u)
    for (Index v = u + 1; v < n; ++v)
      if (rng.bernoulli(p)) edges.emplace_back(u, v);
  return edges;
}

inline Labels random_labels(Index n, int k, Rng& rng) {
  Labels l(static_cast<std::size_t>(n));
  for (auto& v : l) v = static_cast<int>(rng.below(static_cast<std::uint64_t>(k)));
  return l;
}

inline Graph random_graph(Index n, Index d, double p, Rng& rng, int classes = 2) {
  return build_graph(random_matrix(n, d, rng), random_edges(n, p, rng), random_labels(n, classes, rng), classes);
}

// Dense symmetric 0/1 adjacency without self-loops.
inline Matrix dense_adjacency(Index n, const std::vector<Edge>& edges) {
  Matrix a = Matrix::Zero(n, n);
  for (auto [u, v] : edges) a(u, v) = a(v, u) = 1.0;
  return a;
}

}  // namespace idcrn::testing
