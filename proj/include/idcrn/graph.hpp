#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "idcrn/types.hpp"

namespace idcrn {

using Edge = std::pair<Index, Index>;

/// Attributed undirected graph. Edges are stored once each as (u, v) with
/// u < v, sorted. Self-loops never appear in the edge set; they are added by
/// normalization only.
class Graph {
 public:
  Graph() = default;

  const Matrix& features() const { return features_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::optional<Labels>& labels() const { return labels_; }
  int num_classes() const { return num_classes_; }

  Index num_nodes() const { return features_.rows(); }
  Index feature_dim() const { return features_.cols(); }

  // Adjacency A as a symmetric 0/1 sparse matrix, without self-loops.
  SparseMatrix adjacency() const;
  // Self-looped adjacency A + I.
  SparseMatrix self_looped_adjacency() const;

 private:
  friend Graph build_graph(Matrix, std::vector<Edge>, std::optional<Labels>, std::optional<int>);

  Matrix features_;
  std::vector<Edge> edges_;
  std::optional<Labels> labels_;
  int num_classes_ = 1;
};

/// Validates and canonicalizes an attributed graph. Duplicate and reversed
/// edges collapse into one undirected edge. Throws std::invalid_argument on
/// out-of-range indices, self-loops, non-finite features, or label errors.
/// When num_classes is omitted it is 1 + the largest label (1 without labels).
Graph build_graph(Matrix features, std::vector<Edge> edges, std::optional<Labels> labels = std::nullopt,
                  std::optional<int> num_classes = std::nullopt);

/// Row-list convenience overload; throws on ragged rows.
Graph build_graph(const std::vector<std::vector<double>>& feature_rows, std::vector<Edge> edges,
                  std::optional<Labels> labels = std::nullopt, std::optional<int> num_classes = std::nullopt);

/// Symmetrically normalized self-looped adjacency D^-1/2 (A + I) D^-1/2.
class NormalizedAdjacency {
 public:
  explicit NormalizedAdjacency(SparseMatrix m) : matrix_(std::move(m)) {}

  const SparseMatrix& matrix() const { return matrix_; }
  Matrix dense() const { return Matrix(matrix_); }
  Index size() const { return matrix_.rows(); }

 private:
  SparseMatrix matrix_;
};

NormalizedAdjacency normalize_adjacency(const Graph& g);

struct SbmParams {
  std::vector<Index> block_sizes;
  double p_in = 0.2;
  double p_out = 0.01;
  std::vector<Vector> feature_means;  // one per block, all of equal length
  double feature_std = 0.3;
  std::uint64_t seed = 0;
};

/// Stochastic block model with Gaussian node attributes around each block
/// mean. Labels are block ids.
Graph sbm_generate(const SbmParams& params);

/// Means for a C-block SBM in `dim` dimensions whose pairwise Euclidean
/// distances all equal `separation` (scaled one-hot directions). Requires
/// dim >= C.
std::vector<Vector> equidistant_means(int num_blocks, Index dim, double separation);

}  // namespace idcrn
