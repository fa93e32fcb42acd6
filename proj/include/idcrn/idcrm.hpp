#pragma once

#include "idcrn/graph.hpp"
#include "idcrn/types.hpp"

namespace idcrn {

/// Sample-correlation target T: the self-looped adjacency with entries
/// between confident nodes overwritten by 1 (same pseudo-label) or 0
/// (different pseudo-labels). Entries are produced on demand so that N x N
/// is only materialized when asked for.
class AffinityTarget {
 public:
  /// Identity target (original dual-correlation-reduction variant).
  static AffinityTarget identity(Index n);

  Index size() const { return n_; }
  bool is_identity() const { return identity_; }
  const Mask& confident_mask() const { return confident_; }

  double operator()(Index i, Index j) const;
  Matrix dense_rows(Index start, Index count) const;
  Matrix matrix() const { return dense_rows(0, n_); }

 private:
  friend AffinityTarget build_affinity_target(const SparseMatrix&, const Labels&, const Mask&, int);

  Index n_ = 0;
  bool identity_ = false;
  SparseMatrix base_;
  Labels labels_;
  Mask confident_;
  std::vector<Index> confident_nodes_;
};

/// Throws std::invalid_argument on length mismatches or a pseudo-label
/// outside 0..num_clusters-1.
AffinityTarget build_affinity_target(const SparseMatrix& a_selfloop, const Labels& pseudo_labels,
                                     const Mask& confident_mask, int num_clusters);

/// Row-vs-row cosine similarity, norms guarded by kNormEpsilon and results
/// clamped to [-1, 1].
Matrix cosine_similarity(const Matrix& a, const Matrix& b);

/// Back-propagates d(loss)/dS through cosine_similarity (clamping ignored).
void cosine_similarity_backward(const Matrix& a, const Matrix& b, const Matrix& ds, Matrix& da, Matrix& db);

/// Cross-view sample correlation S_N[i][j] = cos(z1_i, z2_j).
Matrix sample_correlation(const Matrix& z1, const Matrix& z2);

/// (1/N^2) sum (S_N - T)^2 on materialized matrices.
double sample_loss(const Matrix& s_n, const Matrix& t);

/// Same value computed in row blocks straight from the embeddings, never
/// holding S_N or T whole. Accumulates gradients into dz1 / dz2 when given.
double sample_loss(const Matrix& z1, const Matrix& z2, const AffinityTarget& t, Matrix* dz1 = nullptr,
                   Matrix* dz2 = nullptr);

/// Group means as columns (d x K). Empty groups fall back to the global mean.
Matrix readout(const Matrix& z, const Labels& groups, int k);

/// d(loss)/dz given d(loss)/d(readout).
Matrix readout_backward(const Matrix& d_readout, const Labels& groups, int k);

/// Cross-view feature correlation S_F[i][j] = cos(row i of zt1, row j of zt2).
Matrix feature_correlation(const Matrix& zt1, const Matrix& zt2);

/// (1/d^2) sum_i (S_ii - 1)^2 + (1/(d^2 - d)) sum_{i != j} S_ij^2. Requires d >= 2.
double feature_loss(const Matrix& s_f, Matrix* ds = nullptr);

/// Jensen-Shannon divergence between row-softmax(Z) and row-softmax(A Z),
/// averaged over rows. Lies in [0, ln 2].
double propagation_reg(const Matrix& z, const SparseMatrix& a_norm, Matrix* dz = nullptr);

/// l_n + l_f + gamma * l_r.
double idcrm_loss(double l_n, double l_f, double l_r, double gamma);

}  // namespace idcrn
