#pragma once

#include <cstdint>
#include <vector>

#include "idcrn/types.hpp"

namespace idcrn {

struct KMeansOptions {
  int max_iter = 300;
  int restarts = 1;      // independent k-means++ seedings; lowest inertia wins
  double tol = 1e-10;    // stop once every center moves less than this (squared)
};

struct KMeansResult {
  Matrix centers;                      // C x d
  Labels assignments;                  // length N
  double inertia = 0.0;                // within-cluster sum of squares
  int iterations = 0;
  std::vector<double> inertia_history; // after each assignment step of the winning restart
};

/// Lloyd's algorithm from k-means++ seeding. A cluster that loses all members
/// is reseeded with the point farthest from its assigned center. Deterministic
/// for a given seed. Throws std::invalid_argument when C > N or C < 1.
KMeansResult kmeans(const Matrix& z, int num_clusters, std::uint64_t seed, const KMeansOptions& options = {});

/// Student-t (one degree of freedom) soft assignment, rows sum to 1.
Matrix soft_assign(const Matrix& z, const Matrix& centers);

/// Sharpened target p_ij ∝ q_ij^2 / f_j with f_j = sum_i q_ij. Columns with
/// f_j = 0 are excluded (left at 0) and recorded as warnings.
Matrix target_distribution(const Matrix& q);

/// sum_ij p_ij ln(p_ij / q_ij) / N, p = 0 terms skipped, q floored at 1e-12.
double kl_loss(const Matrix& p, const Matrix& q);

/// kl_loss(p, soft_assign(z, centers)) with p held fixed, plus its gradients
/// with respect to z and the centers (accumulated when non-null).
double kl_loss(const Matrix& p, const Matrix& z, const Matrix& centers, Matrix* dz, Matrix* dcenters);

/// Row-wise argmax (lowest index on ties).
Labels argmax_rows(const Matrix& q);

/// Per cluster, marks the ceil(fraction * n_c) members closest to their
/// assigned center; distance ties go to the lowest node index.
Mask select_confident(const Matrix& z, const Matrix& centers, const Labels& assignments, double fraction = 0.6);

/// Clustering head state carried through fine-tuning.
struct ClusterModel {
  Matrix centers;
  Matrix q;
  Matrix p;
  Labels pseudo_labels;
  Mask confident_mask;
};

/// Recomputes q, p, pseudo-labels and the confidence mask from z.
void refresh(ClusterModel& model, const Matrix& z, double confidence_fraction);

}  // namespace idcrn
