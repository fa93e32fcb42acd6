#pragma once

#include <cstdint>
#include <string>

#include "idcrn/graph.hpp"
#include "idcrn/types.hpp"

namespace idcrn {

/// The two augmented graphs {x1, a_f} and {x2, a_d}.
struct ViewPair {
  Matrix x1;
  Matrix x2;
  SparseMatrix a_f;  // row-stochastic KNN graph, k entries per row
  Matrix a_d;        // symmetric PPR diffusion
};

/// Hadamard product of x with i.i.d. Gaussian(noise_mean, noise_std^2) noise.
Matrix perturb_features(const Matrix& x, double noise_mean, double noise_std, std::uint64_t seed);

/// Cosine KNN graph. Self is excluded from the candidates, the k most similar
/// rows are kept (ties go to the lowest index) and each row is a softmax over
/// the kept similarities only. Zero rows are guarded by adding kNormEpsilon to
/// the norm and recorded as warnings.
SparseMatrix knn_graph(const Matrix& x, Index k = 5);

/// Personalized PageRank diffusion alpha (I - (1 - alpha) A_norm)^-1.
/// Solved densely for N <= dense_cap; above the cap the power series
/// sum_k alpha (1 - alpha)^k A_norm^k is summed until the next coefficient
/// falls below 1e-7. Requires 0 < alpha <= 1.
Matrix ppr_diffusion(const NormalizedAdjacency& a_norm, double alpha, Index dense_cap = kDefaultDenseCap);

struct ViewOptions {
  double alpha = 0.2;
  Index knn_k = 5;
  double noise_mean = 1.0;
  double noise_std = 0.1;
  std::uint64_t seed = 0;
  Index dense_cap = kDefaultDenseCap;
};

/// Two independently perturbed copies of the attributes (distinct
/// sub-seeds), the KNN graph of the unperturbed attributes, and the PPR
/// diffusion of the normalized adjacency.
ViewPair make_views(const Graph& g, const ViewOptions& options);

/// Redraws only the perturbed attribute matrices of `views` for one epoch.
void resample_view_noise(ViewPair& views, const Graph& g, const ViewOptions& options, std::uint64_t epoch);

/// Per-dataset default teleport probability: 0.1 for PUBMED, 0.3 for ACM,
/// 0.2 otherwise (case-insensitive name match).
double default_alpha(const std::string& dataset_name);

}  // namespace idcrn
