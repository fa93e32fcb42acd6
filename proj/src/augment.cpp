#include "idcrn/augment.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "idcrn/log.hpp"
#include "idcrn/rng.hpp"

namespace idcrn {

Matrix perturb_features(const Matrix& x, double noise_mean, double noise_std, std::uint64_t seed) {
  if (noise_std < 0.0) throw std::invalid_argument("perturb_features: negative noise std");
  if (!x.allFinite()) throw std::invalid_argument("perturb_features: non-finite input");
  if (noise_std == 0.0) return x * noise_mean;
  Rng rng(seed);
  Matrix out(x.rows(), x.cols());
  // Row-major draw order so the noise for a given (i, j) does not depend on storage order.
  for (Index i = 0; i < x.rows(); ++i)
    for (Index j = 0; j < x.cols(); ++j) out(i, j) = x(i, j) * rng.normal(noise_mean, noise_std);
  return out;
}

SparseMatrix knn_graph(const Matrix& x, Index k) {
  const Index n = x.rows();
  if (k < 1 || k >= n) throw std::invalid_argument("knn_graph: need 1 <= k < N");

  Vector norms = x.rowwise().norm();
  for (Index i = 0; i < n; ++i) {
    if (norms(i) == 0.0) warn("knn_graph: row " + std::to_string(i) + " has zero norm");
  }
  const Matrix unit = (norms.array() + kNormEpsilon).inverse().matrix().asDiagonal() * x;

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(n * k));
  std::vector<Index> order(static_cast<std::size_t>(n));
  constexpr Index kBlock = 512;
  for (Index start = 0; start < n; start += kBlock) {
    const Index count = std::min(kBlock, n - start);
    const Matrix sims = unit.middleRows(start, count) * unit.transpose();
    for (Index r = 0; r < count; ++r) {
      const Index i = start + r;
      std::iota(order.begin(), order.end(), Index{0});
      order.erase(order.begin() + i);
      auto better = [&](Index a, Index b) {
        const double sa = sims(r, a), sb = sims(r, b);
        return sa != sb ? sa > sb : a < b;
      };
      std::partial_sort(order.begin(), order.begin() + k, order.end(), better);
      const double top = sims(r, order.front());
      double z = 0.0;
      std::vector<double> w(static_cast<std::size_t>(k));
      for (Index t = 0; t < k; ++t) z += (w[t] = std::exp(sims(r, order[t]) - top));
      for (Index t = 0; t < k; ++t) triplets.emplace_back(i, order[t], w[t] / z);
      order.resize(static_cast<std::size_t>(n));
    }
  }
  SparseMatrix a(n, n);
  a.setFromTriplets(triplets.begin(), triplets.end());
  return a;
}

Matrix ppr_diffusion(const NormalizedAdjacency& a_norm, double alpha, Index dense_cap) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("ppr_diffusion: alpha must be in (0, 1]");
  const Index n = a_norm.size();
  if (alpha == 1.0) return Matrix::Identity(n, n);

  Matrix out;
  if (n <= dense_cap) {
    Matrix m = -(1.0 - alpha) * a_norm.dense();
    m.diagonal().array() += 1.0;
    // I - (1 - alpha) A_norm is symmetric with spectrum in [alpha, 2 - alpha].
    out = alpha * m.llt().solve(Matrix::Identity(n, n));
  } else {
    Matrix term = alpha * Matrix::Identity(n, n);
    out = term;
    double coefficient = alpha;
    while (coefficient * (1.0 - alpha) >= 1e-7) {
      term = (1.0 - alpha) * (a_norm.matrix() * term);
      coefficient *= 1.0 - alpha;
      out += term;
    }
  }
  return 0.5 * (out + out.transpose());
}

ViewPair make_views(const Graph& g, const ViewOptions& options) {
  ViewPair v;
  v.x1 = perturb_features(g.features(), options.noise_mean, options.noise_std,
                          derive_seed(options.seed, stream::kNoiseView1));
  v.x2 = perturb_features(g.features(), options.noise_mean, options.noise_std,
                          derive_seed(options.seed, stream::kNoiseView2));
  v.a_f = knn_graph(g.features(), options.knn_k);
  v.a_d = ppr_diffusion(normalize_adjacency(g), options.alpha, options.dense_cap);
  return v;
}

void resample_view_noise(ViewPair& views, const Graph& g, const ViewOptions& options, std::uint64_t epoch) {
  const auto base = derive_seed(options.seed, stream::kEpochNoise + epoch);
  views.x1 = perturb_features(g.features(), options.noise_mean, options.noise_std, derive_seed(base, 1));
  views.x2 = perturb_features(g.features(), options.noise_mean, options.noise_std, derive_seed(base, 2));
}

double default_alpha(const std::string& dataset_name) {
  std::string lower;
  for (char c : dataset_name) lower += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (lower == "pubmed") return 0.1;
  if (lower == "acm") return 0.3;
  return 0.2;
}

}  // namespace idcrn
