#include "idcrn/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "idcrn/log.hpp"
#include "idcrn/rng.hpp"

namespace idcrn {
namespace {

// Squared distance of every row of z to every center (N x C).
Matrix squared_distances(const Matrix& z, const Matrix& centers) {
  const Vector zn = z.rowwise().squaredNorm();
  const Vector cn = centers.rowwise().squaredNorm();
  Matrix d = (-2.0 * z * centers.transpose());
  d.colwise() += zn;
  d.rowwise() += cn.transpose();
  return d.cwiseMax(0.0);
}

Matrix kmeans_plus_plus(const Matrix& z, int c, Rng& rng) {
  const Index n = z.rows();
  Matrix centers(c, z.cols());
  centers.row(0) = z.row(static_cast<Index>(rng.below(static_cast<std::uint64_t>(n))));
  Vector best = (z.rowwise() - centers.row(0)).rowwise().squaredNorm();
  for (int k = 1; k < c; ++k) {
    const double total = best.sum();
    Index pick = 0;
    if (total > 0.0) {
      double r = rng.uniform() * total;
      for (pick = 0; pick < n - 1; ++pick) {
        r -= best(pick);
        if (r < 0.0) break;
      }
    } else {
      pick = static_cast<Index>(rng.below(static_cast<std::uint64_t>(n)));
    }
    centers.row(k) = z.row(pick);
    best = best.cwiseMin((z.rowwise() - centers.row(k)).rowwise().squaredNorm());
  }
  return centers;
}

KMeansResult lloyd(const Matrix& z, Matrix centers, const KMeansOptions& options) {
  const Index n = z.rows();
  const Index c = centers.rows();
  KMeansResult r;
  r.assignments.assign(static_cast<std::size_t>(n), 0);
  for (int iter = 0; iter < options.max_iter; ++iter) {
    const Matrix d = squared_distances(z, centers);
    double inertia = 0.0;
    for (Index i = 0; i < n; ++i) {
      Index best;
      inertia += d.row(i).minCoeff(&best);
      r.assignments[i] = static_cast<int>(best);
    }
    r.inertia_history.push_back(inertia);
    r.iterations = iter + 1;

    Matrix next = Matrix::Zero(c, z.cols());
    std::vector<Index> counts(static_cast<std::size_t>(c), 0);
    for (Index i = 0; i < n; ++i) {
      next.row(r.assignments[i]) += z.row(i);
      ++counts[r.assignments[i]];
    }
    std::vector<bool> taken(static_cast<std::size_t>(n), false);
    for (Index k = 0; k < c; ++k) {
      if (counts[k]) {
        next.row(k) /= static_cast<double>(counts[k]);
        continue;
      }
      // Empty cluster: move it onto the point farthest from its own center.
      Index far = -1;
      double far_d = -1.0;
      for (Index i = 0; i < n; ++i) {
        if (!taken[i] && d(i, r.assignments[i]) > far_d) {
          far_d = d(i, r.assignments[i]);
          far = i;
        }
      }
      taken[far] = true;
      next.row(k) = z.row(far);
    }
    const double shift = (next - centers).rowwise().squaredNorm().maxCoeff();
    centers = std::move(next);
    if (shift <= options.tol) break;
  }
  // Final assignment against the converged centers.
  const Matrix d = squared_distances(z, centers);
  r.inertia = 0.0;
  for (Index i = 0; i < n; ++i) {
    Index best;
    r.inertia += d.row(i).minCoeff(&best);
    r.assignments[i] = static_cast<int>(best);
  }
  r.centers = std::move(centers);
  return r;
}

}  // namespace

KMeansResult kmeans(const Matrix& z, int num_clusters, std::uint64_t seed, const KMeansOptions& options) {
  if (num_clusters < 1) throw std::invalid_argument("kmeans: C must be positive");
  if (num_clusters > z.rows()) {
    throw std::invalid_argument("kmeans: C = " + std::to_string(num_clusters) + " exceeds N = " +
                                std::to_string(z.rows()));
  }
  if (!z.allFinite()) throw std::invalid_argument("kmeans: non-finite input");
  KMeansResult best;
  best.inertia = std::numeric_limits<double>::infinity();
  for (int restart = 0; restart < std::max(1, options.restarts); ++restart) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(restart)));
    KMeansResult r = lloyd(z, kmeans_plus_plus(z, num_clusters, rng), options);
    if (r.inertia < best.inertia) best = std::move(r);
  }
  return best;
}

Matrix soft_assign(const Matrix& z, const Matrix& centers) {
  Matrix k = (1.0 + squared_distances(z, centers).array()).inverse().matrix();
  const Vector sums = k.rowwise().sum();
  return sums.cwiseInverse().asDiagonal() * k;
}

Matrix target_distribution(const Matrix& q) {
  const RowVector f = q.colwise().sum();
  Matrix w = Matrix::Zero(q.rows(), q.cols());
  for (Index j = 0; j < q.cols(); ++j) {
    if (f(j) <= 0.0) {
      warn("target_distribution: cluster " + std::to_string(j) + " has zero total assignment");
      continue;
    }
    w.col(j) = q.col(j).array().square() / f(j);
  }
  const Vector sums = w.rowwise().sum();
  for (Index i = 0; i < w.rows(); ++i)
    if (sums(i) > 0.0) w.row(i) /= sums(i);
  return w;
}

double kl_loss(const Matrix& p, const Matrix& q) {
  if (p.rows() != q.rows() || p.cols() != q.cols()) throw std::invalid_argument("kl_loss: shape mismatch");
  if (p.rows() == 0) return 0.0;
  double sum = 0.0;
  for (Index i = 0; i < p.rows(); ++i)
    for (Index j = 0; j < p.cols(); ++j)
      if (p(i, j) > 0.0) sum += p(i, j) * std::log(p(i, j) / std::max(q(i, j), 1e-12));
  return std::max(0.0, sum / static_cast<double>(p.rows()));
}

double kl_loss(const Matrix& p, const Matrix& z, const Matrix& centers, Matrix* dz, Matrix* dcenters) {
  const Matrix kernel = (1.0 + squared_distances(z, centers).array()).inverse().matrix();
  const Vector sums = kernel.rowwise().sum();
  const Matrix q = sums.cwiseInverse().asDiagonal() * kernel;
  const double value = kl_loss(p, q);
  if (dz || dcenters) {
    // For the unit Student-t kernel: dL/dz_i = (2/N) sum_j k_ij (p_ij - q_ij)(z_i - mu_j).
    const Matrix w = (2.0 / static_cast<double>(z.rows())) * (kernel.array() * (p - q).array()).matrix();
    const Vector w_row = w.rowwise().sum();
    const RowVector w_col = w.colwise().sum();
    if (dz) {
      const Matrix g = w_row.asDiagonal() * z - w * centers;
      if (dz->size() == 0) *dz = g; else *dz += g;
    }
    if (dcenters) {
      const Matrix g = w.transpose() * z - w_col.transpose().asDiagonal() * centers;
      if (dcenters->size() == 0) *dcenters = -g; else *dcenters -= g;
    }
  }
  return value;
}

Labels argmax_rows(const Matrix& q) {
  Labels out(static_cast<std::size_t>(q.rows()));
  for (Index i = 0; i < q.rows(); ++i) {
    Index best;
    q.row(i).maxCoeff(&best);
    out[i] = static_cast<int>(best);
  }
  return out;
}

Mask select_confident(const Matrix& z, const Matrix& centers, const Labels& assignments, double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw std::invalid_argument("select_confident: fraction must be in (0, 1]");
  const Index n = z.rows();
  if (static_cast<Index>(assignments.size()) != n) throw std::invalid_argument("select_confident: length mismatch");
  std::vector<std::vector<Index>> members(static_cast<std::size_t>(centers.rows()));
  for (Index i = 0; i < n; ++i) {
    const int a = assignments[i];
    if (a < 0 || a >= centers.rows()) throw std::invalid_argument("select_confident: assignment out of range");
    members[a].push_back(i);
  }
  Mask mask(static_cast<std::size_t>(n), false);
  for (std::size_t c = 0; c < members.size(); ++c) {
    auto& m = members[c];
    if (m.empty()) continue;
    std::vector<double> dist(static_cast<std::size_t>(n));
    for (Index i : m) dist[i] = (z.row(i) - centers.row(static_cast<Index>(c))).squaredNorm();
    std::stable_sort(m.begin(), m.end(), [&](Index a, Index b) { return dist[a] < dist[b]; });
    // The small slack keeps ceil(0.6 * 10) at 6 despite binary rounding.
    const auto take = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(m.size()) - 1e-9));
    for (std::size_t t = 0; t < std::min(take, m.size()); ++t) mask[m[t]] = true;
  }
  return mask;
}

void refresh(ClusterModel& model, const Matrix& z, double confidence_fraction) {
  model.q = soft_assign(z, model.centers);
  model.p = target_distribution(model.q);
  model.pseudo_labels = argmax_rows(model.q);
  model.confident_mask = select_confident(z, model.centers, model.pseudo_labels, confidence_fraction);
}

}  // namespace idcrn
