#include "idcrn/idcrm.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace idcrn {
namespace {

struct UnitRows {
  Matrix unit;
  Vector norms;
};

UnitRows unit_rows(const Matrix& a) {
  UnitRows u;
  u.norms = a.rowwise().norm();
  u.unit = (u.norms.array() + kNormEpsilon).inverse().matrix().asDiagonal() * a;
  return u;
}

// d(loss)/da from d(loss)/d(unit rows).
Matrix normalize_backward(const Matrix& a, const Vector& norms, const Matrix& du) {
  Matrix da(a.rows(), a.cols());
  for (Index i = 0; i < a.rows(); ++i) {
    const double r = norms(i);
    const double n = r + kNormEpsilon;
    da.row(i) = du.row(i) / n;
    if (r > 0.0) da.row(i) -= a.row(i) * (a.row(i).dot(du.row(i)) / (n * n * r));
  }
  return da;
}

Matrix clamp_unit(Matrix s) { return s.cwiseMax(-1.0).cwiseMin(1.0); }

void add_into(Matrix* target, const Matrix& value) {
  if (!target) return;
  if (target->size() == 0) {
    *target = value;
  } else {
    *target += value;
  }
}

// Row-wise log-softmax.
Matrix log_softmax_rows(const Matrix& x) {
  const Vector mx = x.rowwise().maxCoeff();
  Matrix shifted = x.colwise() - mx;
  const Vector lse = shifted.array().exp().rowwise().sum().log().matrix();
  shifted.colwise() -= lse;
  return shifted;
}

}  // namespace

AffinityTarget AffinityTarget::identity(Index n) {
  AffinityTarget t;
  t.n_ = n;
  t.identity_ = true;
  t.confident_.assign(static_cast<std::size_t>(n), false);
  return t;
}

double AffinityTarget::operator()(Index i, Index j) const {
  if (identity_) return i == j ? 1.0 : 0.0;
  if (confident_[i] && confident_[j]) return labels_[i] == labels_[j] ? 1.0 : 0.0;
  return base_.coeff(i, j);
}

Matrix AffinityTarget::dense_rows(Index start, Index count) const {
  Matrix t = Matrix::Zero(count, n_);
  if (identity_) {
    for (Index r = 0; r < count; ++r) t(r, start + r) = 1.0;
    return t;
  }
  for (Index r = 0; r < count; ++r) {
    const Index i = start + r;
    for (SparseMatrix::InnerIterator it(base_, i); it; ++it) t(r, it.col()) = it.value();
    if (!confident_[i]) continue;
    for (Index j : confident_nodes_) t(r, j) = labels_[i] == labels_[j] ? 1.0 : 0.0;
  }
  return t;
}

AffinityTarget build_affinity_target(const SparseMatrix& a_selfloop, const Labels& pseudo_labels,
                                     const Mask& confident_mask, int num_clusters) {
  const Index n = a_selfloop.rows();
  if (a_selfloop.cols() != n) throw std::invalid_argument("build_affinity_target: adjacency must be square");
  if (static_cast<Index>(pseudo_labels.size()) != n || static_cast<Index>(confident_mask.size()) != n) {
    throw std::invalid_argument("build_affinity_target: labels and mask must have length N");
  }
  for (int l : pseudo_labels) {
    if (l < 0 || l >= num_clusters) {
      throw std::invalid_argument("build_affinity_target: label " + std::to_string(l) + " outside 0.." +
                                  std::to_string(num_clusters - 1));
    }
  }
  AffinityTarget t;
  t.n_ = n;
  t.base_ = a_selfloop;
  t.labels_ = pseudo_labels;
  t.confident_ = confident_mask;
  for (Index i = 0; i < n; ++i)
    if (confident_mask[i]) t.confident_nodes_.push_back(i);
  return t;
}

Matrix cosine_similarity(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) throw std::invalid_argument("cosine_similarity: shape mismatch");
  return clamp_unit(unit_rows(a).unit * unit_rows(b).unit.transpose());
}

void cosine_similarity_backward(const Matrix& a, const Matrix& b, const Matrix& ds, Matrix& da, Matrix& db) {
  const UnitRows ua = unit_rows(a);
  const UnitRows ub = unit_rows(b);
  da = normalize_backward(a, ua.norms, ds * ub.unit);
  db = normalize_backward(b, ub.norms, ds.transpose() * ua.unit);
}

Matrix sample_correlation(const Matrix& z1, const Matrix& z2) {
  if (z1.rows() != z2.rows() || z1.cols() != z2.cols()) throw std::invalid_argument("sample_correlation: shape mismatch");
  return cosine_similarity(z1, z2);
}

double sample_loss(const Matrix& s_n, const Matrix& t) {
  if (s_n.rows() != t.rows() || s_n.cols() != t.cols()) throw std::invalid_argument("sample_loss: shape mismatch");
  const double n = static_cast<double>(s_n.rows());
  return (s_n - t).squaredNorm() / (n * n);
}

double sample_loss(const Matrix& z1, const Matrix& z2, const AffinityTarget& t, Matrix* dz1, Matrix* dz2) {
  if (z1.rows() != z2.rows() || z1.cols() != z2.cols()) throw std::invalid_argument("sample_loss: shape mismatch");
  const Index n = z1.rows();
  if (t.size() != n) throw std::invalid_argument("sample_loss: target size mismatch");
  const bool want_grad = dz1 || dz2;
  const UnitRows u1 = unit_rows(z1);
  const UnitRows u2 = unit_rows(z2);
  const double inv_n2 = 1.0 / (static_cast<double>(n) * static_cast<double>(n));

  Matrix du1, du2;
  if (want_grad) {
    du1 = Matrix::Zero(n, z1.cols());
    du2 = Matrix::Zero(n, z2.cols());
  }
  double sum = 0.0;
  constexpr Index kBlock = 1024;
  for (Index start = 0; start < n; start += kBlock) {
    const Index rows = std::min(kBlock, n - start);
    const Matrix e = clamp_unit(u1.unit.middleRows(start, rows) * u2.unit.transpose()) - t.dense_rows(start, rows);
    sum += e.squaredNorm();
    if (want_grad) {
      const Matrix g = (2.0 * inv_n2) * e;
      du1.middleRows(start, rows).noalias() += g * u2.unit;
      du2.noalias() += g.transpose() * u1.unit.middleRows(start, rows);
    }
  }
  if (want_grad) {
    add_into(dz1, normalize_backward(z1, u1.norms, du1));
    add_into(dz2, normalize_backward(z2, u2.norms, du2));
  }
  return sum * inv_n2;
}

Matrix readout(const Matrix& z, const Labels& groups, int k) {
  if (k < 1) throw std::invalid_argument("readout: K must be positive");
  if (static_cast<Index>(groups.size()) != z.rows()) throw std::invalid_argument("readout: groups length mismatch");
  Matrix sums = Matrix::Zero(z.cols(), k);
  std::vector<Index> counts(static_cast<std::size_t>(k), 0);
  for (Index i = 0; i < z.rows(); ++i) {
    const int g = groups[i];
    if (g < 0 || g >= k) throw std::invalid_argument("readout: group id outside 0..K-1");
    sums.col(g) += z.row(i).transpose();
    ++counts[g];
  }
  const Vector global = z.rows() > 0 ? Vector(z.colwise().mean().transpose()) : Vector::Zero(z.cols());
  for (int g = 0; g < k; ++g) {
    sums.col(g) = counts[g] ? Vector(sums.col(g) / static_cast<double>(counts[g])) : global;
  }
  return sums;
}

Matrix readout_backward(const Matrix& d_readout, const Labels& groups, int k) {
  const Index n = static_cast<Index>(groups.size());
  std::vector<Index> counts(static_cast<std::size_t>(k), 0);
  for (int g : groups) ++counts[g];
  RowVector empty_share = RowVector::Zero(d_readout.rows());
  for (int g = 0; g < k; ++g)
    if (!counts[g]) empty_share += d_readout.col(g).transpose() / static_cast<double>(n);
  Matrix dz(n, d_readout.rows());
  for (Index i = 0; i < n; ++i) {
    dz.row(i) = d_readout.col(groups[i]).transpose() / static_cast<double>(counts[groups[i]]) + empty_share;
  }
  return dz;
}

Matrix feature_correlation(const Matrix& zt1, const Matrix& zt2) {
  if (zt1.rows() != zt2.rows() || zt1.cols() != zt2.cols()) {
    throw std::invalid_argument("feature_correlation: shape mismatch");
  }
  return cosine_similarity(zt1, zt2);
}

double feature_loss(const Matrix& s_f, Matrix* ds) {
  const Index d = s_f.rows();
  if (s_f.cols() != d) throw std::invalid_argument("feature_loss: input must be square");
  if (d < 2) throw std::invalid_argument("feature_loss: d = 1 leaves the off-diagonal term undefined");
  const double dd = static_cast<double>(d);
  const double w_diag = 1.0 / (dd * dd);
  const double w_off = 1.0 / (dd * dd - dd);
  double diag = 0.0, off = 0.0;
  if (ds) ds->resize(d, d);
  for (Index i = 0; i < d; ++i) {
    for (Index j = 0; j < d; ++j) {
      if (i == j) {
        diag += (s_f(i, i) - 1.0) * (s_f(i, i) - 1.0);
        if (ds) (*ds)(i, j) = 2.0 * w_diag * (s_f(i, i) - 1.0);
      } else {
        off += s_f(i, j) * s_f(i, j);
        if (ds) (*ds)(i, j) = 2.0 * w_off * s_f(i, j);
      }
    }
  }
  return w_diag * diag + w_off * off;
}

double propagation_reg(const Matrix& z, const SparseMatrix& a_norm, Matrix* dz) {
  if (a_norm.rows() != z.rows() || a_norm.cols() != z.rows()) {
    throw std::invalid_argument("propagation_reg: adjacency size mismatch");
  }
  const Index n = z.rows();
  if (n == 0) return 0.0;
  const Matrix y = a_norm * z;
  const Matrix lp = log_softmax_rows(z);
  const Matrix lq = log_softmax_rows(y);
  const Matrix p = lp.array().exp().matrix();
  const Matrix q = lq.array().exp().matrix();
  // log m = log((p + q) / 2), evaluated from the log-probabilities.
  const Matrix lm = (lp.cwiseMax(lq).array() + (-(lp - lq).cwiseAbs().array()).exp().log1p() -
                     std::numbers::ln2)
                        .matrix();
  const double inv_n = 1.0 / static_cast<double>(n);
  const double value =
      0.5 * inv_n * ((p.array() * (lp - lm).array()).sum() + (q.array() * (lq - lm).array()).sum());

  if (dz) {
    const Matrix gp = (0.5 * inv_n) * (lp - lm);
    const Matrix gq = (0.5 * inv_n) * (lq - lm);
    auto softmax_back = [](const Matrix& prob, const Matrix& g) -> Matrix {
      const Vector inner = (prob.array() * g.array()).rowwise().sum().matrix();
      return (prob.array() * (g.colwise() - inner).array()).matrix();
    };
    Matrix grad = softmax_back(p, gp);
    grad.noalias() += a_norm.transpose() * softmax_back(q, gq);
    add_into(dz, grad);
  }
  return std::max(0.0, value);
}

double idcrm_loss(double l_n, double l_f, double l_r, double gamma) { return l_n + l_f + gamma * l_r; }

}  // namespace idcrn
