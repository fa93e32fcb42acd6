#include "idcrn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <stdexcept>

#include "idcrn/log.hpp"

namespace idcrn {
namespace {

void check_lengths(const Labels& truth, const Labels& pred) {
  if (truth.size() != pred.size()) {
    throw std::invalid_argument("length mismatch: " + std::to_string(truth.size()) + " truth labels vs " +
                                std::to_string(pred.size()) + " predictions");
  }
}

std::vector<int> distinct(const Labels& labels) {
  std::vector<int> ids(labels.begin(), labels.end());
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

long long choose2(long long x) { return x * (x - 1) / 2; }

}  // namespace

std::vector<Index> hungarian_min_cost(const Matrix& cost) {
  const Index n = cost.rows();
  if (cost.cols() != n) throw std::invalid_argument("hungarian_min_cost: cost matrix must be square");
  const double inf = std::numeric_limits<double>::infinity();
  // 1-based potentials; column 0 is a virtual start.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<Index> owner(n + 1, 0), way(n + 1, 0);
  for (Index row = 1; row <= n; ++row) {
    owner[0] = row;
    Index col0 = 0;
    std::vector<double> min_slack(n + 1, inf);
    std::vector<bool> used(n + 1, false);
    do {
      used[col0] = true;
      const Index r = owner[col0];
      double delta = inf;
      Index col1 = 0;
      for (Index c = 1; c <= n; ++c) {
        if (used[c]) continue;
        const double slack = cost(r - 1, c - 1) - u[r] - v[c];
        if (slack < min_slack[c]) {
          min_slack[c] = slack;
          way[c] = col0;
        }
        if (min_slack[c] < delta) {
          delta = min_slack[c];
          col1 = c;
        }
      }
      for (Index c = 0; c <= n; ++c) {
        if (used[c]) {
          u[owner[c]] += delta;
          v[c] -= delta;
        } else {
          min_slack[c] -= delta;
        }
      }
      col0 = col1;
    } while (owner[col0] != 0);
    do {
      const Index col1 = way[col0];
      owner[col0] = owner[col1];
      col0 = col1;
    } while (col0 != 0);
  }
  std::vector<Index> assignment(n, -1);
  for (Index c = 1; c <= n; ++c)
    if (owner[c] != 0) assignment[owner[c] - 1] = c - 1;
  return assignment;
}

Contingency contingency(const Labels& truth, const Labels& pred) {
  check_lengths(truth, pred);
  Contingency t;
  t.truth_ids = distinct(truth);
  t.pred_ids = distinct(pred);
  std::map<int, std::size_t> ti, pi;
  for (std::size_t i = 0; i < t.truth_ids.size(); ++i) ti[t.truth_ids[i]] = i;
  for (std::size_t i = 0; i < t.pred_ids.size(); ++i) pi[t.pred_ids[i]] = i;
  t.counts.assign(t.truth_ids.size(), std::vector<long long>(t.pred_ids.size(), 0));
  for (std::size_t i = 0; i < truth.size(); ++i) ++t.counts[ti[truth[i]]][pi[pred[i]]];
  t.total = static_cast<long long>(truth.size());
  return t;
}

std::vector<int> best_label_map(const Contingency& table) {
  const auto kt = static_cast<Index>(table.truth_ids.size());
  const auto kp = static_cast<Index>(table.pred_ids.size());
  const Index k = std::max(kt, kp);
  // Maximize matches == minimize (max_count - count) over a padded square.
  // Among maximal matchings, prefer the largest sum of per-class F1 so the
  // choice never depends on how the predicted ids happen to be numbered.
  long long max_count = 0;
  std::vector<long long> truth_size(static_cast<std::size_t>(kt), 0), pred_size(static_cast<std::size_t>(kp), 0);
  for (Index t = 0; t < kt; ++t)
    for (Index p = 0; p < kp; ++p) {
      max_count = std::max(max_count, table.counts[t][p]);
      truth_size[t] += table.counts[t][p];
      pred_size[p] += table.counts[t][p];
    }
  const double weight = static_cast<double>(k + 1);
  Matrix cost = Matrix::Constant(k, k, weight * static_cast<double>(max_count));
  for (Index p = 0; p < kp; ++p)
    for (Index t = 0; t < kt; ++t) {
      const double c = static_cast<double>(table.counts[t][p]);
      const double f1 = 2.0 * c / static_cast<double>(truth_size[t] + pred_size[p]);
      cost(p, t) = weight * static_cast<double>(max_count - table.counts[t][p]) - f1;
    }
  const auto assignment = hungarian_min_cost(cost);

  int fresh = table.truth_ids.empty() ? 0 : table.truth_ids.back() + 1;
  std::vector<int> map(static_cast<std::size_t>(kp));
  for (Index p = 0; p < kp; ++p) {
    const Index t = assignment[p];
    map[p] = t < kt ? table.truth_ids[t] : fresh++;
  }
  return map;
}

Labels align_predictions(const Labels& truth, const Labels& pred) {
  const Contingency table = contingency(truth, pred);
  const std::vector<int> map = best_label_map(table);
  std::map<int, int> lookup;
  for (std::size_t p = 0; p < table.pred_ids.size(); ++p) lookup[table.pred_ids[p]] = map[p];
  Labels out(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) out[i] = lookup[pred[i]];
  return out;
}

double clustering_accuracy(const Labels& truth, const Labels& pred) {
  check_lengths(truth, pred);
  if (truth.empty()) return 0.0;
  const Labels aligned = align_predictions(truth, pred);
  long long hit = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hit += aligned[i] == truth[i];
  return static_cast<double>(hit) / static_cast<double>(truth.size());
}

double macro_f1(const Labels& truth, const Labels& pred) {
  check_lengths(truth, pred);
  if (truth.empty()) return 0.0;
  const Labels aligned = align_predictions(truth, pred);
  std::vector<int> classes = distinct(truth);
  for (int c : distinct(aligned)) classes.push_back(c);
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());

  double sum = 0.0;
  for (int c : classes) {
    long long tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
      const bool is_t = truth[i] == c, is_p = aligned[i] == c;
      tp += is_t && is_p;
      fp += !is_t && is_p;
      fn += is_t && !is_p;
    }
    if (tp + fn == 0) warn("macro_f1: class " + std::to_string(c) + " has zero support");
    if (tp == 0) continue;
    const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    const double recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
    sum += 2.0 * precision * recall / (precision + recall);
  }
  return sum / static_cast<double>(classes.size());
}

double nmi(const Labels& truth, const Labels& pred) {
  const Contingency t = contingency(truth, pred);
  if (t.total == 0) return 0.0;
  const double n = static_cast<double>(t.total);
  std::vector<double> a(t.truth_ids.size(), 0.0), b(t.pred_ids.size(), 0.0);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) {
      a[i] += static_cast<double>(t.counts[i][j]);
      b[j] += static_cast<double>(t.counts[i][j]);
    }
  double mi = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) {
      const double c = static_cast<double>(t.counts[i][j]);
      if (c > 0.0) mi += (c / n) * std::log(c * n / (a[i] * b[j]));
    }
  auto entropy = [n](const std::vector<double>& m) {
    double h = 0.0;
    for (double c : m)
      if (c > 0.0) h -= (c / n) * std::log(c / n);
    return h;
  };
  const double denom = entropy(a) + entropy(b);
  if (denom == 0.0) return 1.0;  // both partitions are a single block
  return std::clamp(2.0 * mi / denom, 0.0, 1.0);
}

double ari(const Labels& truth, const Labels& pred) {
  const Contingency t = contingency(truth, pred);
  const long long n = t.total;
  __int128 index = 0, sum_a = 0, sum_b = 0;
  std::vector<long long> a(t.truth_ids.size(), 0), b(t.pred_ids.size(), 0);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) {
      index += choose2(t.counts[i][j]);
      a[i] += t.counts[i][j];
      b[j] += t.counts[i][j];
    }
  for (long long x : a) sum_a += choose2(x);
  for (long long x : b) sum_b += choose2(x);
  const __int128 pairs = choose2(n);
  // Scale (Index - Expected) / (Max - Expected) by 2 * pairs to stay in integers.
  const __int128 numerator = 2 * pairs * index - 2 * sum_a * sum_b;
  const __int128 denominator = pairs * (sum_a + sum_b) - 2 * sum_a * sum_b;
  if (denominator == 0) {
    const bool identical = t.truth_ids.size() == t.pred_ids.size() && index == sum_a && index == sum_b;
    warn("ari: maximum index equals expected index; partitions are degenerate");
    return identical ? 1.0 : 0.0;
  }
  return static_cast<double>(numerator) / static_cast<double>(denominator);
}

ClusteringScores evaluate_clustering(const Labels& truth, const Labels& pred) {
  return {clustering_accuracy(truth, pred), nmi(truth, pred), ari(truth, pred), macro_f1(truth, pred)};
}

MetricsReport summarize(const std::vector<ClusteringScores>& runs) {
  MetricsReport r;
  r.runs = runs;
  auto stat = [&](double ClusteringScores::*field) {
    MeanStd m;
    if (runs.empty()) return m;
    for (const auto& s : runs) m.mean += s.*field;
    m.mean /= static_cast<double>(runs.size());
    double var = 0.0;
    for (const auto& s : runs) var += (s.*field - m.mean) * (s.*field - m.mean);
    m.std = std::sqrt(var / static_cast<double>(runs.size()));
    return m;
  };
  r.acc = stat(&ClusteringScores::acc);
  r.nmi = stat(&ClusteringScores::nmi);
  r.ari = stat(&ClusteringScores::ari);
  r.f1 = stat(&ClusteringScores::f1);
  return r;
}

std::string format_scores(const ClusteringScores& s) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "ACC %.4f NMI %.4f ARI %.4f F1 %.4f", s.acc, s.nmi, s.ari, s.f1);
  return buf;
}

}  // namespace idcrn
