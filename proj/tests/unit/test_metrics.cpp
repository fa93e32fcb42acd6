#include <doctest.h>

#include <algorithm>
#include <map>
#include <numeric>
#include <set>

#include "idcrn/log.hpp"
#include "idcrn/metrics.hpp"
#include "support/fixtures.hpp"

using namespace idcrn;
using idcrn::testing::random_labels;

namespace {

// Best agreement over every injective relabeling of predicted ids.
double exhaustive_accuracy(const Labels& truth, const Labels& pred) {
  std::set<int> ids(truth.begin(), truth.end());
  ids.insert(pred.begin(), pred.end());
  std::vector<int> universe(ids.begin(), ids.end());
  const std::set<int> distinct_pred(pred.begin(), pred.end());
  const std::vector<int> pred_ids(distinct_pred.begin(), distinct_pred.end());
  std::vector<int> perm = universe;
  std::sort(perm.begin(), perm.end());
  long best = 0;
  do {
    std::map<int, int> map;
    for (std::size_t k = 0; k < pred_ids.size(); ++k) map[pred_ids[k]] = perm[k];
    long hits = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) hits += map[pred[i]] == truth[i];
    best = std::max(best, hits);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return static_cast<double>(best) / static_cast<double>(truth.size());
}

// Pair-counting ARI with every pair enumerated.
double ari_oracle(const Labels& t, const Labels& p) {
  const std::size_t n = t.size();
  double a = 0, b = 0, both = 0, pairs = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      pairs += 1;
      a += t[i] == t[j];
      b += p[i] == p[j];
      both += t[i] == t[j] && p[i] == p[j];
    }
  const double expected = a * b / pairs;
  return (both - expected) / (0.5 * (a + b) - expected);
}

double nmi_oracle(const Labels& t, const Labels& p) {
  const double n = static_cast<double>(t.size());
  std::map<int, double> ct, cp;
  std::map<std::pair<int, int>, double> joint;
  for (std::size_t i = 0; i < t.size(); ++i) {
    ct[t[i]] += 1;
    cp[p[i]] += 1;
    joint[{t[i], p[i]}] += 1;
  }
  double mi = 0, ht = 0, hp = 0;
  for (auto& [key, c] : joint) mi += c / n * std::log(c * n / (ct[key.first] * cp[key.second]));
  for (auto& [k, c] : ct) ht -= c / n * std::log(c / n);
  for (auto& [k, c] : cp) hp -= c / n * std::log(c / n);
  return 2.0 * mi / (ht + hp);
}

Labels permuted(const Labels& l, int k, Rng& rng) {
  std::vector<int> perm(static_cast<std::size_t>(k));
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng.engine());
  Labels out = l;
  for (int& v : out) v = perm[v];
  return out;
}

}  // namespace

TEST_SUITE("metrics") {
  TEST_CASE("hungarian solves a small assignment") {
    Matrix cost(3, 3);
    cost << 4, 1, 3, 2, 0, 5, 3, 2, 2;
    const auto a = hungarian_min_cost(cost);
    double total = 0;
    for (Index r = 0; r < 3; ++r) total += cost(r, a[r]);
    CHECK(total == 5.0);
  }

  TEST_CASE("accuracy examples") {
    CHECK(clustering_accuracy({0, 1, 2, 1}, {0, 1, 2, 1}) == 1.0);
    CHECK(clustering_accuracy({0, 1, 2, 1}, {2, 0, 1, 0}) == 1.0);
    CHECK(clustering_accuracy({0, 0, 1, 1}, {0, 1, 1, 1}) == doctest::Approx(0.75));
    CHECK_THROWS_AS(clustering_accuracy({0, 1}, {0}), std::invalid_argument);
  }

  TEST_CASE("accuracy equals exhaustive bijection search") {
    Rng rng(1);
    for (int trial = 0; trial < 200; ++trial) {
      const int ct = 1 + static_cast<int>(rng.below(6)), cp = 1 + static_cast<int>(rng.below(6));
      const Index n = 1 + static_cast<Index>(rng.below(30));
      const Labels t = random_labels(n, ct, rng), p = random_labels(n, cp, rng);
      CHECK(std::abs(clustering_accuracy(t, p) - exhaustive_accuracy(t, p)) <= 1e-12);
    }
  }

  TEST_CASE("accuracy pigeonhole bound on balanced truth") {
    Rng rng(2);
    for (int trial = 0; trial < 50; ++trial) {
      const int c = 2 + static_cast<int>(rng.below(4));
      Labels t;
      for (int k = 0; k < c; ++k) t.insert(t.end(), 5, k);
      const Labels p = random_labels(static_cast<Index>(t.size()), c, rng);
      CHECK(clustering_accuracy(t, p) >= 1.0 / c - 1e-12);
    }
  }

  TEST_CASE("macro f1 examples") {
    CHECK(macro_f1({0, 1, 1, 2}, {0, 1, 1, 2}) == 1.0);
    CHECK(macro_f1({0, 0, 1, 1}, {1, 1, 0, 0}) == 1.0);
    CHECK(macro_f1({0, 0, 1, 1}, {0, 1, 1, 1}) == doctest::Approx(11.0 / 15.0).epsilon(1e-14));
  }

  TEST_CASE("macro f1 zero support warns") {
    take_warnings();
    const double f = macro_f1({0, 0, 0, 0}, {0, 0, 1, 1});
    CHECK(f == doctest::Approx((2.0 / 3.0) / 2.0));
    CHECK(take_warnings().size() == 1);
  }

  TEST_CASE("nmi examples") {
    CHECK(nmi({0, 0, 1, 1, 2}, {0, 0, 1, 1, 2}) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(nmi({0, 0, 1, 1}, {3, 3, 3, 3}) == 0.0);
    CHECK(std::abs(nmi({0, 0, 1, 1}, {0, 1, 0, 1})) < 1e-15);
  }

  TEST_CASE("nmi matches plug-in formula") {
    Rng rng(3);
    for (int trial = 0; trial < 100; ++trial) {
      const Index n = 2 + static_cast<Index>(rng.below(40));
      Labels t = random_labels(n, 4, rng), p = random_labels(n, 3, rng);
      t[0] = 0;
      t[1] = 1;
      p[0] = 0;
      p[1] = 1;
      CHECK(nmi(t, p) == doctest::Approx(nmi_oracle(t, p)).epsilon(1e-12));
    }
  }

  TEST_CASE("ari examples") {
    CHECK(ari({0, 0, 1, 2}, {0, 0, 1, 2}) == 1.0);
    // Every pair counted: a = 2, b = 2, both = 0, expected = 2/3.
    CHECK(ari({0, 0, 1, 1}, {0, 1, 0, 1}) == doctest::Approx(-0.5).epsilon(1e-14));
    CHECK(ari({0, 0, 1, 1}, {0, 1, 0, 1}) == doctest::Approx(ari_oracle({0, 0, 1, 1}, {0, 1, 0, 1})));
  }

  TEST_CASE("ari matches pair enumeration") {
    Rng rng(4);
    for (int trial = 0; trial < 100; ++trial) {
      const Index n = 3 + static_cast<Index>(rng.below(40));
      Labels t = random_labels(n, 3, rng), p = random_labels(n, 4, rng);
      t[0] = t[1] = 0;
      t[2] = 1;
      p[0] = 0;
      p[1] = 1;
      CHECK(ari(t, p) == doctest::Approx(ari_oracle(t, p)).epsilon(1e-12));
    }
  }

  TEST_CASE("ari degenerate partitions") {
    take_warnings();
    CHECK(ari({0, 0, 0}, {1, 1, 1}) == 1.0);
    CHECK(ari({0}, {0}) == 1.0);
    CHECK(!take_warnings().empty());
  }

  TEST_CASE("symmetry and relabeling invariance") {
    Rng rng(5);
    for (int trial = 0; trial < 100; ++trial) {
      const Index n = 2 + static_cast<Index>(rng.below(30));
      const Labels t = random_labels(n, 4, rng), p = random_labels(n, 4, rng);
      const Labels q = permuted(p, 4, rng);
      take_warnings();
      CHECK(std::abs(nmi(t, p) - nmi(p, t)) < 1e-12);
      CHECK(std::abs(ari(t, p) - ari(p, t)) < 1e-12);
      CHECK(std::abs(clustering_accuracy(t, p) - clustering_accuracy(t, q)) < 1e-12);
      CHECK(std::abs(macro_f1(t, p) - macro_f1(t, q)) < 1e-12);
      CHECK(std::abs(nmi(t, p) - nmi(t, q)) < 1e-12);
      CHECK(ari(t, p) == ari(t, q));
      const ClusteringScores s = evaluate_clustering(t, p);
      CHECK(s.acc >= 0.0);
      CHECK(s.acc <= 1.0);
      CHECK(s.nmi >= 0.0);
      CHECK(s.nmi <= 1.0);
      CHECK(s.f1 >= 0.0);
      CHECK(s.f1 <= 1.0);
      CHECK(s.ari >= -1.0);
      CHECK(s.ari <= 1.0);
    }
  }

  TEST_CASE("unmatched clusters map to fresh ids") {
    const Labels aligned = align_predictions({0, 0, 1, 1}, {5, 5, 7, 9});
    CHECK(aligned[0] == 0);
    CHECK(aligned[2] != aligned[3]);
    CHECK(((aligned[2] == 1) != (aligned[3] == 1)));
    CHECK(std::max(aligned[2], aligned[3]) > 1);
  }

  TEST_CASE("summary statistics") {
    const MetricsReport r = summarize({{0.8, 0.5, 0.4, 0.7}, {1.0, 0.7, 0.6, 0.9}});
    CHECK(r.acc.mean == doctest::Approx(0.9));
    CHECK(r.acc.std == doctest::Approx(0.1));
    CHECK(r.runs.size() == 2);
    CHECK(format_scores({0.921, 0.73, 0.79, 0.92}) == "ACC 0.9210 NMI 0.7300 ARI 0.7900 F1 0.9200");
  }
}
