#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <filesystem>

#include "idcrn/dataset_io.hpp"
#include "idcrn/graph.hpp"
#include "support/fixtures.hpp"

using namespace idcrn;
using idcrn::testing::random_graph;

TEST_SUITE("graph_core") {
  TEST_CASE("minimal graph") {
    const Graph g = build_graph(Matrix::Zero(2, 1), {{0, 1}});
    REQUIRE(g.edges().size() == 1);
    CHECK(g.edges()[0] == Edge{0, 1});
    CHECK(g.num_nodes() == 2);
    CHECK(g.num_classes() == 1);
  }

  TEST_CASE("reversed and duplicate edges collapse") {
    const Graph g = build_graph(Matrix::Zero(3, 1), {{0, 1}, {1, 0}, {2, 1}, {1, 2}, {0, 1}});
    CHECK(g.edges() == std::vector<Edge>{{0, 1}, {1, 2}});
  }

  TEST_CASE("input rejection") {
    CHECK_THROWS_WITH_AS(build_graph(Matrix::Zero(3, 1), {{0, 5}}), doctest::Contains("index out of range"),
                         std::invalid_argument);
    CHECK_THROWS_AS(build_graph(Matrix::Zero(3, 1), {{-1, 2}}), std::invalid_argument);
    CHECK_THROWS_AS(build_graph(Matrix::Zero(3, 1), {{1, 1}}), std::invalid_argument);
    CHECK_THROWS_WITH_AS(build_graph(std::vector<std::vector<double>>{{1, 2}, {3}}, {}),
                         doctest::Contains("ragged feature rows"), std::invalid_argument);
    CHECK_THROWS_AS(build_graph(Matrix::Zero(3, 1), {}, Labels{0, 1}), std::invalid_argument);
    CHECK_THROWS_AS(build_graph(Matrix::Zero(2, 1), {}, Labels{0, 3}, 2), std::invalid_argument);
    Matrix bad = Matrix::Zero(2, 2);
    bad(1, 1) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(build_graph(bad, {}), std::invalid_argument);
  }

  TEST_CASE("classes inferred from labels") {
    const Graph g = build_graph(Matrix::Zero(3, 1), {}, Labels{0, 2, 1});
    CHECK(g.num_classes() == 3);
  }

  TEST_CASE("normalization examples") {
    CHECK(normalize_adjacency(build_graph(Matrix::Zero(1, 1), {})).dense()(0, 0) == doctest::Approx(1.0));

    const Matrix two = normalize_adjacency(build_graph(Matrix::Zero(2, 1), {{0, 1}})).dense();
    CHECK((two - Matrix::Constant(2, 2, 0.5)).cwiseAbs().maxCoeff() < 1e-15);

    const Matrix path = normalize_adjacency(build_graph(Matrix::Zero(3, 1), {{0, 1}, {1, 2}})).dense();
    CHECK(path(0, 1) == doctest::Approx(1.0 / std::sqrt(6.0)).epsilon(1e-14));
    CHECK(path(0, 0) == doctest::Approx(0.5));
    CHECK(path(1, 1) == doctest::Approx(1.0 / 3.0));
    CHECK(path(0, 2) == 0.0);
  }

  TEST_CASE("edgeless graph normalizes to identity") {
    const Matrix a = normalize_adjacency(build_graph(Matrix::Zero(4, 2), {})).dense();
    CHECK(a.isApprox(Matrix::Identity(4, 4)));
  }

  TEST_CASE("normalized adjacency properties on random graphs") {
    Rng rng(11);
    for (int trial = 0; trial < 40; ++trial) {
      const Index n = 1 + static_cast<Index>(rng.below(20));
      const Graph g = random_graph(n, 2, rng.uniform(), rng);
      const Matrix a = normalize_adjacency(g).dense();
      CHECK((a - a.transpose()).cwiseAbs().maxCoeff() < 1e-9);
      CHECK(a.minCoeff() >= 0.0);
      CHECK(a.maxCoeff() <= 1.0 + 1e-15);
      Eigen::SelfAdjointEigenSolver<Matrix> eig(a);
      CHECK(eig.eigenvalues().cwiseAbs().maxCoeff() <= 1.0 + 1e-9);
      // Direct evaluation of D^-1/2 (A + I) D^-1/2.
      Matrix hat = idcrn::testing::dense_adjacency(n, g.edges()) + Matrix::Identity(n, n);
      const Vector deg = hat.rowwise().sum();
      for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j) CHECK(std::abs(a(i, j) - hat(i, j) / std::sqrt(deg(i) * deg(j))) < 1e-15);
    }
  }

  TEST_CASE("adjacency accessors") {
    const Graph g = build_graph(Matrix::Zero(3, 1), {{0, 2}});
    const Matrix a = Matrix(g.adjacency());
    const Matrix s = Matrix(g.self_looped_adjacency());
    CHECK(a(0, 2) == 1.0);
    CHECK(a(2, 0) == 1.0);
    CHECK(a.trace() == 0.0);
    CHECK(s.isApprox(a + Matrix::Identity(3, 3)));
  }

  TEST_CASE("sbm degenerate probabilities") {
    SbmParams p;
    p.block_sizes = {2, 2};
    p.feature_means = equidistant_means(2, 2, 1.0);
    p.p_in = 1.0;
    p.p_out = 0.0;
    CHECK(sbm_generate(p).edges() == std::vector<Edge>{{0, 1}, {2, 3}});
    p.p_in = 0.0;
    CHECK(sbm_generate(p).edges().empty());
    CHECK(*sbm_generate(p).labels() == Labels{0, 0, 1, 1});
  }

  TEST_CASE("sbm errors") {
    SbmParams p;
    p.block_sizes = {3, 0};
    p.feature_means = equidistant_means(2, 2, 1.0);
    CHECK_THROWS_WITH_AS(sbm_generate(p), doctest::Contains("empty block"), std::invalid_argument);
    p.block_sizes = {3, 3};
    p.p_in = 0.1;
    p.p_out = 0.5;
    CHECK_THROWS_AS(sbm_generate(p), std::invalid_argument);
    p.p_out = 0.0;
    p.feature_means.pop_back();
    CHECK_THROWS_AS(sbm_generate(p), std::invalid_argument);
  }

  TEST_CASE("sbm intra-block density") {
    SbmParams p;
    p.block_sizes = {100, 100, 100};
    p.feature_means = equidistant_means(3, 4, 1.0);
    p.seed = 5;
    const Graph g = sbm_generate(p);
    const Labels& y = *g.labels();
    double intra = 0, inter = 0;
    for (auto [u, v] : g.edges()) (y[u] == y[v] ? intra : inter) += 1;
    const double intra_pairs = 3 * 100.0 * 99.0 / 2.0;
    const double inter_pairs = 3 * 100.0 * 100.0;
    CHECK(std::abs(intra / intra_pairs - 0.2) < 0.03);
    CHECK(std::abs(inter / inter_pairs - 0.01) < 0.005);
  }

  TEST_CASE("sbm features follow block means") {
    SbmParams p;
    p.block_sizes = {400, 400};
    p.feature_means = equidistant_means(2, 3, 2.0);
    p.feature_std = 0.5;
    p.seed = 9;
    const Graph g = sbm_generate(p);
    for (int b = 0; b < 2; ++b) {
      const Matrix block = g.features().middleRows(b * 400, 400);
      const RowVector mean = block.colwise().mean();
      CHECK((mean - p.feature_means[b].transpose()).cwiseAbs().maxCoeff() < 0.1);
      const double var = (block.rowwise() - mean).squaredNorm() / (400.0 * 3.0);
      CHECK(std::sqrt(var) == doctest::Approx(0.5).epsilon(0.1));
    }
  }

  TEST_CASE("equidistant means") {
    const auto means = equidistant_means(4, 6, 1.5);
    for (int a = 0; a < 4; ++a)
      for (int b = a + 1; b < 4; ++b) CHECK((means[a] - means[b]).norm() == doctest::Approx(1.5).epsilon(1e-14));
    CHECK_THROWS_AS(equidistant_means(4, 3, 1.0), std::invalid_argument);
  }

  TEST_CASE("sbm bit-reproducible") {
    SbmParams p;
    p.block_sizes = {20, 30};
    p.feature_means = equidistant_means(2, 3, 1.0);
    p.seed = 77;
    const Graph a = sbm_generate(p), b = sbm_generate(p);
    CHECK(a.edges() == b.edges());
    CHECK(a.features() == b.features());
    p.seed = 78;
    CHECK(sbm_generate(p).features() != a.features());
  }

  TEST_CASE("re-ingestion is idempotent") {
    Rng rng(3);
    const Graph g = random_graph(15, 4, 0.3, rng, 3);
    const auto dir = std::filesystem::temp_directory_path() / "idcrn_graph_roundtrip";
    std::filesystem::remove_all(dir);
    save_bundle(g, dir);
    const Graph h = load_bundle(dir);
    CHECK(h.features() == g.features());
    CHECK(h.edges() == g.edges());
    CHECK(h.labels() == g.labels());
    CHECK(h.num_classes() == g.num_classes());
    const Graph again = build_graph(h.features(), h.edges(), h.labels(), h.num_classes());
    CHECK(again.edges() == g.edges());
    std::filesystem::remove_all(dir);
  }
}
