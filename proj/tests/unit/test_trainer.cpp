#include <doctest.h>

#include "idcrn/optimizer.hpp"
#include "idcrn/trainer.hpp"
#include "support/finite_difference.hpp"
#include "support/fixtures.hpp"

using namespace idcrn;
using idcrn::testing::numeric_gradient;
using idcrn::testing::relative_error;

namespace {

Graph toy_sbm(std::uint64_t seed, Index per_block = 15) {
  SbmParams p;
  p.block_sizes = {per_block, per_block};
  p.p_in = 0.4;
  p.p_out = 0.02;
  p.feature_means = equidistant_means(2, 4, 2.0);
  p.feature_std = 0.3;
  p.seed = seed;
  return sbm_generate(p);
}

TrainConfig quick_config() {
  TrainConfig cfg;
  cfg.learning_rate = 1e-3;
  cfg.epochs_pretrain = 3;
  cfg.epochs_init = 3;
  cfg.epochs_finetune = 4;
  cfg.hidden_dims = {8};
  cfg.latent_dim = 4;
  cfg.kmeans_restarts = 2;
  return cfg;
}

bool same_state(const EncoderState& a, const EncoderState& b) {
  const auto pa = a.parameters(), pb = b.parameters();
  if (pa.size() != pb.size()) return false;
  for (std::size_t i = 0; i < pa.size(); ++i)
    if (*pa[i] != *pb[i]) return false;
  return true;
}

double logged_total(const EpochLog& e, const TrainConfig& cfg) {
  return e.l_n + e.l_f + cfg.gamma * e.l_r + e.l_rec + cfg.lambda * e.l_kl;
}

}  // namespace

TEST_SUITE("trainer") {
  TEST_CASE("adam matches a hand-computed first step") {
    Matrix w = Matrix::Constant(1, 1, 1.0);
    const Matrix g = Matrix::Constant(1, 1, 0.5);
    Adam adam(AdamOptions{.learning_rate = 0.1});
    adam.step({&w}, {&g});
    // Bias-corrected moments give m_hat = g, v_hat = g^2 on the first step.
    CHECK(w(0, 0) == doctest::Approx(1.0 - 0.1 * 0.5 / (0.5 + 1e-8)).epsilon(1e-14));
    adam.step({&w}, {&g});
    CHECK(adam.steps() == 2);
  }

  TEST_CASE("config validation") {
    TrainConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.learning_rate = 0.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = TrainConfig{};
    cfg.epochs_finetune = -1;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  }

  TEST_CASE("dataset defaults") {
    CHECK(defaults_for_dataset("ACM").learning_rate == 5e-5);
    CHECK(defaults_for_dataset("acm").alpha == 0.3);
    CHECK(defaults_for_dataset("amap").learning_rate == 1e-3);
    CHECK(defaults_for_dataset("dblp").learning_rate == 1e-4);
    CHECK(defaults_for_dataset("pubmed").learning_rate == 1e-5);
    CHECK(defaults_for_dataset("pubmed").alpha == 0.1);
    CHECK(defaults_for_dataset("corafull").learning_rate == 1e-5);
    CHECK(defaults_for_dataset("sbm").learning_rate == 1e-4);
  }

  TEST_CASE("variant parsing") {
    CHECK(!parse_variant("B").flags.use_preg);
    CHECK(!parse_variant("B").flags.use_ars);
    CHECK(parse_variant("b-p").flags.use_preg);
    CHECK(!parse_variant("B-P").flags.use_idcrm());
    CHECK(parse_variant("B-I").flags.use_idcrm());
    CHECK(!parse_variant("B-I").flags.use_preg);
    CHECK(parse_variant("B-P-I").flags.use_preg);
    CHECK(parse_variant("B-P-I").flags.use_idcrm());
    CHECK(parse_variant("B-R").flags.use_rrs);
    CHECK(!parse_variant("B-R").flags.use_ars);
    CHECK(parse_variant("B-A").flags.use_ars);
    CHECK(!parse_variant("B-A").flags.use_rrs);
    CHECK(parse_variant("B-R-A").flags.use_idcrm());
    CHECK_THROWS_AS(parse_variant("B-X"), std::invalid_argument);
  }

  TEST_CASE("pretrain with zero epochs returns the initialization") {
    const Graph g = toy_sbm(1);
    TrainConfig cfg = quick_config();
    cfg.epochs_pretrain = cfg.epochs_init = 0;
    const ViewPair v = make_views(g, cfg.view_options());
    CHECK(same_state(pretrain(g, v, cfg), init_encoder(cfg.encoder_config(g.feature_dim()), cfg.seed)));
  }

  TEST_CASE("pretraining reduces reconstruction loss") {
    const Graph g = toy_sbm(2);
    TrainConfig cfg = quick_config();
    cfg.epochs_pretrain = 10;
    cfg.epochs_init = 10;
    const ViewPair v = make_views(g, cfg.view_options());
    std::vector<EpochLog> log;
    const EncoderState a = pretrain(g, v, cfg, &log);
    REQUIRE(log.size() == 20);
    for (int phase = 0; phase < 2; ++phase)
      for (int e = 1; e < 10; ++e) CHECK(log[phase * 10 + e].l_rec < log[phase * 10 + e - 1].l_rec);
    CHECK(log[0].phase == "pretrain");
    CHECK(log[10].phase == "init");
    CHECK(same_state(a, pretrain(g, v, cfg)));
  }

  TEST_CASE("objective gradients match finite differences") {
    const Graph g = toy_sbm(3, 4);
    TrainConfig cfg = quick_config();
    cfg.hidden_dims = {3};
    cfg.latent_dim = 3;
    cfg.knn_k = 2;
    cfg.gamma = 2.0;
    cfg.lambda = 1.5;
    const ViewPair views = make_views(g, cfg.view_options());
    EncoderState state = init_encoder(cfg.encoder_config(g.feature_dim()), 4);
    Rng rng(5);
    Matrix centers = idcrn::testing::random_matrix(2, 3, rng);
    ClusterModel model;
    model.centers = centers;
    refresh(model, fuse(encode(views.x1, views.a_f, state), encode(views.x2, views.a_d, state)), 0.6);
    const SparseMatrix a_norm = normalize_adjacency(g).matrix();
    const AffinityTarget target =
        build_affinity_target(g.self_looped_adjacency(), model.pseudo_labels, model.confident_mask, 2);
    const Labels groups{0, 1, 0, 1, 1, 0, 0, 1};
    const ObjectiveInputs in{views, a_norm, target, groups, 2, model.p, cfg.flags, cfg.gamma, cfg.lambda, 0.1};

    EncoderState grad = state.zeros_like();
    Matrix dcenters;
    evaluate_objective(in, state, centers, &grad, &dcenters);
    auto f = [&] { return evaluate_objective(in, state, centers).total; };
    auto params = state.parameters();
    auto grads = grad.parameters();
    const auto names = state.parameter_names();
    for (std::size_t p = 0; p < params.size(); ++p) {
      INFO(names[p]);
      CHECK(relative_error(*grads[p], numeric_gradient(f, *params[p])) < 1e-4);
    }
    CHECK(relative_error(dcenters, numeric_gradient(f, centers)) < 1e-4);
  }

  TEST_CASE("logged totals are the weighted sum of their components") {
    const Graph g = toy_sbm(6);
    const TrainConfig cfg = quick_config();
    const TrainReport r = train(g, cfg);
    CHECK(r.epochs.size() == 3 + 3 + 4);
    for (const auto& e : r.epochs) {
      CHECK(std::abs(e.total - logged_total(e, cfg)) < 1e-9);
      CHECK(std::isfinite(e.total));
    }
    REQUIRE(r.scores);
    CHECK(r.predictions.size() == 30);
    CHECK(r.embedding.rows() == 30);
  }

  TEST_CASE("baseline variant keeps only reconstruction and clustering") {
    const Graph g = toy_sbm(7);
    TrainConfig cfg = quick_config();
    cfg.flags = parse_variant("B").flags;
    for (const auto& e : train(g, cfg).epochs) {
      CHECK(e.l_n == 0.0);
      CHECK(e.l_f == 0.0);
      CHECK(e.l_r == 0.0);
      if (e.phase == "finetune") CHECK(e.total == doctest::Approx(e.l_rec + cfg.lambda * e.l_kl).epsilon(1e-12));
    }
  }

  TEST_CASE("loss terms are isolated at the first fine-tune epoch") {
    const Graph g = toy_sbm(8);
    TrainConfig cfg = quick_config();
    cfg.epochs_finetune = 1;
    const EpochLog full = train(g, cfg).epochs.back();
    for (const char* name : {"B", "B-P", "B-A", "B-R"}) {
      cfg.flags = parse_variant(name).flags;
      const EpochLog e = train(g, cfg).epochs.back();
      CHECK(e.l_rec == full.l_rec);
      CHECK(e.l_kl == full.l_kl);
      if (cfg.flags.use_preg) CHECK(e.l_r == full.l_r);
      if (cfg.flags.use_ars) CHECK(e.l_n == full.l_n);
      if (cfg.flags.use_rrs) CHECK(e.l_f == full.l_f);
    }
    cfg.flags = AblationFlags{};
    cfg.gamma = 0.0;
    const EpochLog no_gamma = train(g, cfg).epochs.back();
    CHECK(no_gamma.total == doctest::Approx(full.total - 1e3 * full.l_r).epsilon(1e-12));
  }

  TEST_CASE("identity sample target and random readout run") {
    const Graph g = toy_sbm(9);
    TrainConfig cfg = quick_config();
    cfg.flags.sample_target = SampleTarget::kIdentity;
    cfg.readout = ReadoutMode::kRandomPartition;
    cfg.resample_noise_per_epoch = true;
    const TrainReport r = train(g, cfg);
    CHECK(std::isfinite(r.epochs.back().total));
  }

  TEST_CASE("training is deterministic") {
    const Graph g = toy_sbm(10);
    const TrainConfig cfg = quick_config();
    const TrainReport a = train(g, cfg), b = train(g, cfg);
    CHECK(a.predictions == b.predictions);
    CHECK(a.embedding == b.embedding);
    CHECK(same_state(a.state, b.state));
    for (std::size_t e = 0; e < a.epochs.size(); ++e) CHECK(a.epochs[e].total == b.epochs[e].total);
  }

  TEST_CASE("divergence aborts with the last good state") {
    const Graph g = toy_sbm(11);
    TrainConfig cfg = quick_config();
    cfg.divergence_threshold = 1e-6;
    try {
      train(g, cfg);
      FAIL("expected divergence");
    } catch (const DivergenceError& e) {
      CHECK(e.epoch() == 0);
      CHECK(same_state(e.last_good(), init_encoder(cfg.encoder_config(g.feature_dim()), cfg.seed)));
    }
  }

  TEST_CASE("ablation table") {
    const Graph g = toy_sbm(12);
    const TrainConfig cfg = quick_config();
    const auto one = run_ablation(g, {parse_variant("B")}, {0}, cfg);
    REQUIRE(one.size() == 1);
    CHECK(one[0].name == "B");
    CHECK(one[0].metrics.runs.size() == 1);

    const std::vector<Variant> dup{parse_variant("B-P-I"), parse_variant("B-P-I")};
    const auto serial = run_ablation(g, dup, {0, 1}, cfg, 1);
    const auto threaded = run_ablation(g, dup, {0, 1}, cfg, 3);
    CHECK(serial[0].metrics.acc.mean == serial[1].metrics.acc.mean);
    CHECK(serial[0].metrics.nmi.mean == threaded[1].metrics.nmi.mean);
    CHECK(serial[1].metrics.runs[1].ari == threaded[0].metrics.runs[1].ari);
    CHECK_THROWS_AS(run_ablation(g, dup, {}, cfg), std::invalid_argument);
  }
}
