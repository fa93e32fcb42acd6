#include "idcrn/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cmath>
#include <numeric>
#include <thread>

#include "idcrn/optimizer.hpp"
#include "idcrn/rng.hpp"

namespace idcrn {
namespace {

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::vector<const Matrix*> const_view(const std::vector<Matrix*>& v) { return {v.begin(), v.end()}; }

struct ViewForward {
  EncodeCache cache1;
  EncodeCache cache2;
  Matrix z1;
  Matrix z2;
};

ViewForward forward_views(const ViewPair& views, const EncoderState& state,
                          BranchSelection branches = BranchSelection::kBoth) {
  ViewForward f;
  f.z1 = encode(views.x1, views.a_f, state, branches, &f.cache1);
  f.z2 = encode(views.x2, views.a_d, state, branches, &f.cache2);
  return f;
}

std::vector<ReconstructionView> reconstruction_views(const ViewPair& views) {
  return {ReconstructionView{views.x1, views.a_f}, ReconstructionView{views.x2, views.a_d}};
}

// L_REC for one branch selection plus its gradient; returns the loss.
double reconstruction_step(const ViewPair& views, const EncoderState& state, BranchSelection branches,
                           double adjacency_weight, EncoderState& grad) {
  ViewForward f = forward_views(views, state, branches);
  std::vector<Matrix> dz;
  const auto rec = reconstruction_loss(reconstruction_views(views), {f.z1, f.z2}, state, adjacency_weight, &dz,
                                       &grad);
  encode_backward(dz[0], views.a_f, state, f.cache1, grad);
  encode_backward(dz[1], views.a_d, state, f.cache2, grad);
  return rec.total;
}

void check_finite(double total, double threshold, const EncoderState& last_good, const std::string& phase,
                  int epoch) {
  if (!std::isfinite(total) || total > threshold) {
    throw DivergenceError(phase + " diverged at epoch " + std::to_string(epoch) + " (loss " + std::to_string(total) +
                              ")",
                          last_good, epoch);
  }
}

Labels random_partition(Index n, int k, std::uint64_t seed) {
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  Rng rng(seed, stream::kReadoutPartition);
  std::shuffle(order.begin(), order.end(), rng.engine());
  Labels groups(static_cast<std::size_t>(n));
  for (Index r = 0; r < n; ++r) groups[order[r]] = static_cast<int>(r % k);
  return groups;
}

}  // namespace

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be positive");
  if (epochs_pretrain < 0 || epochs_init < 0 || epochs_finetune < 0) {
    throw std::invalid_argument("epoch counts must be non-negative");
  }
  if (lambda < 0.0 || gamma < 0.0) throw std::invalid_argument("lambda and gamma must be non-negative");
  if (latent_dim < 2 && flags.use_rrs) throw std::invalid_argument("feature correlation loss needs latent_dim >= 2");
}

ViewOptions TrainConfig::view_options() const {
  return ViewOptions{alpha, knn_k, noise_mean, noise_std, seed, dense_cap};
}

EncoderConfig TrainConfig::encoder_config(Index input_dim) const {
  EncoderConfig e;
  e.input_dim = input_dim;
  e.hidden_dims = hidden_dims;
  e.latent_dim = latent_dim;
  return e;
}

TrainConfig defaults_for_dataset(const std::string& name) {
  TrainConfig cfg;
  const std::string n = lower(name);
  if (n == "acm") cfg.learning_rate = 5e-5;
  else if (n == "amap") cfg.learning_rate = 1e-3;
  else if (n == "dblp") cfg.learning_rate = 1e-4;
  else if (n == "cite" || n == "pubmed" || n == "corafull") cfg.learning_rate = 1e-5;
  cfg.alpha = default_alpha(n);
  return cfg;
}

ObjectiveTerms evaluate_objective(const ObjectiveInputs& in, const EncoderState& state, const Matrix& centers,
                                  EncoderState* grad, Matrix* dcenters) {
  const bool want_grad = grad != nullptr || dcenters != nullptr;
  ObjectiveTerms t;
  ViewForward f = forward_views(in.views, state);
  const Index n = f.z1.rows();
  const Index d = f.z1.cols();
  Matrix dz1 = Matrix::Zero(n, d), dz2 = Matrix::Zero(n, d), dz = Matrix::Zero(n, d);
  const Matrix z = fuse(f.z1, f.z2);

  if (in.flags.use_ars) {
    t.l_n = sample_loss(f.z1, f.z2, in.target, want_grad ? &dz1 : nullptr, want_grad ? &dz2 : nullptr);
  }
  if (in.flags.use_rrs) {
    const Matrix zt1 = readout(f.z1, in.readout_groups, in.num_groups);
    const Matrix zt2 = readout(f.z2, in.readout_groups, in.num_groups);
    const Matrix s_f = feature_correlation(zt1, zt2);
    Matrix ds;
    t.l_f = feature_loss(s_f, want_grad ? &ds : nullptr);
    if (want_grad) {
      Matrix dzt1, dzt2;
      cosine_similarity_backward(zt1, zt2, ds, dzt1, dzt2);
      dz1 += readout_backward(dzt1, in.readout_groups, in.num_groups);
      dz2 += readout_backward(dzt2, in.readout_groups, in.num_groups);
    }
  }
  if (in.flags.use_preg) {
    Matrix g;
    t.l_r = propagation_reg(z, in.a_norm, want_grad ? &g : nullptr);
    if (want_grad && in.gamma != 0.0) dz += in.gamma * g;
  }

  EncoderState scratch;
  EncoderState* g = grad;
  if (want_grad && !g) {
    scratch = state.zeros_like();
    g = &scratch;
  }
  std::vector<Matrix> drec;
  const auto rec = reconstruction_loss(reconstruction_views(in.views), {f.z1, f.z2}, state, in.adjacency_weight,
                                       want_grad ? &drec : nullptr, g);
  t.l_rec = rec.total;
  if (want_grad) {
    dz1 += drec[0];
    dz2 += drec[1];
  }

  {
    Matrix gz, gc;
    t.l_kl = kl_loss(in.p, z, centers, want_grad ? &gz : nullptr, want_grad ? &gc : nullptr);
    if (want_grad) {
      dz += in.lambda * gz;
      if (dcenters) {
        if (dcenters->size() == 0) *dcenters = in.lambda * gc; else *dcenters += in.lambda * gc;
      }
    }
  }

  t.total = idcrm_loss(t.l_n, t.l_f, t.l_r, in.gamma) + t.l_rec + in.lambda * t.l_kl;
  if (want_grad) {
    dz1 += 0.5 * dz;
    dz2 += 0.5 * dz;
    encode_backward(dz1, in.views.a_f, state, f.cache1, *g);
    encode_backward(dz2, in.views.a_d, state, f.cache2, *g);
  }
  t.latents = LatentViews{std::move(f.z1), std::move(f.z2), z};
  return t;
}

EncoderState pretrain(const Graph& g, const ViewPair& views, const TrainConfig& cfg, std::vector<EpochLog>* log) {
  cfg.validate();
  EncoderState state = init_encoder(cfg.encoder_config(g.feature_dim()), cfg.seed);

  auto run_phase = [&](const std::string& phase, int epochs, const std::vector<BranchSelection>& branches) {
    Adam adam(AdamOptions{.learning_rate = cfg.learning_rate});
    EncoderState last_good = state;
    for (int epoch = 0; epoch < epochs; ++epoch) {
      EncoderState grad = state.zeros_like();
      double loss = 0.0;
      for (BranchSelection b : branches) loss += reconstruction_step(views, state, b, cfg.adjacency_weight, grad);
      check_finite(loss, cfg.divergence_threshold, last_good, phase, epoch);
      if (log) log->push_back(EpochLog{phase, epoch, 0.0, 0.0, 0.0, loss, 0.0, loss});
      last_good = state;
      adam.step(state.parameters(), const_view(grad.parameters()));
    }
  };

  std::vector<BranchSelection> separate;
  if (!state.graph.empty()) separate.push_back(BranchSelection::kGraphOnly);
  if (!state.attribute.empty()) separate.push_back(BranchSelection::kAttributeOnly);
  run_phase("pretrain", cfg.epochs_pretrain, separate);
  run_phase("init", cfg.epochs_init, {BranchSelection::kBoth});
  return state;
}

TrainReport train(const Graph& g, const TrainConfig& cfg) {
  cfg.validate();
  const auto started = std::chrono::steady_clock::now();
  const int num_clusters = cfg.num_clusters > 0 ? cfg.num_clusters : g.num_classes();
  if (num_clusters > g.num_nodes()) throw std::invalid_argument("train: more clusters than nodes");

  TrainReport report;
  report.seed = cfg.seed;
  const ViewOptions view_opts = cfg.view_options();
  ViewPair views = make_views(g, view_opts);
  const SparseMatrix a_norm = normalize_adjacency(g).matrix();
  const SparseMatrix a_selfloop = g.self_looped_adjacency();

  EncoderState state = pretrain(g, views, cfg, &report.epochs);

  const KMeansOptions km{.restarts = cfg.kmeans_restarts};
  ClusterModel model;
  {
    const ViewForward f = forward_views(views, state);
    model.centers = kmeans(fuse(f.z1, f.z2), num_clusters, derive_seed(cfg.seed, stream::kKMeansInit), km).centers;
  }
  const Labels partition = cfg.readout == ReadoutMode::kRandomPartition
                               ? random_partition(g.num_nodes(), num_clusters, cfg.seed)
                               : Labels{};

  Adam adam(AdamOptions{.learning_rate = cfg.learning_rate});
  EncoderState last_good = state;
  for (int epoch = 0; epoch < cfg.epochs_finetune; ++epoch) {
    if (cfg.resample_noise_per_epoch && epoch > 0) {
      resample_view_noise(views, g, view_opts, static_cast<std::uint64_t>(epoch));
    }
    // Refresh the clustering head from the current parameters.
    {
      const ViewForward f = forward_views(views, state);
      refresh(model, fuse(f.z1, f.z2), cfg.confidence_fraction);
    }
    const AffinityTarget target =
        cfg.flags.sample_target == SampleTarget::kIdentity
            ? AffinityTarget::identity(g.num_nodes())
            : build_affinity_target(a_selfloop, model.pseudo_labels, model.confident_mask, num_clusters);
    const ObjectiveInputs in{views,
                             a_norm,
                             target,
                             cfg.readout == ReadoutMode::kRandomPartition ? partition : model.pseudo_labels,
                             num_clusters,
                             model.p,
                             cfg.flags,
                             cfg.gamma,
                             cfg.lambda,
                             cfg.adjacency_weight};
    EncoderState grad = state.zeros_like();
    Matrix dcenters = Matrix::Zero(model.centers.rows(), model.centers.cols());
    const ObjectiveTerms terms = evaluate_objective(in, state, model.centers, &grad, &dcenters);
    check_finite(terms.total, cfg.divergence_threshold, last_good, "finetune", epoch);
    report.epochs.push_back(
        EpochLog{"finetune", epoch, terms.l_n, terms.l_f, terms.l_r, terms.l_rec, terms.l_kl, terms.total});
    last_good = state;

    auto params = state.parameters();
    auto grads = const_view(grad.parameters());
    params.push_back(&model.centers);
    grads.push_back(&dcenters);
    adam.step(params, grads);
  }

  const ViewForward f = forward_views(views, state);
  report.embedding = fuse(f.z1, f.z2);
  const KMeansResult final_km =
      kmeans(report.embedding, num_clusters, derive_seed(cfg.seed, stream::kKMeansFinal), km);
  report.predictions = final_km.assignments;
  report.centers = model.centers;
  if (g.labels()) report.scores = evaluate_clustering(*g.labels(), report.predictions);
  report.state = std::move(state);
  report.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return report;
}

Variant parse_variant(const std::string& name) {
  std::string key;
  for (char c : name) key += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  Variant v{key, AblationFlags{}};
  v.flags.use_preg = false;
  v.flags.set_idcrm(false);
  if (key == "B") return v;
  if (key == "B-P") { v.flags.use_preg = true; return v; }
  if (key == "B-I" || key == "B-R-A") { v.flags.set_idcrm(true); return v; }
  if (key == "B-P-I" || key == "FULL") { v.flags.use_preg = true; v.flags.set_idcrm(true); return v; }
  if (key == "B-R") { v.flags.use_rrs = true; return v; }
  if (key == "B-A") { v.flags.use_ars = true; return v; }
  throw std::invalid_argument("unknown ablation variant '" + name + "'");
}

std::vector<AblationRow> run_ablation(const Graph& g, const std::vector<Variant>& variants,
                                      const std::vector<std::uint64_t>& seeds, const TrainConfig& base, int workers) {
  if (seeds.empty()) throw std::invalid_argument("run_ablation: need at least one seed");
  const std::size_t jobs = variants.size() * seeds.size();
  std::vector<ClusteringScores> scores(jobs);
  std::vector<std::exception_ptr> errors(jobs);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t job; (job = next.fetch_add(1)) < jobs;) {
      TrainConfig cfg = base;
      cfg.flags = variants[job / seeds.size()].flags;
      cfg.flags.sample_target = base.flags.sample_target;
      cfg.seed = seeds[job % seeds.size()];
      try {
        const TrainReport r = train(g, cfg);
        if (!r.scores) throw std::invalid_argument("run_ablation: graph has no labels to score against");
        scores[job] = *r.scores;
      } catch (...) {
        errors[job] = std::current_exception();
      }
    }
  };
  const int threads = std::clamp(workers, 1, static_cast<int>(jobs));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  std::vector<AblationRow> rows;
  for (std::size_t v = 0; v < variants.size(); ++v) {
    std::vector<ClusteringScores> runs(scores.begin() + static_cast<std::ptrdiff_t>(v * seeds.size()),
                                       scores.begin() + static_cast<std::ptrdiff_t>((v + 1) * seeds.size()));
    rows.push_back(AblationRow{variants[v].name, summarize(runs)});
  }
  return rows;
}

}  // namespace idcrn
