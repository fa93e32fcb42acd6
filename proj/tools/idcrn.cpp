#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "idcrn/checkpoint.hpp"
#include "idcrn/dataset_io.hpp"
#include "idcrn/log.hpp"
#include "idcrn/metrics.hpp"
#include "idcrn/reporting.hpp"
#include "idcrn/serialization.hpp"
#include "idcrn/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace idcrn;

namespace {

// Flags shared by every subcommand that trains. Unset optionals leave the
// dataset defaults and config file values alone.
struct TrainFlags {
  std::string dataset;
  std::string config_file;
  std::string out = "runs/latest";
  std::optional<std::uint64_t> seed;
  std::optional<int> epochs;
  std::optional<int> epochs_pretrain;
  std::optional<int> epochs_init;
  std::optional<double> lambda;
  std::optional<double> gamma;
  std::optional<double> alpha;
  std::optional<Index> knn_k;
  std::optional<double> lr;
  std::optional<double> noise_std;
  std::optional<int> clusters;
  std::optional<double> confidence_fraction;
  std::optional<std::string> sample_target;
  std::optional<std::string> variant;
  int runs = 1;
};

void add_train_flags(CLI::App* cmd, TrainFlags& f, int default_runs) {
  f.runs = default_runs;
  cmd->add_option("--dataset", f.dataset, "dataset bundle directory")->required()->check(CLI::ExistingDirectory);
  cmd->add_option("--config", f.config_file, "JSON config; nested sections are flattened")->check(CLI::ExistingFile);
  cmd->add_option("--out", f.out, "output directory")->capture_default_str();
  cmd->add_option("--seed", f.seed, "first seed");
  cmd->add_option("--epochs", f.epochs, "fine-tuning epochs");
  cmd->add_option("--pretrain-epochs", f.epochs_pretrain, "per-branch pretraining epochs");
  cmd->add_option("--init-epochs", f.epochs_init, "united pretraining epochs");
  cmd->add_option("--lambda", f.lambda, "clustering loss weight");
  cmd->add_option("--gamma", f.gamma, "propagation regularization weight");
  cmd->add_option("--alpha", f.alpha, "PPR teleport probability")->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--knn-k", f.knn_k, "neighbours per node in the KNN view")->check(CLI::PositiveNumber);
  cmd->add_option("--lr", f.lr, "learning rate")->check(CLI::PositiveNumber);
  cmd->add_option("--noise-std", f.noise_std, "std of the multiplicative attribute noise");
  cmd->add_option("--clusters", f.clusters, "cluster count (default: class count)");
  cmd->add_option("--confidence-fraction", f.confidence_fraction, "confident share per cluster")
      ->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--sample-target", f.sample_target, "affinity or identity")
      ->check(CLI::IsMember({"affinity", "identity"}));
  cmd->add_option("--variant", f.variant, "ablation variant, e.g. B or B-P-I");
  cmd->add_option("--runs", f.runs, "number of consecutive seeds")->capture_default_str()->check(CLI::PositiveNumber);
}

void flatten_into(const json& j, json& flat) {
  for (const auto& [key, value] : j.items()) {
    if (value.is_object()) {
      flatten_into(value, flat);
    } else {
      flat[key] = value;
    }
  }
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return json::parse(in, nullptr, true, true);
}

TrainConfig resolve_config(const TrainFlags& f) {
  TrainConfig cfg = defaults_for_dataset(fs::path(f.dataset).filename().string());
  if (!f.config_file.empty()) {
    json flat = json::object();
    flatten_into(read_json_file(f.config_file), flat);
    cfg = config_from_json(flat, cfg);
  }
  if (f.variant) {
    const SampleTarget target = cfg.flags.sample_target;
    cfg.flags = parse_variant(*f.variant).flags;
    cfg.flags.sample_target = target;
  }
  if (f.seed) cfg.seed = *f.seed;
  if (f.epochs) cfg.epochs_finetune = *f.epochs;
  if (f.epochs_pretrain) cfg.epochs_pretrain = *f.epochs_pretrain;
  if (f.epochs_init) cfg.epochs_init = *f.epochs_init;
  if (f.lambda) cfg.lambda = *f.lambda;
  if (f.gamma) cfg.gamma = *f.gamma;
  if (f.alpha) cfg.alpha = *f.alpha;
  if (f.knn_k) cfg.knn_k = *f.knn_k;
  if (f.lr) cfg.learning_rate = *f.lr;
  if (f.noise_std) cfg.noise_std = *f.noise_std;
  if (f.clusters) cfg.num_clusters = *f.clusters;
  if (f.confidence_fraction) cfg.confidence_fraction = *f.confidence_fraction;
  if (f.sample_target) {
    cfg.flags.sample_target = *f.sample_target == "identity" ? SampleTarget::kIdentity : SampleTarget::kAffinity;
  }
  cfg.validate();
  return cfg;
}

std::vector<std::uint64_t> seed_range(std::uint64_t first, int runs) {
  std::vector<std::uint64_t> seeds;
  for (int i = 0; i < runs; ++i) seeds.push_back(first + static_cast<std::uint64_t>(i));
  return seeds;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

int cmd_train(const TrainFlags& f) {
  const TrainConfig base = resolve_config(f);
  const Graph g = load_bundle(f.dataset);
  const fs::path out = f.out;
  const auto seeds = seed_range(base.seed, f.runs);
  std::vector<ClusteringScores> scores;
  for (std::uint64_t seed : seeds) {
    TrainConfig cfg = base;
    cfg.seed = seed;
    const fs::path dir = seeds.size() == 1 ? out : out / ("seed_" + std::to_string(seed));
    TrainReport r;
    try {
      r = train(g, cfg);
    } catch (const DivergenceError& e) {
      save_checkpoint(e.last_good(), dir / "last_good.ckpt");
      std::fprintf(stderr, "error: %s (last good parameters in %s)\n", e.what(), (dir / "last_good.ckpt").c_str());
      return 3;
    }
    write_epoch_log(r.epochs, dir / "report.jsonl");
    write_predictions(r.predictions, dir / "predictions.csv");
    save_checkpoint(r.state, dir / "model.ckpt");
    write_text(dir / "config.json", dump_json(to_json(cfg)));
    if (r.scores) {
      scores.push_back(*r.scores);
      std::printf("seed %llu  %s  %.1f s\n", static_cast<unsigned long long>(seed), format_scores(*r.scores).c_str(),
                  r.wall_clock_seconds);
    } else {
      std::printf("seed %llu  no labels, predictions only  %.1f s\n", static_cast<unsigned long long>(seed),
                  r.wall_clock_seconds);
    }
  }
  write_text(out / "config.json", dump_json(to_json(base)));
  if (!scores.empty()) {
    write_metrics(out / "metrics.json", base, seeds, scores);
    if (scores.size() > 1) {
      const MetricsReport m = summarize(scores);
      std::printf("mean  ACC %.4f±%.4f NMI %.4f±%.4f ARI %.4f±%.4f F1 %.4f±%.4f\n", m.acc.mean, m.acc.std,
                  m.nmi.mean, m.nmi.std, m.ari.mean, m.ari.std, m.f1.mean, m.f1.std);
    }
  }
  return 0;
}

int cmd_pretrain(const TrainFlags& f) {
  const TrainConfig cfg = resolve_config(f);
  const Graph g = load_bundle(f.dataset);
  const ViewPair views = make_views(g, cfg.view_options());
  std::vector<EpochLog> log;
  const EncoderState state = pretrain(g, views, cfg, &log);
  const fs::path out = f.out;
  write_epoch_log(log, out / "report.jsonl");
  save_checkpoint(state, out / "pretrain.ckpt");
  write_text(out / "config.json", dump_json(to_json(cfg)));
  std::printf("pretrained %zu epochs, final reconstruction loss %.6f\n", log.size(),
              log.empty() ? 0.0 : log.back().l_rec);
  return 0;
}

int cmd_ablate(const TrainFlags& f, std::vector<std::string> variant_names, int workers) {
  const TrainConfig base = resolve_config(f);
  const Graph g = load_bundle(f.dataset);
  std::vector<Variant> variants;
  for (const auto& name : variant_names) variants.push_back(parse_variant(name));
  const auto seeds = seed_range(base.seed, f.runs);
  const auto rows = run_ablation(g, variants, seeds, base, workers);

  json table = json::array();
  std::printf("%-8s %-16s %-16s %-16s %-16s\n", "variant", "ACC", "NMI", "ARI", "F1");
  for (const auto& row : rows) {
    const MetricsReport& m = row.metrics;
    std::printf("%-8s %.4f±%.4f    %.4f±%.4f    %.4f±%.4f    %.4f±%.4f\n", row.name.c_str(), m.acc.mean, m.acc.std,
                m.nmi.mean, m.nmi.std, m.ari.mean, m.ari.std, m.f1.mean, m.f1.std);
    json entry = to_json(m);
    entry["variant"] = row.name;
    table.push_back(entry);
  }
  write_text(fs::path(f.out) / "ablation.json",
             dump_json(json{{"variants", table}, {"seeds", seeds}, {"config", to_json(base)}}));
  return 0;
}

int cmd_evaluate(const std::string& truth_path, const std::string& pred_path, const std::string& log_path) {
  const ClusteringScores s = evaluate_clustering(read_labels(truth_path), read_labels(pred_path));
  json record = to_json(s);
  record["truth"] = truth_path;
  record["pred"] = pred_path;
  const std::string line = record.dump();
  std::printf("%s\n", line.c_str());
  if (!log_path.empty()) {
    std::ofstream out(log_path, std::ios::app);
    if (!out) throw std::runtime_error("cannot append to " + log_path);
    out << line << '\n';
  }
  return 0;
}

struct ReportFlags {
  std::string checkpoint;
  std::string dataset;
  std::string config_file;
  std::string out;
};

void add_report_flags(CLI::App* cmd, ReportFlags& f) {
  cmd->add_option("--checkpoint", f.checkpoint, "trained model")->required()->check(CLI::ExistingFile);
  cmd->add_option("--dataset", f.dataset, "dataset bundle directory")->required()->check(CLI::ExistingDirectory);
  cmd->add_option("--config", f.config_file, "config used for training (default: config.json next to checkpoint)");
  cmd->add_option("--out", f.out, "output file")->required();
}

struct Embedded {
  Matrix z;
  Labels labels;
};

Embedded embed(const ReportFlags& f) {
  const Graph g = load_bundle(f.dataset);
  TrainConfig cfg = defaults_for_dataset(fs::path(f.dataset).filename().string());
  fs::path config = f.config_file;
  if (config.empty()) config = fs::path(f.checkpoint).parent_path() / "config.json";
  if (fs::exists(config)) cfg = config_from_json(read_json_file(config), cfg);
  const EncoderState state = load_checkpoint(f.checkpoint);
  if (state.config.input_dim != g.feature_dim()) {
    throw std::invalid_argument("checkpoint expects " + std::to_string(state.config.input_dim) +
                                " features, dataset has " + std::to_string(g.feature_dim()));
  }
  const ViewPair views = make_views(g, cfg.view_options());
  Embedded e;
  e.z = fuse(encode(views.x1, views.a_f, state), encode(views.x2, views.a_d, state));
  e.labels = g.labels() ? *g.labels() : Labels(static_cast<std::size_t>(g.num_nodes()), 0);
  return e;
}

struct SbmFlags {
  std::vector<Index> blocks{100, 100, 100};
  double p_in = 0.2;
  double p_out = 0.01;
  Index dim = 3;
  double separation = 1.0;
  double std = 0.3;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_generate_sbm(const SbmFlags& f) {
  SbmParams p;
  p.block_sizes = f.blocks;
  p.p_in = f.p_in;
  p.p_out = f.p_out;
  p.feature_means = equidistant_means(static_cast<int>(f.blocks.size()), f.dim, f.separation);
  p.feature_std = f.std;
  p.seed = f.seed;
  const Graph g = sbm_generate(p);
  save_bundle(g, f.out);
  std::printf("wrote %lld nodes, %zu edges to %s\n", static_cast<long long>(g.num_nodes()), g.edges().size(),
              f.out.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Attributed-graph node clustering with dual correlation reduction"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "echo numerical warnings to stderr");

  TrainFlags train_flags, pretrain_flags, ablate_flags;
  auto* train_cmd = app.add_subcommand("train", "pretrain, fine-tune and cluster one or more seeds");
  add_train_flags(train_cmd, train_flags, 1);

  auto* pretrain_cmd = app.add_subcommand("pretrain", "reconstruction-only pretraining");
  add_train_flags(pretrain_cmd, pretrain_flags, 1);

  auto* ablate_cmd = app.add_subcommand("ablate", "compare loss-term variants over several seeds");
  add_train_flags(ablate_cmd, ablate_flags, 5);
  std::vector<std::string> variants{"B", "B-P", "B-I", "B-P-I", "B-R", "B-A", "B-R-A"};
  int workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  ablate_cmd->add_option("--variants", variants, "variants to run")->capture_default_str();
  ablate_cmd->add_option("--workers", workers, "concurrent runs")->capture_default_str();

  std::string truth_path, pred_path, eval_log;
  auto* eval_cmd = app.add_subcommand("evaluate", "score predicted labels against ground truth");
  eval_cmd->add_option("truth", truth_path, "ground-truth labels")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("pred", pred_path, "predicted labels (or predictions.csv)")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--log", eval_log, "append the record to this file");

  std::string conv_src, conv_name, conv_out;
  auto* convert_cmd = app.add_subcommand("convert-dataset", "convert a public benchmark dump into a bundle");
  convert_cmd->add_option("--src", conv_src, "directory with the raw files")->required()->check(CLI::ExistingDirectory);
  convert_cmd->add_option("--name", conv_name, "dataset name, e.g. acm")->required();
  convert_cmd->add_option("--out", conv_out, "bundle directory to write")->required();

  auto* report_cmd = app.add_subcommand("report", "diagnostic artifacts");
  report_cmd->require_subcommand(1);
  ReportFlags heatmap_flags, embed_flags;
  auto* heatmap_cmd = report_cmd->add_subcommand("heatmap", "label-ordered similarity heatmap (PNG + CSV)");
  add_report_flags(heatmap_cmd, heatmap_flags);
  auto* embed_cmd = report_cmd->add_subcommand("embeddings", "dump fused embeddings with labels as CSV");
  add_report_flags(embed_cmd, embed_flags);

  SbmFlags sbm;
  auto* sbm_cmd = app.add_subcommand("generate-sbm", "write a synthetic stochastic block model bundle");
  sbm_cmd->add_option("--blocks", sbm.blocks, "block sizes")->capture_default_str();
  sbm_cmd->add_option("--p-in", sbm.p_in, "within-block edge probability")->capture_default_str();
  sbm_cmd->add_option("--p-out", sbm.p_out, "between-block edge probability")->capture_default_str();
  sbm_cmd->add_option("--dim", sbm.dim, "feature dimension (>= block count)")->capture_default_str();
  sbm_cmd->add_option("--separation", sbm.separation, "distance between block means")->capture_default_str();
  sbm_cmd->add_option("--std", sbm.std, "feature noise std")->capture_default_str();
  sbm_cmd->add_option("--seed", sbm.seed, "seed")->capture_default_str();
  sbm_cmd->add_option("--out", sbm.out, "bundle directory to write")->required();

  CLI11_PARSE(app, argc, argv);
  set_warning_echo(verbose);

  try {
    if (*train_cmd) return cmd_train(train_flags);
    if (*pretrain_cmd) return cmd_pretrain(pretrain_flags);
    if (*ablate_cmd) return cmd_ablate(ablate_flags, variants, workers);
    if (*eval_cmd) return cmd_evaluate(truth_path, pred_path, eval_log);
    if (*convert_cmd) {
      const Graph g = convert_public_bundle(conv_src, conv_name, conv_out);
      std::printf("wrote %lld nodes, %lld features, %zu edges, %d classes to %s\n",
                  static_cast<long long>(g.num_nodes()), static_cast<long long>(g.feature_dim()), g.edges().size(),
                  g.num_classes(), conv_out.c_str());
      return 0;
    }
    if (*heatmap_cmd) {
      const Embedded e = embed(heatmap_flags);
      similarity_heatmap(e.z, e.labels, heatmap_flags.out);
      std::printf("wrote %s and %s\n", heatmap_flags.out.c_str(),
                  fs::path(heatmap_flags.out).replace_extension(".csv").c_str());
      return 0;
    }
    if (*embed_cmd) {
      const Embedded e = embed(embed_flags);
      dump_embeddings(e.z, e.labels, embed_flags.out);
      std::printf("wrote %s\n", embed_flags.out.c_str());
      return 0;
    }
    if (*sbm_cmd) return cmd_generate_sbm(sbm);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
