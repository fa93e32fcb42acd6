#include "idcrn/serialization.hpp"

#include <charconv>
#include <fstream>
#include <stdexcept>

namespace idcrn {
namespace {

using nlohmann::json;

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

const char* target_name(SampleTarget t) { return t == SampleTarget::kIdentity ? "identity" : "affinity"; }
const char* readout_name(ReadoutMode r) { return r == ReadoutMode::kRandomPartition ? "random" : "pseudo_labels"; }

template <typename T>
void take(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

json mean_std(const MeanStd& m) { return json{{"mean", m.mean}, {"std", m.std}}; }

}  // namespace

json to_json(const TrainConfig& cfg) {
  return json{
      {"learning_rate", cfg.learning_rate},
      {"epochs_pretrain", cfg.epochs_pretrain},
      {"epochs_init", cfg.epochs_init},
      {"epochs_finetune", cfg.epochs_finetune},
      {"lambda", cfg.lambda},
      {"gamma", cfg.gamma},
      {"alpha", cfg.alpha},
      {"knn_k", cfg.knn_k},
      {"noise_mean", cfg.noise_mean},
      {"noise_std", cfg.noise_std},
      {"seed", cfg.seed},
      {"use_preg", cfg.flags.use_preg},
      {"use_ars", cfg.flags.use_ars},
      {"use_rrs", cfg.flags.use_rrs},
      {"sample_target", target_name(cfg.flags.sample_target)},
      {"hidden_dims", cfg.hidden_dims},
      {"latent_dim", cfg.latent_dim},
      {"adjacency_weight", cfg.adjacency_weight},
      {"confidence_fraction", cfg.confidence_fraction},
      {"num_clusters", cfg.num_clusters},
      {"readout", readout_name(cfg.readout)},
      {"resample_noise_per_epoch", cfg.resample_noise_per_epoch},
      {"kmeans_restarts", cfg.kmeans_restarts},
      {"dense_cap", cfg.dense_cap},
      {"divergence_threshold", cfg.divergence_threshold},
  };
}

TrainConfig config_from_json(const json& j, TrainConfig cfg) {
  take(j, "learning_rate", cfg.learning_rate);
  take(j, "epochs_pretrain", cfg.epochs_pretrain);
  take(j, "epochs_init", cfg.epochs_init);
  take(j, "epochs_finetune", cfg.epochs_finetune);
  take(j, "lambda", cfg.lambda);
  take(j, "gamma", cfg.gamma);
  take(j, "alpha", cfg.alpha);
  take(j, "knn_k", cfg.knn_k);
  take(j, "noise_mean", cfg.noise_mean);
  take(j, "noise_std", cfg.noise_std);
  take(j, "seed", cfg.seed);
  take(j, "use_preg", cfg.flags.use_preg);
  take(j, "use_ars", cfg.flags.use_ars);
  take(j, "use_rrs", cfg.flags.use_rrs);
  if (j.contains("sample_target")) {
    const auto s = j.at("sample_target").get<std::string>();
    if (s == "identity") cfg.flags.sample_target = SampleTarget::kIdentity;
    else if (s == "affinity") cfg.flags.sample_target = SampleTarget::kAffinity;
    else throw std::invalid_argument("sample_target must be 'affinity' or 'identity'");
  }
  take(j, "hidden_dims", cfg.hidden_dims);
  take(j, "latent_dim", cfg.latent_dim);
  take(j, "adjacency_weight", cfg.adjacency_weight);
  take(j, "confidence_fraction", cfg.confidence_fraction);
  take(j, "num_clusters", cfg.num_clusters);
  if (j.contains("readout")) {
    const auto s = j.at("readout").get<std::string>();
    if (s == "random") cfg.readout = ReadoutMode::kRandomPartition;
    else if (s == "pseudo_labels") cfg.readout = ReadoutMode::kPseudoLabels;
    else throw std::invalid_argument("readout must be 'pseudo_labels' or 'random'");
  }
  take(j, "resample_noise_per_epoch", cfg.resample_noise_per_epoch);
  take(j, "kmeans_restarts", cfg.kmeans_restarts);
  take(j, "dense_cap", cfg.dense_cap);
  take(j, "divergence_threshold", cfg.divergence_threshold);
  return cfg;
}

json to_json(const EpochLog& e) {
  return json{{"phase", e.phase}, {"epoch", e.epoch}, {"l_n", e.l_n},   {"l_f", e.l_f},
              {"l_r", e.l_r},     {"l_rec", e.l_rec}, {"l_kl", e.l_kl}, {"total", e.total}};
}

json to_json(const ClusteringScores& s) {
  return json{{"acc", s.acc}, {"nmi", s.nmi}, {"ari", s.ari}, {"f1", s.f1}};
}

json to_json(const MetricsReport& r) {
  json runs = json::array();
  for (const auto& s : r.runs) runs.push_back(to_json(s));
  return json{{"acc", mean_std(r.acc)}, {"nmi", mean_std(r.nmi)}, {"ari", mean_std(r.ari)},
              {"f1", mean_std(r.f1)},   {"runs", runs}};
}

std::string dump_json(const json& j) { return j.dump(2) + "\n"; }

void write_epoch_log(const std::vector<EpochLog>& epochs, const std::filesystem::path& path) {
  auto out = open_out(path);
  for (const auto& e : epochs) out << to_json(e).dump() << '\n';
}

void write_metrics(const std::filesystem::path& path, const TrainConfig& cfg, const std::vector<std::uint64_t>& seeds,
                   const std::vector<ClusteringScores>& runs) {
  json j = to_json(summarize(runs));
  j["seeds"] = seeds;
  j["config"] = to_json(cfg);
  auto out = open_out(path);
  out << dump_json(j);
}

void write_predictions(const Labels& predictions, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "node,cluster\n";
  for (std::size_t i = 0; i < predictions.size(); ++i) out << i << ',' << predictions[i] << '\n';
}

Labels read_labels(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  Labels labels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find_last_of(",\t ");
    const std::string field = comma == std::string::npos ? line : line.substr(comma + 1);
    int value = 0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc() || ptr != field.data() + field.size()) {
      if (labels.empty() && line_no == 1) continue;  // header
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": not an integer label");
    }
    labels.push_back(value);
  }
  return labels;
}

}  // namespace idcrn
