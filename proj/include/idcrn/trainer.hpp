#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "idcrn/augment.hpp"
#include "idcrn/cluster.hpp"
#include "idcrn/encoder.hpp"
#include "idcrn/graph.hpp"
#include "idcrn/idcrm.hpp"
#include "idcrn/metrics.hpp"

namespace idcrn {

enum class SampleTarget { kAffinity, kIdentity };
enum class ReadoutMode { kPseudoLabels, kRandomPartition };

/// Which loss terms join the fine-tuning objective. All off is the baseline
/// (reconstruction + clustering loss only).
struct AblationFlags {
  bool use_preg = true;  // propagation regularization
  bool use_ars = true;   // affinity recovery (sample correlation loss)
  bool use_rrs = true;   // redundancy reduction (feature correlation loss)
  SampleTarget sample_target = SampleTarget::kAffinity;

  bool use_idcrm() const { return use_ars && use_rrs; }
  void set_idcrm(bool on) { use_ars = use_rrs = on; }
};

struct TrainConfig {
  double learning_rate = 1e-4;
  int epochs_pretrain = 30;
  int epochs_init = 100;
  int epochs_finetune = 400;
  double lambda = 10.0;
  double gamma = 1e3;
  double alpha = 0.2;
  Index knn_k = 5;
  double noise_mean = 1.0;
  double noise_std = 0.1;
  std::uint64_t seed = 0;
  AblationFlags flags;

  std::vector<Index> hidden_dims{256};
  Index latent_dim = 20;
  double adjacency_weight = 0.1;
  double confidence_fraction = 0.6;
  int num_clusters = 0;  // 0: take the graph's class count
  ReadoutMode readout = ReadoutMode::kPseudoLabels;
  bool resample_noise_per_epoch = false;
  int kmeans_restarts = 10;
  Index dense_cap = kDefaultDenseCap;
  double divergence_threshold = 1e8;

  void validate() const;
  ViewOptions view_options() const;
  EncoderConfig encoder_config(Index input_dim) const;
};

/// Learning rate and teleport probability used for the public benchmarks
/// (acm, amap, dblp, cite, pubmed, corafull); anything else gets 1e-4 / 0.2.
TrainConfig defaults_for_dataset(const std::string& name);

struct EpochLog {
  std::string phase;  // "pretrain", "init" or "finetune"
  int epoch = 0;
  double l_n = 0.0;
  double l_f = 0.0;
  double l_r = 0.0;
  double l_rec = 0.0;
  double l_kl = 0.0;
  double total = 0.0;
};

struct TrainReport {
  std::vector<EpochLog> epochs;
  std::optional<ClusteringScores> scores;  // present when the graph carries labels
  Labels predictions;
  Matrix embedding;  // final fused embedding
  Matrix centers;
  EncoderState state;
  double wall_clock_seconds = 0.0;
  std::uint64_t seed = 0;
};

/// Raised when the objective turns non-finite or exceeds the divergence
/// threshold; carries the parameters of the last finite epoch.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, EncoderState last_good, int epoch)
      : std::runtime_error(what), last_good_(std::move(last_good)), epoch_(epoch) {}
  const EncoderState& last_good() const { return last_good_; }
  int epoch() const { return epoch_; }

 private:
  EncoderState last_good_;
  int epoch_;
};

/// Everything the fine-tuning objective depends on for one evaluation.
struct ObjectiveInputs {
  const ViewPair& views;
  const SparseMatrix& a_norm;
  const AffinityTarget& target;
  const Labels& readout_groups;
  int num_groups;
  const Matrix& p;  // fixed target distribution
  AblationFlags flags;
  double gamma;
  double lambda;
  double adjacency_weight;
};

struct ObjectiveTerms {
  double l_n = 0.0;
  double l_f = 0.0;
  double l_r = 0.0;
  double l_rec = 0.0;
  double l_kl = 0.0;
  double total = 0.0;
  LatentViews latents;
};

/// L = L_N + L_F + gamma L_R + L_REC + lambda L_KL with disabled terms held
/// at zero. Gradients are accumulated into grad / dcenters when non-null.
ObjectiveTerms evaluate_objective(const ObjectiveInputs& in, const EncoderState& state, const Matrix& centers,
                                  EncoderState* grad = nullptr, Matrix* dcenters = nullptr);

/// Reconstruction-only training: epochs_pretrain epochs per branch, then
/// epochs_init epochs with both branches united.
EncoderState pretrain(const Graph& g, const ViewPair& views, const TrainConfig& cfg,
                      std::vector<EpochLog>* log = nullptr);

/// Full pipeline: views, pretraining, center initialization, fine-tuning,
/// final k-means on the fused embedding.
TrainReport train(const Graph& g, const TrainConfig& cfg);

struct Variant {
  std::string name;
  AblationFlags flags;
};

/// B, B-P, B-I, B-P-I, B-R, B-A, B-R-A (case-insensitive). Throws on others.
Variant parse_variant(const std::string& name);

struct AblationRow {
  std::string name;
  MetricsReport metrics;
};

/// One row per variant; every variant runs the same seeds. Runs are
/// independent and may be spread over `workers` threads.
std::vector<AblationRow> run_ablation(const Graph& g, const std::vector<Variant>& variants,
                                      const std::vector<std::uint64_t>& seeds, const TrainConfig& base,
                                      int workers = 1);

}  // namespace idcrn
