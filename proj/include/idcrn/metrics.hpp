#pragma once

#include <string>
#include <vector>

#include "idcrn/types.hpp"

namespace idcrn {

/// Minimum-cost perfect assignment on a square cost matrix (Kuhn-Munkres,
/// O(n^3)). Returns row -> column.
std::vector<Index> hungarian_min_cost(const Matrix& cost);

/// Exact integer contingency table over compacted label sets.
struct Contingency {
  std::vector<int> truth_ids;   // distinct truth labels, sorted
  std::vector<int> pred_ids;    // distinct predicted labels, sorted
  std::vector<std::vector<long long>> counts;  // [truth][pred]
  long long total = 0;
};

Contingency contingency(const Labels& truth, const Labels& pred);

/// Maps every predicted id to a truth id maximizing total agreement.
/// Predicted ids left unmatched (more clusters than classes) map to fresh ids
/// that no truth label uses.
std::vector<int> best_label_map(const Contingency& table);

/// pred relabeled through best_label_map.
Labels align_predictions(const Labels& truth, const Labels& pred);

double clustering_accuracy(const Labels& truth, const Labels& pred);
double macro_f1(const Labels& truth, const Labels& pred);
double nmi(const Labels& truth, const Labels& pred);
double ari(const Labels& truth, const Labels& pred);

struct ClusteringScores {
  double acc = 0.0;
  double nmi = 0.0;
  double ari = 0.0;
  double f1 = 0.0;
};

ClusteringScores evaluate_clustering(const Labels& truth, const Labels& pred);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
};

struct MetricsReport {
  std::vector<ClusteringScores> runs;
  MeanStd acc, nmi, ari, f1;
};

MetricsReport summarize(const std::vector<ClusteringScores>& runs);

/// "ACC 0.9210 NMI 0.7300 ARI 0.7900 F1 0.9200"
std::string format_scores(const ClusteringScores& s);

}  // namespace idcrn
