#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace repsample {

// Exact Mann-Whitney AUC: P(score+ > score-) + 0.5 * P(tie), computed from
// mid-ranks after sorting. Throws when labels are single-class.
double auc(std::span<const double> scores, std::span<const int> labels);

// (TPR, TNR) at the given threshold; prediction is 1 iff score >= threshold.
// A side with no positives (negatives) is reported as nullopt, not zero.
struct TprTnr {
  std::optional<double> tpr;
  std::optional<double> tnr;
};
TprTnr tpr_tnr(std::span<const double> scores, std::span<const int> labels,
               double threshold = 0.5);

struct GroupMetrics {
  std::size_t size = 0;
  std::optional<double> auc;
  std::optional<double> tpr;
  std::optional<double> tnr;
};

// Population and per-group performance with disparities metric(G0)-metric(G1).
// Metrics undefined for a group (single-class labels) are flagged via nullopt
// and the corresponding disparity is left unset.
struct FairnessReport {
  std::optional<double> population_auc;
  GroupMetrics g0;
  GroupMetrics g1;
  std::optional<double> delta_auc;
  std::optional<double> delta_tpr;
  std::optional<double> delta_tnr;
};

FairnessReport group_report(std::span<const double> scores,
                            std::span<const int> labels,
                            std::span<const int> groups,
                            double threshold = 0.5);

enum class GroupLoss { OneMinusAuc, WeightedLogLoss };

struct WorstGroupResult {
  int group = 0;
  bool warning = false;  // a group had undefined loss and was excluded
};

// Group with the higher loss on the given validation scores; ties and
// all-undefined cases resolve to group 0.
WorstGroupResult worst_group(std::span<const double> scores,
                             std::span<const int> labels,
                             std::span<const int> groups,
                             GroupLoss loss = GroupLoss::OneMinusAuc);

}  // namespace repsample
