#include "repsample/fairness.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace repsample {

double auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size())
    throw std::invalid_argument("auc: size mismatch");
  const std::size_t n = scores.size();
  std::size_t n_pos = 0;
  for (const int y : labels) n_pos += static_cast<std::size_t>(y != 0);
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0)
    throw std::runtime_error("auc: labels are single-class");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Sum of mid-ranks over positives; ties share the average rank, which makes
  // every tied positive/negative pair count exactly one half.
  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double mid_rank = 0.5 * static_cast<double>(i + 1 + j);  // 1-based
    for (std::size_t t = i; t < j; ++t)
      if (labels[order[t]] != 0) rank_sum_pos += mid_rank;
    i = j;
  }
  const double u = rank_sum_pos - 0.5 * static_cast<double>(n_pos) *
                                      static_cast<double>(n_pos + 1);
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

TprTnr tpr_tnr(std::span<const double> scores, std::span<const int> labels,
               double threshold) {
  if (scores.size() != labels.size())
    throw std::invalid_argument("tpr_tnr: size mismatch");
  std::size_t tp = 0, fn = 0, tn = 0, fp = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool pred = scores[i] >= threshold;
    if (labels[i] != 0)
      pred ? ++tp : ++fn;
    else
      pred ? ++fp : ++tn;
  }
  TprTnr out;
  if (tp + fn > 0)
    out.tpr = static_cast<double>(tp) / static_cast<double>(tp + fn);
  if (tn + fp > 0)
    out.tnr = static_cast<double>(tn) / static_cast<double>(tn + fp);
  return out;
}

namespace {

GroupMetrics metrics_for(std::span<const double> scores,
                         std::span<const int> labels, double threshold) {
  GroupMetrics m;
  m.size = scores.size();
  if (!scores.empty()) {
    bool has_pos = false, has_neg = false;
    for (const int y : labels) (y != 0 ? has_pos : has_neg) = true;
    if (has_pos && has_neg) m.auc = auc(scores, labels);
    const auto rates = tpr_tnr(scores, labels, threshold);
    m.tpr = rates.tpr;
    m.tnr = rates.tnr;
  }
  return m;
}

std::optional<double> diff(const std::optional<double>& a,
                           const std::optional<double>& b) {
  if (a && b) return *a - *b;
  return std::nullopt;
}

}  // namespace

FairnessReport group_report(std::span<const double> scores,
                            std::span<const int> labels,
                            std::span<const int> groups, double threshold) {
  if (scores.size() != labels.size() || scores.size() != groups.size())
    throw std::invalid_argument("group_report: size mismatch");
  if (scores.empty())
    throw std::invalid_argument("group_report: empty test set");

  std::vector<double> s0, s1;
  std::vector<int> y0, y1;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (groups[i] == 0) {
      s0.push_back(scores[i]);
      y0.push_back(labels[i]);
    } else {
      s1.push_back(scores[i]);
      y1.push_back(labels[i]);
    }
  }

  FairnessReport r;
  bool has_pos = false, has_neg = false;
  for (const int y : labels) (y != 0 ? has_pos : has_neg) = true;
  if (has_pos && has_neg) r.population_auc = auc(scores, labels);
  r.g0 = metrics_for(s0, y0, threshold);
  r.g1 = metrics_for(s1, y1, threshold);
  r.delta_auc = diff(r.g0.auc, r.g1.auc);
  r.delta_tpr = diff(r.g0.tpr, r.g1.tpr);
  r.delta_tnr = diff(r.g0.tnr, r.g1.tnr);
  return r;
}

WorstGroupResult worst_group(std::span<const double> scores,
                             std::span<const int> labels,
                             std::span<const int> groups, GroupLoss loss) {
  if (scores.size() != labels.size() || scores.size() != groups.size())
    throw std::invalid_argument("worst_group: size mismatch");

  std::optional<double> loss_of[2];
  for (const int g : {0, 1}) {
    std::vector<double> s;
    std::vector<int> y;
    for (std::size_t i = 0; i < scores.size(); ++i)
      if ((groups[i] != 0) == (g == 1)) {
        s.push_back(scores[i]);
        y.push_back(labels[i]);
      }
    if (s.empty()) continue;
    if (loss == GroupLoss::OneMinusAuc) {
      bool has_pos = false, has_neg = false;
      for (const int yi : y) (yi != 0 ? has_pos : has_neg) = true;
      if (has_pos && has_neg) loss_of[g] = 1.0 - auc(s, y);
    } else {
      // class-balanced log loss: undefined only on an empty group
      double l = 0.0;
      for (std::size_t i = 0; i < s.size(); ++i) {
        const double p = std::clamp(s[i], 1e-12, 1.0 - 1e-12);
        l += y[i] ? -std::log(p) : -std::log(1.0 - p);
      }
      loss_of[g] = l / static_cast<double>(s.size());
    }
  }

  WorstGroupResult out;
  if (loss_of[0] && loss_of[1]) {
    out.group = *loss_of[1] > *loss_of[0] ? 1 : 0;  // ties go to group 0
  } else if (loss_of[0]) {
    out.group = 0;
    out.warning = true;
  } else if (loss_of[1]) {
    out.group = 1;
    out.warning = true;
  } else {
    throw std::runtime_error("worst_group: loss undefined for both groups");
  }
  return out;
}

}  // namespace repsample
