#pragma once

#include <map>
#include <span>
#include <vector>

namespace repsample {

// Per-group threshold rule: predicts 1 iff x >= threshold(g), where the
// threshold is the group's training feature mean. Groups unseen at fit time
// fall back to the pooled mean.
struct ThresholdClassifier {
  std::map<int, double> thresholds;
  double pooled_mean = 0.0;

  double threshold_for(int group) const {
    const auto it = thresholds.find(group);
    return it == thresholds.end() ? pooled_mean : it->second;
  }
  int predict(double x, int group) const {
    return x >= threshold_for(group) ? 1 : 0;
  }
};

ThresholdClassifier fit_threshold(std::span<const double> x,
                                  std::span<const int> group);

struct LinearModel {
  std::vector<double> weights;
  double bias = 0.0;

  double score(std::span<const double> x) const;
};

struct LogisticConfig {
  double lr = 1.0;
  int max_iter = 500;
  double tol = 1e-7;
  bool class_balanced = false;
};

// Weighted logistic regression by gradient descent with backtracking, so the
// loss is non-increasing across iterations. Stops when the gradient infinity
// norm drops below tol or max_iter is reached.
LinearModel fit_logistic(const std::vector<std::vector<double>>& X,
                         const std::vector<int>& y,
                         std::vector<double> sample_weights,
                         const LogisticConfig& config = {});

struct GbdtConfig {
  int max_depth = 3;
  int n_estimators = 100;
  double learning_rate = 0.1;
  bool class_balanced = false;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  double value = 0.0;
  int left = -1;
  int right = -1;
};

struct RegressionTree {
  std::vector<TreeNode> nodes;
  double predict(std::span<const double> x) const;
};

// Gradient-boosted trees on logistic loss. Stages fit exact-greedy regression
// trees (splits on sorted feature values, at least one sample per leaf) to
// plain residuals y - p, shrunk by learning_rate. Splits are deterministic,
// so identical data gives identical models.
struct GbdtModel {
  double base_score = 0.0;
  double learning_rate = 0.1;
  std::size_t n_features = 0;
  std::vector<RegressionTree> trees;

  double score(std::span<const double> x) const;
};

GbdtModel fit_gbdt(const std::vector<std::vector<double>>& X,
                   const std::vector<int>& y,
                   std::vector<double> sample_weights,
                   const GbdtConfig& config = {});

double sigmoid(double z);

std::vector<double> predict_proba(const LinearModel& model,
                                  const std::vector<std::vector<double>>& X);
std::vector<double> predict_proba(const GbdtModel& model,
                                  const std::vector<std::vector<double>>& X);

// Weighted logistic loss used by the trainers; exposed for tests.
double logistic_loss(const LinearModel& model,
                     const std::vector<std::vector<double>>& X,
                     const std::vector<int>& y,
                     std::span<const double> sample_weights);

// N/(2*N_c) weights that balance the two label classes.
std::vector<double> class_balance_weights(const std::vector<int>& y);

}  // namespace repsample
