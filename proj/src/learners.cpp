#include "repsample/learners.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace repsample {

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

ThresholdClassifier fit_threshold(std::span<const double> x,
                                  std::span<const int> group) {
  if (x.size() != group.size())
    throw std::invalid_argument("fit_threshold: size mismatch");
  if (x.empty()) throw std::invalid_argument("fit_threshold: no samples");
  ThresholdClassifier model;
  std::map<int, std::pair<double, std::size_t>> acc;
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    auto& [sum, n] = acc[group[i]];
    sum += x[i];
    n += 1;
    total += x[i];
  }
  model.pooled_mean = total / static_cast<double>(x.size());
  for (const auto& [g, sn] : acc)
    model.thresholds[g] = sn.first / static_cast<double>(sn.second);
  return model;
}

double LinearModel::score(std::span<const double> x) const {
  if (x.size() != weights.size())
    throw std::invalid_argument("LinearModel: feature dimension mismatch");
  double s = bias;
  for (std::size_t i = 0; i < x.size(); ++i) s += weights[i] * x[i];
  return s;
}

std::vector<double> class_balance_weights(const std::vector<int>& y) {
  double n1 = 0.0;
  for (const int yi : y) n1 += yi;
  const double n = static_cast<double>(y.size());
  const double n0 = n - n1;
  std::vector<double> w(y.size(), 1.0);
  if (n0 == 0.0 || n1 == 0.0) return w;  // single class: leave unweighted
  for (std::size_t i = 0; i < y.size(); ++i)
    w[i] = y[i] ? n / (2.0 * n1) : n / (2.0 * n0);
  return w;
}

double logistic_loss(const LinearModel& model,
                     const std::vector<std::vector<double>>& X,
                     const std::vector<int>& y,
                     std::span<const double> sample_weights) {
  double loss = 0.0, wsum = 0.0;
  for (std::size_t i = 0; i < X.size(); ++i) {
    const double w = sample_weights.empty() ? 1.0 : sample_weights[i];
    const double z = model.score(X[i]);
    // log(1 + exp(-m)) with m = z for y=1, -z for y=0, computed stably
    const double margin = y[i] ? z : -z;
    loss += w * (margin > 0 ? std::log1p(std::exp(-margin))
                            : -margin + std::log1p(std::exp(margin)));
    wsum += w;
  }
  return wsum > 0 ? loss / wsum : 0.0;
}

LinearModel fit_logistic(const std::vector<std::vector<double>>& X,
                         const std::vector<int>& y,
                         std::vector<double> sample_weights,
                         const LogisticConfig& config) {
  if (X.empty() || X.size() != y.size())
    throw std::invalid_argument("fit_logistic: bad input sizes");
  const std::size_t n = X.size(), d = X.front().size();
  for (const auto& row : X) {
    if (row.size() != d)
      throw std::invalid_argument("fit_logistic: ragged feature matrix");
    for (const double v : row)
      if (!std::isfinite(v))
        throw std::invalid_argument("fit_logistic: non-finite feature");
  }
  if (sample_weights.empty()) sample_weights.assign(n, 1.0);
  if (config.class_balanced) {
    const auto cb = class_balance_weights(y);
    for (std::size_t i = 0; i < n; ++i) sample_weights[i] *= cb[i];
  }
  double wsum = 0.0;
  for (const double w : sample_weights) wsum += w;

  LinearModel model;
  model.weights.assign(d, 0.0);
  double loss = logistic_loss(model, X, y, sample_weights);
  double eta = config.lr;

  for (int iter = 0; iter < config.max_iter; ++iter) {
    std::vector<double> gw(d, 0.0);
    double gb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = sample_weights[i] *
                       (sigmoid(model.score(X[i])) - static_cast<double>(y[i]));
      for (std::size_t j = 0; j < d; ++j) gw[j] += r * X[i][j];
      gb += r;
    }
    for (double& g : gw) g /= wsum;
    gb /= wsum;

    double gmax = std::abs(gb);
    for (const double g : gw) gmax = std::max(gmax, std::abs(g));
    if (gmax < config.tol) break;

    LinearModel trial = model;
    double trial_loss = loss;
    for (;;) {
      for (std::size_t j = 0; j < d; ++j)
        trial.weights[j] = model.weights[j] - eta * gw[j];
      trial.bias = model.bias - eta * gb;
      trial_loss = logistic_loss(trial, X, y, sample_weights);
      if (trial_loss <= loss || eta < 1e-14) break;
      eta *= 0.5;
    }
    if (trial_loss > loss) break;  // no descent step available
    model = trial;
    loss = trial_loss;
    eta = std::min(eta * 1.2, 1e3);
  }
  return model;
}

double RegressionTree::predict(std::span<const double> x) const {
  int idx = 0;
  for (;;) {
    const TreeNode& node = nodes[static_cast<std::size_t>(idx)];
    if (node.feature < 0) return node.value;
    idx = x[static_cast<std::size_t>(node.feature)] < node.threshold
              ? node.left
              : node.right;
  }
}

namespace {

struct TreeBuilder {
  const std::vector<std::vector<double>>& X;
  const std::vector<double>& residual;
  const std::vector<double>& weight;
  int max_depth;
  RegressionTree tree;

  int build(std::vector<std::size_t> idx, int depth) {
    double wsum = 0.0, rsum = 0.0, rsq = 0.0;
    for (const std::size_t i : idx) {
      wsum += weight[i];
      rsum += weight[i] * residual[i];
      rsq += weight[i] * residual[i] * residual[i];
    }
    const double leaf_value = wsum > 0 ? rsum / wsum : 0.0;
    const double node_sse = rsq - rsum * rsum / std::max(wsum, 1e-300);

    // Zero-gain splits are allowed on impure nodes (deeper levels may still
    // find structure an axis-aligned cut cannot, as with XOR patterns);
    // constant-residual nodes stop. Equal gains prefer the more balanced
    // split, then the earlier feature/boundary.
    int best_feature = -1;
    double best_threshold = 0.0;
    double best_gain = -std::numeric_limits<double>::infinity();
    double best_balance = -1.0;
    if (depth < max_depth && idx.size() >= 2 && node_sse > 1e-12) {
      const std::size_t d = X.front().size();
      const double parent = rsum * rsum / std::max(wsum, 1e-300);
      for (std::size_t f = 0; f < d; ++f) {
        std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
          return X[a][f] != X[b][f] ? X[a][f] < X[b][f] : a < b;
        });
        double wl = 0.0, rl = 0.0;
        for (std::size_t p = 0; p + 1 < idx.size(); ++p) {
          wl += weight[idx[p]];
          rl += weight[idx[p]] * residual[idx[p]];
          if (X[idx[p]][f] == X[idx[p + 1]][f]) continue;  // no boundary here
          const double wr = wsum - wl, rr = rsum - rl;
          if (wl <= 0 || wr <= 0) continue;
          const double gain = rl * rl / wl + rr * rr / wr - parent;
          const double balance = std::min(wl, wr);
          if (gain > best_gain ||
              (gain == best_gain && balance > best_balance)) {
            best_gain = gain;
            best_balance = balance;
            best_feature = static_cast<int>(f);
            best_threshold = 0.5 * (X[idx[p]][f] + X[idx[p + 1]][f]);
          }
        }
      }
      if (best_gain < -1e-9) best_feature = -1;
    }

    const int node_id = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back({});
    if (best_feature < 0) {
      tree.nodes[static_cast<std::size_t>(node_id)].value = leaf_value;
      return node_id;
    }
    std::vector<std::size_t> left, right;
    for (const std::size_t i : idx)
      (X[i][static_cast<std::size_t>(best_feature)] < best_threshold ? left
                                                                     : right)
          .push_back(i);
    const int l = build(std::move(left), depth + 1);
    const int r = build(std::move(right), depth + 1);
    TreeNode& node = tree.nodes[static_cast<std::size_t>(node_id)];
    node.feature = best_feature;
    node.threshold = best_threshold;
    node.left = l;
    node.right = r;
    return node_id;
  }
};

}  // namespace

double GbdtModel::score(std::span<const double> x) const {
  if (x.size() != n_features)
    throw std::invalid_argument("GbdtModel: feature dimension mismatch");
  double s = base_score;
  for (const auto& t : trees) s += learning_rate * t.predict(x);
  return s;
}

GbdtModel fit_gbdt(const std::vector<std::vector<double>>& X,
                   const std::vector<int>& y,
                   std::vector<double> sample_weights,
                   const GbdtConfig& config) {
  if (config.max_depth < 1 || config.max_depth > 8)
    throw std::invalid_argument("fit_gbdt: max_depth must be in [1,8]");
  if (config.n_estimators < 1 || config.n_estimators > 500)
    throw std::invalid_argument("fit_gbdt: n_estimators must be in [1,500]");
  if (!(config.learning_rate > 0))
    throw std::invalid_argument("fit_gbdt: learning_rate must be positive");
  if (X.size() < 2 || X.size() != y.size())
    throw std::invalid_argument("fit_gbdt: need at least two samples");
  const std::size_t n = X.size(), d = X.front().size();
  for (const auto& row : X)
    if (row.size() != d)
      throw std::invalid_argument("fit_gbdt: ragged feature matrix");

  if (sample_weights.empty()) sample_weights.assign(n, 1.0);
  if (config.class_balanced) {
    const auto cb = class_balance_weights(y);
    for (std::size_t i = 0; i < n; ++i) sample_weights[i] *= cb[i];
  }

  double wsum = 0.0, wpos = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    wsum += sample_weights[i];
    wpos += sample_weights[i] * y[i];
  }
  const double p0 = std::clamp(wpos / wsum, 1e-7, 1.0 - 1e-7);

  GbdtModel model;
  model.base_score = std::log(p0 / (1.0 - p0));
  model.learning_rate = config.learning_rate;
  model.n_features = d;

  std::vector<double> score(n, model.base_score);
  std::vector<double> residual(n);
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), 0);

  for (int stage = 0; stage < config.n_estimators; ++stage) {
    for (std::size_t i = 0; i < n; ++i)
      residual[i] = static_cast<double>(y[i]) - sigmoid(score[i]);
    TreeBuilder builder{X, residual, sample_weights, config.max_depth, {}};
    builder.build(all, 0);
    for (std::size_t i = 0; i < n; ++i)
      score[i] += config.learning_rate * builder.tree.predict(X[i]);
    model.trees.push_back(std::move(builder.tree));
  }
  return model;
}

namespace {

template <typename Model>
std::vector<double> proba_impl(const Model& model,
                               const std::vector<std::vector<double>>& X) {
  std::vector<double> p(X.size());
  for (std::size_t i = 0; i < X.size(); ++i) p[i] = sigmoid(model.score(X[i]));
  return p;
}

}  // namespace

std::vector<double> predict_proba(const LinearModel& model,
                                  const std::vector<std::vector<double>>& X) {
  return proba_impl(model, X);
}

std::vector<double> predict_proba(const GbdtModel& model,
                                  const std::vector<std::vector<double>>& X) {
  return proba_impl(model, X);
}

}  // namespace repsample
