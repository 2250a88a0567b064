#include "repsample/core.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace repsample {

Metric metric_from_name(const std::string& name) {
  if (name == "L1" || name == "l1") return {MetricKind::L1, 1e-6};
  if (name == "L2" || name == "l2") return {MetricKind::L2, 1e-6};
  if (name == "KL" || name == "kl") return {MetricKind::KL, 1e-6};
  throw std::invalid_argument("unknown metric: " + name);
}

std::string metric_name(const Metric& m) {
  switch (m.kind) {
    case MetricKind::L1: return "L1";
    case MetricKind::L2: return "L2";
    case MetricKind::KL: return "KL";
  }
  return "?";
}

namespace {

double bernoulli_kl(double p, double q, double eps) {
  p = std::clamp(p, eps, 1.0 - eps);
  q = std::clamp(q, eps, 1.0 - eps);
  return p * std::log(p / q) + (1.0 - p) * std::log((1.0 - p) / (1.0 - q));
}

}  // namespace

double distance(const Metric& metric, std::span<const double> v,
                std::span<const double> u) {
  if (v.size() != u.size())
    throw std::invalid_argument("distance: dimension mismatch");
  switch (metric.kind) {
    case MetricKind::L1: {
      double s = 0.0;
      for (std::size_t i = 0; i < v.size(); ++i) s += std::abs(v[i] - u[i]);
      return s;
    }
    case MetricKind::L2: {
      double s = 0.0;
      for (std::size_t i = 0; i < v.size(); ++i) {
        const double d = v[i] - u[i];
        s += d * d;
      }
      return std::sqrt(s);
    }
    case MetricKind::KL: {
      double s = 0.0;
      for (std::size_t i = 0; i < v.size(); ++i)
        s += bernoulli_kl(v[i], u[i], metric.epsilon);
      return std::max(s, 0.0);
    }
  }
  throw std::logic_error("distance: unreachable");
}

void CollectedDataset::add_batch(std::vector<Record> batch) {
  if (batch.empty()) throw std::invalid_argument("add_batch: empty batch");
  if (dim_ == 0 && count_ == 0) {
    dim_ = batch.front().a.size();
    running_sum_.assign(dim_, 0.0);
  }
  for (const Record& r : batch) {
    if (r.a.size() != dim_)
      throw std::invalid_argument("add_batch: sensitive dimension mismatch");
    for (std::size_t i = 0; i < dim_; ++i) running_sum_[i] += r.a[i];
  }
  count_ += batch.size();
  batches_.push_back(std::move(batch));
}

void CollectedDataset::add_record(Record record) {
  std::vector<Record> batch;
  batch.push_back(std::move(record));
  add_batch(std::move(batch));
}

std::vector<double> CollectedDataset::mean() const {
  if (count_ == 0) throw std::runtime_error("mean: dataset is empty");
  std::vector<double> m(dim_);
  for (std::size_t i = 0; i < dim_; ++i)
    m[i] = running_sum_[i] / static_cast<double>(count_);
  return m;
}

std::vector<double> CollectedDataset::recompute_sum() const {
  std::vector<double> s(dim_, 0.0);
  for (const auto& batch : batches_)
    for (const Record& r : batch)
      for (std::size_t i = 0; i < dim_; ++i) s[i] += r.a[i];
  return s;
}

std::vector<Record> CollectedDataset::all_records() const {
  std::vector<Record> out;
  out.reserve(count_);
  for (const auto& batch : batches_)
    for (const Record& r : batch) out.push_back(r);
  return out;
}

double representativeness_distance(const CollectedDataset& ds,
                                   const TargetVector& v, const Metric& metric) {
  if (ds.empty())
    throw std::runtime_error("representativeness_distance: dataset is empty");
  const auto m = ds.mean();
  return distance(metric, v, m);
}

std::vector<double> stepwise_mean_identity(const CollectedDataset& ds) {
  const auto& batches = ds.batches();
  if (batches.empty())
    throw std::runtime_error("stepwise_mean_identity: dataset is empty");
  const std::size_t k = batches.front().size();
  for (const auto& b : batches)
    if (b.size() != k)
      throw std::runtime_error(
          "stepwise_mean_identity: batches have unequal sizes");
  std::vector<double> acc(ds.dim(), 0.0);
  for (const auto& b : batches) {
    std::vector<double> bm(ds.dim(), 0.0);
    for (const Record& r : b)
      for (std::size_t i = 0; i < bm.size(); ++i) bm[i] += r.a[i];
    for (std::size_t i = 0; i < bm.size(); ++i)
      acc[i] += bm[i] / static_cast<double>(k);
  }
  for (double& x : acc) x /= static_cast<double>(batches.size());
  return acc;
}

}  // namespace repsample
