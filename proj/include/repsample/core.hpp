#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace repsample {

// One individual's sensitive attributes. Binary-coded experiments keep every
// entry at exactly 0 or 1; continuous mode places no restriction.
using SensitiveVector = std::vector<double>;

// Desired mean of the collected sensitive vectors, one entry per attribute.
using TargetVector = std::vector<double>;

struct Record {
  std::vector<double> x;  // non-sensitive features
  SensitiveVector a;
  int y = 0;  // binary label
};

enum class MetricKind { L1, L2, KL };

// Dissimilarity between a target vector and a mean demographic vector.
// KL is the sum of per-coordinate Bernoulli divergences; both arguments are
// clamped to [epsilon, 1-epsilon] first, so it is finite on [0,1]^d.
struct Metric {
  MetricKind kind = MetricKind::L2;
  double epsilon = 1e-6;
};

Metric metric_from_name(const std::string& name);
std::string metric_name(const Metric& m);

double distance(const Metric& metric, std::span<const double> v,
                std::span<const double> u);

// Dataset built from per-step batches. The running sum of sensitive vectors
// is maintained incrementally (O(d) per record); recompute_sum() rebuilds it
// from scratch so tests can compare the two.
class CollectedDataset {
 public:
  CollectedDataset() = default;
  explicit CollectedDataset(std::size_t dim) : dim_(dim), running_sum_(dim, 0.0) {}

  void add_batch(std::vector<Record> batch);
  void add_record(Record record);  // batch of size one

  std::size_t count() const { return count_; }
  std::size_t dim() const { return dim_; }
  bool empty() const { return count_ == 0; }
  const std::vector<std::vector<Record>>& batches() const { return batches_; }
  const std::vector<double>& running_sum() const { return running_sum_; }

  // Mean sensitive vector over all records; throws if empty.
  std::vector<double> mean() const;

  // Exact recomputation of running_sum from the stored batches.
  std::vector<double> recompute_sum() const;

  std::vector<Record> all_records() const;

 private:
  std::size_t dim_ = 0;
  std::size_t count_ = 0;
  std::vector<double> running_sum_;
  std::vector<std::vector<Record>> batches_;
};

double representativeness_distance(const CollectedDataset& ds,
                                   const TargetVector& v, const Metric& metric);

// Mean of per-step batch means, (1/T) sum_t avg(A_t). Requires every batch to
// have the same size; with fixed batch size this equals the global mean up to
// accumulated floating-point error.
std::vector<double> stepwise_mean_identity(const CollectedDataset& ds);

}  // namespace repsample
