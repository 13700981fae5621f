#pragma once

// Confusion matrices at a detection threshold, per-pattern TPR/FPR/FNR/TNR,
// ROC sweeps and pattern prevalence.

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace semgraph::confusion {

/// counts(i, j): samples of true pattern i detected as pattern j.
/// totals[i] >= sum_j counts(i, j); the shortfall is missed detections.
class ConfusionMatrix {
 public:
  ConfusionMatrix() = default;
  /// Throws InputError when K < 2, shapes disagree or a row exceeds its total.
  ConfusionMatrix(double tau, std::vector<std::string> labels,
                  std::vector<std::vector<std::int64_t>> counts, std::vector<std::int64_t> totals);

  double tau() const noexcept { return tau_; }
  std::size_t size() const noexcept { return labels_.size(); }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  std::int64_t count(std::size_t truth, std::size_t detected) const { return counts_[truth][detected]; }
  std::int64_t pattern_total(std::size_t i) const { return totals_[i]; }
  std::int64_t total() const noexcept { return total_; }
  std::int64_t detected_in_row(std::size_t i) const;
  const std::vector<std::vector<std::int64_t>>& counts() const noexcept { return counts_; }
  const std::vector<std::int64_t>& totals() const noexcept { return totals_; }

  bool operator==(const ConfusionMatrix&) const = default;

 private:
  double tau_ = 0.5;
  std::vector<std::string> labels_;
  std::vector<std::vector<std::int64_t>> counts_;
  std::vector<std::int64_t> totals_;
  std::int64_t total_ = 0;
};

struct ConfusionMetrics {
  double tpr = 0.0;
  double fpr = 0.0;
  double fnr = 0.0;
  double tnr = 0.0;
};

/// Throws DegeneratePatternError when N_i = 0 or N - N_i = 0.
ConfusionMetrics metrics(const ConfusionMatrix& cm, std::size_t pattern);

struct Sample {
  std::size_t truth = 0;
  std::vector<double> scores;
};

/// Argmax-above-threshold detection: the pattern with the largest score
/// >= tau (lowest index on ties); returns K when nothing reaches tau.
std::size_t detect(std::span<const double> scores, double tau);

ConfusionMatrix estimate_cm(std::span<const Sample> samples, double tau,
                            std::vector<std::string> labels = {});

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
  double tau = 0.0;
};

/// Points sorted by tau descending, including the tau -> 1 (nothing
/// detected) and tau -> 0 (argmax always detected) endpoints.
struct RocCurve {
  std::vector<RocPoint> points;
};

/// `taus` must be ascending and inside (0, 1).
std::vector<RocCurve> roc_sweep(std::span<const Sample> samples, std::span<const double> taus);

/// Empirical N_i / N over the samples' true patterns.
std::vector<double> prevalence(std::span<const Sample> samples);
std::vector<double> prevalence(const ConfusionMatrix& cm);

/// Parses "start:stop:step" into an inclusive ascending grid.
std::vector<double> parse_tau_grid(const std::string& spec);

nlohmann::json to_json(const ConfusionMatrix& cm);
ConfusionMatrix cm_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Sample& s);
Sample sample_from_json(const nlohmann::json& j);

}  // namespace semgraph::confusion
