#include "semgraph/confusion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "semgraph/errors.hpp"

namespace semgraph::confusion {

ConfusionMatrix::ConfusionMatrix(double tau, std::vector<std::string> labels,
                                 std::vector<std::vector<std::int64_t>> counts,
                                 std::vector<std::int64_t> totals)
    : tau_(tau), labels_(std::move(labels)), counts_(std::move(counts)), totals_(std::move(totals)) {
  const std::size_t k = counts_.size();
  if (k < 2) throw InputError("confusion matrix needs at least two patterns");
  if (labels_.empty()) {
    for (std::size_t i = 0; i < k; ++i) labels_.push_back("pattern" + std::to_string(i));
  }
  if (labels_.size() != k || totals_.size() != k) throw InputError("confusion matrix shape mismatch");
  for (std::size_t i = 0; i < k; ++i) {
    if (counts_[i].size() != k) throw InputError("confusion matrix must be square");
    std::int64_t row = 0;
    for (auto c : counts_[i]) {
      if (c < 0) throw InputError("negative confusion count");
      row += c;
    }
    if (row > totals_[i]) {
      throw InputError("row '" + labels_[i] + "' detects more samples than it has");
    }
  }
  total_ = std::accumulate(totals_.begin(), totals_.end(), std::int64_t{0});
}

std::int64_t ConfusionMatrix::detected_in_row(std::size_t i) const {
  return std::accumulate(counts_[i].begin(), counts_[i].end(), std::int64_t{0});
}

ConfusionMetrics metrics(const ConfusionMatrix& cm, std::size_t i) {
  const std::size_t k = cm.size();
  if (i >= k) throw InputError("pattern index out of range");
  const auto ni = cm.pattern_total(i);
  const auto rest = cm.total() - ni;
  if (ni <= 0) {
    throw DegeneratePatternError(cm.labels()[i], "pattern '" + cm.labels()[i] + "' has no samples");
  }
  if (rest <= 0) {
    throw DegeneratePatternError(cm.labels()[i],
                                 "pattern '" + cm.labels()[i] + "' has no negative samples");
  }
  std::int64_t false_pos = 0;
  std::int64_t true_neg = 0;
  for (std::size_t j = 0; j < k; ++j) {
    if (j == i) continue;
    false_pos += cm.count(j, i);
    for (std::size_t m = 0; m < k; ++m) {
      if (m != i) true_neg += cm.count(j, m);
    }
  }
  ConfusionMetrics out;
  out.tpr = static_cast<double>(cm.count(i, i)) / static_cast<double>(ni);
  out.fnr = static_cast<double>(ni - cm.count(i, i)) / static_cast<double>(ni);
  out.fpr = static_cast<double>(false_pos) / static_cast<double>(rest);
  out.tnr = static_cast<double>(true_neg) / static_cast<double>(rest);
  return out;
}

std::size_t detect(std::span<const double> scores, double tau) {
  std::size_t best = scores.size();
  for (std::size_t j = 0; j < scores.size(); ++j) {
    if (scores[j] >= tau && (best == scores.size() || scores[j] > scores[best])) best = j;
  }
  return best;
}

ConfusionMatrix estimate_cm(std::span<const Sample> samples, double tau,
                            std::vector<std::string> labels) {
  if (samples.empty()) throw InputError("no samples to estimate a confusion matrix from");
  const std::size_t k = samples.front().scores.size();
  std::vector<std::vector<std::int64_t>> counts(k, std::vector<std::int64_t>(k, 0));
  std::vector<std::int64_t> totals(k, 0);
  for (const auto& s : samples) {
    if (s.scores.size() != k) throw InputError("score vectors differ in length");
    if (s.truth >= k) throw InputError("sample truth index out of range");
    ++totals[s.truth];
    const auto d = detect(s.scores, tau);
    if (d < k) ++counts[s.truth][d];
  }
  return ConfusionMatrix(tau, std::move(labels), std::move(counts), std::move(totals));
}

std::vector<RocCurve> roc_sweep(std::span<const Sample> samples, std::span<const double> taus) {
  for (std::size_t i = 0; i < taus.size(); ++i) {
    if (!(taus[i] > 0.0 && taus[i] < 1.0)) throw InputError("ROC thresholds must lie in (0, 1)");
    if (i > 0 && taus[i] < taus[i - 1]) throw InputError("ROC thresholds must be ascending");
  }
  if (samples.empty()) throw InputError("no samples for ROC sweep");
  const std::size_t k = samples.front().scores.size();

  std::vector<double> grid;
  grid.push_back(std::nextafter(1.0, 2.0));
  grid.insert(grid.end(), taus.rbegin(), taus.rend());
  grid.push_back(0.0);

  std::vector<RocCurve> curves(k);
  for (double tau : grid) {
    const auto cm = estimate_cm(samples, tau);
    for (std::size_t i = 0; i < k; ++i) {
      const auto m = metrics(cm, i);
      curves[i].points.push_back({m.fpr, m.tpr, tau});
    }
  }
  return curves;
}

std::vector<double> prevalence(std::span<const Sample> samples) {
  if (samples.empty()) return {};
  std::size_t k = samples.front().scores.size();
  for (const auto& s : samples) k = std::max(k, s.truth + 1);
  std::vector<double> out(k, 0.0);
  for (const auto& s : samples) out[s.truth] += 1.0;
  for (auto& p : out) p /= static_cast<double>(samples.size());
  return out;
}

std::vector<double> prevalence(const ConfusionMatrix& cm) {
  std::vector<double> out(cm.size(), 0.0);
  if (cm.total() == 0) return out;
  for (std::size_t i = 0; i < cm.size(); ++i) {
    out[i] = static_cast<double>(cm.pattern_total(i)) / static_cast<double>(cm.total());
  }
  return out;
}

std::vector<double> parse_tau_grid(const std::string& spec) {
  std::vector<double> parts;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ':')) {
    try {
      parts.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw InputError("bad threshold grid '" + spec + "'");
    }
  }
  if (parts.size() != 3 || parts[2] <= 0.0 || parts[1] < parts[0]) {
    throw InputError("threshold grid must be start:stop:step with step > 0");
  }
  std::vector<double> out;
  const auto n = static_cast<std::size_t>(std::floor((parts[1] - parts[0]) / parts[2] + 1e-9));
  for (std::size_t i = 0; i <= n; ++i) out.push_back(parts[0] + static_cast<double>(i) * parts[2]);
  return out;
}

nlohmann::json to_json(const ConfusionMatrix& cm) {
  return {{"labels", cm.labels()}, {"tau", cm.tau()}, {"counts", cm.counts()}, {"totals", cm.totals()}};
}

ConfusionMatrix cm_from_json(const nlohmann::json& j) {
  try {
    return ConfusionMatrix(j.at("tau").get<double>(), j.value("labels", std::vector<std::string>{}),
                           j.at("counts").get<std::vector<std::vector<std::int64_t>>>(),
                           j.at("totals").get<std::vector<std::int64_t>>());
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("bad confusion matrix file: ") + e.what());
  }
}

nlohmann::json to_json(const Sample& s) { return {{"truth", s.truth}, {"scores", s.scores}}; }

Sample sample_from_json(const nlohmann::json& j) {
  try {
    return {j.at("truth").get<std::size_t>(), j.at("scores").get<std::vector<double>>()};
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("bad sample: ") + e.what());
  }
}

}  // namespace semgraph::confusion
