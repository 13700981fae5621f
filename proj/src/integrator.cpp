#include "semgraph/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <boost/math/distributions/normal.hpp>

#include "semgraph/errors.hpp"

namespace semgraph::integrator {

std::size_t IntegrationPolicy::window_for(std::size_t pattern) const {
  auto it = window.find(pattern);
  return it == window.end() ? default_window : it->second;
}

double IntegrationPolicy::tau_for(std::size_t pattern) const {
  auto it = tau.find(pattern);
  return it == tau.end() ? default_tau : it->second;
}

void check(const ScoreModel& m) {
  if (!(m.sigma0 > 0.0) || !(m.sigma1 > 0.0)) throw InputError("score model needs sigma > 0");
  if (!(m.mu1 > m.mu0)) throw InputError("score model needs mu1 > mu0");
  if (!(m.rho >= 0.0 && m.rho <= 1.0)) throw InputError("score model needs rho in [0, 1]");
}

ScoreStream integrate(const ScoreStream& stream, std::size_t window) {
  if (window == 0) throw InputError("integration window must be >= 1");
  if (stream.frames.empty()) throw InputError("cannot integrate an empty score stream");
  for (std::size_t i = 1; i < stream.frames.size(); ++i) {
    if (stream.frames[i].t <= stream.frames[i - 1].t) {
      throw InputError("score stream time indices must be strictly increasing");
    }
  }
  ScoreStream out{stream.pattern, {}};
  out.frames.reserve(stream.frames.size());
  for (std::size_t i = 0; i < stream.frames.size(); ++i) {
    const std::size_t first = i + 1 >= window ? i + 1 - window : 0;
    double sum = 0.0;
    double lo = stream.frames[first].score;
    double hi = lo;
    for (std::size_t k = first; k <= i; ++k) {
      const double s = stream.frames[k].score;
      sum += s;
      lo = std::min(lo, s);
      hi = std::max(hi, s);
    }
    // Rounding must not push the mean outside the window's range.
    const double mean = std::clamp(sum / static_cast<double>(i - first + 1), lo, hi);
    out.frames.push_back({stream.frames[i].t, mean});
  }
  return out;
}

std::vector<bool> detect(const ScoreStream& stream, double tau) {
  std::vector<bool> out;
  out.reserve(stream.frames.size());
  for (const auto& f : stream.frames) out.push_back(f.score >= tau);
  return out;
}

double window_variance_factor(std::size_t window, double rho) {
  const double t = static_cast<double>(window);
  double acc = 1.0;
  double power = 1.0;
  for (std::size_t k = 1; k < window; ++k) {
    power *= rho;
    acc += 2.0 * (1.0 - static_cast<double>(k) / t) * power;
  }
  return acc / t;
}

TuneResult tune_window(const ScoreModel& model, double target_fpr, std::size_t max_window) {
  check(model);
  if (!(target_fpr > 0.0 && target_fpr < 1.0)) throw InputError("target FPR must lie in (0, 1)");
  if (max_window == 0) throw InputError("max window must be >= 1");

  const boost::math::normal standard;
  const double z = boost::math::quantile(boost::math::complement(standard, target_fpr));
  TuneResult result;
  for (std::size_t w = 1; w <= max_window; ++w) {
    const double factor = std::sqrt(window_variance_factor(w, model.rho));
    const double tau = model.mu0 + model.sigma0 * factor * z;
    const double tpr =
        boost::math::cdf(boost::math::complement(standard, (tau - model.mu1) / (model.sigma1 * factor)));
    result.table.push_back({w, tau, tpr});
  }
  result.best = result.table.front();
  for (const auto& row : result.table) {
    // Differences at rounding level are ties; the shorter window wins.
    if (row.tpr > result.best.tpr + 1e-12) result.best = row;
  }
  return result;
}

double empirical_sigma_ratio(const ScoreModel& model, std::size_t window, std::size_t n_trials,
                             std::uint64_t seed) {
  check(model);
  if (window == 0) throw InputError("window must be >= 1");
  if (n_trials < 10000) throw InputError("empirical sigma ratio needs at least 1e4 trials");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double innovation = std::sqrt(std::max(0.0, 1.0 - model.rho * model.rho));

  double raw_sum = 0.0, raw_sq = 0.0, mean_sum = 0.0, mean_sq = 0.0;
  for (std::size_t trial = 0; trial < n_trials; ++trial) {
    double z = normal(rng);
    double window_sum = 0.0;
    for (std::size_t k = 0; k < window; ++k) {
      if (k > 0) z = model.rho * z + innovation * normal(rng);
      const double x = model.mu0 + model.sigma0 * z;
      raw_sum += x;
      raw_sq += x * x;
      window_sum += x;
    }
    const double m = window_sum / static_cast<double>(window);
    mean_sum += m;
    mean_sq += m * m;
  }
  const double n_raw = static_cast<double>(n_trials * window);
  const double n_mean = static_cast<double>(n_trials);
  const double raw_var = (raw_sq - raw_sum * raw_sum / n_raw) / (n_raw - 1.0);
  const double mean_var = (mean_sq - mean_sum * mean_sum / n_mean) / (n_mean - 1.0);
  return std::sqrt(mean_var / raw_var);
}

}  // namespace semgraph::integrator
