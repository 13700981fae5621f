#pragma once

// Class-aware time integration of detector scores (semantic fidelity control).

#include <cstdint>
#include <map>
#include <span>
#include <vector>

namespace semgraph::integrator {

struct ScoreFrame {
  std::int64_t t = 0;
  double score = 0.0;
};

struct ScoreStream {
  std::size_t pattern = 0;
  std::vector<ScoreFrame> frames;  // strictly increasing t
};

struct IntegrationPolicy {
  std::map<std::size_t, std::size_t> window;  // T_i >= 1, per pattern
  std::map<std::size_t, double> tau;
  std::size_t default_window = 1;
  double default_tau = 0.5;

  std::size_t window_for(std::size_t pattern) const;
  double tau_for(std::size_t pattern) const;
};

/// Gaussian score model under H0 (absent) and H1 (present) with AR(1)
/// frame-to-frame correlation rho.
struct ScoreModel {
  double mu0 = 0.2;
  double sigma0 = 0.1;
  double mu1 = 0.8;
  double sigma1 = 0.1;
  double rho = 0.0;
};

void check(const ScoreModel& model);

/// Causal moving average: frame k carries the mean of the last min(T, k+1)
/// scores. Throws InputError for an empty stream, T = 0 or non-increasing t.
ScoreStream integrate(const ScoreStream& stream, std::size_t window);

/// Per-frame score >= tau.
std::vector<bool> detect(const ScoreStream& stream, double tau);

/// Variance multiplier of a T-sample mean of a stationary AR(1) sequence:
/// (1 + 2 sum_{k=1}^{T-1} (1 - k/T) rho^k) / T.
double window_variance_factor(std::size_t window, double rho);

struct WindowOperatingPoint {
  std::size_t window = 1;
  double tau = 0.0;
  double tpr = 0.0;
};

struct TuneResult {
  WindowOperatingPoint best;
  std::vector<WindowOperatingPoint> table;  // one row per T = 1..max_T
};

/// For each T the threshold hitting `target_fpr` under H0 exactly and the
/// resulting H1 detection rate; picks the best TPR, shorter windows on ties.
TuneResult tune_window(const ScoreModel& model, double target_fpr, std::size_t max_window);

/// Monte Carlo std(window mean) / std(raw score) for AR(1) Gaussian scores.
double empirical_sigma_ratio(const ScoreModel& model, std::size_t window, std::size_t n_trials,
                             std::uint64_t seed);

}  // namespace semgraph::integrator
