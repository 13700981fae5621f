#pragma once

// Discrete hidden Markov models over graph states: exact and beam-limited
// Viterbi decoding, Baum-Welch estimation and factorized per-component
// chains.

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace semgraph::hmm {

struct HmmModel {
  std::vector<std::string> labels;  // one per state
  Eigen::MatrixXd A;                // A(i, j) = P(q_{t+1} = j | q_t = i)
  Eigen::MatrixXd B;                // B(i, k) = P(o_t = k | q_t = i)
  Eigen::VectorXd p;                // initial distribution

  std::size_t states() const noexcept { return static_cast<std::size_t>(A.rows()); }
  std::size_t symbols() const noexcept { return static_cast<std::size_t>(B.cols()); }
};

inline constexpr double kRowSumTolerance = 1e-9;

/// Throws InputError on shape mismatch, negative entries or rows (and p) not
/// summing to 1 within kRowSumTolerance.
void validate(const HmmModel& model);

/// Validated model; missing labels become "s0", "s1", ...
HmmModel make_model(Eigen::MatrixXd A, Eigen::MatrixXd B, Eigen::VectorXd p,
                    std::vector<std::string> labels = {});

using StateSequence = std::vector<std::size_t>;
using ObservationSequence = std::vector<std::size_t>;

struct Decoded {
  StateSequence states;
  double log_prob = 0.0;  // log P(Q, O) of the returned path
};

/// Log-domain Viterbi. Argmax ties go to the smallest predecessor index and
/// the smallest final state. Throws InputError on empty or out-of-range
/// observations and DecodeFailure when every path has zero probability.
Decoded viterbi(const HmmModel& model, const ObservationSequence& obs);

/// Viterbi that only extends the `beam` most likely states of each step.
/// beam == states() reproduces viterbi exactly.
Decoded m_viterbi(const HmmModel& model, const ObservationSequence& obs, std::size_t beam);

/// log P(Q, O) of a given path, summed in the same order as viterbi.
double path_log_prob(const HmmModel& model, const StateSequence& states, const ObservationSequence& obs);

/// log P(O) by the scaled forward recursion; -inf when O is impossible.
double log_likelihood(const HmmModel& model, const ObservationSequence& obs);

struct FitResult {
  HmmModel model;
  std::vector<double> log_likelihood;  // of the model entering each iteration, then the final one
  std::size_t iterations = 0;
  bool converged = false;
};

/// Baum-Welch EM. Stops when the relative change in log-likelihood drops
/// below `tol` or after `max_iter` updates. Throws EstimationFailure when the
/// observations have zero probability under a model or the likelihood
/// decreases.
FitResult baum_welch(const ObservationSequence& obs, const HmmModel& init, std::size_t max_iter = 100,
                     double tol = 1e-6);

struct Trajectory {
  StateSequence states;
  ObservationSequence obs;
};

Trajectory sample(const HmmModel& model, std::size_t length, std::uint64_t seed);

/// Independent chains, one per tracked component.
struct FactorizedModel {
  std::vector<HmmModel> factors;
};

/// One viterbi per chain. Throws InputError when sequence lengths differ.
std::vector<Decoded> decode_factorized(const FactorizedModel& fm,
                                       const std::vector<ObservationSequence>& obs);

/// Joint model over the Cartesian product of factor states, first factor
/// most significant. Only meant for small factor counts.
HmmModel product_model(const FactorizedModel& fm);

/// Mixed-radix index of a per-factor tuple (first factor most significant).
std::size_t joint_index(const std::vector<std::size_t>& radix, const std::vector<std::size_t>& digits);
std::vector<std::size_t> joint_digits(const std::vector<std::size_t>& radix, std::size_t index);

nlohmann::json to_json(const HmmModel& model);
HmmModel model_from_json(const nlohmann::json& j);

}  // namespace semgraph::hmm
