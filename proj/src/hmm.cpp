#include "semgraph/hmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "semgraph/errors.hpp"

namespace semgraph::hmm {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_stochastic_rows(const Eigen::MatrixXd& m, const char* name) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    if ((m.row(r).array() < 0.0).any() || !m.row(r).allFinite()) {
      throw InputError(std::string(name) + " has a negative or non-finite entry");
    }
    if (std::abs(m.row(r).sum() - 1.0) > kRowSumTolerance) {
      throw InputError(std::string(name) + " row " + std::to_string(r) + " does not sum to 1");
    }
  }
}

void check_obs(const HmmModel& model, const ObservationSequence& obs) {
  if (obs.empty()) throw InputError("observation sequence is empty");
  for (auto o : obs) {
    if (o >= model.symbols()) throw InputError("observation index out of range");
  }
}

Decoded decode(const HmmModel& model, const ObservationSequence& obs, std::size_t beam) {
  validate(model);
  check_obs(model, obs);
  const std::size_t n = model.states();
  if (beam == 0 || beam > n) throw InputError("beam width must lie in [1, N]");
  auto ln = [](double v) { return std::log(v); };
  const Eigen::MatrixXd log_a = model.A.unaryExpr(ln);
  const Eigen::MatrixXd log_b = model.B.unaryExpr(ln);
  const Eigen::VectorXd log_p = model.p.unaryExpr(ln);

  const std::size_t steps = obs.size();
  std::vector<std::vector<double>> delta(steps, std::vector<double>(n));
  std::vector<std::vector<std::size_t>> back(steps, std::vector<std::size_t>(n, 0));
  for (std::size_t j = 0; j < n; ++j) delta[0][j] = log_p(j) + log_b(j, obs[0]);

  std::vector<std::size_t> order(n);
  for (std::size_t t = 0; t < steps; ++t) {
    if (t > 0) {
      std::iota(order.begin(), order.end(), 0);
      if (beam < n) {
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return delta[t - 1][a] > delta[t - 1][b]; });
        order.resize(beam);
        std::sort(order.begin(), order.end());
      }
      for (std::size_t j = 0; j < n; ++j) {
        double best = kNegInf;
        std::size_t arg = order.front();
        for (auto i : order) {
          const double v = delta[t - 1][i] + log_a(i, j);
          if (v > best) {
            best = v;
            arg = i;
          }
        }
        delta[t][j] = best + log_b(j, obs[t]);
        back[t][j] = arg;
      }
      order.resize(n);
    }
    if (*std::max_element(delta[t].begin(), delta[t].end()) == kNegInf) {
      throw DecodeFailure(t, "no state path has non-zero probability at step " + std::to_string(t));
    }
  }

  Decoded out;
  out.states.assign(steps, 0);
  const auto& last = delta[steps - 1];
  const std::size_t final_state = static_cast<std::size_t>(std::max_element(last.begin(), last.end()) - last.begin());
  out.log_prob = last[final_state];
  out.states[steps - 1] = final_state;
  for (std::size_t t = steps - 1; t > 0; --t) out.states[t - 1] = back[t][out.states[t]];
  return out;
}

struct ForwardBackward {
  Eigen::MatrixXd alpha;  // T x N, scaled
  Eigen::MatrixXd beta;   // T x N, scaled
  Eigen::VectorXd scale;
  double log_likelihood = 0.0;
};

// Scaled forward-backward; returns false when the sequence is impossible.
bool forward_backward(const HmmModel& model, const ObservationSequence& obs, ForwardBackward& fb,
                      bool with_backward) {
  const auto steps = static_cast<Eigen::Index>(obs.size());
  const auto n = static_cast<Eigen::Index>(model.states());
  fb.alpha.resize(steps, n);
  fb.scale.resize(steps);
  Eigen::RowVectorXd a = model.p.transpose().cwiseProduct(model.B.col(static_cast<Eigen::Index>(obs[0])).transpose());
  for (Eigen::Index t = 0; t < steps; ++t) {
    if (t > 0) a = (fb.alpha.row(t - 1) * model.A).cwiseProduct(model.B.col(static_cast<Eigen::Index>(obs[t])).transpose());
    const double c = a.sum();
    if (!(c > 0.0)) return false;
    fb.scale(t) = c;
    fb.alpha.row(t) = a / c;
  }
  fb.log_likelihood = fb.scale.array().log().sum();
  if (!with_backward) return true;
  fb.beta.resize(steps, n);
  fb.beta.row(steps - 1).setOnes();
  for (Eigen::Index t = steps - 2; t >= 0; --t) {
    const Eigen::VectorXd next =
        model.B.col(static_cast<Eigen::Index>(obs[t + 1])).cwiseProduct(fb.beta.row(t + 1).transpose());
    fb.beta.row(t) = (model.A * next).transpose() / fb.scale(t + 1);
  }
  return true;
}

void normalize_rows(Eigen::MatrixXd& m, const Eigen::MatrixXd& fallback) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    const double s = m.row(r).sum();
    if (s > 0.0) {
      m.row(r) /= s;
    } else {
      m.row(r) = fallback.row(r);
    }
  }
}

HmmModel reestimate(const HmmModel& model, const ObservationSequence& obs, const ForwardBackward& fb) {
  const auto steps = static_cast<Eigen::Index>(obs.size());
  const auto n = static_cast<Eigen::Index>(model.states());
  const Eigen::MatrixXd gamma = fb.alpha.cwiseProduct(fb.beta);

  Eigen::MatrixXd a_num = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index t = 0; t + 1 < steps; ++t) {
    const Eigen::VectorXd next =
        model.B.col(static_cast<Eigen::Index>(obs[t + 1])).cwiseProduct(fb.beta.row(t + 1).transpose());
    a_num += (fb.alpha.row(t).transpose() * next.transpose()).cwiseProduct(model.A) / fb.scale(t + 1);
  }
  Eigen::MatrixXd b_num = Eigen::MatrixXd::Zero(n, model.B.cols());
  for (Eigen::Index t = 0; t < steps; ++t) b_num.col(static_cast<Eigen::Index>(obs[t])) += gamma.row(t).transpose();

  HmmModel out = model;
  out.A = a_num;
  normalize_rows(out.A, model.A);
  out.B = b_num;
  normalize_rows(out.B, model.B);
  out.p = gamma.row(0).transpose();
  out.p /= out.p.sum();
  return out;
}

}  // namespace

void validate(const HmmModel& model) {
  const auto n = model.A.rows();
  if (n == 0) throw InputError("model has no states");
  if (model.A.cols() != n || model.B.rows() != n || model.p.size() != n) {
    throw InputError("model matrices disagree in state count");
  }
  if (model.B.cols() == 0) throw InputError("model has no observation symbols");
  if (!model.labels.empty() && model.labels.size() != static_cast<std::size_t>(n)) {
    throw InputError("state label count does not match the model");
  }
  check_stochastic_rows(model.A, "A");
  check_stochastic_rows(model.B, "B");
  check_stochastic_rows(model.p.transpose(), "p");
}

HmmModel make_model(Eigen::MatrixXd A, Eigen::MatrixXd B, Eigen::VectorXd p, std::vector<std::string> labels) {
  HmmModel m{std::move(labels), std::move(A), std::move(B), std::move(p)};
  if (m.labels.empty()) {
    for (Eigen::Index i = 0; i < m.A.rows(); ++i) m.labels.push_back("s" + std::to_string(i));
  }
  validate(m);
  return m;
}

Decoded viterbi(const HmmModel& model, const ObservationSequence& obs) {
  return decode(model, obs, model.states());
}

Decoded m_viterbi(const HmmModel& model, const ObservationSequence& obs, std::size_t beam) {
  return decode(model, obs, beam);
}

double path_log_prob(const HmmModel& model, const StateSequence& states, const ObservationSequence& obs) {
  if (states.size() != obs.size() || obs.empty()) throw InputError("path and observations differ in length");
  double s = std::log(model.p(states[0])) + std::log(model.B(states[0], obs[0]));
  for (std::size_t t = 1; t < obs.size(); ++t) {
    s = s + std::log(model.A(states[t - 1], states[t]));
    s = s + std::log(model.B(states[t], obs[t]));
  }
  return s;
}

double log_likelihood(const HmmModel& model, const ObservationSequence& obs) {
  validate(model);
  check_obs(model, obs);
  ForwardBackward fb;
  return forward_backward(model, obs, fb, false) ? fb.log_likelihood : kNegInf;
}

FitResult baum_welch(const ObservationSequence& obs, const HmmModel& init, std::size_t max_iter, double tol) {
  validate(init);
  check_obs(init, obs);
  if (!(tol >= 0.0)) throw InputError("tolerance must be >= 0");
  FitResult out;
  out.model = init;
  ForwardBackward fb;
  for (;;) {
    if (!forward_backward(out.model, obs, fb, true)) {
      throw EstimationFailure("observations have zero probability under the model");
    }
    const double ll = fb.log_likelihood;
    if (!out.log_likelihood.empty()) {
      const double prev = out.log_likelihood.back();
      const double slack = 1e-9 * std::max(1.0, std::abs(prev));
      if (ll < prev - slack) throw EstimationFailure("log-likelihood decreased during EM");
      if (std::abs(ll - prev) <= tol * std::abs(prev)) {
        out.log_likelihood.push_back(ll);
        out.converged = true;
        break;
      }
    }
    out.log_likelihood.push_back(ll);
    if (out.iterations == max_iter) break;
    out.model = reestimate(out.model, obs, fb);
    ++out.iterations;
  }
  return out;
}

Trajectory sample(const HmmModel& model, std::size_t length, std::uint64_t seed) {
  validate(model);
  std::mt19937_64 rng(seed);
  auto draw = [&rng](const auto& weights) {
    std::vector<double> w(weights.data(), weights.data() + weights.size());
    return static_cast<std::size_t>(std::discrete_distribution<std::size_t>(w.begin(), w.end())(rng));
  };
  Trajectory out;
  for (std::size_t t = 0; t < length; ++t) {
    const std::size_t q = t == 0 ? draw(Eigen::VectorXd(model.p))
                                 : draw(Eigen::VectorXd(model.A.row(static_cast<Eigen::Index>(out.states.back())).transpose()));
    out.states.push_back(q);
    out.obs.push_back(draw(Eigen::VectorXd(model.B.row(static_cast<Eigen::Index>(q)).transpose())));
  }
  return out;
}

std::vector<Decoded> decode_factorized(const FactorizedModel& fm, const std::vector<ObservationSequence>& obs) {
  if (obs.size() != fm.factors.size()) throw InputError("one observation sequence per factor is required");
  for (const auto& o : obs) {
    if (o.size() != obs.front().size()) throw InputError("factor observation sequences differ in length");
  }
  std::vector<Decoded> out;
  out.reserve(obs.size());
  for (std::size_t k = 0; k < obs.size(); ++k) out.push_back(viterbi(fm.factors[k], obs[k]));
  return out;
}

std::size_t joint_index(const std::vector<std::size_t>& radix, const std::vector<std::size_t>& digits) {
  std::size_t idx = 0;
  for (std::size_t k = 0; k < radix.size(); ++k) idx = idx * radix[k] + digits[k];
  return idx;
}

std::vector<std::size_t> joint_digits(const std::vector<std::size_t>& radix, std::size_t index) {
  std::vector<std::size_t> digits(radix.size());
  for (std::size_t k = radix.size(); k-- > 0;) {
    digits[k] = index % radix[k];
    index /= radix[k];
  }
  return digits;
}

HmmModel product_model(const FactorizedModel& fm) {
  if (fm.factors.empty()) throw InputError("factorized model has no factors");
  std::vector<std::size_t> state_radix, symbol_radix;
  std::size_t n = 1, m = 1;
  for (const auto& f : fm.factors) {
    validate(f);
    state_radix.push_back(f.states());
    symbol_radix.push_back(f.symbols());
    n *= f.states();
    m *= f.symbols();
  }
  HmmModel out;
  out.A = Eigen::MatrixXd::Ones(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  out.B = Eigen::MatrixXd::Ones(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
  out.p = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const auto di = joint_digits(state_radix, i);
    std::string label;
    for (std::size_t k = 0; k < di.size(); ++k) {
      const auto& f = fm.factors[k];
      out.p(static_cast<Eigen::Index>(i)) *= f.p(static_cast<Eigen::Index>(di[k]));
      label += (k ? "|" : "") + (f.labels.empty() ? std::to_string(di[k]) : f.labels[di[k]]);
    }
    out.labels.push_back(label);
    for (std::size_t j = 0; j < n; ++j) {
      const auto dj = joint_digits(state_radix, j);
      for (std::size_t k = 0; k < di.size(); ++k) {
        out.A(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) *=
            fm.factors[k].A(static_cast<Eigen::Index>(di[k]), static_cast<Eigen::Index>(dj[k]));
      }
    }
    for (std::size_t o = 0; o < m; ++o) {
      const auto dsym = joint_digits(symbol_radix, o);
      for (std::size_t k = 0; k < di.size(); ++k) {
        out.B(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(o)) *=
            fm.factors[k].B(static_cast<Eigen::Index>(di[k]), static_cast<Eigen::Index>(dsym[k]));
      }
    }
  }
  validate(out);
  return out;
}

nlohmann::json to_json(const HmmModel& model) {
  auto matrix = [](const Eigen::MatrixXd& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      std::vector<double> row(m.cols());
      for (Eigen::Index c = 0; c < m.cols(); ++c) row[static_cast<std::size_t>(c)] = m(r, c);
      rows.push_back(row);
    }
    return rows;
  };
  std::vector<double> p(model.p.data(), model.p.data() + model.p.size());
  return {{"labels", model.labels}, {"A", matrix(model.A)}, {"B", matrix(model.B)}, {"p", p}};
}

HmmModel model_from_json(const nlohmann::json& j) {
  auto matrix = [](const nlohmann::json& rows) {
    const auto r = static_cast<Eigen::Index>(rows.size());
    const auto c = r ? static_cast<Eigen::Index>(rows.at(0).size()) : 0;
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index i = 0; i < r; ++i) {
      if (static_cast<Eigen::Index>(rows.at(i).size()) != c) throw InputError("ragged matrix in model file");
      for (Eigen::Index k = 0; k < c; ++k) m(i, k) = rows.at(i).at(k).get<double>();
    }
    return m;
  };
  try {
    const auto p = j.at("p").get<std::vector<double>>();
    return make_model(matrix(j.at("A")), matrix(j.at("B")), Eigen::Map<const Eigen::VectorXd>(p.data(), static_cast<Eigen::Index>(p.size())),
                      j.value("labels", std::vector<std::string>{}));
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("bad model file: ") + e.what());
  }
}

}  // namespace semgraph::hmm
