#include "semgraph/subspace.hpp"

#include <algorithm>
#include <cmath>

#include "semgraph/errors.hpp"
#include "union_find.hpp"

namespace semgraph::subspace {

namespace {

PcpDecomposition run_fixed_rank(const Matrix& d, std::size_t t, double lambda, std::size_t max_iter,
                                double tol) {
  PcpDecomposition out;
  out.rank = t;
  out.lambda = lambda;
  out.low_rank = Matrix::Zero(d.rows(), d.cols());
  out.sparse = Matrix::Zero(d.rows(), d.cols());
  const double scale = std::max(1.0, d.norm());
  for (std::size_t k = 0; k < max_iter; ++k) {
    Matrix next = truncated(d - out.sparse, t);
    const double change = (next - out.low_rank).norm() / scale;
    out.low_rank = std::move(next);
    out.sparse = shrink(d - out.low_rank, lambda);
    out.objective.push_back(pcp_objective(d, out.low_rank, out.sparse, lambda));
    out.iterations = k + 1;
    if (change < tol) {
      out.converged = true;
      break;
    }
  }
  return out;
}

}  // namespace

Matrix shrink(const Matrix& x, double lambda) {
  return x.unaryExpr([lambda](double v) {
    const double mag = std::abs(v) - lambda;
    return mag > 0.0 ? std::copysign(mag, v) : 0.0;
  });
}

double default_lambda(Eigen::Index rows, Eigen::Index cols) {
  return 1.0 / std::sqrt(static_cast<double>(std::max<Eigen::Index>({rows, cols, 1})));
}

double pcp_objective(const Matrix& d, const Matrix& low_rank, const Matrix& sparse, double lambda) {
  return 0.5 * (low_rank + sparse - d).squaredNorm() + lambda * sparse.lpNorm<1>();
}

Matrix truncated(const Matrix& x, std::size_t t) {
  const auto cap = static_cast<std::size_t>(std::min(x.rows(), x.cols()));
  t = std::min(t, cap);
  if (t == 0) return Matrix::Zero(x.rows(), x.cols());
  Eigen::BDCSVD<Matrix> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto k = static_cast<Eigen::Index>(t);
  return svd.matrixU().leftCols(k) * svd.singularValues().head(k).asDiagonal() *
         svd.matrixV().leftCols(k).transpose();
}

std::size_t rank_select(const Matrix& d, const Matrix& sparse, double threshold) {
  const Matrix x = d - sparse;
  if (x.size() == 0) return 0;
  const Eigen::VectorXd sv = Eigen::BDCSVD<Matrix>(x).singularValues();
  const double floor = 1e-12 * std::max(1.0, d.norm());
  if (sv.size() == 0 || sv(0) <= floor) return 0;
  double cumulative = sv(0);
  for (Eigen::Index t = 1; t < sv.size(); ++t) {
    cumulative += sv(t);
    if (sv(t) / cumulative < threshold) return static_cast<std::size_t>(t);
  }
  return static_cast<std::size_t>(sv.size());
}

PcpDecomposition pcp(const Matrix& d, const PcpOptions& options) {
  if (!d.allFinite()) throw InputError("feature matrix contains non-finite entries");
  if (options.max_iter == 0) throw InputError("pcp needs max_iter >= 1");
  const double lambda = options.lambda.value_or(default_lambda(d.rows(), d.cols()));
  if (!(lambda > 0.0)) throw InputError("pcp needs lambda > 0");

  if (options.rank.mode == RankPolicy::Mode::Fixed) {
    return run_fixed_rank(d, options.rank.rank, lambda, options.max_iter, options.tol);
  }
  // Pick t from the raw data, then re-check it once against D - S; a changed
  // estimate restarts the alternation so the objective trace stays monotone.
  const double thr = options.rank.contribution_threshold;
  const std::size_t first = rank_select(d, Matrix::Zero(d.rows(), d.cols()), thr);
  auto result = run_fixed_rank(d, first, lambda, options.max_iter, options.tol);
  const std::size_t refined = rank_select(d, result.sparse, thr);
  if (refined != first) result = run_fixed_rank(d, refined, lambda, options.max_iter, options.tol);
  return result;
}

std::vector<std::size_t> find_peaks(std::span<const double> mass, double threshold,
                                    std::size_t suppression) {
  std::vector<std::size_t> peaks;
  const std::size_t n = mass.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (!(mass[i] > threshold)) continue;
    const std::size_t lo = i >= suppression ? i - suppression : 0;
    const std::size_t hi = std::min(n - 1, i + suppression);
    bool is_peak = true;
    for (std::size_t j = lo; j <= hi && is_peak; ++j) {
      if (j < i) is_peak = mass[i] > mass[j];
      if (j > i) is_peak = mass[i] >= mass[j];
    }
    if (is_peak) peaks.push_back(i);
  }
  return peaks;
}

InnovationSeries innovation(const PcpDecomposition& decomposition, double threshold,
                            ThresholdMode mode) {
  if (!(threshold > 0.0)) throw InputError("innovation threshold must be > 0");
  InnovationSeries out;
  const auto& s = decomposition.sparse;
  out.mass.resize(static_cast<std::size_t>(s.rows()));
  for (Eigen::Index r = 0; r < s.rows(); ++r) {
    out.mass[static_cast<std::size_t>(r)] = s.row(r).lpNorm<1>();
  }
  double effective = threshold;
  if (mode == ThresholdMode::Relative && s.rows() > 0) {
    const Matrix data = decomposition.low_rank + s;
    effective = threshold * data.rowwise().lpNorm<1>().mean();
  }
  out.peaks = find_peaks(out.mass, effective);
  return out;
}

InnovationSeries windowed_innovation(const Matrix& stream, std::size_t buffer_size, double threshold,
                                     const WindowedOptions& options) {
  if (buffer_size < 2) throw InputError("buffer size must be >= 2");
  if (!(threshold > 0.0)) throw InputError("innovation threshold must be > 0");
  PcpOptions pcp_options;
  pcp_options.lambda = options.lambda.value_or(
      default_lambda(static_cast<Eigen::Index>(buffer_size), stream.cols()));
  pcp_options.rank = options.rank;
  pcp_options.max_iter = options.max_iter;
  pcp_options.tol = options.tol;

  InnovationSeries out;
  out.mass.assign(static_cast<std::size_t>(stream.rows()), 0.0);
  const auto buffer = static_cast<Eigen::Index>(buffer_size);
  for (Eigen::Index i = 1; i < stream.rows(); ++i) {
    const Eigen::Index first = std::max<Eigen::Index>(0, i - buffer + 1);
    const Matrix window = stream.middleRows(first, i - first + 1);
    const auto decomposition = pcp(window, pcp_options);
    out.mass[static_cast<std::size_t>(i)] = decomposition.sparse.bottomRows(1).lpNorm<1>();
  }
  out.peaks = find_peaks(out.mass, threshold);
  return out;
}

double relative_manhattan(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double scale = 0.5 * (a.lpNorm<1>() + b.lpNorm<1>());
  if (scale == 0.0) return 0.0;
  return (a - b).lpNorm<1>() / scale;
}

double otsu_threshold(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n == 1) return values.front();
  double total = 0.0;
  for (double v : values) total += v;
  double best_score = -1.0;
  double best = values.back();
  double left_sum = 0.0;
  for (std::size_t k = 1; k < n; ++k) {
    left_sum += values[k - 1];
    if (values[k] == values[k - 1]) continue;
    const double w0 = static_cast<double>(k) / static_cast<double>(n);
    const double w1 = 1.0 - w0;
    const double m0 = left_sum / static_cast<double>(k);
    const double m1 = (total - left_sum) / static_cast<double>(n - k);
    const double score = w0 * w1 * (m0 - m1) * (m0 - m1);
    if (score > best_score) {
      best_score = score;
      best = 0.5 * (values[k - 1] + values[k]);
    }
  }
  return best;
}

ReconcileResult reconcile(const std::map<std::int64_t, FeatureWindow>& tracks,
                          const ReconcileOptions& options) {
  if (tracks.size() < 2) throw InputError("reconcile needs at least two tracks");
  ReconcileResult out;
  std::vector<std::int64_t> ids;
  std::vector<Eigen::VectorXd> means;
  for (const auto& [id, window] : tracks) {
    if (window.data.rows() < 2) {
      out.excluded.push_back(id);
      continue;
    }
    const auto decomposition = pcp(window.data, options.pcp);
    ids.push_back(id);
    means.push_back(decomposition.low_rank.colwise().mean().transpose());
  }

  std::vector<double> values;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    for (std::size_t j = i + 1; j < ids.size(); ++j) {
      if (means[i].size() != means[j].size()) throw InputError("tracks differ in feature dimension");
      const double dist = relative_manhattan(means[i], means[j]);
      out.distances[{ids[i], ids[j]}] = dist;
      values.push_back(dist);
    }
  }
  if (options.threshold) {
    out.threshold = *options.threshold;
  } else {
    out.threshold = std::clamp(values.size() >= 2 ? otsu_threshold(values) : options.max_threshold,
                               options.min_threshold, options.max_threshold);
  }

  detail::UnionFind uf(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    for (std::size_t j = i + 1; j < ids.size(); ++j) {
      if (out.distances.at({ids[i], ids[j]}) < out.threshold) uf.unite(i, j);
    }
  }
  std::map<std::size_t, std::vector<std::int64_t>> by_root;
  for (std::size_t i = 0; i < ids.size(); ++i) by_root[uf.find(i)].push_back(ids[i]);
  for (auto& [root, members] : by_root) out.groups.push_back(std::move(members));
  return out;
}

}  // namespace semgraph::subspace
