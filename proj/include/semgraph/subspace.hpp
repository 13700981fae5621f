#pragma once

// Attribute-level innovation from vector attributes: principal component
// pursuit by alternating minimization, rank selection, l1 innovation series
// and reconciliation of fragmented track identities.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace semgraph::subspace {

using Matrix = Eigen::MatrixXd;

/// Rows are per-frame level-2 feature vectors of one track.
struct FeatureWindow {
  std::int64_t track_id = 0;
  std::vector<std::int64_t> frame_ids;
  Matrix data;
};

/// Entrywise sign(x) * max(|x| - lambda, 0).
Matrix shrink(const Matrix& x, double lambda);

struct RankPolicy {
  enum class Mode { Fixed, Auto };
  Mode mode = Mode::Auto;
  std::size_t rank = 1;                 // used when mode == Fixed
  double contribution_threshold = 0.05;  // used when mode == Auto

  static RankPolicy fixed(std::size_t t) { return {Mode::Fixed, t, 0.05}; }
  static RankPolicy automatic(double threshold = 0.05) { return {Mode::Auto, 0, threshold}; }
};

struct PcpOptions {
  std::optional<double> lambda;  // unset: 1 / sqrt(max(n, d))
  RankPolicy rank = RankPolicy::automatic();
  std::size_t max_iter = 200;
  double tol = 1e-6;
};

double default_lambda(Eigen::Index rows, Eigen::Index cols);

struct PcpDecomposition {
  Matrix low_rank;
  Matrix sparse;
  std::size_t rank = 0;
  double lambda = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  /// 0.5 * ||L + S - D||_F^2 + lambda * ||S||_1 after each iteration.
  std::vector<double> objective;
};

double pcp_objective(const Matrix& d, const Matrix& low_rank, const Matrix& sparse, double lambda);

/// Alternates a rank-t truncated SVD of D - S with entrywise shrinkage of
/// D - L, starting from S = 0, until the relative change of L drops below
/// tol. Throws InputError on non-finite data, lambda <= 0 or max_iter == 0.
PcpDecomposition pcp(const Matrix& d, const PcpOptions& options = {});

/// Best rank-t approximation of x (t-term truncated SVD).
Matrix truncated(const Matrix& x, std::size_t t);

/// Smallest t whose next singular value of D - S contributes less than
/// `threshold` of the cumulative singular mass; 0 for a zero matrix.
std::size_t rank_select(const Matrix& d, const Matrix& sparse, double threshold);

enum class ThresholdMode {
  Absolute,  // threshold on the per-frame l1 mass
  Relative,  // threshold times the mean per-frame l1 mass of L + S
};

struct InnovationSeries {
  std::vector<double> mass;         // l1 norm of each row of S
  std::vector<std::size_t> peaks;  // frame offsets
};

/// Frames whose mass exceeds `threshold` and is a local maximum within
/// +-`suppression` frames; on exact plateaus the earliest frame wins.
std::vector<std::size_t> find_peaks(std::span<const double> mass, double threshold,
                                    std::size_t suppression = 3);

InnovationSeries innovation(const PcpDecomposition& decomposition, double threshold,
                            ThresholdMode mode = ThresholdMode::Absolute);

struct WindowedOptions {
  std::optional<double> lambda;  // unset: 1 / sqrt(max(buffer, d))
  RankPolicy rank = RankPolicy::fixed(1);
  std::size_t max_iter = 200;
  double tol = 1e-6;
};

/// Sliding buffer ending at each frame; the frame's mass is the l1 norm of
/// the newest row of the buffer's sparse component.
InnovationSeries windowed_innovation(const Matrix& stream, std::size_t buffer_size, double threshold,
                                     const WindowedOptions& options = {});

struct ReconcileOptions {
  PcpOptions pcp;
  std::optional<double> threshold;  // absolute override of the split
  double min_threshold = 0.1;
  double max_threshold = 0.5;
};

struct ReconcileResult {
  std::vector<std::vector<std::int64_t>> groups;  // each sorted, ordered by first id
  std::vector<std::int64_t> excluded;             // tracks with fewer than 2 frames
  double threshold = 0.0;
  std::map<std::pair<std::int64_t, std::int64_t>, double> distances;
};

/// Relative Manhattan distance ||a - b||_1 / mean(||a||_1, ||b||_1).
double relative_manhattan(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

/// Otsu split point of a set of values (midpoint between the classes).
double otsu_threshold(std::vector<double> values);

ReconcileResult reconcile(const std::map<std::int64_t, FeatureWindow>& tracks,
                          const ReconcileOptions& options = {});

}  // namespace semgraph::subspace
