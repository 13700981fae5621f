#pragma once

// Seeded synthetic data: random extractors, ground-truth timelines, AR(1)
// score streams, noisy graph-observation streams and fragmented feature
// tracks. Every generator is a pure function of its arguments.

#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "semgraph/confusion.hpp"
#include "semgraph/core.hpp"
#include "semgraph/integrator.hpp"
#include "semgraph/subspace.hpp"

namespace semgraph::simkit {

struct ExtractorModel {
  std::vector<std::string> labels;
  std::vector<integrator::ScoreModel> patterns;

  std::size_t size() const noexcept { return patterns.size(); }
};

/// Means mu0 ~ U(0.1, 0.3), mu1 ~ U(0.7, 0.9); each sigma is
/// (mu1 - mu0) / (2 * separability) jittered by +-20%, so the detection
/// margin grows with separability. Throws InputError for K < 2 or
/// separability <= 0.
ExtractorModel gen_extractor(std::size_t k, double separability, double rho, std::uint64_t seed);

/// Score vectors for `n` frames with iid truths drawn from `prevalence`
/// (uniform when empty): the true pattern scores under H1, all others under
/// H0, frames independent.
std::vector<confusion::Sample> draw_samples(const ExtractorModel& model, std::size_t n,
                                            const std::vector<double>& prevalence, std::uint64_t seed);

struct Timeline {
  std::size_t frames = 0;
  std::vector<std::vector<bool>> present;  // [pattern][frame]
  double dwell_on = 1.0;
  double dwell_off = 1.0;
};

inline constexpr double kNever = std::numeric_limits<double>::infinity();

/// Alternating geometric on/off dwells per pattern with the given means;
/// each track starts off. dwell_off = kNever keeps tracks off, dwell_on =
/// kNever keeps them on once switched on.
Timeline gen_timeline(std::size_t k, std::size_t frames, double dwell_on, double dwell_off, std::uint64_t seed);

/// Lengths of the maximal runs of `value`, dropping a run cut by the end.
std::vector<std::size_t> dwell_lengths(const std::vector<bool>& track, bool value);

/// AR(1) Gaussian scores per pattern: H1 parameters on present frames, H0
/// otherwise, clipped to [0, 1]. Frame t of the timeline has time index t.
std::vector<integrator::ScoreStream> emit_scores(const Timeline& timeline, const ExtractorModel& model,
                                                 std::uint64_t seed);

struct ScriptEntry {
  std::int64_t frame = 0;  // truth equals `graph` from this frame on
  AtomicGraph graph;
};

enum class NoiseMode {
  PerNode,     // every node drawn from its confusion-matrix row each frame
  FrameGated,  // with probability error_rate one node of the frame is corrupted
};

struct ScenarioSpec {
  ClassCatalog catalog;
  std::int64_t frames = 0;
  std::vector<ScriptEntry> script;  // ascending frames, truth is empty before the first
  NoiseMode mode = NoiseMode::PerNode;
  double error_rate = 0.0;
  std::uint64_t seed = 0;
};

struct GraphStreams {
  std::vector<MultiGraph> truth;
  std::vector<MultiGraph> observed;
};

/// Perturbs the scripted truth frame by frame. A node of pattern i becomes
/// pattern j with probability n_ij / N_i and is missed with the remaining
/// row mass; cross-kind entries are ignored and the row renormalized.
/// Predicates touching a missed component are dropped with it. In
/// FrameGated mode the corrupted node's row is conditioned on an error.
/// Throws InputError when the catalog and confusion matrix disagree in size
/// or script frames fall outside [0, frames).
GraphStreams emit_graph_stream(const ScenarioSpec& scenario, const confusion::ConfusionMatrix& cm);

/// Script of `transitions` graph changes at frames spaced at least `min_gap`
/// apart. Each step adds a component, removes one, or attaches or detaches a
/// predicate, so consecutive graphs differ in their class multiset.
std::vector<ScriptEntry> gen_script(const ClassCatalog& catalog, std::int64_t frames, std::size_t transitions,
                                    std::int64_t min_gap, std::uint64_t seed);

struct IdentityTrackSpec {
  std::size_t dim = 128;
  std::size_t rank = 2;
  std::size_t frames_per_track = 40;
  double noise = 0.01;
  double spike_rate = 0.01;  // share of entries hit by a sparse outlier
  /// Track ids per underlying identity.
  std::vector<std::vector<std::int64_t>> identities;
};

/// Unit-norm feature rows mean_k + U_k c_t + noise for each track of
/// identity k, where U_k spans a random `rank`-dimensional subspace.
std::map<std::int64_t, subspace::FeatureWindow> gen_identity_tracks(const IdentityTrackSpec& spec,
                                                                   std::uint64_t seed);

}  // namespace semgraph::simkit
