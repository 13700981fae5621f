#pragma once

// Staged graph-signal pipeline (fidelity control, attribute tracking, graph
// smoothing, graph tracking), the innovation ledger and rate estimation.

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "semgraph/core.hpp"
#include "semgraph/ged.hpp"
#include "semgraph/hmm.hpp"
#include "semgraph/integrator.hpp"
#include "semgraph/subspace.hpp"

namespace semgraph::pipeline {

enum class Stage { Integrator, Subspace, Ged, Hmm };

const char* stage_name(Stage s);

enum class Scope {
  Atom,   // one bank per atomic graph, keyed by its smallest component
  Frame,  // the whole frame graph is one bank
};

struct IntegratorStage {
  integrator::IntegrationPolicy policy;
};

struct SubspaceStage {
  bool windowed = true;
  std::size_t buffer = 32;
  std::optional<double> lambda;
  double threshold = 2.0;
  bool reconcile = false;
  std::optional<double> reconcile_threshold;
};

struct GedStage {
  ged::EditCostTable costs;
  double threshold = 0.2;
  std::size_t streak = 5;
};

struct HmmStage {
  std::map<std::uint32_t, hmm::HmmModel> models;  // per component class
  std::optional<hmm::HmmModel> fallback;
};

struct PipelineConfig {
  ClassCatalog catalog;
  std::vector<Stage> stages;  // integrator, subspace, ged, hmm order, each at most once
  IntegratorStage integrator;
  SubspaceStage subspace;
  GedStage ged;
  HmmStage hmm;
  Scope scope = Scope::Atom;
  Goal goal;
  double frame_rate = 30.0;
  std::uint64_t seed = 0;
  /// File locations used by run_files; relative paths resolve against the
  /// config file's directory.
  std::string graphs_path;
  std::string scores_path;
  std::string features_path;
  std::string output_dir = ".";

  bool enabled(Stage s) const;
};

/// Throws InputError on an unknown or out-of-order stage, a malformed stage
/// block, or missing models and costs for an enabled stage. Class names are
/// resolved against "catalog" when present, otherwise against
/// `fallback_catalog`.
PipelineConfig config_from_json(const nlohmann::json& j, const std::optional<ClassCatalog>& fallback_catalog = {});

/// Reads a config file, resolving relative input, output and cost-table
/// paths against its directory. Without a "catalog" block the catalog is
/// inferred from the graph stream.
PipelineConfig load_config(const std::string& path);

struct LevelEvents {
  std::size_t count = 0;
  double bits = 0.0;  // summed over events

  double mean_length() const { return count ? bits / static_cast<double>(count) : 0.0; }
};

/// Innovation record of one bank.
struct AtomLedger {
  std::string key;
  std::set<std::uint32_t> components;  // component classes seen in the bank
  LevelEvents graph;
  std::map<std::size_t, LevelEvents> attributes;  // by attribute level (1-based)
};

struct InnovationLedger {
  ClassCatalog catalog;
  std::int64_t frames = 0;
  double frame_rate = 30.0;
  std::vector<AtomLedger> atoms;

  double duration() const { return static_cast<double>(frames) / frame_rate; }
};

struct RateReport {
  double R = 0.0;      // bits per second over every atom and level
  double R_hat = 0.0;  // bits per second over goal-admitted atoms and levels
  Goal goal;
  std::size_t atoms = 0;       // N
  std::size_t atoms_hat = 0;   // N-hat
  std::size_t levels = 0;      // L
  std::size_t levels_hat = 0;  // L-hat
};

/// Innovation rate R over all atoms; R-hat over atoms holding at least one goal
/// component class and attribute levels up to the goal's depth. Throws
/// InputError when duration <= 0.
RateReport rate(const InnovationLedger& ledger, double duration, const Goal& goal);
RateReport rate(const InnovationLedger& ledger, const Goal& goal);

/// Bits of the canonical single-line JSON serialization.
double message_length(const AtomicGraph& g, const ClassCatalog& catalog);
double message_length(const AttributeLevel& level);

/// Bank key of an atom: "c:<class>:<id>" of its smallest component (or the
/// smallest node when it has none).
std::string atom_key(const AtomicGraph& atom, const ClassCatalog& catalog);

/// Graph-level ledger of a stream: an event wherever a bank's graph differs
/// from its previous frame (absent banks are empty graphs).
InnovationLedger graph_ledger(const std::vector<MultiGraph>& stream, const ClassCatalog& catalog, Scope scope,
                              double frame_rate);

struct PipelineInputs {
  std::vector<MultiGraph> graphs;
  std::vector<integrator::ScoreStream> scores;
  std::map<std::int64_t, subspace::FeatureWindow> features;
};

struct TrackInnovation {
  std::int64_t track_id = 0;
  std::vector<std::int64_t> frames;
  subspace::InnovationSeries series;
};

struct PipelineResult {
  std::vector<MultiGraph> output;
  InnovationLedger ledger;
  RateReport report;
  std::vector<TrackInnovation> innovation;
  std::vector<std::vector<std::int64_t>> id_groups;   // reconciled track ids
  std::vector<ged::InnovationEvent> smoothing_events;  // every bank, ordered by frame
  /// Decoded presence per tracked component, keyed like atom_key.
  std::map<std::string, hmm::StateSequence> presence;
};

/// Runs the enabled stages in order. Component banks are processed
/// concurrently; results do not depend on scheduling. Stage errors are
/// rethrown as StageFailure carrying the stage name and frame.
PipelineResult run(const PipelineConfig& config, const PipelineInputs& inputs);

/// Loads the configured inputs, runs, and writes output.jsonl, ledger.json,
/// rate.json, events.jsonl and (with the subspace stage) innovation.csv.
PipelineResult run_files(const PipelineConfig& config);

/// {"t", "ged" (null for +inf), "from", "to"} with t the frame's time index.
nlohmann::json event_to_json(const ged::InnovationEvent& event, std::int64_t t, const ClassCatalog& catalog);

nlohmann::json to_json(const InnovationLedger& ledger);
InnovationLedger ledger_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RateReport& report, const ClassCatalog& catalog);

}  // namespace semgraph::pipeline
