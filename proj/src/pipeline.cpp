#include "semgraph/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <limits>

#include "semgraph/errors.hpp"
#include "semgraph/formats.hpp"
#include "semgraph/graph_io.hpp"

namespace semgraph::pipeline {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr Stage kOrder[] = {Stage::Integrator, Stage::Subspace, Stage::Ged, Stage::Hmm};

Stage parse_stage(const std::string& name) {
  for (auto s : kOrder) {
    if (name == stage_name(s)) return s;
  }
  throw InputError("unknown pipeline stage '" + name + "'");
}

std::size_t lookup_pattern(const ClassCatalog& catalog, const std::string& name) {
  if (auto c = catalog.find(NodeKind::Component, name)) return catalog.pattern_index(NodeKind::Component, *c);
  if (auto p = catalog.find(NodeKind::Predicate, name)) return catalog.pattern_index(NodeKind::Predicate, *p);
  throw InputError("unknown class '" + name + "'");
}

std::string node_key(const NodeRef& n, const ClassCatalog& catalog) {
  return std::string(n.kind == NodeKind::Component ? "c:" : "p:") + catalog.name(n.kind, n.class_id) + ":" +
         std::to_string(n.instance_id);
}

// Removes `gone` together with predicates attached to a removed component.
void drop_nodes(AtomicGraph& g, std::set<NodeRef> gone) {
  for (const auto& e : g.edges) {
    if (gone.contains(e.a) && e.a.kind == NodeKind::Component && e.b.kind == NodeKind::Predicate) gone.insert(e.b);
    if (gone.contains(e.b) && e.b.kind == NodeKind::Component && e.a.kind == NodeKind::Predicate) gone.insert(e.a);
  }
  std::erase_if(g.nodes, [&](const NodeRef& n) { return gone.contains(n); });
  std::erase_if(g.edges, [&](const Edge& e) { return gone.contains(e.a) || gone.contains(e.b); });
  for (const auto& n : gone) g.attributes.erase(n);
}

MultiGraph resplit(std::int64_t t, AtomicGraph g) {
  g = canonical(std::move(g));
  return split_atoms(t, g.nodes, g.edges, g.attributes);
}

AtomicGraph merge(const std::vector<const AtomicGraph*>& parts) {
  AtomicGraph out;
  for (const auto* p : parts) {
    out.nodes.insert(out.nodes.end(), p->nodes.begin(), p->nodes.end());
    out.edges.insert(out.edges.end(), p->edges.begin(), p->edges.end());
    for (const auto& [n, a] : p->attributes) out.attributes.emplace(n, a);
  }
  return canonical(std::move(out));
}

std::map<std::string, AtomicGraph> banks_of(const MultiGraph& mg, const ClassCatalog& catalog, Scope scope) {
  std::map<std::string, AtomicGraph> out;
  if (scope == Scope::Frame) {
    out.emplace("frame", flatten(mg));
    return out;
  }
  for (const auto& atom : mg.atoms) {
    auto& slot = out[atom_key(atom, catalog)];
    slot = slot.empty() ? atom : merge({&slot, &atom});
  }
  return out;
}

// Fidelity control: nodes of patterns whose integrated score falls below
// tau on a scored frame are dropped.
void integrator_stage(const PipelineConfig& config, const PipelineInputs& inputs, std::vector<MultiGraph>& stream) {
  if (inputs.scores.empty()) throw InputError("integrator stage needs a score stream");
  std::map<std::size_t, std::map<std::int64_t, bool>> detected;
  for (const auto& s : inputs.scores) {
    const auto& policy = config.integrator.policy;
    const auto integrated = integrator::integrate(s, policy.window_for(s.pattern));
    const auto hits = integrator::detect(integrated, policy.tau_for(s.pattern));
    auto& slot = detected[s.pattern];
    for (std::size_t k = 0; k < hits.size(); ++k) slot[integrated.frames[k].t] = hits[k];
  }
  const auto& catalog = config.catalog;
  for (auto& frame : stream) {
    AtomicGraph g = flatten(frame);
    std::set<NodeRef> gone;
    for (const auto& n : g.nodes) {
      auto p = detected.find(catalog.pattern_index(n.kind, n.class_id));
      if (p == detected.end()) continue;
      auto hit = p->second.find(frame.time_index);
      if (hit != p->second.end() && !hit->second) gone.insert(n);
    }
    if (gone.empty()) continue;
    drop_nodes(g, gone);
    frame = resplit(frame.time_index, std::move(g));
  }
}

struct AttributeEvent {
  std::string key;
  std::optional<std::uint32_t> component_class;
  std::size_t level = 2;
  double bits = 0.0;
};

std::optional<NodeRef> find_track(const MultiGraph& frame, std::int64_t track_id) {
  for (const auto& atom : frame.atoms) {
    for (const auto& n : atom.nodes) {
      if (n.kind == NodeKind::Component && static_cast<std::int64_t>(n.instance_id) == track_id) return n;
    }
  }
  return std::nullopt;
}

void subspace_stage(const PipelineConfig& config, const PipelineInputs& inputs, std::vector<MultiGraph>& stream,
                    PipelineResult& result, std::vector<AttributeEvent>& attribute_events) {
  if (inputs.features.empty()) throw InputError("subspace stage needs a feature stream");
  const auto& opts = config.subspace;
  std::map<std::int64_t, std::size_t> frame_index;
  for (std::size_t k = 0; k < stream.size(); ++k) frame_index[stream[k].time_index] = k;

  std::vector<std::future<TrackInnovation>> jobs;
  for (const auto& [id, window] : inputs.features) {
    jobs.push_back(std::async(std::launch::async, [&opts, id, &window] {
      TrackInnovation ti{id, window.frame_ids, {}};
      if (window.data.rows() == 0) return ti;
      try {
        if (opts.windowed) {
          subspace::WindowedOptions w;
          w.lambda = opts.lambda;
          ti.series = subspace::windowed_innovation(window.data, opts.buffer, opts.threshold, w);
        } else {
          subspace::PcpOptions p;
          p.lambda = opts.lambda;
          ti.series = subspace::innovation(subspace::pcp(window.data, p), opts.threshold);
        }
      } catch (const InputError& e) {
        throw StageFailure("subspace", window.frame_ids.empty() ? 0 : window.frame_ids.front(), e.what());
      }
      return ti;
    }));
  }
  for (auto& j : jobs) result.innovation.push_back(j.get());

  for (const auto& ti : result.innovation) {
    const auto& window = inputs.features.at(ti.track_id);
    for (auto peak : ti.series.peaks) {
      const std::int64_t t = ti.frames[peak];
      const auto row = window.data.row(static_cast<Eigen::Index>(peak));
      AttributeEvent ev;
      ev.bits = message_length(AttributeLevel(std::vector<double>(row.data(), row.data() + row.size())));
      ev.key = "track:" + std::to_string(ti.track_id);
      if (auto it = frame_index.find(t); it != frame_index.end()) {
        const auto& frame = stream[it->second];
        if (auto node = find_track(frame, ti.track_id)) {
          ev.component_class = node->class_id;
          for (const auto& atom : frame.atoms) {
            if (atom.contains(*node)) ev.key = config.scope == Scope::Frame ? "frame" : atom_key(atom, config.catalog);
          }
        }
      }
      attribute_events.push_back(std::move(ev));
    }
  }

  if (!opts.reconcile || inputs.features.size() < 2) return;
  subspace::ReconcileOptions ro;
  ro.pcp.lambda = opts.lambda;
  ro.threshold = opts.reconcile_threshold;
  try {
    result.id_groups = subspace::reconcile(inputs.features, ro).groups;
  } catch (const InputError& e) {
    throw StageFailure("subspace", stream.empty() ? 0 : stream.front().time_index, e.what());
  }
  std::map<std::uint32_t, std::uint32_t> alias;
  for (const auto& group : result.id_groups) {
    for (auto id : group) alias[static_cast<std::uint32_t>(id)] = static_cast<std::uint32_t>(group.front());
  }
  for (auto& frame : stream) {
    AtomicGraph g = flatten(frame);
    bool changed = false;
    auto relabel = [&](NodeRef& n) {
      if (n.kind != NodeKind::Component) return;
      if (auto it = alias.find(n.instance_id); it != alias.end() && it->second != n.instance_id) {
        n.instance_id = it->second;
        changed = true;
      }
    };
    for (auto& n : g.nodes) relabel(n);
    for (auto& e : g.edges) {
      relabel(e.a);
      relabel(e.b);
    }
    if (!changed) continue;
    std::map<NodeRef, AttributeSet> attrs;
    for (const auto& [n, a] : g.attributes) {
      NodeRef renamed = n;
      relabel(renamed);
      attrs.emplace(renamed, a);
    }
    g.attributes = std::move(attrs);
    frame = resplit(frame.time_index, std::move(g));
  }
}

void check_costs_cover(const ged::EditCostTable& costs, const ClassCatalog& catalog) {
  if (costs.component_count() != catalog.size(NodeKind::Component) ||
      costs.size() - costs.component_count() != catalog.size(NodeKind::Predicate)) {
    throw InputError("edit cost table does not match the class catalog");
  }
}

void ged_stage(const PipelineConfig& config, std::vector<MultiGraph>& stream, PipelineResult& result) {
  const auto& catalog = config.catalog;
  const auto& opts = config.ged;
  check_costs_cover(opts.costs, catalog);

  std::set<std::string> keys;
  std::vector<std::map<std::string, AtomicGraph>> banks;
  for (const auto& frame : stream) {
    banks.push_back(banks_of(frame, catalog, config.scope));
    for (const auto& [k, g] : banks.back()) keys.insert(k);
  }
  std::vector<std::string> ordered(keys.begin(), keys.end());
  std::vector<std::future<ged::SmoothResult>> jobs;
  for (const auto& key : ordered) {
    jobs.push_back(std::async(std::launch::async, [&, key] {
      std::vector<AtomicGraph> series;
      series.reserve(banks.size());
      for (const auto& b : banks) {
        auto it = b.find(key);
        series.push_back(it == b.end() ? AtomicGraph{} : it->second);
      }
      return ged::smooth(series, opts.costs, opts.threshold, opts.streak);
    }));
  }
  std::vector<ged::SmoothResult> smoothed;
  for (auto& j : jobs) smoothed.push_back(j.get());

  for (std::size_t k = 0; k < stream.size(); ++k) {
    std::vector<const AtomicGraph*> parts;
    for (const auto& s : smoothed) parts.push_back(&s.output[k]);
    stream[k] = resplit(stream[k].time_index, merge(parts));
  }
  for (auto& s : smoothed) {
    result.smoothing_events.insert(result.smoothing_events.end(), s.events.begin(), s.events.end());
  }
  std::stable_sort(result.smoothing_events.begin(), result.smoothing_events.end(),
                   [](const auto& a, const auto& b) { return a.frame < b.frame; });
}

void hmm_stage(const PipelineConfig& config, std::vector<MultiGraph>& stream, PipelineResult& result) {
  if (stream.empty()) return;
  const auto& catalog = config.catalog;
  std::set<NodeRef> tracked;
  for (const auto& frame : stream) {
    for (const auto& atom : frame.atoms) {
      for (const auto& n : atom.nodes) {
        if (n.kind == NodeKind::Component) tracked.insert(n);
      }
    }
  }
  std::vector<NodeRef> nodes(tracked.begin(), tracked.end());
  std::vector<const hmm::HmmModel*> models;
  for (const auto& n : nodes) {
    auto it = config.hmm.models.find(n.class_id);
    const hmm::HmmModel* m = it != config.hmm.models.end() ? &it->second
                             : config.hmm.fallback       ? &*config.hmm.fallback
                                                         : nullptr;
    if (!m) throw InputError("no HMM model for class '" + catalog.name(NodeKind::Component, n.class_id) + "'");
    if (m->states() != 2 || m->symbols() != 2) throw InputError("component HMMs need 2 states and 2 symbols");
    models.push_back(m);
  }

  std::vector<std::future<hmm::Decoded>> jobs;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    jobs.push_back(std::async(std::launch::async, [&, i] {
      hmm::ObservationSequence obs;
      obs.reserve(stream.size());
      for (const auto& frame : stream) {
        bool seen = false;
        for (const auto& atom : frame.atoms) seen = seen || atom.contains(nodes[i]);
        obs.push_back(seen ? 1 : 0);
      }
      try {
        return hmm::viterbi(*models[i], obs);
      } catch (const DecodeFailure& e) {
        throw StageFailure("hmm", stream[e.step()].time_index, e.what());
      }
    }));
  }
  std::vector<hmm::Decoded> decoded;
  for (auto& j : jobs) decoded.push_back(j.get());

  std::vector<std::optional<AttributeSet>> last_attrs(nodes.size());
  for (std::size_t k = 0; k < stream.size(); ++k) {
    AtomicGraph g = flatten(stream[k]);
    std::set<NodeRef> gone;
    bool changed = false;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const bool present = g.contains(nodes[i]);
      if (present) {
        if (auto it = g.attributes.find(nodes[i]); it != g.attributes.end()) last_attrs[i] = it->second;
      }
      const bool keep = decoded[i].states[k] == 1;
      if (present && !keep) gone.insert(nodes[i]);
      if (!present && keep) {
        g.nodes.push_back(nodes[i]);
        if (last_attrs[i]) g.attributes[nodes[i]] = *last_attrs[i];
        changed = true;
      }
    }
    if (!gone.empty()) {
      drop_nodes(g, gone);
      changed = true;
    }
    if (changed) stream[k] = resplit(stream[k].time_index, std::move(g));
  }
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    result.presence[node_key(nodes[i], catalog)] = std::move(decoded[i].states);
  }
}

json level_json(const LevelEvents& e) { return {{"count", e.count}, {"bits", e.bits}}; }

LevelEvents level_from_json(const json& j) {
  LevelEvents e{j.at("count").get<std::size_t>(), j.at("bits").get<double>()};
  if (e.bits < 0.0 || (e.count > 0 && e.bits <= 0.0)) throw InputError("ledger lengths must be > 0 for counted events");
  return e;
}

fs::path resolve(const fs::path& base, const std::string& p) {
  if (p.empty()) return {};
  const fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p);
  if (!out) throw InputError("cannot write " + p.string());
  return out;
}

}  // namespace

const char* stage_name(Stage s) {
  switch (s) {
    case Stage::Integrator:
      return "integrator";
    case Stage::Subspace:
      return "subspace";
    case Stage::Ged:
      return "ged";
    case Stage::Hmm:
      return "hmm";
  }
  return "?";
}

bool PipelineConfig::enabled(Stage s) const { return std::find(stages.begin(), stages.end(), s) != stages.end(); }

PipelineConfig config_from_json(const json& j, const std::optional<ClassCatalog>& fallback_catalog) {
  PipelineConfig c;
  try {
    if (j.contains("catalog")) {
      c.catalog = io::catalog_from_json(j.at("catalog"));
    } else if (fallback_catalog) {
      c.catalog = *fallback_catalog;
    } else {
      throw InputError("config has no catalog");
    }
    const auto& catalog = c.catalog;

    int last = -1;
    for (const auto& name : j.value("stages", std::vector<std::string>{})) {
      const Stage s = parse_stage(name);
      if (static_cast<int>(s) <= last) throw InputError("stages must follow the order integrator, subspace, ged, hmm");
      last = static_cast<int>(s);
      c.stages.push_back(s);
    }
    const auto scope = j.value("scope", std::string("atom"));
    if (scope != "atom" && scope != "frame") throw InputError("scope must be \"atom\" or \"frame\"");
    c.scope = scope == "atom" ? Scope::Atom : Scope::Frame;
    c.frame_rate = j.value("frame_rate", 30.0);
    if (!(c.frame_rate > 0.0)) throw InputError("frame_rate must be > 0");
    c.seed = j.value("seed", std::uint64_t{0});
    c.goal = j.contains("goal") ? io::goal_from_json(j.at("goal"), catalog) : Goal::universal(catalog);
    if (j.contains("inputs")) {
      const auto& in = j.at("inputs");
      c.graphs_path = in.value("graphs", std::string());
      c.scores_path = in.value("scores", std::string());
      c.features_path = in.value("features", std::string());
    }
    c.output_dir = j.value("output_dir", std::string("."));

    if (j.contains("integrator")) {
      const auto& b = j.at("integrator");
      auto& p = c.integrator.policy;
      p.default_window = b.value("default_window", std::size_t{1});
      p.default_tau = b.value("default_tau", 0.5);
      if (b.contains("window")) {
        for (const auto& [name, w] : b.at("window").items()) p.window[lookup_pattern(catalog, name)] = w.get<std::size_t>();
      }
      if (b.contains("tau")) {
        for (const auto& [name, t] : b.at("tau").items()) p.tau[lookup_pattern(catalog, name)] = t.get<double>();
      }
    }
    if (j.contains("subspace")) {
      const auto& b = j.at("subspace");
      auto& s = c.subspace;
      const auto mode = b.value("mode", std::string("windowed"));
      if (mode != "windowed" && mode != "batch") throw InputError("subspace mode must be \"windowed\" or \"batch\"");
      s.windowed = mode == "windowed";
      s.buffer = b.value("buffer", s.buffer);
      if (b.contains("lambda") && !b.at("lambda").is_string()) s.lambda = b.at("lambda").get<double>();
      s.threshold = b.value("threshold", s.threshold);
      s.reconcile = b.value("reconcile", false);
      if (b.contains("reconcile_threshold")) s.reconcile_threshold = b.at("reconcile_threshold").get<double>();
    }
    if (j.contains("ged")) {
      const auto& b = j.at("ged");
      if (b.contains("costs")) {
        if (b.at("costs").is_string()) throw InputError("cost table paths are resolved by load_config");
        c.ged.costs = ged::costs_from_json(b.at("costs"));
      }
      c.ged.threshold = b.value("threshold", c.ged.threshold);
      c.ged.streak = b.value("streak", c.ged.streak);
    }
    if (c.enabled(Stage::Ged) && c.ged.costs.size() == 0) throw InputError("ged stage needs a cost table");
    if (j.contains("hmm")) {
      const auto& b = j.at("hmm");
      if (b.contains("models")) {
        for (const auto& [name, m] : b.at("models").items()) {
          auto id = catalog.find(NodeKind::Component, name);
          if (!id) throw InputError("HMM model for unknown component class '" + name + "'");
          c.hmm.models.emplace(*id, hmm::model_from_json(m));
        }
      }
      if (b.contains("default")) c.hmm.fallback = hmm::model_from_json(b.at("default"));
    }
    if (c.enabled(Stage::Hmm) && c.hmm.models.empty() && !c.hmm.fallback) {
      throw InputError("hmm stage needs at least one model");
    }
  } catch (const json::exception& e) {
    throw InputError(std::string("bad pipeline config: ") + e.what());
  }
  return c;
}

PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw InputError(std::string("config is not valid JSON: ") + e.what());
  }
  const fs::path base = fs::path(path).parent_path();
  if (j.contains("inputs")) {
    for (const char* key : {"graphs", "scores", "features"}) {
      if (j["inputs"].contains(key)) j["inputs"][key] = resolve(base, j["inputs"][key].get<std::string>()).string();
    }
  }
  j["output_dir"] = resolve(base, j.value("output_dir", std::string("."))).string();
  if (j.contains("ged") && j["ged"].contains("costs") && j["ged"]["costs"].is_string()) {
    const auto costs_path = resolve(base, j["ged"]["costs"].get<std::string>());
    std::ifstream cin(costs_path);
    if (!cin) throw InputError("cannot open cost table " + costs_path.string());
    try {
      j["ged"]["costs"] = json::parse(cin);
    } catch (const json::exception& e) {
      throw InputError(std::string("cost table is not valid JSON: ") + e.what());
    }
  }
  std::optional<ClassCatalog> inferred;
  if (!j.contains("catalog")) {
    const auto graphs = j.contains("inputs") ? j["inputs"].value("graphs", std::string()) : std::string();
    if (graphs.empty()) throw InputError("config needs a catalog or a graph stream input");
    std::ifstream gin(graphs);
    if (!gin) throw InputError("cannot open graph stream " + graphs);
    inferred = io::infer_catalog(gin);
  }
  return config_from_json(j, inferred);
}

double message_length(const AtomicGraph& g, const ClassCatalog& catalog) {
  return 8.0 * static_cast<double>(io::canonical_string(g, catalog).size());
}

double message_length(const AttributeLevel& level) {
  return 8.0 * static_cast<double>(io::canonical_string(level).size());
}

std::string atom_key(const AtomicGraph& atom, const ClassCatalog& catalog) {
  if (atom.nodes.empty()) return "empty";
  const auto it = std::min_element(atom.nodes.begin(), atom.nodes.end());
  return node_key(*it, catalog);
}

InnovationLedger graph_ledger(const std::vector<MultiGraph>& stream, const ClassCatalog& catalog, Scope scope,
                              double frame_rate) {
  InnovationLedger ledger{catalog, static_cast<std::int64_t>(stream.size()), frame_rate, {}};
  std::map<std::string, AtomLedger> by_key;
  std::map<std::string, AtomicGraph> previous;
  const AtomicGraph empty;
  for (const auto& frame : stream) {
    auto current = banks_of(frame, catalog, scope);
    std::set<std::string> keys;
    for (const auto& [k, g] : previous) keys.insert(k);
    for (const auto& [k, g] : current) keys.insert(k);
    for (const auto& k : keys) {
      auto p = previous.find(k);
      auto c = current.find(k);
      const AtomicGraph& before = p == previous.end() ? empty : p->second;
      const AtomicGraph& after = c == current.end() ? empty : c->second;
      if (before == after) continue;
      auto& entry = by_key[k];
      entry.key = k;
      for (const auto* g : {&before, &after}) {
        for (const auto& n : g->nodes) {
          if (n.kind == NodeKind::Component) entry.components.insert(n.class_id);
        }
      }
      entry.graph.count += 1;
      entry.graph.bits += message_length(after, catalog);
    }
    previous = std::move(current);
  }
  for (auto& [k, e] : by_key) ledger.atoms.push_back(std::move(e));
  return ledger;
}

RateReport rate(const InnovationLedger& ledger, double duration, const Goal& goal) {
  if (!(duration > 0.0)) throw InputError("rate needs a positive duration");
  RateReport r;
  r.goal = goal;
  r.atoms = ledger.atoms.size();
  r.levels = ledger.catalog.attribute_levels();
  r.levels_hat = std::min(goal.max_attribute_level, r.levels);
  double total = 0.0, admitted = 0.0;
  for (const auto& atom : ledger.atoms) {
    double all = atom.graph.bits, kept = atom.graph.bits;
    for (const auto& [level, e] : atom.attributes) {
      all += e.bits;
      if (level <= goal.max_attribute_level) kept += e.bits;
    }
    total += all;
    const bool in_goal = std::any_of(atom.components.begin(), atom.components.end(),
                                     [&](std::uint32_t c) { return goal.components.contains(c); });
    if (in_goal) {
      admitted += kept;
      ++r.atoms_hat;
    }
  }
  r.R = total / duration;
  r.R_hat = admitted / duration;
  return r;
}

RateReport rate(const InnovationLedger& ledger, const Goal& goal) { return rate(ledger, ledger.duration(), goal); }

PipelineResult run(const PipelineConfig& config, const PipelineInputs& inputs) {
  PipelineResult result;
  std::vector<MultiGraph> stream = inputs.graphs;
  for (std::size_t k = 1; k < stream.size(); ++k) {
    if (stream[k].time_index <= stream[k - 1].time_index) throw InputError("graph stream time indices must increase");
  }
  std::vector<AttributeEvent> attribute_events;
  if (config.enabled(Stage::Integrator)) integrator_stage(config, inputs, stream);
  if (config.enabled(Stage::Subspace)) subspace_stage(config, inputs, stream, result, attribute_events);
  if (config.enabled(Stage::Ged)) ged_stage(config, stream, result);
  if (config.enabled(Stage::Hmm)) hmm_stage(config, stream, result);

  result.ledger = graph_ledger(stream, config.catalog, config.scope, config.frame_rate);
  std::map<std::string, AtomLedger> by_key;
  for (auto& a : result.ledger.atoms) by_key.emplace(a.key, std::move(a));
  for (const auto& ev : attribute_events) {
    auto& entry = by_key[ev.key];
    entry.key = ev.key;
    if (ev.component_class) entry.components.insert(*ev.component_class);
    auto& level = entry.attributes[ev.level];
    level.count += 1;
    level.bits += ev.bits;
  }
  result.ledger.atoms.clear();
  for (auto& [k, a] : by_key) result.ledger.atoms.push_back(std::move(a));
  if (result.ledger.frames > 0) result.report = rate(result.ledger, config.goal);
  result.output = std::move(stream);
  return result;
}

PipelineResult run_files(const PipelineConfig& config) {
  const auto& catalog = config.catalog;
  PipelineInputs inputs;
  if (config.graphs_path.empty()) throw InputError("config has no graph stream input");
  {
    std::ifstream in(config.graphs_path);
    if (!in) throw InputError("cannot open graph stream " + config.graphs_path);
    inputs.graphs = io::read_graph_stream(in, catalog);
  }
  if (!config.scores_path.empty()) {
    std::ifstream in(config.scores_path);
    if (!in) throw InputError("cannot open score stream " + config.scores_path);
    inputs.scores = formats::read_scores(in, catalog.pattern_labels());
  }
  if (!config.features_path.empty()) {
    std::ifstream in(config.features_path);
    if (!in) throw InputError("cannot open feature stream " + config.features_path);
    inputs.features = formats::read_features(in);
  }

  auto result = run(config, inputs);

  const fs::path dir(config.output_dir);
  fs::create_directories(dir);
  {
    auto out = open_out(dir / "output.jsonl");
    io::write_graph_stream(out, result.output, catalog);
  }
  open_out(dir / "ledger.json") << to_json(result.ledger).dump(2) << '\n';
  open_out(dir / "rate.json") << to_json(result.report, catalog).dump(2) << '\n';
  {
    auto out = open_out(dir / "events.jsonl");
    for (const auto& e : result.smoothing_events) {
      out << event_to_json(e, result.output[e.frame].time_index, catalog).dump() << '\n';
    }
  }
  if (config.enabled(Stage::Subspace)) {
    std::vector<formats::InnovationRow> rows;
    for (const auto& ti : result.innovation) {
      for (std::size_t k = 0; k < ti.series.mass.size(); ++k) {
        const bool peak = std::find(ti.series.peaks.begin(), ti.series.peaks.end(), k) != ti.series.peaks.end();
        rows.push_back({ti.frames[k], ti.track_id, ti.series.mass[k], peak});
      }
    }
    auto out = open_out(dir / "innovation.csv");
    formats::write_innovation(out, rows);
    if (!result.id_groups.empty()) open_out(dir / "groups.json") << json(result.id_groups).dump() << '\n';
  }
  return result;
}

json event_to_json(const ged::InnovationEvent& event, std::int64_t t, const ClassCatalog& catalog) {
  return {{"t", t},
          {"ged", std::isfinite(event.distance) ? json(event.distance) : json(nullptr)},
          {"from", io::to_json(event.from, catalog)},
          {"to", io::to_json(event.to, catalog)}};
}

json to_json(const InnovationLedger& ledger) {
  json atoms = json::array();
  for (const auto& a : ledger.atoms) {
    std::vector<std::string> names;
    for (auto c : a.components) names.push_back(ledger.catalog.name(NodeKind::Component, c));
    json levels = json::object();
    for (const auto& [l, e] : a.attributes) levels[std::to_string(l)] = level_json(e);
    atoms.push_back({{"key", a.key}, {"components", names}, {"graph", level_json(a.graph)}, {"attributes", levels}});
  }
  return {{"catalog", io::to_json(ledger.catalog)},
          {"frames", ledger.frames},
          {"frame_rate", ledger.frame_rate},
          {"atoms", atoms}};
}

InnovationLedger ledger_from_json(const json& j) {
  InnovationLedger ledger;
  try {
    ledger.catalog = io::catalog_from_json(j.at("catalog"));
    ledger.frames = j.at("frames").get<std::int64_t>();
    ledger.frame_rate = j.value("frame_rate", 30.0);
    if (ledger.frames < 0 || !(ledger.frame_rate > 0.0)) throw InputError("ledger frames/frame_rate out of range");
    for (const auto& a : j.at("atoms")) {
      AtomLedger entry;
      entry.key = a.at("key").get<std::string>();
      for (const auto& name : a.value("components", std::vector<std::string>{})) {
        auto id = ledger.catalog.find(NodeKind::Component, name);
        if (!id) throw InputError("ledger references unknown class '" + name + "'");
        entry.components.insert(*id);
      }
      entry.graph = level_from_json(a.at("graph"));
      if (a.contains("attributes")) {
        for (const auto& [l, e] : a.at("attributes").items()) {
          const auto level = static_cast<std::size_t>(std::stoul(l));
          if (level == 0) throw InputError("attribute levels start at 1");
          entry.attributes[level] = level_from_json(e);
        }
      }
      ledger.atoms.push_back(std::move(entry));
    }
  } catch (const json::exception& e) {
    throw InputError(std::string("bad ledger file: ") + e.what());
  } catch (const std::invalid_argument&) {
    throw InputError("bad ledger file: attribute level is not a number");
  }
  return ledger;
}

json to_json(const RateReport& report, const ClassCatalog& catalog) {
  return {{"R", report.R},
          {"R_hat", report.R_hat},
          {"N", report.atoms},
          {"N_hat", report.atoms_hat},
          {"L", report.levels},
          {"L_hat", report.levels_hat},
          {"goal", io::to_json(report.goal, catalog)}};
}

}  // namespace semgraph::pipeline
