#include "semgraph/simkit.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "semgraph/errors.hpp"

namespace semgraph::simkit {

namespace {

using Rng = std::mt19937_64;

double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

double clip01(double x) { return std::clamp(x, 0.0, 1.0); }

// Outcome distributions for one pattern's confusion-matrix row: index j for
// "detected as j", index K for a miss.
struct RowSampler {
  bool informative = false;
  std::discrete_distribution<std::size_t> any;
  std::discrete_distribution<std::size_t> error;  // diagonal removed
  bool can_err = false;
};

std::vector<RowSampler> row_samplers(const ClassCatalog& catalog, const confusion::ConfusionMatrix& cm) {
  const std::size_t k = cm.size();
  std::vector<RowSampler> out(k);
  for (std::size_t i = 0; i < k; ++i) {
    if (cm.pattern_total(i) == 0) continue;
    std::vector<double> w(k + 1, 0.0);
    std::int64_t detected = 0;
    for (std::size_t j = 0; j < k; ++j) {
      detected += cm.count(i, j);
      if (catalog.pattern_kind(j) == catalog.pattern_kind(i)) w[j] = static_cast<double>(cm.count(i, j));
    }
    w[k] = static_cast<double>(cm.pattern_total(i) - detected);
    if (std::all_of(w.begin(), w.end(), [](double v) { return v == 0.0; })) continue;
    out[i].informative = true;
    out[i].any = std::discrete_distribution<std::size_t>(w.begin(), w.end());
    w[i] = 0.0;
    out[i].can_err = std::any_of(w.begin(), w.end(), [](double v) { return v > 0.0; });
    if (out[i].can_err) out[i].error = std::discrete_distribution<std::size_t>(w.begin(), w.end());
  }
  return out;
}

// Applies one outcome to node `n` of `g`; `outcome` == K means a miss.
void apply_outcome(AtomicGraph& g, const NodeRef& n, std::size_t outcome, const ClassCatalog& catalog) {
  const std::size_t k = catalog.pattern_count();
  if (outcome == k) {
    std::vector<NodeRef> dropped{n};
    if (n.kind == NodeKind::Component) {
      for (const auto& e : g.edges) {
        if (e.a == n && e.b.kind == NodeKind::Predicate) dropped.push_back(e.b);
        if (e.b == n && e.a.kind == NodeKind::Predicate) dropped.push_back(e.a);
      }
    }
    auto gone = [&](const NodeRef& x) { return std::find(dropped.begin(), dropped.end(), x) != dropped.end(); };
    std::erase_if(g.nodes, gone);
    std::erase_if(g.edges, [&](const Edge& e) { return gone(e.a) || gone(e.b); });
    for (const auto& d : dropped) g.attributes.erase(d);
    return;
  }
  const NodeRef to{n.kind, catalog.pattern_class(outcome), n.instance_id};
  if (to == n) return;
  for (auto& x : g.nodes) {
    if (x == n) x = to;
  }
  for (auto& e : g.edges) {
    if (e.a == n) e.a = to;
    if (e.b == n) e.b = to;
  }
  if (auto it = g.attributes.find(n); it != g.attributes.end()) {
    auto attrs = std::move(it->second);
    g.attributes.erase(it);
    g.attributes[to] = std::move(attrs);
  }
}

}  // namespace

ExtractorModel gen_extractor(std::size_t k, double separability, double rho, std::uint64_t seed) {
  if (k < 2) throw InputError("an extractor needs at least two patterns");
  if (!(separability > 0.0)) throw InputError("separability must be > 0");
  if (!(rho >= 0.0 && rho <= 1.0)) throw InputError("rho must lie in [0, 1]");
  Rng rng(seed);
  ExtractorModel out;
  for (std::size_t i = 0; i < k; ++i) {
    integrator::ScoreModel m;
    m.mu0 = uniform(rng, 0.1, 0.3);
    m.mu1 = uniform(rng, 0.7, 0.9);
    const double base = (m.mu1 - m.mu0) / (2.0 * separability);
    m.sigma0 = base * uniform(rng, 0.8, 1.2);
    m.sigma1 = base * uniform(rng, 0.8, 1.2);
    m.rho = rho;
    out.labels.push_back("p" + std::to_string(i));
    out.patterns.push_back(m);
  }
  return out;
}

std::vector<confusion::Sample> draw_samples(const ExtractorModel& model, std::size_t n,
                                            const std::vector<double>& prevalence, std::uint64_t seed) {
  const std::size_t k = model.size();
  if (k < 2) throw InputError("an extractor needs at least two patterns");
  std::vector<double> weights = prevalence.empty() ? std::vector<double>(k, 1.0) : prevalence;
  if (weights.size() != k) throw InputError("prevalence length does not match the extractor");
  Rng rng(seed);
  std::discrete_distribution<std::size_t> truth(weights.begin(), weights.end());
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<confusion::Sample> out(n);
  for (auto& s : out) {
    s.truth = truth(rng);
    s.scores.resize(k);
    for (std::size_t j = 0; j < k; ++j) {
      const auto& m = model.patterns[j];
      const double z = gauss(rng);
      s.scores[j] = clip01(j == s.truth ? m.mu1 + m.sigma1 * z : m.mu0 + m.sigma0 * z);
    }
  }
  return out;
}

Timeline gen_timeline(std::size_t k, std::size_t frames, double dwell_on, double dwell_off, std::uint64_t seed) {
  if (frames == 0) throw InputError("a timeline needs at least one frame");
  if (!(dwell_on >= 1.0) || !(dwell_off >= 1.0)) throw InputError("dwell means must be >= 1");
  Rng rng(seed);
  Timeline out{frames, {}, dwell_on, dwell_off};
  auto dwell = [&rng, frames](double mean) -> std::size_t {
    if (std::isinf(mean)) return frames;
    if (mean == 1.0) return 1;
    return std::geometric_distribution<std::size_t>(1.0 / mean)(rng) + 1;
  };
  for (std::size_t i = 0; i < k; ++i) {
    std::vector<bool> track;
    track.reserve(frames);
    bool on = false;
    while (track.size() < frames) {
      const std::size_t len = std::min(dwell(on ? dwell_on : dwell_off), frames - track.size());
      track.insert(track.end(), len, on);
      on = !on;
    }
    out.present.push_back(std::move(track));
  }
  return out;
}

std::vector<std::size_t> dwell_lengths(const std::vector<bool>& track, bool value) {
  std::vector<std::size_t> out;
  std::size_t run = 0;
  for (bool v : track) {
    if (v == value) {
      ++run;
    } else if (run > 0) {
      out.push_back(run);
      run = 0;
    }
  }
  return out;
}

std::vector<integrator::ScoreStream> emit_scores(const Timeline& timeline, const ExtractorModel& model,
                                                 std::uint64_t seed) {
  if (timeline.present.size() != model.size()) throw InputError("timeline and extractor differ in pattern count");
  for (const auto& m : model.patterns) integrator::check(m);
  Rng rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<integrator::ScoreStream> out;
  for (std::size_t i = 0; i < model.size(); ++i) {
    const auto& m = model.patterns[i];
    const double innovation = std::sqrt(std::max(0.0, 1.0 - m.rho * m.rho));
    integrator::ScoreStream s{i, {}};
    s.frames.reserve(timeline.frames);
    double z = gauss(rng);
    for (std::size_t t = 0; t < timeline.frames; ++t) {
      if (t > 0) z = m.rho * z + innovation * gauss(rng);
      const bool on = timeline.present[i][t];
      const double score = on ? m.mu1 + m.sigma1 * z : m.mu0 + m.sigma0 * z;
      s.frames.push_back({static_cast<std::int64_t>(t), clip01(score)});
    }
    out.push_back(std::move(s));
  }
  return out;
}

GraphStreams emit_graph_stream(const ScenarioSpec& scenario, const confusion::ConfusionMatrix& cm) {
  const auto& catalog = scenario.catalog;
  if (catalog.pattern_count() != cm.size()) throw InputError("catalog and confusion matrix differ in size");
  if (scenario.frames < 0) throw InputError("frame count must be >= 0");
  if (!(scenario.error_rate >= 0.0 && scenario.error_rate <= 1.0)) throw InputError("error rate must lie in [0, 1]");
  for (std::size_t s = 0; s < scenario.script.size(); ++s) {
    const auto f = scenario.script[s].frame;
    if (f < 0 || f >= scenario.frames) throw InputError("script frame outside the scenario");
    if (s > 0 && f <= scenario.script[s - 1].frame) throw InputError("script frames must be increasing");
  }

  auto samplers = row_samplers(catalog, cm);
  Rng rng(scenario.seed);
  std::bernoulli_distribution gate(scenario.error_rate);
  GraphStreams out;
  std::size_t next = 0;
  AtomicGraph truth;
  for (std::int64_t t = 0; t < scenario.frames; ++t) {
    if (next < scenario.script.size() && scenario.script[next].frame == t) {
      truth = canonical(scenario.script[next].graph);
      ++next;
    }
    out.truth.push_back(split_atoms(t, truth.nodes, truth.edges, truth.attributes));

    AtomicGraph seen = truth;
    if (scenario.mode == NoiseMode::PerNode) {
      for (const auto& n : truth.nodes) {
        if (!seen.contains(n)) continue;  // dropped with a missed component
        auto& row = samplers[catalog.pattern_index(n.kind, n.class_id)];
        if (row.informative) apply_outcome(seen, n, row.any(rng), catalog);
      }
    } else if (gate(rng) && !truth.empty()) {
      const auto& n = truth.nodes[std::uniform_int_distribution<std::size_t>(0, truth.nodes.size() - 1)(rng)];
      auto& row = samplers[catalog.pattern_index(n.kind, n.class_id)];
      if (row.can_err) apply_outcome(seen, n, row.error(rng), catalog);
    }
    seen = canonical(std::move(seen));
    out.observed.push_back(split_atoms(t, seen.nodes, seen.edges, seen.attributes));
  }
  return out;
}

std::vector<ScriptEntry> gen_script(const ClassCatalog& catalog, std::int64_t frames, std::size_t transitions,
                                    std::int64_t min_gap, std::uint64_t seed) {
  if (min_gap < 1) throw InputError("minimum gap must be >= 1");
  const auto n = static_cast<std::int64_t>(transitions);
  const std::int64_t slack = frames - (n + 1) * min_gap;
  if (slack < 0) throw InputError("too many transitions for the scenario length");
  Rng rng(seed);
  std::vector<std::int64_t> offsets(transitions);
  for (auto& o : offsets) o = std::uniform_int_distribution<std::int64_t>(0, slack)(rng);
  std::sort(offsets.begin(), offsets.end());

  std::vector<ScriptEntry> out;
  AtomicGraph g;
  std::uint32_t next_component = 1, next_predicate = 1;
  auto pick = [&rng](std::size_t size) { return std::uniform_int_distribution<std::size_t>(0, size - 1)(rng); };
  for (std::int64_t s = 0; s < n; ++s) {
    std::vector<NodeRef> comps, preds;
    for (const auto& x : g.nodes) (x.kind == NodeKind::Component ? comps : preds).push_back(x);
    std::vector<int> ops{0};  // add a component
    if (comps.size() >= 2) ops.push_back(1);  // remove a component
    if (comps.size() >= 2) ops.push_back(2);  // attach a predicate
    if (!preds.empty()) ops.push_back(3);     // detach a predicate
    switch (ops[pick(ops.size())]) {
      case 0:
        g.nodes.push_back(component(static_cast<std::uint32_t>(pick(catalog.size(NodeKind::Component))),
                                    next_component++));
        break;
      case 1: {
        const NodeRef victim = comps[pick(comps.size())];
        std::vector<NodeRef> gone{victim};
        for (const auto& e : g.edges) {
          if (e.a == victim) gone.push_back(e.b);
          if (e.b == victim) gone.push_back(e.a);
        }
        auto dead = [&](const NodeRef& x) { return std::find(gone.begin(), gone.end(), x) != gone.end(); };
        std::erase_if(g.nodes, dead);
        std::erase_if(g.edges, [&](const Edge& e) { return dead(e.a) || dead(e.b); });
        break;
      }
      case 2: {
        const std::size_t a = pick(comps.size());
        std::size_t b = pick(comps.size() - 1);
        if (b >= a) ++b;
        const NodeRef p = predicate(static_cast<std::uint32_t>(pick(catalog.size(NodeKind::Predicate))),
                                    next_predicate++);
        g.nodes.push_back(p);
        g.edges.push_back({comps[a], p});
        g.edges.push_back({comps[b], p});
        break;
      }
      default: {
        const NodeRef victim = preds[pick(preds.size())];
        std::erase(g.nodes, victim);
        std::erase_if(g.edges, [&](const Edge& e) { return e.a == victim || e.b == victim; });
        break;
      }
    }
    g = canonical(std::move(g));
    out.push_back({(s + 1) * min_gap + offsets[static_cast<std::size_t>(s)], g});
  }
  return out;
}

std::map<std::int64_t, subspace::FeatureWindow> gen_identity_tracks(const IdentityTrackSpec& spec,
                                                                   std::uint64_t seed) {
  if (spec.dim == 0 || spec.rank == 0 || spec.rank > spec.dim) throw InputError("invalid track dimensions");
  if (spec.frames_per_track == 0) throw InputError("tracks need at least one frame");
  Rng rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::bernoulli_distribution spike(spec.spike_rate);
  const auto d = static_cast<Eigen::Index>(spec.dim);
  const auto r = static_cast<Eigen::Index>(spec.rank);
  auto random_matrix = [&](Eigen::Index rows, Eigen::Index cols) {
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
      for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = gauss(rng);
    }
    return m;
  };

  std::map<std::int64_t, subspace::FeatureWindow> out;
  std::int64_t frame = 0;
  for (const auto& ids : spec.identities) {
    const Eigen::VectorXd mean = random_matrix(d, 1).cwiseAbs().col(0).normalized();
    const Eigen::MatrixXd basis = Eigen::HouseholderQR<Eigen::MatrixXd>(random_matrix(d, r)).householderQ() *
                                  Eigen::MatrixXd::Identity(d, r);
    for (auto id : ids) {
      if (out.contains(id)) throw InputError("track id assigned to two identities");
      subspace::FeatureWindow w;
      w.track_id = id;
      w.data.resize(static_cast<Eigen::Index>(spec.frames_per_track), d);
      for (std::size_t t = 0; t < spec.frames_per_track; ++t) {
        Eigen::VectorXd row = mean + basis * (0.15 * random_matrix(r, 1).col(0));
        for (Eigen::Index c = 0; c < d; ++c) {
          row(c) += spec.noise * gauss(rng);
          if (spike(rng)) row(c) += gauss(rng) > 0 ? 0.5 : -0.5;
        }
        w.data.row(static_cast<Eigen::Index>(t)) = row.normalized().transpose();
        w.frame_ids.push_back(frame++);
      }
      out.emplace(id, std::move(w));
    }
  }
  return out;
}

}  // namespace semgraph::simkit
