// semgraph command-line front end. Exit codes: 0 success, 2 input error,
// 3 stage or numerical failure.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <memory>

#include "semgraph/confusion.hpp"
#include "semgraph/errors.hpp"
#include "semgraph/formats.hpp"
#include "semgraph/ged.hpp"
#include "semgraph/graph_io.hpp"
#include "semgraph/hmm.hpp"
#include "semgraph/integrator.hpp"
#include "semgraph/pipeline.hpp"
#include "semgraph/simkit.hpp"
#include "semgraph/subspace.hpp"

using namespace semgraph;
using nlohmann::json;

namespace {

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  return in;
}

json read_json(const std::string& path) {
  auto in = open_in(path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw InputError(path + ": " + e.what());
  }
}

// Writes to `path`, or stdout for "" and "-".
class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty() && path != "-") {
      file_ = std::make_unique<std::ofstream>(path);
      if (!*file_) throw InputError("cannot write " + path);
    }
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

std::vector<confusion::Sample> read_samples(const std::string& path) {
  auto in = open_in(path);
  std::vector<confusion::Sample> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      out.push_back(confusion::sample_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw InputError(path + ": " + e.what());
    }
  }
  return out;
}

simkit::ExtractorModel extractor_from_json(const json& j) {
  simkit::ExtractorModel m;
  m.labels = j.at("labels").get<std::vector<std::string>>();
  for (const auto& p : j.at("patterns")) {
    integrator::ScoreModel s{p.at("mu0"), p.at("sigma0"), p.at("mu1"), p.at("sigma1"), p.value("rho", 0.0)};
    integrator::check(s);
    m.patterns.push_back(s);
  }
  if (m.labels.size() != m.patterns.size()) throw InputError("extractor labels and patterns differ in length");
  return m;
}

json to_json(const simkit::ExtractorModel& m) {
  json patterns = json::array();
  for (const auto& p : m.patterns) {
    patterns.push_back({{"mu0", p.mu0}, {"sigma0", p.sigma0}, {"mu1", p.mu1}, {"sigma1", p.sigma1}, {"rho", p.rho}});
  }
  return {{"labels", m.labels}, {"patterns", patterns}};
}

// Scenario file: {"catalog", "frames", "mode": "per_node"|"frame_gated",
// "error_rate", "script": [{"frame", "graph"}]} or, instead of "script",
// "random_script": {"transitions", "min_gap"}.
simkit::ScenarioSpec scenario_from_json(const json& j, std::uint64_t seed) {
  simkit::ScenarioSpec s;
  s.catalog = io::catalog_from_json(j.at("catalog"));
  s.frames = j.at("frames").get<std::int64_t>();
  const auto mode = j.value("mode", std::string("per_node"));
  if (mode != "per_node" && mode != "frame_gated") throw InputError("mode must be per_node or frame_gated");
  s.mode = mode == "per_node" ? simkit::NoiseMode::PerNode : simkit::NoiseMode::FrameGated;
  s.error_rate = j.value("error_rate", 0.0);
  s.seed = seed;
  if (j.contains("script")) {
    for (const auto& e : j.at("script")) {
      s.script.push_back({e.at("frame").get<std::int64_t>(), io::atomic_from_json(e.at("graph"), s.catalog)});
    }
  } else if (j.contains("random_script")) {
    const auto& r = j.at("random_script");
    s.script = simkit::gen_script(s.catalog, s.frames, r.at("transitions").get<std::size_t>(),
                                  r.value("min_gap", std::int64_t{100}), seed);
  }
  return s;
}

void write_stream(const std::string& path, const std::vector<MultiGraph>& stream, const ClassCatalog& catalog) {
  Output out(path);
  io::write_graph_stream(out.stream(), stream, catalog);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semantic graph signal processing toolkit"};
  app.require_subcommand(1);

  // sim
  auto* sim = app.add_subcommand("sim", "Generate synthetic extractors, timelines, scores and graph streams");
  sim->require_subcommand(1);
  std::uint64_t seed = 42;
  std::string out_path;
  std::size_t k = 5, frames = 1000, n_samples = 10000;
  double separability = 1.5, rho = 0.0, dwell_on = 50.0, dwell_off = 50.0;
  std::string extractor_path, timeline_path, scenario_path, cm_path, truth_path;

  auto* sim_ext = sim->add_subcommand("extractor", "Random extractor model (JSON)");
  sim_ext->add_option("--k", k, "Number of patterns");
  sim_ext->add_option("--separability", separability, "Detection margin in units of sigma");
  sim_ext->add_option("--rho", rho, "AR(1) score correlation");
  auto* sim_tl = sim->add_subcommand("timeline", "Ground-truth presence timeline (CSV)");
  sim_tl->add_option("--k", k, "Number of patterns");
  sim_tl->add_option("--frames", frames, "Timeline length");
  sim_tl->add_option("--dwell-on", dwell_on, "Mean on-dwell in frames");
  sim_tl->add_option("--dwell-off", dwell_off, "Mean off-dwell in frames");
  auto* sim_sc = sim->add_subcommand("scores", "Score stream from a timeline and an extractor (CSV)");
  sim_sc->add_option("--extractor", extractor_path, "Extractor JSON")->required();
  sim_sc->add_option("--timeline", timeline_path, "Timeline CSV")->required();
  auto* sim_samples = sim->add_subcommand("samples", "IID labelled score vectors (JSONL)");
  sim_samples->add_option("--extractor", extractor_path, "Extractor JSON")->required();
  sim_samples->add_option("--n", n_samples, "Number of samples");
  auto* sim_gr = sim->add_subcommand("graphs", "Observed graph stream for a scenario (JSONL)");
  sim_gr->add_option("--scenario", scenario_path, "Scenario JSON")->required();
  sim_gr->add_option("--cm", cm_path, "Confusion matrix JSON over the scenario catalog")->required();
  sim_gr->add_option("--truth", truth_path, "Also write the ground-truth stream here");
  for (auto* c : {sim_ext, sim_tl, sim_sc, sim_samples, sim_gr}) {
    c->add_option("--seed", seed, "Random seed");
    c->add_option("--out", out_path, "Output file (stdout when omitted)");
  }

  // cm
  auto* cm_cmd = app.add_subcommand("cm", "Confusion matrices and ROC curves");
  cm_cmd->require_subcommand(1);
  double tau = 0.5;
  std::string in_path, taus = "0.05:0.95:0.05";
  auto* cm_est = cm_cmd->add_subcommand("estimate", "Confusion matrix at one threshold");
  cm_est->add_option("--tau", tau, "Detection threshold");
  auto* cm_roc = cm_cmd->add_subcommand("roc", "Per-pattern ROC as CSV (pattern,tau,fpr,tpr)");
  cm_roc->add_option("--taus", taus, "Threshold grid start:stop:step");
  for (auto* c : {cm_est, cm_roc}) {
    c->add_option("--in", in_path, "Samples JSONL")->required();
    c->add_option("--out", out_path, "Output file");
  }

  // integrate / tune
  std::size_t window = 1, max_window = 5;
  auto* integ = app.add_subcommand("integrate", "Causal moving-average integration and detection");
  integ->add_option("--window", window, "Window length T");
  integ->add_option("--tau", tau, "Detection threshold");
  integ->add_option("--in", in_path, "Score CSV")->required();
  integ->add_option("--out", out_path, "Detections CSV");
  double mu0 = 0.2, sigma0 = 0.1, mu1 = 0.8, sigma1 = 0.1, target_fpr = 0.1;
  auto* tune = app.add_subcommand("tune", "Best window for a Gaussian score model (CSV T,tau,tpr)");
  tune->add_option("--mu0", mu0);
  tune->add_option("--sigma0", sigma0);
  tune->add_option("--mu1", mu1);
  tune->add_option("--sigma1", sigma1);
  tune->add_option("--rho", rho);
  tune->add_option("--fpr", target_fpr, "Target false-positive rate");
  tune->add_option("--max-window", max_window);
  tune->add_option("--out", out_path);

  // pcp / reconcile
  std::size_t buffer = 32;
  std::string lambda_opt = "auto";
  double threshold = 2.0;
  bool batch = false;
  auto* pcp_cmd = app.add_subcommand("pcp", "Attribute innovation per track (innovation CSV)");
  pcp_cmd->add_option("--buffer", buffer, "Sliding buffer length");
  pcp_cmd->add_option("--lambda", lambda_opt, "Sparsity weight or 'auto'");
  pcp_cmd->add_option("--threshold", threshold, "Peak threshold on the l1 mass");
  pcp_cmd->add_flag("--batch", batch, "Decompose each whole track once instead of a sliding buffer");
  pcp_cmd->add_option("--in", in_path, "Feature CSV")->required();
  pcp_cmd->add_option("--out", out_path, "Innovation CSV");
  std::optional<double> split;
  auto* rec = app.add_subcommand("reconcile", "Group fragmented track ids (JSON)");
  rec->add_option("--threshold", split, "Absolute distance split (Otsu when omitted)");
  rec->add_option("--in", in_path, "Feature CSV")->required();
  rec->add_option("--out", out_path, "Output JSON");

  // costs / ged
  std::string prevalence_path, kinds_spec, costs_path;
  auto* costs = app.add_subcommand("costs", "Edit cost table from a confusion matrix");
  costs->add_option("--cm", cm_path, "Confusion matrix JSON")->required();
  costs->add_option("--prevalence", prevalence_path, "JSON array of prevalences (posterior costs)");
  costs->add_option("--kinds", kinds_spec, "String of c/p per pattern (default all c)");
  costs->add_option("--out", out_path);
  std::size_t streak = 5;
  double ged_threshold = 0.2;
  auto* ged_cmd = app.add_subcommand("ged", "Baseline-update smoothing of a graph stream (events JSONL)");
  ged_cmd->add_option("--costs", costs_path, "Edit cost table JSON")->required();
  ged_cmd->add_option("--threshold", ged_threshold, "GED significance threshold");
  ged_cmd->add_option("--streak", streak, "Consecutive detections required for a new baseline");
  ged_cmd->add_option("--in", in_path, "Graph stream JSONL")->required();
  ged_cmd->add_option("--out", out_path, "Events JSONL");
  std::string smoothed_path;
  ged_cmd->add_option("--smoothed", smoothed_path, "Also write the smoothed stream here");

  // viterbi / fit
  std::string model_path;
  std::size_t beam = 0, iters = 50;
  double tol = 1e-6;
  auto* vit = app.add_subcommand("viterbi", "Most likely state sequence (CSV t,value)");
  vit->add_option("--model", model_path, "Model JSON")->required();
  vit->add_option("--in", in_path, "Observation CSV")->required();
  vit->add_option("--beam", beam, "Keep only the M best states per step (M-algorithm)");
  vit->add_option("--out", out_path);
  auto* fit = app.add_subcommand("fit", "Baum-Welch estimation (model JSON)");
  fit->add_option("--init", model_path, "Initial model JSON")->required();
  fit->add_option("--in", in_path, "Observation CSV")->required();
  fit->add_option("--iters", iters, "Maximum EM iterations");
  fit->add_option("--tol", tol, "Relative log-likelihood tolerance");
  fit->add_option("--out", out_path);

  // run / rate
  std::string config_path, ledger_path, goal_path;
  auto* run = app.add_subcommand("run", "Run the configured pipeline");
  run->add_option("--config", config_path, "Pipeline config JSON")->required();
  auto* rate = app.add_subcommand("rate", "Innovation rate R and goal-filtered R-hat");
  rate->add_option("--ledger", ledger_path, "Ledger JSON")->required();
  rate->add_option("--goal", goal_path, "Goal JSON (universal when omitted)");
  rate->add_option("--out", out_path);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (sim_ext->parsed()) {
      Output(out_path).stream() << to_json(simkit::gen_extractor(k, separability, rho, seed)).dump(2) << '\n';
    } else if (sim_tl->parsed()) {
      const auto tl = simkit::gen_timeline(k, frames, dwell_on, dwell_off, seed);
      std::vector<std::string> labels;
      for (std::size_t i = 0; i < k; ++i) labels.push_back("p" + std::to_string(i));
      Output out(out_path);
      formats::write_timeline(out.stream(), tl, labels);
    } else if (sim_sc->parsed()) {
      const auto model = extractor_from_json(read_json(extractor_path));
      auto tin = open_in(timeline_path);
      const auto scores = simkit::emit_scores(formats::read_timeline(tin), model, seed);
      Output out(out_path);
      formats::write_scores(out.stream(), scores, model.labels);
    } else if (sim_samples->parsed()) {
      const auto model = extractor_from_json(read_json(extractor_path));
      Output out(out_path);
      for (const auto& s : simkit::draw_samples(model, n_samples, {}, seed)) {
        out.stream() << confusion::to_json(s).dump() << '\n';
      }
    } else if (sim_gr->parsed()) {
      const auto scenario = scenario_from_json(read_json(scenario_path), seed);
      const auto streams = simkit::emit_graph_stream(scenario, confusion::cm_from_json(read_json(cm_path)));
      write_stream(out_path, streams.observed, scenario.catalog);
      if (!truth_path.empty()) write_stream(truth_path, streams.truth, scenario.catalog);
    } else if (cm_est->parsed()) {
      const auto samples = read_samples(in_path);
      Output(out_path).stream() << confusion::to_json(confusion::estimate_cm(samples, tau)).dump(2) << '\n';
    } else if (cm_roc->parsed()) {
      const auto samples = read_samples(in_path);
      const auto grid = confusion::parse_tau_grid(taus);
      const auto curves = confusion::roc_sweep(samples, grid);
      Output out(out_path);
      out.stream() << "pattern,tau,fpr,tpr\n";
      for (std::size_t i = 0; i < curves.size(); ++i) {
        for (const auto& p : curves[i].points) out.stream() << i << ',' << p.tau << ',' << p.fpr << ',' << p.tpr << '\n';
      }
    } else if (integ->parsed()) {
      auto in = open_in(in_path);
      const auto streams = formats::read_scores(in, {});
      std::vector<integrator::ScoreStream> integrated;
      std::vector<std::vector<bool>> detected;
      for (const auto& s : streams) {
        integrated.push_back(integrator::integrate(s, window));
        detected.push_back(integrator::detect(integrated.back(), tau));
      }
      Output out(out_path);
      formats::write_detections(out.stream(), integrated, detected, {});
    } else if (tune->parsed()) {
      const auto result = integrator::tune_window({mu0, sigma0, mu1, sigma1, rho}, target_fpr, max_window);
      Output out(out_path);
      out.stream() << "T,tau,tpr\n";
      for (const auto& r : result.table) out.stream() << r.window << ',' << r.tau << ',' << r.tpr << '\n';
    } else if (pcp_cmd->parsed()) {
      auto in = open_in(in_path);
      const auto tracks = formats::read_features(in);
      std::optional<double> lambda;
      if (lambda_opt != "auto") lambda = std::stod(lambda_opt);
      std::vector<formats::InnovationRow> rows;
      for (const auto& [id, w] : tracks) {
        subspace::InnovationSeries series;
        if (batch) {
          subspace::PcpOptions o;
          o.lambda = lambda;
          series = subspace::innovation(subspace::pcp(w.data, o), threshold);
        } else {
          subspace::WindowedOptions o;
          o.lambda = lambda;
          series = subspace::windowed_innovation(w.data, buffer, threshold, o);
        }
        for (std::size_t r = 0; r < series.mass.size(); ++r) {
          const bool peak = std::find(series.peaks.begin(), series.peaks.end(), r) != series.peaks.end();
          rows.push_back({w.frame_ids[r], id, series.mass[r], peak});
        }
      }
      Output out(out_path);
      formats::write_innovation(out.stream(), rows);
    } else if (rec->parsed()) {
      auto in = open_in(in_path);
      subspace::ReconcileOptions o;
      o.threshold = split;
      const auto result = subspace::reconcile(formats::read_features(in), o);
      json distances = json::array();
      for (const auto& [pair, d] : result.distances) distances.push_back({pair.first, pair.second, d});
      Output(out_path).stream() << json{{"groups", result.groups},
                                        {"excluded", result.excluded},
                                        {"threshold", result.threshold},
                                        {"distances", distances}}
                                       .dump(2)
                                << '\n';
    } else if (costs->parsed()) {
      const auto cm = confusion::cm_from_json(read_json(cm_path));
      std::optional<std::vector<double>> prevalence;
      if (!prevalence_path.empty()) prevalence = read_json(prevalence_path).get<std::vector<double>>();
      std::vector<NodeKind> kinds;
      for (char c : kinds_spec) {
        if (c != 'c' && c != 'p') throw InputError("--kinds takes a string of c and p");
        kinds.push_back(c == 'c' ? NodeKind::Component : NodeKind::Predicate);
      }
      Output(out_path).stream() << ged::to_json(ged::build_costs(cm, prevalence, kinds)).dump(2) << '\n';
    } else if (ged_cmd->parsed()) {
      const auto table = ged::costs_from_json(read_json(costs_path));
      const auto catalog = ged::catalog_of(table);
      auto in = open_in(in_path);
      const auto stream = io::read_graph_stream(in, catalog);
      std::vector<AtomicGraph> frames_in;
      for (const auto& mg : stream) frames_in.push_back(flatten(mg));
      const auto result = ged::smooth(frames_in, table, ged_threshold, streak);
      Output out(out_path);
      for (const auto& e : result.events) {
        out.stream() << pipeline::event_to_json(e, stream[e.frame].time_index, catalog).dump() << '\n';
      }
      if (!smoothed_path.empty()) {
        std::vector<MultiGraph> smoothed;
        for (std::size_t i = 0; i < stream.size(); ++i) {
          smoothed.push_back(split_atoms(stream[i].time_index, result.output[i]));
        }
        write_stream(smoothed_path, smoothed, catalog);
      }
    } else if (vit->parsed()) {
      const auto model = hmm::model_from_json(read_json(model_path));
      auto in = open_in(in_path);
      const auto obs = formats::read_sequence(in);
      const auto decoded = beam ? hmm::m_viterbi(model, obs, beam) : hmm::viterbi(model, obs);
      Output out(out_path);
      formats::write_sequence(out.stream(), decoded.states);
    } else if (fit->parsed()) {
      const auto init = hmm::model_from_json(read_json(model_path));
      auto in = open_in(in_path);
      const auto result = hmm::baum_welch(formats::read_sequence(in), init, iters, tol);
      auto j = hmm::to_json(result.model);
      j["log_likelihood"] = result.log_likelihood;
      j["iterations"] = result.iterations;
      j["converged"] = result.converged;
      Output(out_path).stream() << j.dump(2) << '\n';
    } else if (run->parsed()) {
      const auto config = pipeline::load_config(config_path);
      const auto result = pipeline::run_files(config);
      std::cout << pipeline::to_json(result.report, config.catalog).dump(2) << '\n';
    } else if (rate->parsed()) {
      const auto ledger = pipeline::ledger_from_json(read_json(ledger_path));
      const Goal goal =
          goal_path.empty() ? Goal::universal(ledger.catalog) : io::goal_from_json(read_json(goal_path), ledger.catalog);
      Output(out_path).stream() << pipeline::to_json(pipeline::rate(ledger, goal), ledger.catalog).dump(2) << '\n';
    }
  } catch (const StageFailure& e) {
    std::cerr << "semgraph: " << e.what() << '\n';
    return 3;
  } catch (const DecodeFailure& e) {
    std::cerr << "semgraph: decode failure: " << e.what() << '\n';
    return 3;
  } catch (const EstimationFailure& e) {
    std::cerr << "semgraph: estimation failure: " << e.what() << '\n';
    return 3;
  } catch (const InputError& e) {
    std::cerr << "semgraph: " << e.what() << '\n';
    return 2;
  } catch (const json::exception& e) {
    std::cerr << "semgraph: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "semgraph: bad argument: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
