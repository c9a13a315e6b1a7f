#include "ommap/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "json.hpp"
#include "ommap/checks.hpp"
#include "ommap/drift.hpp"
#include "ommap/om_functional.hpp"
#include "ommap/optimizer.hpp"
#include "ommap/sde.hpp"
#include "ommap/small_ball.hpp"

#ifndef OMMAP_VERSION
#define OMMAP_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace ommap::cli {

namespace {

const std::vector<std::string> kCommands = {"simulate", "map", "smallball", "consistency-noise",
                                            "consistency-samples", "check"};

template <class T>
void require(bool ok, const T& message) {
  if (!ok) throw ConfigError(message);
}

std::size_t step_count(const RunConfig& c) {
  const double n = std::round(c.horizon / c.dt);
  require(n >= 1.0, "horizon must cover at least one step of dt");
  require(std::abs(n * c.dt - c.horizon) <= 1e-9 * c.horizon, "horizon must be a multiple of dt");
  return static_cast<std::size_t>(n);
}

GridShape grid_of(const RunConfig& c) { return GridShape{0.0, c.dt, step_count(c)}; }

void write_text(const fs::path& file, const std::string& text) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw InvalidInput("cannot write " + file.string());
  out << text;
  if (text.empty() || text.back() != '\n') out << '\n';
}

json path_json(const GridPath& path) {
  json t = json::array(), v = json::array();
  for (std::size_t i = 0; i < path.size(); ++i) {
    t.push_back(path.shape().time(i));
    v.push_back(path[i]);
  }
  return json{{"t", t}, {"value", v}};
}

void write_path(const fs::path& dir, const std::string& stem, const GridPath& path, const std::string& format) {
  if (format == "json") {
    write_text(dir / (stem + ".json"), path_json(path).dump(2));
    return;
  }
  std::ostringstream os;
  write_csv(os, path);
  write_text(dir / (stem + ".csv"), os.str());
}

void write_observations(const fs::path& dir, const ObservationSet& obs, const RunConfig& c) {
  const ObservationMeta meta{obs.gamma, c.seed, c.drift, c.sigma};
  if (c.format == "json") {
    json j = json::parse(observation_sidecar_json(meta));
    j["t"] = obs.times;
    j["y"] = obs.values;
    write_text(dir / "observations.json", j.dump(2));
    return;
  }
  std::ostringstream os;
  write_observations_csv(os, obs);
  write_text(dir / "observations.csv", os.str());
  write_text(dir / "observations.json", observation_sidecar_json(meta));
}

void write_manifest(const fs::path& dir, const RunConfig& c) {
  json j;
  j["artifact"] = "ommap";
  j["version"] = OMMAP_VERSION;
  j["config"] = json::parse(to_json(c));
  write_text(dir / "manifest.json", j.dump(2));
}

ObservationSet simulate_observations(const RunConfig& c, const GridPath& truth) {
  Rng rng = child_stream(c.seed, "observations");
  return observe(truth, evenly_spaced_times(truth.shape(), c.n_obs), c.gamma, rng);
}

SmoothingOptions smoothing_options(const RunConfig& c) {
  SmoothingOptions opt;
  opt.n_starts = c.n_starts;
  opt.minimize.tol = c.tol;
  opt.dedup_threshold = c.dedup;
  opt.threads = c.threads;
  opt.metric = metric_from_string(c.metric);
  return opt;
}

int run_simulate(const RunConfig& c, const fs::path& dir, std::ostream& log) {
  const GridPath truth = simulate_truth(c);
  write_path(dir, "truth", truth, c.format);
  if (c.n_obs > 0) write_observations(dir, simulate_observations(c, truth), c);
  log << "simulated " << truth.size() << " nodes";
  if (c.n_obs > 0) log << " and " << c.n_obs << " observations";
  log << " into " << dir.string() << "\n";
  return 0;
}

int run_map(const RunConfig& c, const fs::path& dir, std::ostream& log) {
  const OMProblem problem = build_map_problem(c);
  if (c.problem_file.empty() && problem.variant == Variant::Smoothing) {
    write_path(dir, "truth", simulate_truth(c), c.format);
    write_observations(dir, *problem.observations, c);
  }
  const MultistartReport report = map_experiment(c, problem);
  if (c.format == "json") {
    json j = json::parse(write_report(MultistartReport{{}, report.dedup_threshold, report.n_starts}, dir));
    for (const auto& m : report.minima) {
      json e;
      e["value"] = m.value;
      e["grad_norm"] = m.grad_norm;
      e["iterations"] = m.iterations;
      e["converged"] = m.converged;
      e["start_label"] = m.start_label;
      e["path"] = path_json(m.minimizer);
      j["minima"].push_back(std::move(e));
    }
    write_text(dir / "report.json", j.dump(2));
  } else {
    write_text(dir / "report.json", write_report(report, dir));
  }
  log << report.minima.size() << " distinct minima from " << report.n_starts << " starts; best value "
      << std::setprecision(10) << report.best().value << " (" << report.best().start_label << ")\n";
  return 0;
}

Potential linear_potential(const std::vector<double>& coeffs) {
  if (coeffs.empty()) return {};
  return [coeffs](std::span<const double> x) {
    double s = 0.0;
    for (std::size_t i = 0; i < coeffs.size(); ++i) s += coeffs[i] * x[i];
    return s;
  };
}

int run_smallball(const RunConfig& c, const fs::path& dir, std::ostream& log) {
  const FiniteGaussian measure(c.prior_eigs);
  const Potential phi = linear_potential(c.potential_coeffs);
  SamplingOptions sopt;
  sopt.threads = c.threads;
  const std::vector<std::size_t> counts{c.n_samples};
  Rng rng = child_stream(c.seed, "smallball");
  const RatioTable table = om_ratio_check(measure, phi, c.z1, c.z2, c.radii, counts, rng, sopt);

  Rng brng = child_stream(c.seed, "lemma-bound");
  std::vector<LemmaBoundReport> bounds;
  for (double r : c.radii) bounds.push_back(lemma_bound_check(measure, c.z1, r, c.n_samples, brng, sopt));
  const bool bound_holds = std::all_of(bounds.begin(), bounds.end(), [](const auto& b) { return b.holds; });

  if (c.format == "json") {
    json rows = json::array();
    for (const auto& r : table.rows)
      rows.push_back({{"radius", r.radius}, {"ratio", r.ratio}, {"stderr", r.std_error},
                      {"reference", r.reference}, {"verdict", r.verdict ? "pass" : "fail"}});
    write_text(dir / "smallball_ratio.json", rows.dump(2));
    json brows = json::array();
    for (const auto& b : bounds)
      brows.push_back({{"radius", b.radius}, {"norm_z", b.norm_z}, {"ratio", b.ratio}, {"stderr", b.std_error},
                       {"bound", b.bound}, {"holds", b.holds}});
    write_text(dir / "smallball_bound.json", brows.dump(2));
  } else {
    std::ostringstream os;
    write_ratio_csv(os, table);
    write_text(dir / "smallball_ratio.csv", os.str());
    std::ostringstream bs;
    bs << std::setprecision(17) << "radius,norm_z,ratio,stderr,bound,holds\n";
    for (const auto& b : bounds)
      bs << b.radius << ',' << b.norm_z << ',' << b.ratio << ',' << b.std_error << ',' << b.bound << ','
         << (b.holds ? "true" : "false") << '\n';
    write_text(dir / "smallball_bound.csv", bs.str());
  }
  json summary;
  summary["reference"] = table.reference;
  summary["final_within_band"] = table.final_within_band;
  summary["monotone_approach"] = table.monotone_approach;
  summary["converged"] = table.converged();
  summary["bound_holds"] = bound_holds;
  write_text(dir / "smallball.json", summary.dump(2));
  log << "ratio " << table.rows.back().ratio << " vs reference " << table.reference
      << (table.converged() ? " (converged)" : " (not converged)") << "; bound "
      << (bound_holds ? "holds" : "violated") << "\n";
  return 0;
}

int run_consistency(const RunConfig& c, const fs::path& dir, std::ostream& log, bool noise) {
  const ConsistencyReport report = noise ? noise_experiment(c) : samples_experiment(c);
  const std::string stem = std::string("consistency_") + (noise ? "noise" : "samples") + "_" + std::to_string(c.seed);
  const std::string metric = noise ? "g-image-sup" : c.metric;
  json summary = json::parse(consistency_json(report, metric, config_hash(c)));
  if (c.format == "json") {
    summary["abscissa"] = report.abscissa;
    summary["errors"] = report.errors;
  } else {
    std::ostringstream os;
    write_consistency_csv(os, report);
    write_text(dir / (stem + ".csv"), os.str());
  }
  write_text(dir / (stem + ".json"), summary.dump(2));
  log << stem << ": ";
  if (report.fit)
    log << "fit c=" << report.fit->c << " alpha=" << report.fit->alpha;
  else
    log << "no fit";
  log << ", " << report.flagged.size() << " flagged\n";
  return 0;
}

int run_check(const RunConfig& c, const fs::path& dir, std::ostream& log) {
  CheckOptions opt;
  opt.threads = c.threads;
  opt.quick = c.quick;
  opt.work_dir = (dir / "check_work").string();
  json rows = json::array();
  bool all = true;
  for (int id : c.criteria.empty() ? std::vector<int>{1, 2, 3, 4, 5, 6, 7, 8, 9} : c.criteria) {
    const CheckResult r = run_checks(opt, {id}).front();
    log << format_result(r) << "\n" << std::flush;
    all = all && r.passed;
    rows.push_back({{"id", r.id}, {"name", r.name}, {"passed", r.passed}, {"detail", r.detail},
                    {"seconds", r.seconds}});
  }
  write_text(dir / "check_results.json", rows.dump(2));
  return all ? 0 : 1;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

std::vector<std::string> command_names() { return kCommands; }

void RunConfig::resolve() {
  if (command == "simulate") {
    if (gamma < 0.0) gamma = 0.1;
  } else if (command == "map") {
    if (n_obs == 0) n_obs = 5;
    if (gamma < 0.0) gamma = 0.1;
    if (n_starts == 0) n_starts = 8;
  } else if (command == "consistency-noise") {
    if (n_obs == 0) n_obs = 5;
    if (gammas.empty()) gammas = {1.0, 0.5, 0.25, 0.125, 0.0625};
    if (n_starts == 0) n_starts = 4;
  } else if (command == "consistency-samples") {
    if (j_values.empty()) j_values = {2, 4, 8, 16, 32, 64};
    if (gamma < 0.0) gamma = 1.0;
    if (n_starts == 0) n_starts = 4;
  } else if (command == "smallball") {
    if (prior_eigs.empty()) prior_eigs = {1.0};
    if (z1.empty()) {
      z1.assign(prior_eigs.size(), 0.0);
      z1[0] = 1.0;
    }
    if (z2.empty()) z2.assign(prior_eigs.size(), 0.0);
    if (radii.empty()) radii = default_radii();
    if (n_samples == 0) n_samples = 1000000;
  }
  if (gamma < 0.0) gamma = 0.0;
}

void RunConfig::validate() const {
  require(std::find(kCommands.begin(), kCommands.end(), command) != kCommands.end(),
          "unknown command '" + command + "'");
  require(format == "csv" || format == "json", "format must be csv or json");
  require(!output_dir.empty(), "output directory must be set");
  if (command == "check") {
    for (int id : criteria) require(id >= 1 && id <= 9, "criteria are numbered 1..9");
    return;
  }
  if (command == "smallball") {
    require(!prior_eigs.empty(), "prior eigenvalues required");
    for (std::size_t i = 0; i < prior_eigs.size(); ++i) {
      require(prior_eigs[i] > 0.0 && std::isfinite(prior_eigs[i]), "prior eigenvalues must be positive");
      require(i == 0 || prior_eigs[i] <= prior_eigs[i - 1], "prior eigenvalues must be non-increasing");
    }
    require(z1.size() == prior_eigs.size() && z2.size() == prior_eigs.size(),
            "centres must match the prior dimension");
    require(potential_coeffs.empty() || potential_coeffs.size() == prior_eigs.size(),
            "potential coefficients must match the prior dimension");
    require(!radii.empty(), "at least one radius required");
    for (std::size_t i = 0; i < radii.size(); ++i) {
      require(radii[i] > 0.0, "radii must be positive");
      require(i == 0 || radii[i] < radii[i - 1], "radii must be strictly decreasing");
    }
    require(n_samples >= 1, "n-samples must be positive");
    return;
  }
  require(std::isfinite(sigma) && (command == "simulate" ? sigma >= 0.0 : sigma > 0.0),
          command == "simulate" ? "sigma must be non-negative" : "sigma must be positive");
  require(dt > 0.0 && std::isfinite(dt), "dt must be positive");
  require(horizon > 0.0 && std::isfinite(horizon), "T must be positive");
  step_count(*this);
  require(std::isfinite(u_minus), "u-minus must be finite");
  require(gamma >= 0.0 && std::isfinite(gamma), "gamma must be non-negative");
  require(tol > 0.0, "tol must be positive");
  require(dedup >= 0.0, "dedup must be non-negative");
  require(metric == "sup" || metric == "l2", "metric must be sup or l2");
  try {
    drift_by_name(drift);
    variant_from_string(variant);
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  if (command == "map") {
    require(n_starts >= 1, "n-starts must be positive");
    if (problem_file.empty()) {
      const Variant v = variant_from_string(variant);
      require(v != Variant::Bridge || u_plus.has_value(), "bridge requires --u-plus");
      require(v != Variant::Smoothing || n_obs >= 1, "smoothing requires J >= 1");
    }
  }
  if (command == "consistency-noise") {
    require(n_obs >= 1, "J must be positive");
    require(gammas.size() >= 1, "at least one gamma required");
    for (std::size_t i = 0; i < gammas.size(); ++i) {
      require(gammas[i] >= 0.0, "gammas must be non-negative");
      require(i == 0 || gammas[i] < gammas[i - 1], "gammas must be strictly decreasing");
    }
  }
  if (command == "consistency-samples") {
    for (std::size_t i = 0; i < j_values.size(); ++i) {
      require(j_values[i] >= 1, "J values must be positive");
      require(i == 0 || j_values[i] > j_values[i - 1], "J values must be strictly increasing");
    }
    require(!j_values.empty(), "at least one J required");
  }
}

std::string to_json(const RunConfig& c) {
  json j;
  j["command"] = c.command;
  j["seed"] = c.seed;
  j["output_dir"] = c.output_dir;
  j["threads"] = c.threads;
  j["format"] = c.format;
  j["variant"] = c.variant;
  j["drift"] = c.drift;
  j["sigma"] = c.sigma;
  j["u_minus"] = c.u_minus;
  j["u_plus"] = c.u_plus ? json(*c.u_plus) : json(nullptr);
  j["T"] = c.horizon;
  j["dt"] = c.dt;
  j["problem_file"] = c.problem_file;
  j["J"] = c.n_obs;
  j["gamma"] = c.gamma;
  j["gammas"] = c.gammas;
  j["J_values"] = c.j_values;
  j["n_starts"] = c.n_starts;
  j["tol"] = c.tol;
  j["dedup"] = c.dedup;
  j["metric"] = c.metric;
  j["prior_eigs"] = c.prior_eigs;
  j["z1"] = c.z1;
  j["z2"] = c.z2;
  j["potential"] = c.potential_coeffs;
  j["radii"] = c.radii;
  j["n_samples"] = c.n_samples;
  j["criteria"] = c.criteria;
  j["quick"] = c.quick;
  return j.dump(2);
}

RunConfig from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  RunConfig c;
  try {
    c.command = j.at("command").get<std::string>();
    c.seed = j.value("seed", c.seed);
    c.output_dir = j.value("output_dir", c.output_dir);
    c.threads = j.value("threads", c.threads);
    c.format = j.value("format", c.format);
    c.variant = j.value("variant", c.variant);
    c.drift = j.value("drift", c.drift);
    c.sigma = j.value("sigma", c.sigma);
    c.u_minus = j.value("u_minus", c.u_minus);
    if (j.contains("u_plus") && !j["u_plus"].is_null()) c.u_plus = j["u_plus"].get<double>();
    c.horizon = j.value("T", c.horizon);
    c.dt = j.value("dt", c.dt);
    c.problem_file = j.value("problem_file", c.problem_file);
    c.n_obs = j.value("J", c.n_obs);
    c.gamma = j.value("gamma", c.gamma);
    c.gammas = j.value("gammas", c.gammas);
    c.j_values = j.value("J_values", c.j_values);
    c.n_starts = j.value("n_starts", c.n_starts);
    c.tol = j.value("tol", c.tol);
    c.dedup = j.value("dedup", c.dedup);
    c.metric = j.value("metric", c.metric);
    c.prior_eigs = j.value("prior_eigs", c.prior_eigs);
    c.z1 = j.value("z1", c.z1);
    c.z2 = j.value("z2", c.z2);
    c.potential_coeffs = j.value("potential", c.potential_coeffs);
    c.radii = j.value("radii", c.radii);
    c.n_samples = j.value("n_samples", c.n_samples);
    c.criteria = j.value("criteria", c.criteria);
    c.quick = j.value("quick", c.quick);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad config field: ") + e.what());
  }
  return c;
}

RunConfig read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read manifest " + path.string());
  std::stringstream text;
  text << in.rdbuf();
  json j;
  try {
    j = json::parse(text.str());
  } catch (const json::exception& e) {
    throw ConfigError(std::string("manifest is not valid JSON: ") + e.what());
  }
  if (!j.contains("config")) throw ConfigError("manifest has no config");
  return from_json(j["config"].dump());
}

std::string config_hash(const RunConfig& config) {
  // The output directory does not change results, so it is left out.
  RunConfig c = config;
  c.output_dir = ".";
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << fnv1a(to_json(c));
  return os.str();
}

GridPath simulate_truth(const RunConfig& c) {
  Rng rng = child_stream(c.seed, "truth");
  return euler_maruyama(drift_by_name(c.drift), c.sigma, c.u_minus, c.dt, step_count(c), rng);
}

OMProblem build_map_problem(const RunConfig& c) {
  if (!c.problem_file.empty()) {
    std::ifstream in(c.problem_file);
    if (!in) throw InvalidInput("cannot read problem file " + c.problem_file);
    std::stringstream text;
    text << in.rdbuf();
    return parse_problem_json(text.str(), fs::path(c.problem_file).parent_path());
  }
  const DriftModel model = drift_by_name(c.drift);
  switch (variant_from_string(c.variant)) {
    case Variant::Unconditioned:
      return make_unconditioned(model, c.sigma, c.u_minus, grid_of(c));
    case Variant::Bridge:
      return make_bridge(model, c.sigma, c.u_minus, *c.u_plus, grid_of(c));
    case Variant::Smoothing:
      break;
  }
  const GridPath truth = simulate_truth(c);
  return make_smoothing(model, c.sigma, c.u_minus, simulate_observations(c, truth), truth.shape());
}

MultistartReport map_experiment(const RunConfig& c, const OMProblem& problem) {
  Rng rng = child_stream(c.seed, "starts");
  const auto starts = default_starts(problem, c.n_starts, rng);
  MinimizeOptions opt;
  opt.tol = c.tol;
  return multistart(problem, starts, opt, c.dedup, c.threads);
}

ConsistencyReport noise_experiment(const RunConfig& c) {
  const GridPath truth = simulate_truth(c);
  const OMProblem tmpl = smoothing_template(drift_by_name(c.drift), c.sigma, c.u_minus, truth.shape(), c.n_obs);
  Rng rng = child_stream(c.seed, "noise-exp");
  return smoothing_small_noise(tmpl, truth, c.gammas, rng, smoothing_options(c));
}

ConsistencyReport samples_experiment(const RunConfig& c) {
  const GridPath truth = simulate_truth(c);
  const OMProblem tmpl = smoothing_template(drift_by_name(c.drift), c.sigma, c.u_minus, truth.shape(), 1);
  Rng rng = child_stream(c.seed, "samples-exp");
  return smoothing_large_sample(tmpl, truth, c.j_values, c.gamma, rng, smoothing_options(c));
}

int run(RunConfig config, std::ostream& log) {
  config.resolve();
  config.validate();
  const fs::path dir(config.output_dir);
  fs::create_directories(dir);
  write_manifest(dir, config);
  const std::string& cmd = config.command;
  if (cmd == "simulate") return run_simulate(config, dir, log);
  if (cmd == "map") return run_map(config, dir, log);
  if (cmd == "smallball") return run_smallball(config, dir, log);
  if (cmd == "consistency-noise") return run_consistency(config, dir, log, true);
  if (cmd == "consistency-samples") return run_consistency(config, dir, log, false);
  return run_check(config, dir, log);
}

int run_guarded(RunConfig config, std::ostream& log, std::ostream& err) {
  auto report = [&](const std::string& kind, const std::string& message, int status) {
    json j{{"error", kind}, {"message", message}, {"exit_status", status}};
    err << j.dump() << "\n";
    try {
      if (!config.output_dir.empty() && fs::is_directory(config.output_dir))
        write_text(fs::path(config.output_dir) / "error.json", j.dump(2));
    } catch (...) {
    }
    return status;
  };
  try {
    return run(config, log);
  } catch (const ConfigError& e) {
    return report(e.kind(), e.what(), 2);
  } catch (const Error& e) {
    return report(e.kind(), e.what(), 1);
  } catch (const std::exception& e) {
    return report("internal", e.what(), 1);
  }
}

}  // namespace ommap::cli
