// Command-line front end: parses flags into a RunConfig (or loads one from a
// manifest) and hands it to ommap::cli::run_guarded.
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "ommap/cli.hpp"

using ommap::cli::RunConfig;

namespace {

void add_model_flags(CLI::App* sub, RunConfig& c, bool with_u_minus = true) {
  sub->add_option("--drift", c.drift, "drift model: double-well, ou, zero")->capture_default_str();
  sub->add_option("--sigma", c.sigma, "diffusion constant")->capture_default_str();
  if (with_u_minus) sub->add_option("--u-minus", c.u_minus, "initial value u(0)")->capture_default_str();
  sub->add_option("--T", c.horizon, "time horizon")->capture_default_str();
  sub->add_option("--dt", c.dt, "grid step")->capture_default_str();
}

void add_optimizer_flags(CLI::App* sub, RunConfig& c) {
  sub->add_option("--n-starts", c.n_starts, "number of multistart starting paths");
  sub->add_option("--tol", c.tol, "gradient-norm tolerance")->capture_default_str();
  sub->add_option("--dedup", c.dedup, "sup-norm distance below which minima are merged")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  RunConfig c;
  std::string manifest;
  bool output_dir_set = false;

  CLI::App app{"Onsager-Machlup functionals: MAP paths, small-ball checks and consistency experiments"};
  app.require_subcommand(0, 1);
  app.add_option("--manifest", manifest, "rerun the configuration stored in a manifest.json");
  app.add_option("--output-dir", c.output_dir, "directory for all artifacts")->capture_default_str();
  app.add_option("--seed", c.seed, "master seed")->capture_default_str();
  app.add_option("--threads", c.threads, "worker threads (1 = serial)")->capture_default_str();
  app.add_option("--format", c.format, "tabular output format: csv or json")->capture_default_str();

  auto* simulate = app.add_subcommand("simulate", "Euler-Maruyama truth path and noisy observations");
  add_model_flags(simulate, c, false);
  simulate->add_option("--u0", c.u_minus, "initial value")->capture_default_str();
  simulate->add_option("--J", c.n_obs, "number of evenly spaced observations (0 for none)");
  simulate->add_option("--gamma", c.gamma, "observation noise standard deviation");

  auto* map = app.add_subcommand("map", "multistart minimisation of the Onsager-Machlup functional");
  map->add_option("--variant", c.variant, "unconditioned, bridge or smoothing")->capture_default_str();
  add_model_flags(map, c);
  map->add_option("--u-plus", c.u_plus, "bridge end value u(T)");
  map->add_option("--J", c.n_obs, "number of observations (smoothing)");
  map->add_option("--gamma", c.gamma, "observation noise standard deviation (smoothing)");
  map->add_option("--problem", c.problem_file, "problem JSON to minimise instead of a simulated one");
  add_optimizer_flags(map, c);

  auto* smallball = app.add_subcommand("smallball", "Monte-Carlo small-ball ratios and the Gaussian ball bound");
  smallball->add_option("--prior-eigs", c.prior_eigs, "prior covariance eigenvalues, non-increasing")->delimiter(',');
  smallball->add_option("--z1", c.z1, "first centre")->delimiter(',');
  smallball->add_option("--z2", c.z2, "second centre")->delimiter(',');
  smallball->add_option("--potential", c.potential_coeffs, "coefficients c of Phi(x) = c.x (omit for Phi = 0)")
      ->delimiter(',');
  smallball->add_option("--radii", c.radii, "strictly decreasing radii")->delimiter(',');
  smallball->add_option("--n-samples", c.n_samples, "samples per radius");

  auto* noise = app.add_subcommand("consistency-noise", "small-noise consistency experiment");
  add_model_flags(noise, c);
  noise->add_option("--J", c.n_obs, "number of observations");
  noise->add_option("--gammas", c.gammas, "strictly decreasing noise levels")->delimiter(',');
  add_optimizer_flags(noise, c);

  auto* samples = app.add_subcommand("consistency-samples", "large-sample consistency experiment");
  add_model_flags(samples, c);
  samples->add_option("--J-values", c.j_values, "strictly increasing observation counts")->delimiter(',');
  samples->add_option("--gamma", c.gamma, "observation noise standard deviation");
  samples->add_option("--metric", c.metric, "path distance: sup or l2")->capture_default_str();
  add_optimizer_flags(samples, c);

  auto* check = app.add_subcommand("check", "run the acceptance criteria");
  check->add_option("--criteria", c.criteria, "criterion numbers to run (default all)")->delimiter(',');
  check->add_flag("--quick", c.quick, "reduced sizes; not an acceptance verdict");

  for (auto* sub : app.get_subcommands({})) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int status = app.exit(e);
    return status == 0 ? 0 : 2;
  }
  output_dir_set = app.count("--output-dir") > 0;

  if (!manifest.empty()) {
    if (!app.get_subcommands().empty()) {
      std::cerr << "--manifest replaces the subcommand; give one or the other\n";
      return 2;
    }
    const std::string out = c.output_dir;
    const unsigned threads = c.threads;
    try {
      c = ommap::cli::read_manifest(manifest);
    } catch (const ommap::cli::ConfigError& e) {
      std::cerr << "{\"error\":\"config\",\"message\":\"" << e.what() << "\",\"exit_status\":2}\n";
      return 2;
    }
    if (output_dir_set) c.output_dir = out;
    if (app.count("--threads")) c.threads = threads;
  } else {
    if (app.get_subcommands().empty()) {
      std::cerr << app.help();
      return 2;
    }
    c.command = app.get_subcommands().front()->get_name();
  }
  return ommap::cli::run_guarded(c, std::cout, std::cerr);
}
