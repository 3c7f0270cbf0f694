#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>

#include "lsf/grid_io.hpp"
#include "lsf/harness.hpp"
#include "lsf/scenario_io.hpp"
#include "pgm.hpp"
#include "verify.hpp"

namespace fs = std::filesystem;
using namespace lsf;

namespace {

struct RateFlags {
  std::optional<double> sensor, psf, predictive, realtime;

  void add(CLI::App* app) {
    app->add_option("--sensor-rate", sensor, "Sensor rate, Hz");
    app->add_option("--psf-rate", psf, "PSF solve rate, Hz");
    app->add_option("--predictive-rate", predictive, "Predictive layer rate, Hz");
    app->add_option("--realtime-rate", realtime, "Real-time filter rate, Hz");
  }

  Rates apply(Rates r) const {
    if (sensor) r.sensor = *sensor;
    if (psf) r.psf = *psf;
    if (predictive) r.predictive = *predictive;
    if (realtime) r.realtime = *realtime;
    r.validate();
    return r;
  }
};

void add_dump_flags(CLI::App* app, DumpFlags& d) {
  app->add_flag("--dump-grids", d.grids, "Write the occupancy estimate of every sensor frame");
  app->add_flag("--dump-psf", d.psf, "Write every PSF stack");
  app->add_flag("--dump-plans", d.plans, "Write every predictive plan as JSON lines");
}

void print_summary(const SuiteResult& r) {
  std::printf("scenario %s  J_ideal %.6g\n", r.scenario.c_str(), r.j_ideal);
  std::printf("%-11s %5s %5s %5s %14s %14s  %s\n", "mode", "runs", "ok", "fail", "mean J_rob", "mean J_opt", "ellipse");
  for (const ModeSummary& s : r.summary)
    std::printf("%-11s %5d %5d %5d %14.6g %14.6g  %s\n", to_string(s.mode), s.runs, s.successes, s.failures,
                s.mean.x(), s.mean.y(), s.ellipse ? "yes" : s.ellipse_note.c_str());
}

int cmd_run(const fs::path& scenario_path, const std::string& mode, std::optional<std::uint64_t> seed,
            const RateFlags& rates, const DumpFlags& dump, const fs::path& out_req) {
  const Scenario sc = io::load_scenario(scenario_path);
  EpisodeOptions opt;
  opt.mode = parse_filter_mode(mode);
  opt.rates = rates.apply(sc.rates);
  opt.seed = seed ? *seed : sc.seed;
  opt.dump = dump;
  const fs::path out = resolve_output_dir(out_req) / sc.name / mode;
  fs::create_directories(out);
  opt.dump_dir = out / ("seed_" + std::to_string(opt.seed) + "_dump");
  opt.j_ideal = ideal_cost(sc, sc.mpc.R, 1.0 / opt.rates.realtime).j_ideal;

  const EpisodeOutput ep = run_episode(sc, opt);
  const std::string stem = "seed_" + std::to_string(opt.seed);
  std::ofstream csv(out / (stem + ".csv"));
  write_episode_csv(ep.log, csv);
  std::ofstream(out / (stem + ".json")) << metrics_json(ep).dump(2) << '\n';

  std::printf("%s %s seed %llu: %s  J_rob %.6g  J_opt %.6g%s\n", sc.name.c_str(), mode.c_str(),
              static_cast<unsigned long long>(opt.seed),
              ep.metrics.error ? "ERROR" : (ep.metrics.success ? "success" : "collision"), ep.metrics.j_robustness,
              ep.metrics.j_optimality, ep.metrics.unnormalized ? " (unnormalized)" : "");
  std::printf("wrote %s\n", (out / (stem + ".csv")).c_str());
  if (ep.log.error) {
    std::fprintf(stderr, "episode error: %s\n", ep.log.error_message.c_str());
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Layered perception-to-control safety filter: simulation, PSF solves, benchmarks"};
  app.require_subcommand(1);

  fs::path scenario_path, out_dir = "out";
  std::string mode = "multistage";
  std::optional<std::uint64_t> seed;
  RateFlags rates;
  DumpFlags dump;

  auto* run = app.add_subcommand("run", "Run one episode");
  run->add_option("scenario", scenario_path, "Scenario JSON file")->required();
  run->add_option("--mode", mode, "predictive | realtime | multistage")
      ->check(CLI::IsMember({"predictive", "realtime", "multistage"}));
  run->add_option("--seed", seed, "Episode seed (defaults to the scenario seed)");
  run->add_option("--out", out_dir, "Output directory (overridden by $" + std::string(kOutputDirEnv) + ")");
  rates.add(run);
  add_dump_flags(run, dump);

  int reps = 10, jobs = 1;
  std::vector<std::string> modes;
  std::vector<double> sweep;
  auto* suite = app.add_subcommand("suite", "Run every mode x seed and aggregate");
  suite->add_option("scenario", scenario_path, "Scenario JSON file")->required();
  suite->add_option("--reps", reps, "Seeded repetitions per mode")->check(CLI::PositiveNumber);
  suite->add_option("--base-seed", seed, "Base seed (defaults to the scenario seed)");
  suite->add_option("--modes", modes, "Subset of modes")->delimiter(',')
      ->check(CLI::IsMember({"predictive", "realtime", "multistage"}));
  suite->add_option("--out", out_dir, "Output directory (overridden by $" + std::string(kOutputDirEnv) + ")");
  suite->add_option("--jobs", jobs, "Episodes run concurrently")->check(CLI::PositiveNumber);
  suite->add_option("--rate-sweep", sweep, "Predictive rates (Hz) to sweep, comma separated")->delimiter(',');
  rates.add(suite);
  add_dump_flags(suite, dump);

  fs::path image, stem;
  double resolution = 0.05, padding = 0.0, threshold = 0.5;
  std::vector<double> origin{0.0, 0.0};
  int n_theta = 16;
  std::vector<double> rect;
  PoissonConfig pcfg;
  auto* psf = app.add_subcommand("psf", "Solve the PSF for an occupancy image (PGM)");
  psf->add_option("image", image, "Occupancy image, P2/P5 PGM; dark pixels are occupied")->required()
      ->check(CLI::ExistingFile);
  psf->add_option("--out", stem, "Output stem for the grid files")->required();
  psf->add_option("--resolution", resolution, "Meters per pixel")->check(CLI::PositiveNumber);
  psf->add_option("--origin", origin, "World position of the bottom-left pixel center")->expected(2);
  psf->add_option("--n-theta", n_theta, "Orientation layers")->check(CLI::PositiveNumber);
  psf->add_option("--rectangle", rect, "Rectangular footprint: length width (m); point robot if omitted")->expected(2);
  psf->add_option("--padding", padding, "Footprint padding, m");
  psf->add_option("--threshold", threshold, "Occupied below this fraction of the max gray value");
  psf->add_option("--forcing", pcfg.forcing, "Constant forcing f < 0");
  psf->add_option("--tol", pcfg.tol, "Residual tolerance");
  psf->add_option("--omega", pcfg.sor_omega, "SOR relaxation factor");
  psf->add_option("--workers", pcfg.workers, "Threads across orientation layers");

  unsigned verify_seed = 1;
  auto* verify = app.add_subcommand("verify", "Run the invariant self-test battery");
  verify->add_option("--seed", verify_seed, "Seed for randomized checks");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(scenario_path, mode, seed, rates, dump, out_dir);

    if (*suite) {
      const Scenario sc = io::load_scenario(scenario_path);
      RunConfig cfg;
      cfg.scenario_path = scenario_path;
      cfg.repetitions = reps;
      cfg.base_seed = seed;
      cfg.rates = rates.apply(sc.rates);
      cfg.dump = dump;
      cfg.jobs = jobs;
      if (!modes.empty()) {
        cfg.modes.clear();
        for (const auto& m : modes) cfg.modes.push_back(parse_filter_mode(m));
      }
      cfg.output_dir = resolve_output_dir(out_dir);
      if (!sweep.empty()) {
        const auto rows = run_rate_sweep(sc, cfg, sweep, cfg.output_dir);
        std::printf("%-10s %-11s %5s %5s %14s %14s\n", "rate", "mode", "runs", "ok", "mean J_rob", "mean J_opt");
        for (const SweepRow& r : rows)
          std::printf("%-10g %-11s %5d %5d %14.6g %14.6g\n", r.predictive_rate, to_string(r.summary.mode),
                      r.summary.runs, r.summary.successes, r.summary.mean.x(), r.summary.mean.y());
        return 0;
      }
      const SuiteResult r = run_suite(sc, cfg, cfg.output_dir);
      print_summary(r);
      std::printf("wrote %s\n", (cfg.output_dir / sc.name).c_str());
      int errors = 0;
      for (const auto& m : r.runs) errors += m.error;
      return errors == 0 ? 0 : 1;
    }

    if (*psf) {
      GridSpec tmpl;
      tmpl.origin = {origin[0], origin[1]};
      tmpl.resolution = resolution;
      tmpl.n_theta = n_theta;
      const ScalarGrid2D occ = tools::read_pgm_occupancy(image, tmpl, threshold);
      RobotSpec robot;
      robot.footprint = rect.size() == 2 ? RobotFootprint::rectangle(rect[0], rect[1], 0.5 * resolution)
                                         : RobotFootprint::point();
      robot.padding = padding;
      const ThetaMasks masks = erode_free_space(occ, robot.erosion_footprint(0.5 * resolution), n_theta);
      const PsfSolveResult r = solve_psf(masks, pcfg, 0.0);
      io::write_stack(stem, r.stack);
      int infeasible = 0;
      for (const auto& l : r.layers) infeasible += l.infeasible;
      std::printf("solved %d layers of %dx%d in %d sweeps, max residual %.3g, max h %.6g, %d empty layers\n",
                  n_theta, occ.spec().nx, occ.spec().ny, r.total_iterations(), r.max_residual(), r.stack.max_value(),
                  infeasible);
      std::printf("wrote %s.json / %s.bin\n", stem.c_str(), stem.c_str());
      return 0;
    }

    if (*verify) {
      int failed = 0;
      for (const auto& c : tools::run_verify(verify_seed)) {
        std::printf("[%s] %s (%s)\n", c.pass ? "PASS" : "FAIL", c.name.c_str(), c.detail.c_str());
        failed += !c.pass;
      }
      return failed == 0 ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
