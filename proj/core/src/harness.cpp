#include "lsf/harness.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <future>
#include <limits>
#include <memory>
#include <ostream>
#include <sstream>

#include "lsf/grid_io.hpp"
#include "lsf/scenario_io.hpp"

namespace lsf {

namespace fs = std::filesystem;
using nlohmann::json;

fs::path resolve_output_dir(const fs::path& requested) {
  const char* env = std::getenv(kOutputDirEnv);
  if (env && *env) return fs::path(env);
  return requested;
}

std::uint64_t episode_seed(std::uint64_t base_seed, int repetition) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(base_seed ^ mix(static_cast<std::uint64_t>(repetition)));
}

namespace {

// Event k of a loop at `rate` Hz fires on the first tick at or after k / rate.
struct Cadence {
  double rate;
  long next = 0;
  bool due(double t) {
    if (t + 1e-9 < next / rate) return false;
    while (t + 1e-9 >= next / rate) ++next;
    return true;
  }
};

json plan_json(const Plan& p, double t) {
  json j;
  j["t"] = t;
  j["cost"] = p.cost;
  j["sqp_iters"] = p.sqp_iters;
  j["converged"] = p.converged;
  j["us"] = json::array();
  for (const Vec3& u : p.us) j["us"].push_back({u.x(), u.y(), u.z()});
  j["xs"] = json::array();
  for (const Vec3& x : p.xs) j["xs"].push_back({x.x(), x.y(), x.z()});
  j["margins"] = p.dcbf_margins;
  return j;
}

}  // namespace

EpisodeOutput run_episode(const Scenario& sc, const EpisodeOptions& opt) {
  opt.rates.validate();
  EpisodeOutput out;
  EpisodeLog& log = out.log;
  log.scenario = sc.name;
  log.mode = opt.mode;
  log.seed = opt.seed;

  const bool dumping = opt.dump.grids || opt.dump.psf || opt.dump.plans;
  std::ofstream plan_dump;
  if (dumping) {
    if (opt.dump_dir.empty()) throw ArgumentError("dump flags need a dump directory");
    fs::create_directories(opt.dump_dir);
    if (opt.dump.plans) plan_dump.open(opt.dump_dir / "plans.jsonl");
  }

  const double dt = 1.0 / opt.rates.realtime;
  const long ticks = std::lround(sc.duration * opt.rates.realtime);
  const bool use_plan = opt.mode != FilterMode::Realtime;
  const bool use_filter = opt.mode != FilterMode::Predictive;

  std::mt19937_64 rng(opt.seed);
  WorldState world = initial_world(sc);
  MapperState mapper = make_mapper_state(sc.grid, sc.mapper, -1.0 / opt.rates.sensor);
  const RobotFootprint erosion_fp = sc.robot.erosion_footprint(0.5 * sc.grid.resolution);

  Cadence sensor{opt.rates.sensor}, psf{opt.rates.psf}, predictive{opt.rates.predictive};
  std::shared_ptr<const PsfStack> curr, prev;
  std::unique_ptr<ExtrapolatedField> field;
  std::optional<Plan> last_plan;
  RomCommand mu_p;
  int psf_iters = 0;
  double psf_residual = 0.0;
  std::vector<MonitorSample> trace;
  trace.reserve(static_cast<std::size_t>(ticks));
  log.ticks.reserve(static_cast<std::size_t>(ticks));

  try {
    for (long k = 0; k < ticks; ++k) {
      const double t = k * dt;
      world.t = t;  // keep the clock free of accumulated rounding

      if (sensor.due(t)) {
        const PointCloud cloud = scan(sc, world, rng);
        mapper = step_mapper(mapper, cloud, sc.mapper, sc.grid);
        if (opt.dump.grids)
          io::write_grid(opt.dump_dir / ("mhat_" + std::to_string(log.sensor_frames)), mapper.m_hat, t);
        ++log.sensor_frames;
      }
      if (psf.due(t)) {
        const ThetaMasks masks = erode_free_space(mapper.m_hat, erosion_fp, sc.grid.n_theta);
        PsfSolveResult solved = solve_psf(masks, sc.poisson, t, curr.get());
        psf_iters = solved.total_iterations();
        psf_residual = solved.max_residual();
        prev = curr;
        curr = std::make_shared<const PsfStack>(std::move(solved.stack));
        field = std::make_unique<ExtrapolatedField>(PsfSnapshot{curr, prev});
        if (opt.dump.psf) io::write_stack(opt.dump_dir / ("psf_" + std::to_string(log.psf_solves)), *curr);
        ++log.psf_solves;
      }

      TickRecord rec;
      rec.t = t;
      rec.chi = world.robot.chi;
      rec.chi_dot = world.robot.chi_dot;
      rec.mu_d = sc.nominal.at(t);
      rec.psf_iters = psf_iters;
      rec.psf_residual = psf_residual;

      if (!use_plan) {
        mu_p = rec.mu_d;
      } else if (predictive.due(t)) {
        if (field) {
          try {
            const Plan* warm = last_plan ? &*last_plan : nullptr;
            std::vector<Vec3> nominal(static_cast<std::size_t>(sc.mpc.horizon));
            for (int i = 0; i < sc.mpc.horizon; ++i) nominal[static_cast<std::size_t>(i)] = sc.nominal.at(t + i * sc.mpc.dt).vec();
            Plan p = plan_on_field(*field, world.robot.chi, nominal, sc.mpc, t, warm);
            mu_p = p.first();
            if (opt.dump.plans) plan_dump << plan_json(p, t).dump() << '\n';
            last_plan = std::move(p);
          } catch (const InfeasibleError&) {
            mu_p = rec.mu_d;
            last_plan.reset();
            ++log.plan_fallbacks;
          }
          ++log.plans;
        } else {
          mu_p = rec.mu_d;
        }
      }
      if (last_plan && use_plan) {
        rec.plan_min_margin = last_plan->min_margin();
        rec.plan_cost = last_plan->cost;
        rec.plan_iters = last_plan->sqp_iters;
        rec.plan_converged = last_plan->converged;
      }
      rec.mu_p = mu_p;

      RomCommand mu_s;
      if (field) {
        const Vec3 q = world.robot.chi.vec();
        if (!field->contains(q)) throw DomainError("robot left the mapped region");
        rec.h = field->value(q, t);
        if (use_filter) {
          const FilterResult fr = filter(mu_p, world.robot.chi, *field, sc.issf, t);
          ++log.filter_calls;
          mu_s = fr.mu_s;
          rec.issf_margin_before = fr.margin_before;
          rec.issf_margin_after = fr.margin_after;
          rec.issf_active = fr.active;
          rec.issf_degenerate = fr.degenerate;
        } else {
          mu_s = mu_p;
        }
      }
      rec.mu_s = mu_s;
      rec.collision = in_collision(sc, world.robot.chi, t);
      const double v = sc.monitor.beta * (world.robot.chi_dot - mu_s.vec()).squaredNorm();
      rec.barrier = composite_barrier(rec.h, v, sc.monitor.mu_barrier);
      trace.push_back({rec.h, world.robot.chi_dot, mu_s.vec()});
      log.ticks.push_back(rec);

      world = step_world(sc, world, mu_s, dt);
    }
  } catch (const std::exception& e) {
    log.error = true;
    log.error_message = e.what();
  }

  out.monitor = monitor_theorem1(trace, sc.monitor.mu_barrier, sc.monitor.beta);
  out.metrics = score_episode(sc, log, opt.j_ideal);
  return out;
}

EpisodeMetrics score_episode(const Scenario& sc, const EpisodeLog& log, double j_ideal) {
  EpisodeMetrics m;
  m.mode = log.mode;
  m.seed = log.seed;
  m.j_ideal = j_ideal;
  m.error = log.error;
  m.error_message = log.error_message;
  for (const TickRecord& r : log.ticks) m.collision = m.collision || r.collision;
  m.success = !m.collision && !m.error;

  std::size_t lo = 0, hi = log.ticks.size();
  if (sc.encounter_h_threshold) {
    std::size_t first = hi, last = 0;
    for (std::size_t k = 0; k < log.ticks.size(); ++k)
      if (log.ticks[k].h < *sc.encounter_h_threshold) {
        first = std::min(first, k);
        last = k;
      }
    if (first < hi) {
      lo = first;
      hi = last + 1;
    }
  }
  std::vector<double> h;
  std::vector<Vec3> mu_s, mu_d;
  for (std::size_t k = lo; k < hi; ++k) {
    h.push_back(log.ticks[k].h);
    mu_s.push_back(log.ticks[k].mu_s.vec());
    mu_d.push_back(log.ticks[k].mu_d.vec());
  }
  m.j_robustness = h.empty() ? 0.0 : robustness(h);
  m.measured_cost = measured_cost(mu_s, mu_d, sc.mpc.R);
  normalize_optimality(m);
  return m;
}

const char* const kEpisodeCsvHeader =
    "t,x,y,theta,x_dot,y_dot,theta_dot,mud_vx,mud_vy,mud_omega,mup_vx,mup_vy,mup_omega,mus_vx,mus_vy,mus_omega,"
    "h,B,issf_margin_before,issf_margin_after,issf_active,issf_degenerate,plan_min_margin,plan_cost,plan_iters,"
    "plan_converged,psf_iters,psf_residual,collision";

void write_episode_csv(const EpisodeLog& log, std::ostream& out) {
  out << kEpisodeCsvHeader << '\n';
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.10g", v);
    out << buf;
  };
  for (const TickRecord& r : log.ticks) {
    const double vals[] = {r.t,         r.chi.x,      r.chi.y,      r.chi.theta,  r.chi_dot.x(), r.chi_dot.y(),
                           r.chi_dot.z(), r.mu_d.vx,  r.mu_d.vy,    r.mu_d.omega, r.mu_p.vx,     r.mu_p.vy,
                           r.mu_p.omega, r.mu_s.vx,   r.mu_s.vy,    r.mu_s.omega, r.h,           r.barrier,
                           r.issf_margin_before, r.issf_margin_after};
    for (double v : vals) {
      num(v);
      out << ',';
    }
    out << int(r.issf_active) << ',' << int(r.issf_degenerate) << ',';
    num(r.plan_min_margin);
    out << ',';
    num(r.plan_cost);
    out << ',' << r.plan_iters << ',' << int(r.plan_converged) << ',' << r.psf_iters << ',';
    num(r.psf_residual);
    out << ',' << int(r.collision) << '\n';
  }
}

json metrics_json(const EpisodeOutput& ep) {
  const EpisodeMetrics& m = ep.metrics;
  json j;
  j["scenario"] = ep.log.scenario;
  j["filter_mode"] = to_string(m.mode);
  j["seed"] = m.seed;
  j["success"] = m.success;
  j["collision"] = m.collision;
  j["error"] = m.error;
  j["error_message"] = m.error_message;
  j["j_robustness"] = m.j_robustness;
  j["j_optimality"] = m.j_optimality;
  j["j_ideal"] = m.j_ideal;
  j["measured_cost"] = m.measured_cost;
  j["unnormalized"] = m.unnormalized;
  j["ticks"] = ep.log.ticks.size();
  j["sensor_frames"] = ep.log.sensor_frames;
  j["psf_solves"] = ep.log.psf_solves;
  j["plans"] = ep.log.plans;
  j["plan_fallbacks"] = ep.log.plan_fallbacks;
  j["filter_calls"] = ep.log.filter_calls;
  j["barrier_min"] = ep.monitor.barrier.empty() ? json(nullptr) : json(ep.monitor.min_barrier);
  j["barrier_first_violation"] =
      ep.monitor.first_violation ? json(*ep.monitor.first_violation) : json(nullptr);
  return j;
}

namespace {

Rates effective_rates(const Scenario& sc, const RunConfig& cfg) { return cfg.rates ? *cfg.rates : sc.rates; }

json summary_json(const ModeSummary& s) {
  json j;
  j["filter_mode"] = to_string(s.mode);
  j["runs"] = s.runs;
  j["successes"] = s.successes;
  j["failures"] = s.failures;
  j["errors"] = s.errors;
  j["mean"] = {s.mean.x(), s.mean.y()};
  j["covariance"] = {{s.covariance(0, 0), s.covariance(0, 1)}, {s.covariance(1, 0), s.covariance(1, 1)}};
  if (s.ellipse) {
    j["ellipse"] = {{"center", {s.ellipse->center.x(), s.ellipse->center.y()}},
                    {"semi_major", s.ellipse->semi_major},
                    {"semi_minor", s.ellipse->semi_minor},
                    {"angle", s.ellipse->angle},
                    {"t2_critical", s.ellipse->t2_critical}};
  } else {
    j["ellipse"] = nullptr;
    j["ellipse_note"] = s.ellipse_note;
  }
  return j;
}

}  // namespace

SuiteResult run_suite(const Scenario& sc, const RunConfig& cfg, const fs::path& out) {
  if (cfg.repetitions < 1) throw ArgumentError("repetitions must be >= 1");
  const Rates rates = effective_rates(sc, cfg);
  rates.validate();
  const std::uint64_t base = cfg.base_seed ? *cfg.base_seed : sc.seed;

  SuiteResult res;
  res.scenario = sc.name;
  res.j_ideal = ideal_cost(sc, sc.mpc.R, 1.0 / rates.realtime).j_ideal;

  const fs::path dir = out.empty() ? fs::path() : out / sc.name;
  if (!dir.empty()) {
    fs::create_directories(dir);
    std::ofstream(dir / "scenario.json") << io::scenario_to_json(sc).dump(2) << '\n';
  }

  struct Job {
    FilterMode mode;
    int rep;
  };
  std::vector<Job> jobs;
  for (FilterMode mode : cfg.modes)
    for (int rep = 0; rep < cfg.repetitions; ++rep) jobs.push_back({mode, rep});

  auto run_job = [&](const Job& job) {
    EpisodeOptions opt;
    opt.mode = job.mode;
    opt.rates = rates;
    opt.seed = episode_seed(base, job.rep);
    opt.j_ideal = res.j_ideal;
    opt.dump = cfg.dump;
    const fs::path mode_dir = dir.empty() ? fs::path() : dir / to_string(job.mode);
    if (!mode_dir.empty()) opt.dump_dir = mode_dir / ("seed_" + std::to_string(job.rep) + "_dump");
    EpisodeOutput ep = run_episode(sc, opt);
    if (!mode_dir.empty()) {
      fs::create_directories(mode_dir);
      std::ofstream csv(mode_dir / ("seed_" + std::to_string(job.rep) + ".csv"));
      write_episode_csv(ep.log, csv);
      std::ofstream(mode_dir / ("seed_" + std::to_string(job.rep) + ".json")) << metrics_json(ep).dump(2) << '\n';
    }
    return std::make_pair(ep.metrics, ep.monitor);
  };

  std::vector<std::pair<EpisodeMetrics, MonitorReport>> results(jobs.size());
  const std::size_t width = static_cast<std::size_t>(std::max(1, cfg.jobs));
  for (std::size_t startj = 0; startj < jobs.size(); startj += width) {
    std::vector<std::future<std::pair<EpisodeMetrics, MonitorReport>>> batch;
    const std::size_t end = std::min(jobs.size(), startj + width);
    if (width == 1) {
      results[startj] = run_job(jobs[startj]);
      continue;
    }
    for (std::size_t i = startj; i < end; ++i) batch.push_back(std::async(std::launch::async, run_job, jobs[i]));
    for (std::size_t i = startj; i < end; ++i) results[i] = batch[i - startj].get();
  }
  for (auto& [m, mon] : results) {
    res.runs.push_back(m);
    res.monitors.push_back(std::move(mon));
  }
  res.summary = aggregate(res.runs);
  if (!dir.empty()) write_suite_bundle(res, dir);
  return res;
}

json suite_json(const SuiteResult& r) {
  json j;
  j["scenario"] = r.scenario;
  j["j_ideal"] = r.j_ideal;
  j["confidence"] = 0.85;
  j["modes"] = json::array();
  for (const ModeSummary& s : r.summary) j["modes"].push_back(summary_json(s));
  j["runs"] = json::array();
  for (const EpisodeMetrics& m : r.runs)
    j["runs"].push_back({{"filter_mode", to_string(m.mode)},
                         {"seed", m.seed},
                         {"success", m.success},
                         {"collision", m.collision},
                         {"error", m.error},
                         {"j_robustness", m.j_robustness},
                         {"j_optimality", m.j_optimality},
                         {"measured_cost", m.measured_cost},
                         {"unnormalized", m.unnormalized}});
  return j;
}

void write_suite_bundle(const SuiteResult& r, const fs::path& dir) {
  fs::create_directories(dir);
  std::ofstream(dir / "suite.json") << suite_json(r).dump(2) << '\n';

  char buf[512];
  std::ofstream agg(dir / "aggregate.csv");
  agg << "filter_mode,runs,successes,failures,errors,mean_j_robustness,mean_j_optimality,cov_rr,cov_ro,cov_oo,"
         "ellipse,center_r,center_o,semi_major,semi_minor,angle,t2_critical\n";
  for (const ModeSummary& s : r.summary) {
    std::snprintf(buf, sizeof buf, "%s,%d,%d,%d,%d,%.10g,%.10g,%.10g,%.10g,%.10g,", to_string(s.mode), s.runs,
                  s.successes, s.failures, s.errors, s.mean.x(), s.mean.y(), s.covariance(0, 0), s.covariance(0, 1),
                  s.covariance(1, 1));
    agg << buf;
    if (s.ellipse) {
      std::snprintf(buf, sizeof buf, "1,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g\n", s.ellipse->center.x(),
                    s.ellipse->center.y(), s.ellipse->semi_major, s.ellipse->semi_minor, s.ellipse->angle,
                    s.ellipse->t2_critical);
      agg << buf;
    } else {
      agg << "0,,,,,,\n";
    }
  }

  std::ofstream scatter(dir / "scatter.csv");
  scatter << "filter_mode,seed,j_robustness,j_optimality,success\n";
  for (const EpisodeMetrics& m : r.runs) {
    std::snprintf(buf, sizeof buf, "%s,%llu,%.10g,%.10g,%d\n", to_string(m.mode),
                  static_cast<unsigned long long>(m.seed), m.j_robustness, m.j_optimality, int(m.success));
    scatter << buf;
  }

  std::ofstream ell(dir / "ellipses.csv");
  ell << "filter_mode,k,j_robustness,j_optimality\n";
  for (const ModeSummary& s : r.summary) {
    if (!s.ellipse) continue;
    const auto pts = s.ellipse->polyline(64);
    for (std::size_t k = 0; k < pts.size(); ++k) {
      std::snprintf(buf, sizeof buf, "%s,%zu,%.10g,%.10g\n", to_string(s.mode), k, pts[k].x(), pts[k].y());
      ell << buf;
    }
  }

  std::ofstream bars(dir / "success_bars.csv");
  bars << "filter_mode,successes,failures\n";
  for (const ModeSummary& s : r.summary) bars << to_string(s.mode) << ',' << s.successes << ',' << s.failures << '\n';
}

std::vector<SweepRow> run_rate_sweep(const Scenario& sc, const RunConfig& cfg, const std::vector<double>& rates,
                                     const fs::path& out) {
  std::vector<SweepRow> rows;
  const Rates base = effective_rates(sc, cfg);
  for (double r : rates) {
    RunConfig c = cfg;
    Rates rr = base;
    rr.predictive = std::min(r, base.realtime);
    c.rates = rr;
    Scenario s = sc;
    char tag[64];
    std::snprintf(tag, sizeof tag, "%s_pred%gHz", sc.name.c_str(), rr.predictive);
    s.name = tag;
    const SuiteResult res = run_suite(s, c, out);
    for (const ModeSummary& m : res.summary) rows.push_back({rr.predictive, m});
  }
  if (!out.empty()) {
    fs::create_directories(out);
    std::ofstream csv(out / (sc.name + "_rate_sweep.csv"));
    csv << "predictive_rate,filter_mode,runs,successes,mean_j_robustness,mean_j_optimality\n";
    char buf[256];
    for (const SweepRow& row : rows) {
      std::snprintf(buf, sizeof buf, "%g,%s,%d,%d,%.10g,%.10g\n", row.predictive_rate, to_string(row.summary.mode),
                    row.summary.runs, row.summary.successes, row.summary.mean.x(), row.summary.mean.y());
      csv << buf;
    }
  }
  return rows;
}

}  // namespace lsf
