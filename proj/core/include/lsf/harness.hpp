#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lsf/metrics.hpp"

namespace lsf {

/// Environment variable that, when set and non-empty, replaces the output directory.
inline constexpr const char* kOutputDirEnv = "LSF_OUTPUT_DIR";

std::filesystem::path resolve_output_dir(const std::filesystem::path& requested);

/// Per-episode RNG seed, a stable hash of (base seed, repetition index).
std::uint64_t episode_seed(std::uint64_t base_seed, int repetition);

struct DumpFlags {
  bool grids = false;  // occupancy estimate per sensor frame
  bool psf = false;    // PSF stack per solve
  bool plans = false;  // every predictive plan, JSON lines
};

struct RunConfig {
  std::filesystem::path scenario_path;
  FilterMode mode = FilterMode::Multistage;
  std::vector<FilterMode> modes{FilterMode::Predictive, FilterMode::Realtime, FilterMode::Multistage};
  int repetitions = 10;
  std::optional<std::uint64_t> base_seed;  // scenario seed when absent
  std::optional<Rates> rates;              // scenario rates when absent
  std::filesystem::path output_dir = "out";
  DumpFlags dump;
  int jobs = 1;  // episodes run concurrently by run_suite; results do not depend on it
};

struct TickRecord {
  double t = 0.0;
  RomState chi;
  Vec3 chi_dot = Vec3::Zero();
  RomCommand mu_d, mu_p, mu_s;
  double h = 0.0;
  double barrier = 0.0;
  double issf_margin_before = 0.0;
  double issf_margin_after = 0.0;
  bool issf_active = false;
  bool issf_degenerate = false;
  double plan_min_margin = 0.0;
  double plan_cost = 0.0;
  int plan_iters = 0;
  bool plan_converged = false;
  int psf_iters = 0;
  double psf_residual = 0.0;
  bool collision = false;
};

struct EpisodeLog {
  std::string scenario;
  FilterMode mode = FilterMode::Multistage;
  std::uint64_t seed = 0;
  std::vector<TickRecord> ticks;
  int sensor_frames = 0;
  int psf_solves = 0;
  int plans = 0;
  int plan_fallbacks = 0;  // plan raised; the nominal command was passed on
  int filter_calls = 0;
  bool error = false;
  std::string error_message;
};

struct EpisodeOutput {
  EpisodeLog log;
  EpisodeMetrics metrics;
  MonitorReport monitor;
};

struct EpisodeOptions {
  FilterMode mode = FilterMode::Multistage;
  Rates rates;
  std::uint64_t seed = 0;
  double j_ideal = 0.0;
  DumpFlags dump;
  std::filesystem::path dump_dir;  // required when any dump flag is set
};

/// One closed-loop episode. Per tick: sensor -> mapper -> PSF -> predictive ->
/// real-time filter -> world step, each at its own rate. Layer errors end the
/// episode and are recorded, never thrown.
EpisodeOutput run_episode(const Scenario& sc, const EpisodeOptions& opt);

/// Metrics from a finished log (window selection, cost, robustness, success).
EpisodeMetrics score_episode(const Scenario& sc, const EpisodeLog& log, double j_ideal);

extern const char* const kEpisodeCsvHeader;
void write_episode_csv(const EpisodeLog& log, std::ostream& out);
nlohmann::json metrics_json(const EpisodeOutput& ep);

struct SuiteResult {
  std::string scenario;
  double j_ideal = 0.0;
  std::vector<EpisodeMetrics> runs;
  std::vector<ModeSummary> summary;
  std::vector<MonitorReport> monitors;  // parallel to runs
};

/// Every mode x repetition, then the aggregate. Writes the bundle under
/// `<out>/<scenario name>/` unless `out` is empty.
SuiteResult run_suite(const Scenario& sc, const RunConfig& cfg, const std::filesystem::path& out);

nlohmann::json suite_json(const SuiteResult& r);
void write_suite_bundle(const SuiteResult& r, const std::filesystem::path& dir);

struct SweepRow {
  double predictive_rate = 0.0;
  ModeSummary summary;
};

/// Re-run the suite for each predictive rate (capped at the real-time rate).
std::vector<SweepRow> run_rate_sweep(const Scenario& sc, const RunConfig& cfg, const std::vector<double>& rates,
                                     const std::filesystem::path& out);

}  // namespace lsf
