#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lsf/sim.hpp"

namespace lsf {

enum class FilterMode { Predictive, Realtime, Multistage };

const char* to_string(FilterMode m);
/// Accepts "predictive", "realtime", "multistage". Throws ArgumentError otherwise.
FilterMode parse_filter_mode(const std::string& s);

struct EpisodeMetrics {
  FilterMode mode = FilterMode::Multistage;
  std::uint64_t seed = 0;
  double j_robustness = 0.0;
  double measured_cost = 0.0;
  double j_ideal = 0.0;
  double j_optimality = 0.0;  // measured_cost / j_ideal, or measured_cost when unnormalized
  bool unnormalized = false;  // j_ideal == 0: ratio undefined
  bool success = false;       // no collision and no layer error
  bool collision = false;
  bool error = false;         // a layer raised; distinct from collision
  std::string error_message;
};

/// Minimum of the logged h trace. Throws ArgumentError when empty.
double robustness(std::span<const double> h);

/// Sum over ticks of (mu_s - mu_d)' R (mu_s - mu_d).
double measured_cost(std::span<const Vec3> mu_s, std::span<const Vec3> mu_d, const Eigen::Matrix3d& R);

/// j_optimality with the zero-ideal guard applied.
void normalize_optimality(EpisodeMetrics& m);

struct IdealResult {
  double j_ideal = 0.0;    // plan cost rescaled to the real-time tick
  double plan_cost = 0.0;  // raw cost over the clairvoyant horizon
  Plan plan;
  std::vector<std::shared_ptr<const PsfStack>> truth;  // ground-truth fields at the plan stamps
};

/// Clairvoyant plan over the whole episode on ground-truth fields, slacks off.
/// Throws ConfigError ("unscorable") when the clairvoyant problem is infeasible.
IdealResult ideal_cost(const Scenario& sc, const Eigen::Matrix3d& R, double tick_dt);

/// Ground-truth PSF stacks at t0, t0 + dt, ..., t0 + n dt.
std::vector<std::shared_ptr<const PsfStack>> truth_fields(const Scenario& sc, double t0, double dt, int n);

struct Ellipse {
  Vec2 center = Vec2::Zero();
  double semi_major = 0.0;
  double semi_minor = 0.0;
  double angle = 0.0;  // rotation of the major axis, rad
  double t2_critical = 0.0;

  bool contains(const Vec2& p) const;
  std::vector<Vec2> polyline(int segments) const;
};

/// Hotelling T^2 confidence region for the mean of 2-D samples:
/// n (mu - xbar)' S^-1 (mu - xbar) <= p (n - 1) / (n - p) F_{p, n-p}(confidence).
/// nullopt (with `why` filled) for fewer than 3 samples or singular covariance.
std::optional<Ellipse> hotelling_ellipse(std::span<const Vec2> samples, double confidence, std::string* why = nullptr);

struct ModeSummary {
  FilterMode mode = FilterMode::Multistage;
  int runs = 0;
  int successes = 0;
  int failures = 0;  // collisions and errors
  int errors = 0;
  Vec2 mean = Vec2::Zero();  // (j_robustness, j_optimality) over successful runs
  Eigen::Matrix2d covariance = Eigen::Matrix2d::Zero();
  std::optional<Ellipse> ellipse;
  std::string ellipse_note;  // why the ellipse was omitted
};

/// Per-mode statistics in predictive, realtime, multistage order (modes without runs skipped).
std::vector<ModeSummary> aggregate(std::span<const EpisodeMetrics> runs, double confidence = 0.85);

}  // namespace lsf
