#include "lsf/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Eigenvalues>
#include <boost/math/distributions/fisher_f.hpp>

namespace lsf {

const char* to_string(FilterMode m) {
  switch (m) {
    case FilterMode::Predictive: return "predictive";
    case FilterMode::Realtime: return "realtime";
    case FilterMode::Multistage: return "multistage";
  }
  return "unknown";
}

FilterMode parse_filter_mode(const std::string& s) {
  if (s == "predictive") return FilterMode::Predictive;
  if (s == "realtime") return FilterMode::Realtime;
  if (s == "multistage") return FilterMode::Multistage;
  throw ArgumentError("unknown filter mode '" + s + "' (expected predictive, realtime or multistage)");
}

double robustness(std::span<const double> h) {
  if (h.empty()) throw ArgumentError("robustness of an empty log");
  return *std::min_element(h.begin(), h.end());
}

double measured_cost(std::span<const Vec3> mu_s, std::span<const Vec3> mu_d, const Eigen::Matrix3d& R) {
  if (mu_s.size() != mu_d.size()) throw ArgumentError("command traces differ in length");
  double c = 0.0;
  for (std::size_t k = 0; k < mu_s.size(); ++k) {
    const Vec3 e = mu_s[k] - mu_d[k];
    c += e.dot(R * e);
  }
  return c;
}

void normalize_optimality(EpisodeMetrics& m) {
  m.unnormalized = !(m.j_ideal > 0.0);
  m.j_optimality = m.unnormalized ? m.measured_cost : m.measured_cost / m.j_ideal;
}

std::vector<std::shared_ptr<const PsfStack>> truth_fields(const Scenario& sc, double t0, double dt, int n) {
  const RobotFootprint fp = sc.robot.erosion_footprint(0.5 * sc.grid.resolution);
  std::vector<std::shared_ptr<const PsfStack>> out;
  out.reserve(static_cast<std::size_t>(n + 1));
  for (int i = 0; i <= n; ++i) {
    const double t = t0 + i * dt;
    const ThetaMasks masks = erode_free_space(rasterize_occupancy(sc, t), fp, sc.grid.n_theta);
    const PsfStack* warm = out.empty() ? nullptr : out.back().get();
    out.push_back(std::make_shared<const PsfStack>(solve_psf(masks, sc.poisson, t, warm).stack));
  }
  return out;
}

IdealResult ideal_cost(const Scenario& sc, const Eigen::Matrix3d& R, double tick_dt) {
  if (!(tick_dt > 0.0)) throw ArgumentError("tick_dt must be positive");
  MpcConfig cfg = sc.mpc;
  cfg.R = R;
  cfg.horizon = std::max(1, static_cast<int>(std::lround(sc.duration / cfg.dt)));
  cfg.slack_penalty = 0.0;
  cfg.sqp_max_iters = std::max(cfg.sqp_max_iters, 60);

  IdealResult res;
  res.truth = truth_fields(sc, 0.0, cfg.dt, cfg.horizon);
  const StackSequenceField field(res.truth);
  std::vector<Vec3> nominal;
  for (int i = 0; i < cfg.horizon; ++i) nominal.push_back(sc.nominal.at(i * cfg.dt).vec());
  try {
    // elastic pass to reach a feasible neighborhood, then the exact problem from there
    MpcConfig elastic = cfg;
    elastic.slack_penalty.reset();
    const Plan seed = plan_on_field(field, sc.robot.start, nominal, elastic, 0.0);
    res.plan = seed.nominal_feasible ? seed : plan_from_guess(field, sc.robot.start, nominal, cfg, 0.0, seed.us);
  } catch (const InfeasibleError& e) {
    throw ConfigError("scenario '" + sc.name + "' is unscorable: clairvoyant problem infeasible (" + e.what() + ")");
  }
  if (res.plan.min_margin() < -10.0 * cfg.qp_tol)
    throw ConfigError("scenario '" + sc.name + "' is unscorable: clairvoyant plan violates the barrier");
  res.plan_cost = res.plan.cost;
  res.j_ideal = res.plan.cost * (cfg.dt / tick_dt);
  return res;
}

bool Ellipse::contains(const Vec2& p) const {
  const Vec2 d = geom::rotate(p - center, -angle);
  if (semi_minor <= 0.0 || semi_major <= 0.0) return false;
  const double u = d.x() / semi_major;
  const double v = d.y() / semi_minor;
  return u * u + v * v <= 1.0;
}

std::vector<Vec2> Ellipse::polyline(int segments) const {
  if (segments < 3) throw ArgumentError("ellipse polyline needs at least 3 segments");
  std::vector<Vec2> pts;
  for (int k = 0; k < segments; ++k) {
    const double a = 2.0 * std::numbers::pi * k / segments;
    pts.push_back(center + geom::rotate({semi_major * std::cos(a), semi_minor * std::sin(a)}, angle));
  }
  pts.push_back(pts.front());  // closed exactly
  return pts;
}

std::optional<Ellipse> hotelling_ellipse(std::span<const Vec2> samples, double confidence, std::string* why) {
  auto omit = [&](const char* reason) -> std::optional<Ellipse> {
    if (why) *why = reason;
    return std::nullopt;
  };
  const std::size_t n = samples.size();
  if (n < 3) return omit("fewer than 3 samples");
  if (!(confidence > 0.0 && confidence < 1.0)) throw ArgumentError("confidence must lie in (0, 1)");

  Vec2 mean = Vec2::Zero();
  for (const Vec2& s : samples) mean += s;
  mean /= static_cast<double>(n);
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  for (const Vec2& s : samples) cov += (s - mean) * (s - mean).transpose();
  cov /= static_cast<double>(n - 1);

  const double tr = cov.trace();
  if (!(tr > 0.0) || cov.determinant() <= 1e-12 * tr * tr) return omit("singular covariance");

  const double p = 2.0;
  const double dn = static_cast<double>(n);
  boost::math::fisher_f dist(p, dn - p);
  const double t2 = p * (dn - 1.0) / (dn - p) * boost::math::quantile(dist, confidence);

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(cov);
  const Vec2 evals = eig.eigenvalues();  // ascending
  const Vec2 major = eig.eigenvectors().col(1);
  Ellipse e;
  e.center = mean;
  e.t2_critical = t2;
  e.semi_major = std::sqrt(t2 * evals(1) / dn);
  e.semi_minor = std::sqrt(t2 * std::max(evals(0), 0.0) / dn);
  e.angle = std::atan2(major.y(), major.x());
  if (e.angle > std::numbers::pi / 2) e.angle -= std::numbers::pi;
  if (e.angle <= -std::numbers::pi / 2) e.angle += std::numbers::pi;
  return e;
}

std::vector<ModeSummary> aggregate(std::span<const EpisodeMetrics> runs, double confidence) {
  std::vector<ModeSummary> out;
  for (FilterMode mode : {FilterMode::Predictive, FilterMode::Realtime, FilterMode::Multistage}) {
    ModeSummary s;
    s.mode = mode;
    std::vector<Vec2> pts;
    for (const EpisodeMetrics& m : runs) {
      if (m.mode != mode) continue;
      ++s.runs;
      if (m.error) ++s.errors;
      if (m.success) {
        ++s.successes;
        pts.emplace_back(m.j_robustness, m.j_optimality);
      } else {
        ++s.failures;
      }
    }
    if (s.runs == 0) continue;
    if (!pts.empty()) {
      for (const Vec2& p : pts) s.mean += p;
      s.mean /= static_cast<double>(pts.size());
      if (pts.size() > 1) {
        for (const Vec2& p : pts) s.covariance += (p - s.mean) * (p - s.mean).transpose();
        s.covariance /= static_cast<double>(pts.size() - 1);
      }
    }
    s.ellipse = hotelling_ellipse(pts, confidence, &s.ellipse_note);
    out.push_back(s);
  }
  return out;
}

}  // namespace lsf
