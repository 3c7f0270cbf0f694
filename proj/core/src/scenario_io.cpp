#include "lsf/scenario_io.hpp"

#include <algorithm>
#include <fstream>
#include <initializer_list>
#include <set>
#include <string>

namespace lsf::io {

using nlohmann::json;

namespace {

class Reader {
 public:
  Reader(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) fail("expected an object");
  }

  void allow(std::initializer_list<const char*> keys) const {
    std::set<std::string> ok(keys.begin(), keys.end());
    for (const auto& [k, v] : node_.items())
      if (!ok.count(k)) throw ConfigError(path_ + "." + k + ": unknown key");
  }

  bool has(const char* key) const { return node_.contains(key) && !node_.at(key).is_null(); }

  Reader child(const char* key) const { return Reader(node_.at(key), path_ + "." + key); }

  double number(const char* key, double fallback) const {
    if (!has(key)) return fallback;
    const json& v = node_.at(key);
    if (!v.is_number()) fail(std::string(key) + ": expected a number");
    return v.get<double>();
  }

  double number(const char* key) const {
    if (!has(key)) fail(std::string(key) + ": required");
    return number(key, 0.0);
  }

  int integer(const char* key, int fallback) const {
    if (!has(key)) return fallback;
    const json& v = node_.at(key);
    if (!v.is_number_integer()) fail(std::string(key) + ": expected an integer");
    return v.get<int>();
  }

  bool boolean(const char* key, bool fallback) const {
    if (!has(key)) return fallback;
    const json& v = node_.at(key);
    if (!v.is_boolean()) fail(std::string(key) + ": expected true or false");
    return v.get<bool>();
  }

  std::string string(const char* key, const std::string& fallback) const {
    if (!has(key)) return fallback;
    const json& v = node_.at(key);
    if (!v.is_string()) fail(std::string(key) + ": expected a string");
    return v.get<std::string>();
  }

  template <int N>
  Eigen::Matrix<double, N, 1> vec(const char* key) const {
    if (!has(key)) fail(std::string(key) + ": required");
    return as_vec<N>(node_.at(key), path_ + "." + key);
  }

  template <int N>
  static Eigen::Matrix<double, N, 1> as_vec(const json& v, const std::string& where) {
    if (!v.is_array() || v.size() != N) throw ConfigError(where + ": expected an array of " + std::to_string(N) + " numbers");
    Eigen::Matrix<double, N, 1> out;
    for (int k = 0; k < N; ++k) {
      if (!v[static_cast<std::size_t>(k)].is_number()) throw ConfigError(where + ": expected numbers");
      out(k) = v[static_cast<std::size_t>(k)].get<double>();
    }
    return out;
  }

  const json& raw(const char* key) const { return node_.at(key); }
  const std::string& path() const { return path_; }

  [[noreturn]] void fail(const std::string& msg) const { throw ConfigError(path_ + ": " + msg); }

 private:
  const json& node_;
  std::string path_;
};

geom::Polygon polygon(const json& v, const std::string& where) {
  if (!v.is_array() || v.size() < 3) throw ConfigError(where + ": expected at least 3 vertices");
  geom::Polygon p;
  for (std::size_t k = 0; k < v.size(); ++k) p.push_back(Reader::as_vec<2>(v[k], where + "[" + std::to_string(k) + "]"));
  return p;
}

double signed_area(const geom::Polygon& p) {
  double a = 0.0;
  for (std::size_t i = 0, j = p.size() - 1; i < p.size(); j = i++) a += geom::cross(p[j], p[i]);
  return 0.5 * a;
}

geom::Polygon counter_clockwise(geom::Polygon p) {
  if (signed_area(p) < 0.0) std::reverse(p.begin(), p.end());
  return p;
}

json vec_json(const Vec2& v) { return json::array({v.x(), v.y()}); }
json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

void read_mapper(const Reader& r, MapperConfig& m) {
  r.allow({"kernel_radius_cells", "kernel_sigma", "sigma_switch", "beta_minus", "beta_plus", "tau_high", "tau_low",
           "initial_confidence"});
  m.kernel_radius_cells = r.integer("kernel_radius_cells", m.kernel_radius_cells);
  m.kernel_sigma = r.number("kernel_sigma", m.kernel_sigma);
  m.sigma_switch = r.number("sigma_switch", m.sigma_switch);
  m.beta_minus = r.number("beta_minus", m.beta_minus);
  m.beta_plus = r.number("beta_plus", m.beta_plus);
  m.tau_high = r.number("tau_high", m.tau_high);
  m.tau_low = r.number("tau_low", m.tau_low);
  m.initial_confidence = r.number("initial_confidence", m.initial_confidence);
}

void read_poisson(const Reader& r, PoissonConfig& p) {
  r.allow({"forcing", "sor_omega", "tol", "max_iters", "warm_start", "workers", "check_every"});
  p.forcing = r.number("forcing", p.forcing);
  p.sor_omega = r.number("sor_omega", p.sor_omega);
  p.tol = r.number("tol", p.tol);
  p.max_iters = r.integer("max_iters", p.max_iters);
  p.warm_start = r.boolean("warm_start", p.warm_start);
  p.workers = r.integer("workers", p.workers);
  p.check_every = r.integer("check_every", p.check_every);
}

void read_mpc(const Reader& r, MpcConfig& m) {
  r.allow({"horizon", "dt", "rho", "R", "sqp_max_iters", "qp_tol", "trust_radius", "slack_penalty", "input_bounds",
           "exit_slope"});
  m.horizon = r.integer("horizon", m.horizon);
  m.dt = r.number("dt", m.dt);
  m.rho = r.number("rho", m.rho);
  if (r.has("R")) {
    const json& v = r.raw("R");
    if (v.is_array() && v.size() == 3 && v[0].is_array()) {
      for (int i = 0; i < 3; ++i) m.R.row(i) = Reader::as_vec<3>(v[static_cast<std::size_t>(i)], r.path() + ".R").transpose();
    } else {
      m.R = r.vec<3>("R").asDiagonal();
    }
  }
  m.sqp_max_iters = r.integer("sqp_max_iters", m.sqp_max_iters);
  m.qp_tol = r.number("qp_tol", m.qp_tol);
  m.trust_radius = r.number("trust_radius", m.trust_radius);
  if (r.has("slack_penalty")) {
    const json& v = r.raw("slack_penalty");
    if (v.is_string() && v.get<std::string>() == "auto") m.slack_penalty.reset();
    else m.slack_penalty = r.number("slack_penalty");
  }
  if (r.has("input_bounds")) m.input_bounds = r.vec<3>("input_bounds");
  m.exit_slope = r.number("exit_slope", m.exit_slope);
}

void read_issf(const Reader& r, IssfConfig& c) {
  r.allow({"alpha", "epsilon", "grad_floor"});
  c.alpha = r.number("alpha", c.alpha);
  c.epsilon = r.number("epsilon", c.epsilon);
  c.grad_floor = r.number("grad_floor", c.grad_floor);
}

void read_robot(const Reader& r, Scenario& sc) {
  r.allow({"footprint", "padding", "start", "tracking", "velocity_limits"});
  const double res = sc.grid.resolution;
  if (r.has("footprint")) {
    const Reader f = r.child("footprint");
    f.allow({"type", "length", "width", "vertices", "spacing"});
    const std::string type = f.string("type", "point");
    const double spacing = f.number("spacing", 0.5 * res);
    if (type == "point") {
      sc.robot.footprint = RobotFootprint::point();
    } else if (type == "rectangle") {
      sc.robot.footprint = RobotFootprint::rectangle(f.number("length"), f.number("width"), spacing);
    } else if (type == "polygon") {
      sc.robot.footprint =
          RobotFootprint::from_polygon(counter_clockwise(polygon(f.raw("vertices"), f.path() + ".vertices")), spacing);
    } else {
      f.fail("type: expected point, rectangle or polygon");
    }
  } else {
    sc.robot.footprint = RobotFootprint::point();
  }
  sc.robot.padding = r.number("padding", 1.5 * res);
  if (r.has("start")) sc.robot.start = RomState::from(r.vec<3>("start"));
  if (r.has("tracking")) {
    const Reader t = r.child("tracking");
    t.allow({"mode", "time_constant"});
    const std::string mode = t.string("mode", "perfect");
    if (mode == "perfect") sc.robot.tracking.mode = TrackingMode::Perfect;
    else if (mode == "first_order") sc.robot.tracking.mode = TrackingMode::FirstOrder;
    else t.fail("mode: expected perfect or first_order");
    sc.robot.tracking.time_constant = t.number("time_constant", sc.robot.tracking.time_constant);
  }
  if (r.has("velocity_limits")) sc.robot.velocity_limits = r.vec<3>("velocity_limits");
}

}  // namespace

Scenario scenario_from_json(const json& doc) {
  const Reader r(doc, "$");
  r.allow({"$schema", "name", "arena", "grid", "static_obstacles", "moving_obstacles", "robot", "nominal", "sensor",
           "rates", "duration", "seed", "mapper", "poisson", "mpc", "issf", "monitor", "metrics"});
  Scenario sc;
  sc.name = r.string("name", sc.name);

  if (r.has("arena")) {
    const Reader a = r.child("arena");
    a.allow({"x_min", "x_max", "y_min", "y_max"});
    sc.arena = {a.number("x_min"), a.number("x_max"), a.number("y_min"), a.number("y_max")};
  }
  double resolution = 0.05;
  int n_theta = 16;
  if (r.has("grid")) {
    const Reader g = r.child("grid");
    g.allow({"resolution", "n_theta"});
    resolution = g.number("resolution", resolution);
    n_theta = g.integer("n_theta", n_theta);
  }
  if (!(resolution > 0.0)) throw ConfigError("$.grid.resolution: must be positive");
  sc.grid = grid_for_arena(sc.arena, resolution, n_theta);

  if (r.has("static_obstacles")) {
    const json& list = r.raw("static_obstacles");
    if (!list.is_array()) r.fail("static_obstacles: expected an array");
    for (std::size_t k = 0; k < list.size(); ++k) {
      const Reader o(list[k], "$.static_obstacles[" + std::to_string(k) + "]");
      o.allow({"vertices"});
      sc.static_obstacles.push_back(counter_clockwise(polygon(o.raw("vertices"), o.path() + ".vertices")));
    }
  }
  if (r.has("moving_obstacles")) {
    const json& list = r.raw("moving_obstacles");
    if (!list.is_array()) r.fail("moving_obstacles: expected an array");
    for (std::size_t k = 0; k < list.size(); ++k) {
      const Reader o(list[k], "$.moving_obstacles[" + std::to_string(k) + "]");
      o.allow({"radius", "start", "velocity", "start_time"});
      MovingDisc d;
      d.radius = o.number("radius");
      d.start = o.vec<2>("start");
      d.velocity = o.has("velocity") ? Vec2(o.vec<2>("velocity")) : Vec2::Zero();
      d.start_time = o.number("start_time", 0.0);
      sc.moving_obstacles.push_back(d);
    }
  }
  if (r.has("robot")) {
    read_robot(r.child("robot"), sc);
  } else {
    sc.robot.footprint = RobotFootprint::point();
    sc.robot.padding = 1.5 * resolution;
  }

  if (r.has("nominal")) {
    const json& list = r.raw("nominal");
    if (!list.is_array()) r.fail("nominal: expected an array");
    for (std::size_t k = 0; k < list.size(); ++k) {
      const Reader s(list[k], "$.nominal[" + std::to_string(k) + "]");
      s.allow({"t", "command"});
      sc.nominal.segments.push_back({s.number("t"), RomCommand::from(s.vec<3>("command"))});
    }
  }
  if (r.has("sensor")) {
    const Reader s = r.child("sensor");
    s.allow({"rate", "n_rays", "max_range", "range_noise_std", "dropout_prob"});
    sc.rates.sensor = s.number("rate", sc.rates.sensor);
    sc.sensor.n_rays = s.integer("n_rays", sc.sensor.n_rays);
    sc.sensor.max_range = s.number("max_range", sc.sensor.max_range);
    sc.sensor.range_noise_std = s.number("range_noise_std", sc.sensor.range_noise_std);
    sc.sensor.dropout_prob = s.number("dropout_prob", sc.sensor.dropout_prob);
  }
  if (r.has("rates")) {
    const Reader s = r.child("rates");
    s.allow({"psf", "predictive", "realtime"});
    sc.rates.psf = s.number("psf", sc.rates.psf);
    sc.rates.predictive = s.number("predictive", sc.rates.predictive);
    sc.rates.realtime = s.number("realtime", sc.rates.realtime);
  }
  sc.duration = r.number("duration", sc.duration);
  if (r.has("seed")) {
    const json& v = r.raw("seed");
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
      r.fail("seed: expected a non-negative integer");
    sc.seed = v.get<std::uint64_t>();
  }
  if (r.has("mapper")) read_mapper(r.child("mapper"), sc.mapper);
  if (r.has("poisson")) read_poisson(r.child("poisson"), sc.poisson);
  if (r.has("mpc")) read_mpc(r.child("mpc"), sc.mpc);
  if (r.has("issf")) read_issf(r.child("issf"), sc.issf);
  if (r.has("monitor")) {
    const Reader m = r.child("monitor");
    m.allow({"mu_barrier", "beta"});
    sc.monitor.mu_barrier = m.number("mu_barrier", sc.monitor.mu_barrier);
    sc.monitor.beta = m.number("beta", sc.monitor.beta);
  }
  if (r.has("metrics")) {
    const Reader m = r.child("metrics");
    m.allow({"encounter_h_threshold"});
    if (m.has("encounter_h_threshold")) sc.encounter_h_threshold = m.number("encounter_h_threshold");
  }
  sc.validate();
  return sc;
}

json scenario_to_json(const Scenario& sc) {
  json doc;
  doc["name"] = sc.name;
  doc["arena"] = {{"x_min", sc.arena.x_min}, {"x_max", sc.arena.x_max}, {"y_min", sc.arena.y_min}, {"y_max", sc.arena.y_max}};
  doc["grid"] = {{"resolution", sc.grid.resolution}, {"n_theta", sc.grid.n_theta}};
  doc["static_obstacles"] = json::array();
  for (const auto& p : sc.static_obstacles) {
    json verts = json::array();
    for (const Vec2& v : p) verts.push_back(vec_json(v));
    doc["static_obstacles"].push_back({{"vertices", verts}});
  }
  doc["moving_obstacles"] = json::array();
  for (const auto& d : sc.moving_obstacles)
    doc["moving_obstacles"].push_back(
        {{"radius", d.radius}, {"start", vec_json(d.start)}, {"velocity", vec_json(d.velocity)}, {"start_time", d.start_time}});

  json robot;
  const auto& fp = sc.robot.footprint;
  if (fp.outline.size() >= 3) {
    json verts = json::array();
    for (const Vec2& v : fp.outline) verts.push_back(vec_json(v));
    robot["footprint"] = {{"type", "polygon"}, {"vertices", verts}, {"spacing", 0.5 * sc.grid.resolution}};
  } else {
    robot["footprint"] = {{"type", "point"}};
  }
  robot["padding"] = sc.robot.padding;
  robot["start"] = vec_json(sc.robot.start.vec());
  robot["tracking"] = {{"mode", sc.robot.tracking.mode == TrackingMode::Perfect ? "perfect" : "first_order"},
                       {"time_constant", sc.robot.tracking.time_constant}};
  robot["velocity_limits"] = sc.robot.velocity_limits ? vec_json(*sc.robot.velocity_limits) : json(nullptr);
  doc["robot"] = robot;

  doc["nominal"] = json::array();
  for (const auto& s : sc.nominal.segments) doc["nominal"].push_back({{"t", s.t}, {"command", vec_json(s.command.vec())}});
  doc["sensor"] = {{"rate", sc.rates.sensor},
                   {"n_rays", sc.sensor.n_rays},
                   {"max_range", sc.sensor.max_range},
                   {"range_noise_std", sc.sensor.range_noise_std},
                   {"dropout_prob", sc.sensor.dropout_prob}};
  doc["rates"] = {{"psf", sc.rates.psf}, {"predictive", sc.rates.predictive}, {"realtime", sc.rates.realtime}};
  doc["duration"] = sc.duration;
  doc["seed"] = sc.seed;
  const auto& m = sc.mapper;
  doc["mapper"] = {{"kernel_radius_cells", m.kernel_radius_cells}, {"kernel_sigma", m.kernel_sigma},
                   {"sigma_switch", m.sigma_switch},               {"beta_minus", m.beta_minus},
                   {"beta_plus", m.beta_plus},                     {"tau_high", m.tau_high},
                   {"tau_low", m.tau_low},                         {"initial_confidence", m.initial_confidence}};
  const auto& p = sc.poisson;
  doc["poisson"] = {{"forcing", p.forcing},       {"sor_omega", p.sor_omega}, {"tol", p.tol},
                    {"max_iters", p.max_iters},   {"warm_start", p.warm_start}, {"workers", p.workers},
                    {"check_every", p.check_every}};
  const auto& c = sc.mpc;
  json R = json::array();
  for (int i = 0; i < 3; ++i) R.push_back(vec_json(Vec3(c.R.row(i).transpose())));
  doc["mpc"] = {{"horizon", c.horizon},
                {"dt", c.dt},
                {"rho", c.rho},
                {"R", R},
                {"sqp_max_iters", c.sqp_max_iters},
                {"qp_tol", c.qp_tol},
                {"trust_radius", c.trust_radius},
                {"slack_penalty", c.slack_penalty ? json(*c.slack_penalty) : json("auto")},
                {"input_bounds", c.input_bounds ? vec_json(*c.input_bounds) : json(nullptr)},
                {"exit_slope", c.exit_slope}};
  doc["issf"] = {{"alpha", sc.issf.alpha}, {"epsilon", sc.issf.epsilon}, {"grad_floor", sc.issf.grad_floor}};
  doc["monitor"] = {{"mu_barrier", sc.monitor.mu_barrier}, {"beta", sc.monitor.beta}};
  doc["metrics"] = {{"encounter_h_threshold",
                     sc.encounter_h_threshold ? json(*sc.encounter_h_threshold) : json(nullptr)}};
  return doc;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("scenario file " + path.string() + " is not valid JSON: " + e.what());
  }
  try {
    return scenario_from_json(doc);
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

}  // namespace lsf::io
