#include "fimsel/scenario.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace fimsel {

using nlohmann::json;

namespace {

// Strict schema: every object must carry exactly known keys.
void check_keys(const json& j, const char* where,
                std::initializer_list<const char*> allowed) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed)
      if (it.key() == k) ok = true;
    if (!ok)
      throw ConfigError(std::string("unknown key '") + it.key() + "' in " +
                        where);
  }
}

const json& require(const json& j, const char* key, const char* where) {
  auto it = j.find(key);
  if (it == j.end())
    throw ConfigError(std::string("missing key '") + key + "' in " + where);
  return *it;
}

double as_number(const json& j, const char* what) {
  if (!j.is_number())
    throw ConfigError(std::string(what) + " must be a number");
  return j.get<double>();
}

int as_int(const json& j, const char* what) {
  if (!j.is_number_integer())
    throw ConfigError(std::string(what) + " must be an integer");
  return j.get<int>();
}

Vec3 as_vec3(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 3)
    throw ConfigError(std::string(what) + " must be an array of 3 numbers");
  return Vec3(as_number(j[0], what), as_number(j[1], what),
              as_number(j[2], what));
}

json vec3_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

json sensor_to_json(const SensorConfig& cfg) {
  json j;
  if (const auto* t = std::get_if<ToaConfig>(&cfg)) {
    j["type"] = "toa";
    j["sigma"] = t->sigma;
    j["symbol_base"] = t->symbol_base;
    if (t->count) j["count"] = *t->count;
  } else if (const auto* d = std::get_if<DopplerConfig>(&cfg)) {
    j["type"] = "doppler";
    if (d->sigma) j["sigma"] = *d->sigma;
    if (d->fractional_ppb) {
      j["fractional_ppb"] = *d->fractional_ppb;
      j["carrier_hz"] = d->carrier_hz;
    }
    if (d->count) j["count"] = *d->count;
  } else {
    const auto& c = std::get<CameraConfig>(cfg);
    j["type"] = "camera";
    j["fx"] = c.intrinsics.fx;
    j["fy"] = c.intrinsics.fy;
    j["skew"] = c.intrinsics.skew;
    j["ox"] = c.intrinsics.ox;
    j["oy"] = c.intrinsics.oy;
    j["sigma_px"] = c.sigma_px;
    json o;
    if (c.orientation.mode == CameraOrientation::Mode::LookAt) {
      o["mode"] = "look_at";
      o["point"] = vec3_json(c.orientation.look_at);
      o["up"] = vec3_json(c.orientation.up);
    } else {
      o["mode"] = "fixed";
      json rows = json::array();
      for (int r = 0; r < 3; ++r)
        rows.push_back(json::array({c.orientation.fixed(r, 0),
                                    c.orientation.fixed(r, 1),
                                    c.orientation.fixed(r, 2)}));
      o["rows"] = rows;
    }
    j["orientation"] = o;
    if (c.count) j["count"] = *c.count;
  }
  return j;
}

SensorConfig sensor_from_json(const json& j) {
  const std::string type = require(j, "type", "sensor").get<std::string>();
  if (type == "toa") {
    check_keys(j, "toa sensor", {"type", "sigma", "symbol_base", "count"});
    ToaConfig t;
    t.sigma = as_number(require(j, "sigma", "toa sensor"), "toa sigma");
    if (j.contains("symbol_base"))
      t.symbol_base = as_int(j["symbol_base"], "toa symbol_base");
    if (j.contains("count")) t.count = as_int(j["count"], "toa count");
    if (t.sigma <= 0.0) throw ConfigError("toa sigma must be positive");
    return t;
  }
  if (type == "doppler") {
    check_keys(j, "doppler sensor",
               {"type", "sigma", "fractional_ppb", "carrier_hz", "count"});
    DopplerConfig d;
    if (j.contains("sigma"))
      d.sigma = as_number(j["sigma"], "doppler sigma");
    if (j.contains("fractional_ppb"))
      d.fractional_ppb = as_number(j["fractional_ppb"], "doppler ppb");
    if (j.contains("carrier_hz"))
      d.carrier_hz = as_number(j["carrier_hz"], "doppler carrier");
    if (!d.sigma && !d.fractional_ppb)
      throw ConfigError("doppler sensor needs sigma or fractional_ppb");
    if (j.contains("count")) d.count = as_int(j["count"], "doppler count");
    if (d.sigma_mps() <= 0.0)
      throw ConfigError("doppler sigma must be positive");
    return d;
  }
  if (type == "camera") {
    check_keys(j, "camera sensor",
               {"type", "fx", "fy", "skew", "ox", "oy", "sigma_px",
                "orientation", "count"});
    CameraConfig c;
    c.intrinsics.fx = as_number(require(j, "fx", "camera"), "camera fx");
    c.intrinsics.fy = as_number(require(j, "fy", "camera"), "camera fy");
    if (j.contains("skew"))
      c.intrinsics.skew = as_number(j["skew"], "camera skew");
    if (j.contains("ox")) c.intrinsics.ox = as_number(j["ox"], "camera ox");
    if (j.contains("oy")) c.intrinsics.oy = as_number(j["oy"], "camera oy");
    c.sigma_px =
        as_number(require(j, "sigma_px", "camera"), "camera sigma_px");
    if (c.sigma_px <= 0.0) throw ConfigError("camera sigma_px must be positive");
    const json& o = require(j, "orientation", "camera");
    const std::string mode =
        require(o, "mode", "camera orientation").get<std::string>();
    if (mode == "look_at") {
      check_keys(o, "camera orientation", {"mode", "point", "up"});
      c.orientation.mode = CameraOrientation::Mode::LookAt;
      c.orientation.look_at =
          as_vec3(require(o, "point", "orientation"), "orientation point");
      if (o.contains("up")) c.orientation.up = as_vec3(o["up"], "orientation up");
    } else if (mode == "fixed") {
      check_keys(o, "camera orientation", {"mode", "rows"});
      c.orientation.mode = CameraOrientation::Mode::Fixed;
      const json& rows = require(o, "rows", "orientation");
      if (!rows.is_array() || rows.size() != 3)
        throw ConfigError("orientation rows must be 3 arrays of 3");
      for (int r = 0; r < 3; ++r) {
        const Vec3 row = as_vec3(rows[r], "orientation row");
        c.orientation.fixed.row(r) = row.transpose();
      }
    } else {
      throw ConfigError("unknown camera orientation mode: " + mode);
    }
    if (j.contains("count")) c.count = as_int(j["count"], "camera count");
    return c;
  }
  throw ConfigError("unknown sensor type: " + type);
}

std::string sensor_slot_id(int agent_id, int slot) {
  return "a" + std::to_string(agent_id) + ".s" + std::to_string(slot);
}

}  // namespace

LayoutPtr Scenario::layout() const {
  std::vector<NuisanceBlock> blocks;
  for (const auto& agent : agents) {
    for (std::size_t s = 0; s < agent.sensors.size(); ++s) {
      const std::string id = sensor_slot_id(agent.id, static_cast<int>(s));
      if (std::holds_alternative<ToaConfig>(agent.sensors[s]))
        blocks.push_back({id, NuisanceKind::Toa});
      else if (std::holds_alternative<DopplerConfig>(agent.sensors[s]))
        blocks.push_back({id, NuisanceKind::Doppler});
    }
  }
  return make_layout(std::move(blocks));
}

GaussianPrior Scenario::prior() const {
  auto lay = layout();
  if (prior_mean.size() != lay->total_dim())
    throw ConfigError("prior mean length does not match the parameter layout");
  if (prior_cov.rows() != lay->total_dim() ||
      prior_cov.cols() != lay->total_dim())
    throw ConfigError("prior covariance does not match the parameter layout");
  return GaussianPrior(ParamVector(lay, prior_mean), prior_cov);
}

std::string scenario_to_config(const Scenario& s) {
  json j;
  j["window"] = {{"t_start", s.t_start}, {"t_end", s.t_end}};
  j["schedule"] = {{"count", s.schedule_count}, {"spacing", "uniform"}};
  j["seed"] = s.seed;
  json prior;
  prior["mean"] = json::array();
  for (int i = 0; i < s.prior_mean.size(); ++i)
    prior["mean"].push_back(s.prior_mean(i));
  bool diag = true;
  for (int r = 0; r < s.prior_cov.rows() && diag; ++r)
    for (int c = 0; c < s.prior_cov.cols() && diag; ++c)
      if (r != c && s.prior_cov(r, c) != 0.0) diag = false;
  if (diag) {
    prior["diag"] = json::array();
    for (int i = 0; i < s.prior_cov.rows(); ++i)
      prior["diag"].push_back(s.prior_cov(i, i));
  } else {
    json cov = json::array();
    for (int r = 0; r < s.prior_cov.rows(); ++r) {
      json row = json::array();
      for (int c = 0; c < s.prior_cov.cols(); ++c)
        row.push_back(s.prior_cov(r, c));
      cov.push_back(row);
    }
    prior["covariance"] = cov;
  }
  j["prior"] = prior;
  json agents = json::array();
  for (const auto& a : s.agents) {
    json ja;
    ja["id"] = a.id;
    ja["budget"] = a.budget;
    json wps = json::array();
    for (const auto& w : a.waypoints)
      wps.push_back({{"t", w.t}, {"pos", vec3_json(w.pos)}});
    ja["waypoints"] = wps;
    json sensors = json::array();
    for (const auto& cfg : a.sensors) sensors.push_back(sensor_to_json(cfg));
    ja["sensors"] = sensors;
    agents.push_back(ja);
  }
  j["agents"] = agents;
  return j.dump(2) + "\n";
}

Scenario scenario_from_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config root must be an object");
  check_keys(j, "config root",
             {"window", "schedule", "seed", "prior", "agents"});

  Scenario s;
  const json& w = require(j, "window", "config root");
  check_keys(w, "window", {"t_start", "t_end"});
  s.t_start = as_number(require(w, "t_start", "window"), "t_start");
  s.t_end = as_number(require(w, "t_end", "window"), "t_end");
  if (!(s.t_end > s.t_start))
    throw ConfigError("window t_end must exceed t_start");

  const json& sch = require(j, "schedule", "config root");
  check_keys(sch, "schedule", {"count", "spacing"});
  s.schedule_count = as_int(require(sch, "count", "schedule"), "schedule count");
  if (s.schedule_count < 1)
    throw ConfigError("schedule count must be positive");
  if (sch.contains("spacing") &&
      sch["spacing"].get<std::string>() != "uniform")
    throw ConfigError("schedule spacing must be 'uniform'");

  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned() && !j["seed"].is_number_integer())
      throw ConfigError("seed must be a nonnegative integer");
    s.seed = j["seed"].get<std::uint64_t>();
  }

  const json& agents = require(j, "agents", "config root");
  if (!agents.is_array() || agents.empty())
    throw ConfigError("agents must be a nonempty array");
  for (const auto& ja : agents) {
    check_keys(ja, "agent", {"id", "budget", "waypoints", "sensors"});
    AgentSpec a;
    a.id = as_int(require(ja, "id", "agent"), "agent id");
    a.budget = as_int(require(ja, "budget", "agent"), "agent budget");
    if (a.budget < 0) throw ConfigError("agent budget must be nonnegative");
    const json& wps = require(ja, "waypoints", "agent");
    if (!wps.is_array() || wps.empty())
      throw ConfigError("agent waypoints must be a nonempty array");
    for (const auto& jw : wps) {
      check_keys(jw, "waypoint", {"t", "pos"});
      Waypoint wp;
      wp.t = as_number(require(jw, "t", "waypoint"), "waypoint t");
      wp.pos = as_vec3(require(jw, "pos", "waypoint"), "waypoint pos");
      a.waypoints.push_back(wp);
    }
    const json& sensors = require(ja, "sensors", "agent");
    if (!sensors.is_array())
      throw ConfigError("agent sensors must be an array");
    for (const auto& js : sensors) a.sensors.push_back(sensor_from_json(js));
    for (const auto& other : s.agents)
      if (other.id == a.id) throw ConfigError("duplicate agent id");
    s.agents.push_back(std::move(a));
  }

  const json& prior = require(j, "prior", "config root");
  check_keys(prior, "prior", {"mean", "diag", "covariance"});
  const json& mean = require(prior, "mean", "prior");
  if (!mean.is_array()) throw ConfigError("prior mean must be an array");
  s.prior_mean.resize(mean.size());
  for (std::size_t i = 0; i < mean.size(); ++i)
    s.prior_mean(static_cast<int>(i)) = as_number(mean[i], "prior mean");
  const int p = static_cast<int>(mean.size());
  if (prior.contains("diag") == prior.contains("covariance"))
    throw ConfigError("prior needs exactly one of diag or covariance");
  if (prior.contains("diag")) {
    const json& d = prior["diag"];
    if (!d.is_array() || static_cast<int>(d.size()) != p)
      throw ConfigError("prior diag must match the mean length");
    s.prior_cov = MatX::Zero(p, p);
    for (int i = 0; i < p; ++i)
      s.prior_cov(i, i) = as_number(d[i], "prior diag");
  } else {
    const json& cov = prior["covariance"];
    if (!cov.is_array() || static_cast<int>(cov.size()) != p)
      throw ConfigError("prior covariance must be a square matrix");
    s.prior_cov.resize(p, p);
    for (int r = 0; r < p; ++r) {
      if (!cov[r].is_array() || static_cast<int>(cov[r].size()) != p)
        throw ConfigError("prior covariance must be a square matrix");
      for (int c = 0; c < p; ++c)
        s.prior_cov(r, c) = as_number(cov[r][c], "prior covariance");
    }
  }

  // Validate against the implied layout and prior shape up front.
  s.prior();
  for (const auto& a : s.agents) AgentPath(a.waypoints);
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return scenario_from_config(ss.str());
}

// ---------------------------------------------------------------------------
// Builtins. Room-scale single-target scenes: a prior-pinned near-stationary
// target at the origin observed by one or two slow agents gliding in from
// ~30 m out, turning as they pass. The spatial scale is chosen so that, with
// the documented camera and Doppler noise levels, neither sensor dominates:
// the whitened per-meter information of a camera row (f / (sigma_px * rho))
// and of a Doppler row (|v_perp| / (sigma * rho)) stay within a small factor
// of each other, which is the regime where the selector mixes the two.
// ---------------------------------------------------------------------------

namespace {

std::vector<Waypoint> approach_path(double mirror_y) {
  auto m = [mirror_y](double x, double y, double z) {
    return Vec3(x, mirror_y * y, z);
  };
  // The far leg eats most of the window, so a uniform schedule puts most
  // candidates at long range and the short close pass carries most of the
  // obtainable information.
  return {{0.0, m(-30.0, -1.25, 4.0)},
          {70.0, m(-12.5, -0.5, 4.0)},
          {85.0, m(-4.0, 0.25, 4.0)},
          {95.0, m(0.5, 2.25, 4.0)},
          {100.0, m(2.0, 4.5, 4.0)}};
}

CameraConfig standard_camera() {
  CameraConfig cam;
  cam.intrinsics = {50.0, 50.0, 0.0, 0.0, 0.0};
  cam.sigma_px = 0.8;
  cam.orientation.mode = CameraOrientation::Mode::LookAt;
  cam.orientation.look_at = Vec3::Zero();
  cam.orientation.up = Vec3(0, 0, 1);
  return cam;
}

DopplerConfig standard_doppler() {
  DopplerConfig d;
  // Frequency noise of 0.033 Hz on a 1 GHz carrier, expressed as range rate
  // through the carrier wavelength (about 0.0099 m/s).
  d.sigma = 0.033 * (kSpeedOfLight / 1e9);
  return d;
}

// Near-stationary target: loose position prior; velocity and acceleration
// pinned so their whole-window displacement (sigma*T and sigma*T^2/2) stays
// near one percent of the position scale, which keeps the scene effectively
// static without zeroing the motion dimensions out of the information
// matrix.
void stationary_prior(Scenario& s, int extra_dims, double nuisance_sigma) {
  const int p = 9 + extra_dims;
  s.prior_mean = VecX::Zero(p);
  VecX d(p);
  const double pos_sigma = 0.75;
  const double window = s.t_end - s.t_start;
  const double vel_sigma = 0.01 * pos_sigma / window;
  const double acc_sigma = 0.02 * pos_sigma / (window * window);
  for (int i = 0; i < 3; ++i) d(i) = pos_sigma * pos_sigma;
  for (int i = 3; i < 6; ++i) d(i) = vel_sigma * vel_sigma;
  for (int i = 6; i < 9; ++i) d(i) = acc_sigma * acc_sigma;
  for (int i = 9; i < p; ++i) d(i) = nuisance_sigma * nuisance_sigma;
  s.prior_cov = d.asDiagonal();
}

}  // namespace

bool is_builtin_scenario(const std::string& tag) {
  return tag == "example1" || tag == "example2" || tag == "example3" ||
         tag == "cooperative";
}

Scenario builtin_scenario(const std::string& tag) {
  Scenario s;
  s.t_start = 0.0;
  s.t_end = 100.0;
  s.schedule_count = 1000;
  s.seed = 0;

  if (tag == "example1") {
    AgentSpec a;
    a.id = 0;
    a.budget = 10;
    a.waypoints = approach_path(1.0);
    a.sensors.push_back(standard_camera());
    s.agents.push_back(a);
    stationary_prior(s, 0, 0.0);
    return s;
  }
  if (tag == "example2") {
    AgentSpec a;
    a.id = 0;
    a.budget = 10;
    a.waypoints = approach_path(1.0);
    a.sensors.push_back(standard_camera());
    a.sensors.push_back(standard_doppler());
    s.agents.push_back(a);
    stationary_prior(s, 1, 5.0);
    return s;
  }
  if (tag == "example3" || tag == "cooperative") {
    for (int i = 0; i < 2; ++i) {
      AgentSpec a;
      a.id = i;
      a.budget = 10;
      a.waypoints = approach_path(i == 0 ? 1.0 : -1.0);
      a.sensors.push_back(standard_camera());
      a.sensors.push_back(standard_doppler());
      s.agents.push_back(a);
    }
    stationary_prior(s, 2, 5.0);
    return s;
  }
  throw ConfigError("unknown builtin scenario: " + tag);
}

BuiltPools build_pools(const Scenario& scenario) {
  BuiltPools out;
  out.layout = scenario.layout();
  out.prior = scenario.prior();
  out.base_information = prior_information(out.prior);
  const ParamVector& ref = out.prior.mean;

  for (const auto& agent : scenario.agents) {
    AgentPath path(agent.waypoints);
    CandidatePool pool;
    pool.agent_id = agent.id;
    std::vector<MeasurementSpec> agent_specs;

    for (std::size_t slot = 0; slot < agent.sensors.size(); ++slot) {
      const auto& cfg = agent.sensors[slot];
      const std::string id = sensor_slot_id(agent.id, static_cast<int>(slot));

      Sensor sensor;
      int count = scenario.schedule_count;
      int symbol_base = 0;
      if (const auto* t = std::get_if<ToaConfig>(&cfg)) {
        sensor = ToaSensor{id, path, t->sigma, t->symbol_base};
        symbol_base = t->symbol_base;
        if (t->count) count = *t->count;
      } else if (const auto* d = std::get_if<DopplerConfig>(&cfg)) {
        sensor = DopplerSensor{id, path, d->sigma_mps()};
        if (d->count) count = *d->count;
      } else {
        const auto& c = std::get<CameraConfig>(cfg);
        CameraSensor cam;
        cam.id = id;
        cam.path = path;
        cam.intrinsics = c.intrinsics;
        cam.orientation = c.orientation;
        cam.pixel_cov = c.pixel_cov();
        sensor = cam;
        if (c.count) count = *c.count;
      }
      auto shared = std::make_shared<const Sensor>(std::move(sensor));

      for (int k = 0; k < count; ++k) {
        MeasurementSpec spec;
        spec.sensor = shared;
        spec.t_start = scenario.t_start;
        spec.time = count == 1 ? scenario.t_start
                               : scenario.t_start + k * (scenario.t_end -
                                                         scenario.t_start) /
                                                        (count - 1);
        spec.symbol_index = symbol_base + k;
        agent_specs.push_back(spec);
      }
    }

    for (std::size_t i = 0; i < agent_specs.size(); ++i) {
      const auto& spec = agent_specs[i];
      try {
        pool.atoms.push_back(
            atom_from_measurement(static_cast<int>(i), ref, spec));
        pool.meta.push_back({sensor_type_name(*spec.sensor),
                             sensor_id(*spec.sensor), spec.time});
      } catch (const GeometryError&) {
        ++out.dropped;
      }
    }
    pool.budget =
        std::min<int>(agent.budget, static_cast<int>(pool.atoms.size()));
    out.pools.push_back(std::move(pool));
    out.schedule.push_back(std::move(agent_specs));
  }
  return out;
}

}  // namespace fimsel
