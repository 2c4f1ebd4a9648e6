#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "fimsel/select.hpp"

namespace fimsel {

inline constexpr double kSpeedOfLight = 299792458.0;

// ---------------------------------------------------------------------------
// Scenario description: everything needed to reproduce an experiment from a
// single config file plus a master seed.
// ---------------------------------------------------------------------------

struct ToaConfig {
  double sigma = 1.0;  // meters
  int symbol_base = 0;
  std::optional<int> count;  // schedule override
};

struct DopplerConfig {
  // Either a direct noise std in m/s, or a fractional frequency std in parts
  // per billion of the carrier, converted through the carrier wavelength.
  std::optional<double> sigma;  // m/s
  std::optional<double> fractional_ppb;
  double carrier_hz = 1e9;
  std::optional<int> count;

  double sigma_mps() const {
    if (sigma) return *sigma;
    if (fractional_ppb)
      return *fractional_ppb * 1e-9 * carrier_hz * (kSpeedOfLight / carrier_hz);
    throw ConfigError("doppler sensor needs sigma or fractional_ppb");
  }
};

struct CameraConfig {
  CameraIntrinsics intrinsics;
  double sigma_px = 1.0;  // isotropic pixel noise std
  CameraOrientation orientation;
  std::optional<int> count;

  Eigen::Matrix2d pixel_cov() const {
    return sigma_px * sigma_px * Eigen::Matrix2d::Identity();
  }
};

using SensorConfig = std::variant<ToaConfig, DopplerConfig, CameraConfig>;

struct AgentSpec {
  int id = 0;
  int budget = 0;
  std::vector<Waypoint> waypoints;
  std::vector<SensorConfig> sensors;
};

struct Scenario {
  double t_start = 0.0;
  double t_end = 1.0;
  int schedule_count = 100;  // default measurements per sensor, uniform
  std::uint64_t seed = 0;
  // Flat prior over the layout implied by the agents' sensors: motion block
  // first, then nuisance blocks in agent/sensor declaration order.
  VecX prior_mean;
  MatX prior_cov;
  std::vector<AgentSpec> agents;

  // Layout implied by the declared sensors.
  LayoutPtr layout() const;
  GaussianPrior prior() const;
};

// ---------------------------------------------------------------------------
// Config file round trip. The on-disk format is strict JSON: unknown keys
// anywhere are an error, required keys must be present.
// ---------------------------------------------------------------------------

std::string scenario_to_config(const Scenario& scenario);
Scenario scenario_from_config(const std::string& text);
Scenario load_scenario(const std::string& path);

// Builtin tags: "example1", "example2", "example3", "cooperative".
bool is_builtin_scenario(const std::string& tag);
Scenario builtin_scenario(const std::string& tag);

// ---------------------------------------------------------------------------
// Candidate construction
// ---------------------------------------------------------------------------

struct BuiltPools {
  LayoutPtr layout;
  GaussianPrior prior;
  MatX base_information;               // inverse prior covariance
  std::vector<CandidatePool> pools;    // one per agent, agent order
  // Full schedule per agent, indexed by atom id; entries whose geometry was
  // degenerate at the linearization point carry no atom.
  std::vector<std::vector<MeasurementSpec>> schedule;
  int dropped = 0;
};

// Builds candidate atoms for every scheduled measurement, linearized at the
// prior mean. Degenerate candidates are dropped and counted; atom ids stay
// aligned with schedule indices.
BuiltPools build_pools(const Scenario& scenario);

}  // namespace fimsel
