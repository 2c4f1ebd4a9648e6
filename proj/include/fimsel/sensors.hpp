#pragma once

#include <memory>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "fimsel/params.hpp"

namespace fimsel {

// Range guard: sensor and predicted target position must stay farther apart
// than this for range and range-rate models.
inline constexpr double kMinRange = 1e-6;
// Depth guard for the pinhole model: the target must sit in front of the
// camera by at least this much.
inline constexpr double kMinDepth = 1e-3;

// ---------------------------------------------------------------------------
// Sensor descriptions. Each sensor rides on an agent path and owns a stable
// string id that names both its nuisance block in the parameter layout and
// its noise stream.
// ---------------------------------------------------------------------------

// Time of arrival expressed in meters: range plus a per-symbol clock drift
// and a constant clock offset, both estimated as nuisance parameters.
struct ToaSensor {
  std::string id;
  AgentPath path;
  double sigma = 1.0;      // noise std, meters
  int symbol_base = 0;     // symbol index of the first scheduled measurement
};

// Doppler expressed as velocity: a carrier offset nuisance minus range rate.
struct DopplerSensor {
  std::string id;
  AgentPath path;
  double sigma = 1.0;  // noise std, m/s
};

struct CameraIntrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double skew = 0.0;
  double ox = 0.0;
  double oy = 0.0;

  Eigen::Matrix3d matrix() const {
    Eigen::Matrix3d a;
    a << fx, skew, ox, 0.0, fy, oy, 0.0, 0.0, 1.0;
    return a;
  }
};

// Camera orientation over time: either a fixed world-to-camera rotation or a
// gimbal that keeps a fixed world point on the optical axis.
struct CameraOrientation {
  enum class Mode { Fixed, LookAt };
  Mode mode = Mode::Fixed;
  Eigen::Matrix3d fixed = Eigen::Matrix3d::Identity();  // world -> camera
  Vec3 look_at = Vec3::Zero();
  Vec3 up = Vec3(0, 0, 1);
};

struct CameraSensor {
  std::string id;
  AgentPath path;
  CameraIntrinsics intrinsics;
  CameraOrientation orientation;
  Eigen::Matrix2d pixel_cov = Eigen::Matrix2d::Identity();

  // World-to-camera rotation at time t.
  Eigen::Matrix3d rotation(double t) const;
};

using Sensor = std::variant<ToaSensor, DopplerSensor, CameraSensor>;
using SensorPtr = std::shared_ptr<const Sensor>;

const std::string& sensor_id(const Sensor& s);
const AgentPath& sensor_path(const Sensor& s);
const char* sensor_type_name(const Sensor& s);

// One scheduled measurement: which sensor, when, and (for ToA) which symbol.
struct MeasurementSpec {
  SensorPtr sensor;
  double time = 0.0;
  double t_start = 0.0;    // window start the motion model is anchored to
  int symbol_index = 0;    // ToA only
  int dim() const;
};

struct Measurement {
  MeasurementSpec spec;
  VecX value;
};

// ---------------------------------------------------------------------------
// Measurement means. Dimensions: ToA and Doppler scalar, camera 2 (pixels).
// ---------------------------------------------------------------------------

double toa_mean(const ParamVector& theta, const MeasurementSpec& spec);
double doppler_mean(const ParamVector& theta, const MeasurementSpec& spec);
Eigen::Vector2d camera_mean(const ParamVector& theta,
                            const MeasurementSpec& spec);
VecX measurement_mean(const ParamVector& theta, const MeasurementSpec& spec);

// Projection rows for the pinhole model at time t: the 2x3 pixel rows and the
// 1x3 depth row of A * R(t), exposed so tests can exercise scale invariance.
std::pair<Eigen::Matrix<double, 2, 3>, Eigen::RowVector3d>
camera_projection_rows(const CameraSensor& cam, double t);

// ---------------------------------------------------------------------------
// Analytic Jacobians of the means with respect to the full parameter vector.
// Rows are measurement components, columns follow the layout. The nonzero
// columns are confined to the motion block plus the sensor's nuisance block,
// which the sparse form records explicitly.
// ---------------------------------------------------------------------------

struct JacobianSegment {
  int col = 0;
  MatX block;  // rows x width
};

struct JacobianBlocks {
  int rows = 0;
  int dim = 0;
  std::vector<JacobianSegment> segments;

  MatX dense() const {
    MatX j = MatX::Zero(rows, dim);
    for (const auto& s : segments)
      j.block(0, s.col, rows, s.block.cols()) = s.block;
    return j;
  }
};

MatX toa_jacobian(const ParamVector& theta, const MeasurementSpec& spec);
MatX doppler_jacobian(const ParamVector& theta, const MeasurementSpec& spec);
MatX camera_jacobian(const ParamVector& theta, const MeasurementSpec& spec);
MatX measurement_jacobian(const ParamVector& theta,
                          const MeasurementSpec& spec);
JacobianBlocks measurement_jacobian_blocks(const ParamVector& theta,
                                           const MeasurementSpec& spec);

// Noise covariance of one measurement (1x1 for ToA/Doppler, 2x2 for camera).
MatX measurement_noise(const MeasurementSpec& spec);

// ---------------------------------------------------------------------------
// Synthesis: exact means plus Gaussian noise. Each sensor consumes its own
// stream derived from (seed, sensor id), in spec order within the stream, so
// the draws for one sensor do not depend on which other sensors are present.
// ---------------------------------------------------------------------------

std::vector<Measurement> synthesize(const ParamVector& theta_true,
                                    const std::vector<MeasurementSpec>& specs,
                                    std::uint64_t seed);

}  // namespace fimsel
