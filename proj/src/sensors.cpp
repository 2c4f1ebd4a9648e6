#include "fimsel/sensors.hpp"

#include <map>

#include <Eigen/Cholesky>

#include "fimsel/rng.hpp"

namespace fimsel {

namespace {

struct Geometry {
  Vec3 rel;      // q - p
  double range;  // |q - p|
  Vec3 u;        // rel / range
  double dt;     // t - t_start
};

Geometry relative_geometry(const ParamVector& theta,
                           const MeasurementSpec& spec) {
  Geometry g;
  g.dt = spec.time - spec.t_start;
  const Vec3 q = motion_position(theta, spec.time, spec.t_start);
  const Vec3 p = sensor_path(*spec.sensor).position(spec.time);
  g.rel = q - p;
  g.range = g.rel.norm();
  if (g.range < kMinRange)
    throw SingularGeometryError("sensor and target coincide");
  g.u = g.rel / g.range;
  return g;
}

// Scatters a 1x3 or 2x3 spatial gradient into motion-block segments using the
// constant position Jacobian structure [I, dt I, dt^2/2 I].
JacobianBlocks motion_blocks(const MatX& dspatial, double dt, int p) {
  JacobianBlocks jb;
  jb.rows = static_cast<int>(dspatial.rows());
  jb.dim = p;
  MatX block(jb.rows, ParamLayout::kMotionDim);
  block << dspatial, dt * dspatial, 0.5 * dt * dt * dspatial;
  jb.segments.push_back({0, std::move(block)});
  return jb;
}

const ToaSensor& as_toa(const MeasurementSpec& spec) {
  if (auto* s = std::get_if<ToaSensor>(spec.sensor.get())) return *s;
  throw UsageError("measurement spec is not ToA");
}

const DopplerSensor& as_doppler(const MeasurementSpec& spec) {
  if (auto* s = std::get_if<DopplerSensor>(spec.sensor.get())) return *s;
  throw UsageError("measurement spec is not Doppler");
}

const CameraSensor& as_camera(const MeasurementSpec& spec) {
  if (auto* s = std::get_if<CameraSensor>(spec.sensor.get())) return *s;
  throw UsageError("measurement spec is not camera");
}

}  // namespace

Eigen::Matrix3d CameraSensor::rotation(double t) const {
  if (orientation.mode == CameraOrientation::Mode::Fixed)
    return orientation.fixed;
  // Look-at gimbal: optical axis (camera z) from the agent to the fixed
  // world point; x spans the horizontal image direction.
  const Vec3 p = path.position(t);
  Vec3 z = orientation.look_at - p;
  const double n = z.norm();
  if (n < kMinRange)
    throw SingularGeometryError("camera coincides with look-at point");
  z /= n;
  Vec3 x = z.cross(orientation.up);
  if (x.norm() < 1e-9) {
    // Optical axis parallel to the up hint; fall back to an arbitrary
    // horizontal companion.
    x = z.cross(Vec3(1, 0, 0));
    if (x.norm() < 1e-9) x = z.cross(Vec3(0, 1, 0));
  }
  x.normalize();
  const Vec3 y = z.cross(x);
  Eigen::Matrix3d r;  // rows are camera axes in world coordinates
  r.row(0) = x.transpose();
  r.row(1) = y.transpose();
  r.row(2) = z.transpose();
  return r;
}

const std::string& sensor_id(const Sensor& s) {
  return std::visit([](const auto& v) -> const std::string& { return v.id; },
                    s);
}

const AgentPath& sensor_path(const Sensor& s) {
  return std::visit(
      [](const auto& v) -> const AgentPath& { return v.path; }, s);
}

const char* sensor_type_name(const Sensor& s) {
  if (std::holds_alternative<ToaSensor>(s)) return "toa";
  if (std::holds_alternative<DopplerSensor>(s)) return "doppler";
  return "camera";
}

int MeasurementSpec::dim() const {
  return std::holds_alternative<CameraSensor>(*sensor) ? 2 : 1;
}

double toa_mean(const ParamVector& theta, const MeasurementSpec& spec) {
  const auto& sensor = as_toa(spec);
  const auto g = relative_geometry(theta, spec);
  const VecX nu = theta.nuisance(sensor.id);  // (drift, offset)
  return g.range + nu(0) * spec.symbol_index + nu(1);
}

double doppler_mean(const ParamVector& theta, const MeasurementSpec& spec) {
  const auto& sensor = as_doppler(spec);
  const auto g = relative_geometry(theta, spec);
  const Vec3 v = motion_velocity(theta, spec.time, spec.t_start) -
                 sensor.path.velocity(spec.time);
  const double range_rate = g.u.dot(v);
  return theta.nuisance(sensor.id)(0) - range_rate;
}

std::pair<Eigen::Matrix<double, 2, 3>, Eigen::RowVector3d>
camera_projection_rows(const CameraSensor& cam, double t) {
  const Eigen::Matrix3d ar = cam.intrinsics.matrix() * cam.rotation(t);
  return {ar.topRows<2>(), ar.row(2)};
}

Eigen::Vector2d camera_mean(const ParamVector& theta,
                            const MeasurementSpec& spec) {
  const auto& sensor = as_camera(spec);
  const auto g = relative_geometry(theta, spec);
  const auto [pix, depth_row] = camera_projection_rows(sensor, spec.time);
  const double depth = depth_row * g.rel;
  if (depth < kMinDepth) throw BehindCameraError("target behind camera");
  return (pix * g.rel) / depth;
}

VecX measurement_mean(const ParamVector& theta, const MeasurementSpec& spec) {
  if (std::holds_alternative<CameraSensor>(*spec.sensor))
    return camera_mean(theta, spec);
  VecX y(1);
  y(0) = std::holds_alternative<ToaSensor>(*spec.sensor)
             ? toa_mean(theta, spec)
             : doppler_mean(theta, spec);
  return y;
}

JacobianBlocks toa_jacobian_blocks(const ParamVector& theta,
                                   const MeasurementSpec& spec) {
  const auto& sensor = as_toa(spec);
  const auto g = relative_geometry(theta, spec);
  JacobianBlocks jb =
      motion_blocks(g.u.transpose(), g.dt, theta.layout->total_dim());
  MatX nuis(1, 2);
  nuis << static_cast<double>(spec.symbol_index), 1.0;
  jb.segments.push_back({theta.layout->nuisance_offset(sensor.id), nuis});
  return jb;
}

JacobianBlocks doppler_jacobian_blocks(const ParamVector& theta,
                                       const MeasurementSpec& spec) {
  const auto& sensor = as_doppler(spec);
  const auto g = relative_geometry(theta, spec);
  const Vec3 v = motion_velocity(theta, spec.time, spec.t_start) -
                 sensor.path.velocity(spec.time);
  // d(range rate)/dq is the transverse part of the relative velocity over
  // range; d(range rate)/dqdot is the line of sight. The mean subtracts the
  // range rate, hence the sign flips.
  const Eigen::RowVector3d drr_dq =
      (v.transpose() * (Eigen::Matrix3d::Identity() - g.u * g.u.transpose())) /
      g.range;
  const Eigen::RowVector3d u_t = g.u.transpose();

  JacobianBlocks jb;
  jb.rows = 1;
  jb.dim = theta.layout->total_dim();
  MatX block(1, ParamLayout::kMotionDim);
  block << -drr_dq, -(g.dt * drr_dq + u_t),
      -(0.5 * g.dt * g.dt * drr_dq + g.dt * u_t);
  jb.segments.push_back({0, std::move(block)});
  MatX nuis(1, 1);
  nuis << 1.0;
  jb.segments.push_back({theta.layout->nuisance_offset(sensor.id), nuis});
  return jb;
}

JacobianBlocks camera_jacobian_blocks(const ParamVector& theta,
                                      const MeasurementSpec& spec) {
  const auto& sensor = as_camera(spec);
  const auto g = relative_geometry(theta, spec);
  const auto [pix, depth_row] = camera_projection_rows(sensor, spec.time);
  const double depth = depth_row * g.rel;
  if (depth < kMinDepth) throw BehindCameraError("target behind camera");
  const Eigen::Vector2d num = pix * g.rel;
  // Quotient rule for I = (M r) / (m r):
  //   dI/dq = M / d - (M r) m / d^2.
  const Eigen::Matrix<double, 2, 3> dpix =
      pix / depth - num * depth_row / (depth * depth);
  return motion_blocks(dpix, g.dt, theta.layout->total_dim());
}

JacobianBlocks measurement_jacobian_blocks(const ParamVector& theta,
                                           const MeasurementSpec& spec) {
  if (std::holds_alternative<ToaSensor>(*spec.sensor))
    return toa_jacobian_blocks(theta, spec);
  if (std::holds_alternative<DopplerSensor>(*spec.sensor))
    return doppler_jacobian_blocks(theta, spec);
  return camera_jacobian_blocks(theta, spec);
}

MatX toa_jacobian(const ParamVector& theta, const MeasurementSpec& spec) {
  return toa_jacobian_blocks(theta, spec).dense();
}

MatX doppler_jacobian(const ParamVector& theta, const MeasurementSpec& spec) {
  return doppler_jacobian_blocks(theta, spec).dense();
}

MatX camera_jacobian(const ParamVector& theta, const MeasurementSpec& spec) {
  return camera_jacobian_blocks(theta, spec).dense();
}

MatX measurement_jacobian(const ParamVector& theta,
                          const MeasurementSpec& spec) {
  return measurement_jacobian_blocks(theta, spec).dense();
}

MatX measurement_noise(const MeasurementSpec& spec) {
  if (auto* s = std::get_if<ToaSensor>(spec.sensor.get())) {
    MatX n(1, 1);
    n(0, 0) = s->sigma * s->sigma;
    return n;
  }
  if (auto* s = std::get_if<DopplerSensor>(spec.sensor.get())) {
    MatX n(1, 1);
    n(0, 0) = s->sigma * s->sigma;
    return n;
  }
  return std::get<CameraSensor>(*spec.sensor).pixel_cov;
}

std::vector<Measurement> synthesize(const ParamVector& theta_true,
                                    const std::vector<MeasurementSpec>& specs,
                                    std::uint64_t seed) {
  std::map<std::string, std::mt19937_64> streams;
  std::vector<Measurement> out;
  out.reserve(specs.size());
  for (const auto& spec : specs) {
    const std::string& id = sensor_id(*spec.sensor);
    auto it = streams.find(id);
    if (it == streams.end())
      it = streams.emplace(id, std::mt19937_64(derive_seed(seed, id))).first;
    auto& eng = it->second;

    VecX value = measurement_mean(theta_true, spec);
    const VecX z = gaussian_vector(eng, spec.dim());
    if (spec.dim() == 1) {
      const double sigma =
          std::holds_alternative<ToaSensor>(*spec.sensor)
              ? std::get<ToaSensor>(*spec.sensor).sigma
              : std::get<DopplerSensor>(*spec.sensor).sigma;
      value(0) += sigma * z(0);
    } else {
      const Eigen::Matrix2d cov =
          std::get<CameraSensor>(*spec.sensor).pixel_cov;
      Eigen::LLT<Eigen::Matrix2d> llt(cov);
      if (llt.info() != Eigen::Success)
        throw ConfigError("camera pixel covariance not positive definite");
      value += llt.matrixL() * z;
    }
    out.push_back({spec, std::move(value)});
  }
  return out;
}

}  // namespace fimsel
