#include "fimsel/params.hpp"

#include <Eigen/Cholesky>

namespace fimsel {

Vec3 motion_position(const ParamVector& theta, double t, double t_start) {
  const double dt = t - t_start;
  return theta.position() + dt * theta.velocity() +
         0.5 * dt * dt * theta.acceleration();
}

Vec3 motion_velocity(const ParamVector& theta, double t, double t_start) {
  const double dt = t - t_start;
  return theta.velocity() + dt * theta.acceleration();
}

std::pair<MatX, MatX> motion_jacobians(const ParamLayout& layout, double t,
                                       double t_start) {
  const double dt = t - t_start;
  const int p = layout.total_dim();
  MatX dq = MatX::Zero(3, p);
  MatX dqdot = MatX::Zero(3, p);
  const Eigen::Matrix3d id = Eigen::Matrix3d::Identity();
  dq.block<3, 3>(0, 0) = id;
  dq.block<3, 3>(0, 3) = dt * id;
  dq.block<3, 3>(0, 6) = 0.5 * dt * dt * id;
  dqdot.block<3, 3>(0, 3) = id;
  dqdot.block<3, 3>(0, 6) = dt * id;
  return {dq, dqdot};
}

GaussianPrior::GaussianPrior(ParamVector m, MatX cov)
    : mean(std::move(m)), covariance(std::move(cov)) {
  const int p = mean.dim();
  if (covariance.rows() != p || covariance.cols() != p)
    throw ConfigError("prior covariance dimension mismatch");
  const double scale = covariance.cwiseAbs().maxCoeff();
  if ((covariance - covariance.transpose()).cwiseAbs().maxCoeff() >
      1e-12 * std::max(scale, 1.0))
    throw ConfigError("prior covariance not symmetric");
}

MatX prior_information(const GaussianPrior& prior) {
  const int p = prior.mean.dim();
  Eigen::LLT<MatX> llt(prior.covariance);
  if (llt.info() != Eigen::Success)
    throw ConfigError("prior covariance not positive definite");
  // Guard against semidefinite inputs that LLT happens to accept.
  if (llt.matrixL().toDenseMatrix().diagonal().minCoeff() <= 0.0)
    throw ConfigError("prior covariance not positive definite");
  MatX info = llt.solve(MatX::Identity(p, p));
  info = 0.5 * (info + info.transpose()).eval();
  return info;
}

AgentPath::AgentPath(std::vector<Waypoint> waypoints)
    : waypoints_(std::move(waypoints)) {
  if (waypoints_.empty()) throw ConfigError("agent path needs waypoints");
  for (std::size_t i = 1; i < waypoints_.size(); ++i)
    if (!(waypoints_[i].t > waypoints_[i - 1].t))
      throw ConfigError("agent path waypoint times must strictly increase");
}

Vec3 AgentPath::position(double t) const {
  if (waypoints_.size() == 1 || t <= waypoints_.front().t)
    return waypoints_.front().pos;
  if (t >= waypoints_.back().t) return waypoints_.back().pos;
  std::size_t i = 1;
  while (waypoints_[i].t <= t) ++i;
  const auto& a = waypoints_[i - 1];
  const auto& b = waypoints_[i];
  const double s = (t - a.t) / (b.t - a.t);
  return a.pos + s * (b.pos - a.pos);
}

Vec3 AgentPath::velocity(double t) const {
  if (waypoints_.size() == 1 || t < waypoints_.front().t ||
      t > waypoints_.back().t)
    return Vec3::Zero();
  std::size_t i = 1;
  while (i + 1 < waypoints_.size() && waypoints_[i].t <= t) ++i;
  const auto& a = waypoints_[i - 1];
  const auto& b = waypoints_[i];
  return (b.pos - a.pos) / (b.t - a.t);
}

}  // namespace fimsel
