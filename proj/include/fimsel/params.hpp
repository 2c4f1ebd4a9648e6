#pragma once

#include <memory>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "fimsel/errors.hpp"

namespace fimsel {

using Vec3 = Eigen::Vector3d;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

// ---------------------------------------------------------------------------
// Parameter layout
//
// The estimated vector stacks the target motion block (position, velocity,
// acceleration, 3 components each) followed by one nuisance block per sensor
// that carries biases: range-rate offset per Doppler sensor, clock drift and
// clock offset per ToA sensor. Cameras contribute no nuisance parameters.
// All nuisance entries are kept in distance/velocity units.
// ---------------------------------------------------------------------------

enum class NuisanceKind { Toa, Doppler };

struct NuisanceBlock {
  std::string sensor_id;
  NuisanceKind kind;
};

inline int nuisance_block_size(NuisanceKind kind) {
  return kind == NuisanceKind::Toa ? 2 : 1;
}

class ParamLayout {
 public:
  static constexpr int kMotionDim = 9;

  ParamLayout() = default;

  explicit ParamLayout(std::vector<NuisanceBlock> blocks)
      : blocks_(std::move(blocks)) {
    int offset = kMotionDim;
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
      const auto& b = blocks_[i];
      if (b.sensor_id.empty())
        throw ConfigError("nuisance block needs a sensor id");
      if (!offsets_.emplace(b.sensor_id, offset).second)
        throw ConfigError("duplicate nuisance sensor id: " + b.sensor_id);
      offset += nuisance_block_size(b.kind);
    }
    total_dim_ = offset;
  }

  int total_dim() const { return total_dim_; }
  const std::vector<NuisanceBlock>& blocks() const { return blocks_; }

  // Motion blocks sit at fixed offsets: position 0, velocity 3, acceleration 6.
  static int motion_offset(int block) { return 3 * block; }

  bool has_nuisance(const std::string& sensor_id) const {
    return offsets_.count(sensor_id) > 0;
  }

  int nuisance_offset(const std::string& sensor_id) const {
    auto it = offsets_.find(sensor_id);
    if (it == offsets_.end())
      throw UsageError("unknown nuisance sensor id: " + sensor_id);
    return it->second;
  }

  int nuisance_size(const std::string& sensor_id) const {
    auto it = offsets_.find(sensor_id);
    if (it == offsets_.end())
      throw UsageError("unknown nuisance sensor id: " + sensor_id);
    for (const auto& b : blocks_)
      if (b.sensor_id == sensor_id) return nuisance_block_size(b.kind);
    return 0;
  }

  bool operator==(const ParamLayout& other) const {
    if (total_dim_ != other.total_dim_ ||
        blocks_.size() != other.blocks_.size())
      return false;
    for (std::size_t i = 0; i < blocks_.size(); ++i)
      if (blocks_[i].sensor_id != other.blocks_[i].sensor_id ||
          blocks_[i].kind != other.blocks_[i].kind)
        return false;
    return true;
  }

 private:
  std::vector<NuisanceBlock> blocks_;
  std::unordered_map<std::string, int> offsets_;
  int total_dim_ = kMotionDim;
};

using LayoutPtr = std::shared_ptr<const ParamLayout>;

inline LayoutPtr make_layout(std::vector<NuisanceBlock> blocks = {}) {
  return std::make_shared<const ParamLayout>(std::move(blocks));
}

// Full parameter vector bound to its layout.
struct ParamVector {
  LayoutPtr layout;
  VecX values;

  ParamVector() = default;
  ParamVector(LayoutPtr lay, VecX vals)
      : layout(std::move(lay)), values(std::move(vals)) {
    if (!layout) throw UsageError("ParamVector without layout");
    if (values.size() != layout->total_dim())
      throw UsageError("ParamVector size does not match layout");
  }

  int dim() const { return static_cast<int>(values.size()); }

  Vec3 position() const { return values.segment<3>(0); }
  Vec3 velocity() const { return values.segment<3>(3); }
  Vec3 acceleration() const { return values.segment<3>(6); }

  Eigen::VectorBlock<VecX> nuisance(const std::string& sensor_id) {
    return values.segment(layout->nuisance_offset(sensor_id),
                          layout->nuisance_size(sensor_id));
  }
  VecX nuisance(const std::string& sensor_id) const {
    return values.segment(layout->nuisance_offset(sensor_id),
                          layout->nuisance_size(sensor_id));
  }
};

// ---------------------------------------------------------------------------
// Quadratic motion model over the observation window
//
//   q(t) = pos + (t - t_start) vel + (t - t_start)^2 / 2 acc.
//
// Jacobians with respect to the parameter vector are constant in theta, so a
// single linearization serves the whole window.
// ---------------------------------------------------------------------------

Vec3 motion_position(const ParamVector& theta, double t, double t_start);
Vec3 motion_velocity(const ParamVector& theta, double t, double t_start);

// Returns d q / d theta and d qdot / d theta, both 3 x p.
std::pair<MatX, MatX> motion_jacobians(const ParamLayout& layout, double t,
                                       double t_start);

// ---------------------------------------------------------------------------
// Gaussian prior
// ---------------------------------------------------------------------------

struct GaussianPrior {
  ParamVector mean;
  MatX covariance;

  GaussianPrior() = default;
  GaussianPrior(ParamVector m, MatX cov);
};

// Inverse of the prior covariance, symmetrized. The result seeds the
// information recursion as its base term.
MatX prior_information(const GaussianPrior& prior);

// ---------------------------------------------------------------------------
// Agent path: piecewise-linear interpolation through waypoints
// ---------------------------------------------------------------------------

struct Waypoint {
  double t;
  Vec3 pos;
};

class AgentPath {
 public:
  AgentPath() = default;
  explicit AgentPath(std::vector<Waypoint> waypoints);

  // Clamped to the endpoints outside the waypoint span; velocity is the
  // active segment's slope and zero outside the span.
  Vec3 position(double t) const;
  Vec3 velocity(double t) const;

  const std::vector<Waypoint>& waypoints() const { return waypoints_; }
  double t_begin() const { return waypoints_.front().t; }
  double t_end() const { return waypoints_.back().t; }

 private:
  std::vector<Waypoint> waypoints_;
};

}  // namespace fimsel
