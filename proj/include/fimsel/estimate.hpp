#pragma once

#include <functional>
#include <string>
#include <vector>

#include "fimsel/scenario.hpp"

namespace fimsel {

// ---------------------------------------------------------------------------
// MAP estimation
//
// Minimizes the negative log posterior
//
//   Phi(theta) = 1/2 |L0^-1 (theta - mu0)|^2 + sum_k 1/2 |Lk^-1 (yk - hk)|^2
//
// by Gauss-Newton with additive Levenberg damping. Residual blocks are
// whitened; anything expressible that way can be estimated, which keeps the
// solver testable against linear closed forms.
// ---------------------------------------------------------------------------

struct ResidualBlock {
  int rows = 0;
  // Fills the whitened residual and its Jacobian at theta. Throws
  // GeometryError when theta wanders somewhere the model cannot evaluate;
  // the solver treats that as an uphill step.
  std::function<void(const VecX& theta, VecX& r, MatX& jac)> eval;
};

struct MapEstimate {
  ParamVector theta;
  bool converged = false;
  int iterations = 0;
  double objective = 0.0;
  // Gauss-Newton Hessian at the returned point: prior information plus the
  // sum of whitened J^T J terms.
  MatX posterior_information;
};

struct MapOptions {
  int max_iterations = 100;
  double step_tol = 1e-9;       // relative step-norm stop
  double lambda_init = 1e-6;
  double lambda_min = 1e-12;
  double lambda_max = 1e8;
};

MapEstimate solve_map(const std::vector<ResidualBlock>& blocks,
                      const GaussianPrior& prior, const VecX& init,
                      const MapOptions& opts = {});

// Convenience wrapper building one residual block per measurement.
MapEstimate map_estimate(const std::vector<Measurement>& measurements,
                         const GaussianPrior& prior, const ParamVector& init,
                         const MapOptions& opts = {});

// ---------------------------------------------------------------------------
// Monte Carlo sweep: draw truths from the prior, synthesize, select with
// each strategy at each budget, estimate from the selected subset, and
// aggregate errors. Selector tags: "greedy", "lazy", "random",
// "independent", "cooperative". Everything is deterministic given the seed,
// including under multithreading.
// ---------------------------------------------------------------------------

struct SweepOptions {
  std::vector<int> budgets;
  std::vector<std::string> selectors;
  int trials = 50;
  std::uint64_t seed = 0;
  int threads = 1;  // 0 = hardware concurrency
  // Fail the sweep when a (selector, budget) cell exceeds this share of
  // nonconverged trials.
  double max_nonconverged_share = 0.05;
};

struct ErrorCurvePoint {
  std::string selector;
  int budget = 0;
  int trials = 0;
  double rmse_pos = 0.0;      // meters, over converged trials
  double weighted_err = 0.0;  // prior-information Mahalanobis RMS
  int nonconverged = 0;
};

struct MixRow {
  std::string selector;
  int budget = 0;
  std::string sensor_type;
  double count = 0.0;  // mean picks per trial (deterministic selectors: exact)
};

struct SweepResult {
  std::vector<ErrorCurvePoint> curve;
  std::vector<MixRow> mix;
};

SweepResult monte_carlo_sweep(const Scenario& scenario,
                              const SweepOptions& opts);

// Per-agent sensor-type composition of a selection.
struct MixReportRow {
  int agent_id = 0;
  std::string sensor_type;
  int count = 0;
  double ratio = 0.0;  // of that agent's picks
};

std::vector<MixReportRow> selection_mix_report(
    const std::vector<CandidatePool>& pools,
    const std::vector<std::vector<int>>& chosen_per_pool);

}  // namespace fimsel
