#include "fimsel/estimate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <thread>

#include <Eigen/Cholesky>

#include "fimsel/rng.hpp"

namespace fimsel {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Linearization {
  double objective = 0.0;
  VecX gradient;
  MatX hessian;
};

// Whitened prior residual: L0^-1 (theta - mu0).
struct PriorWhitener {
  explicit PriorWhitener(const GaussianPrior& prior)
      : mean(prior.mean.values), llt(prior.covariance) {
    if (llt.info() != Eigen::Success)
      throw ConfigError("prior covariance not positive definite");
  }
  VecX residual(const VecX& theta) const {
    return llt.matrixL().solve(theta - mean);
  }
  MatX jacobian() const {
    const int p = static_cast<int>(mean.size());
    return llt.matrixL().solve(MatX::Identity(p, p));
  }
  VecX mean;
  Eigen::LLT<MatX> llt;
};

double objective_at(const std::vector<ResidualBlock>& blocks,
                    const PriorWhitener& prior, const VecX& theta) {
  double obj = 0.5 * prior.residual(theta).squaredNorm();
  VecX r;
  MatX jac;
  for (const auto& b : blocks) {
    try {
      b.eval(theta, r, jac);
    } catch (const GeometryError&) {
      return kInf;
    }
    obj += 0.5 * r.squaredNorm();
  }
  return obj;
}

Linearization linearize(const std::vector<ResidualBlock>& blocks,
                        const PriorWhitener& prior, const VecX& theta) {
  const int p = static_cast<int>(theta.size());
  Linearization lin;
  lin.gradient = VecX::Zero(p);
  lin.hessian = MatX::Zero(p, p);

  const VecX pr = prior.residual(theta);
  const MatX pj = prior.jacobian();
  lin.objective = 0.5 * pr.squaredNorm();
  lin.gradient = pj.transpose() * pr;
  lin.hessian = pj.transpose() * pj;

  VecX r;
  MatX jac;
  for (const auto& b : blocks) {
    b.eval(theta, r, jac);
    lin.objective += 0.5 * r.squaredNorm();
    lin.gradient += jac.transpose() * r;
    lin.hessian += jac.transpose() * jac;
  }
  lin.hessian = 0.5 * (lin.hessian + lin.hessian.transpose()).eval();
  return lin;
}

}  // namespace

MapEstimate solve_map(const std::vector<ResidualBlock>& blocks,
                      const GaussianPrior& prior, const VecX& init,
                      const MapOptions& opts) {
  if (init.size() != prior.mean.values.size())
    throw UsageError("estimator init does not match the prior dimension");
  const PriorWhitener whitener(prior);

  VecX theta = init;
  double obj = objective_at(blocks, whitener, theta);
  if (!std::isfinite(obj))
    throw NumericError("estimator initial point is not evaluable");

  MapEstimate out;
  out.theta = ParamVector(prior.mean.layout, theta);
  double lambda = opts.lambda_init;
  bool converged = false;
  int iter = 0;

  while (iter < opts.max_iterations && !converged) {
    ++iter;
    const Linearization lin = linearize(blocks, whitener, theta);
    obj = lin.objective;

    bool accepted = false;
    while (!accepted) {
      MatX damped = lin.hessian;
      damped.diagonal().array() += lambda;
      Eigen::LLT<MatX> llt(damped);
      if (llt.info() != Eigen::Success) {
        lambda *= 10.0;
        if (lambda > opts.lambda_max) break;
        continue;
      }
      const VecX step = llt.solve(-lin.gradient);
      if (step.norm() < opts.step_tol * (1.0 + theta.norm())) {
        converged = true;
        break;
      }
      const double trial_obj = objective_at(blocks, whitener, theta + step);
      if (trial_obj < obj) {
        theta += step;
        obj = trial_obj;
        lambda = std::max(lambda / 10.0, opts.lambda_min);
        accepted = true;
        if (step.norm() < opts.step_tol * (1.0 + theta.norm()))
          converged = true;
      } else {
        lambda *= 10.0;
        if (lambda > opts.lambda_max) break;
      }
    }
    if (!accepted && !converged) break;  // damping ceiling: give up
  }

  out.theta = ParamVector(prior.mean.layout, theta);
  out.converged = converged;
  out.iterations = iter;
  out.objective = objective_at(blocks, whitener, theta);
  const Linearization lin = linearize(blocks, whitener, theta);
  out.posterior_information = lin.hessian;
  return out;
}

MapEstimate map_estimate(const std::vector<Measurement>& measurements,
                         const GaussianPrior& prior, const ParamVector& init,
                         const MapOptions& opts) {
  if (!(*init.layout == *prior.mean.layout))
    throw UsageError("estimator init layout does not match the prior");
  std::vector<ResidualBlock> blocks;
  blocks.reserve(measurements.size());
  const LayoutPtr layout = prior.mean.layout;
  for (const auto& m : measurements) {
    ResidualBlock b;
    b.rows = m.spec.dim();
    const MeasurementSpec spec = m.spec;
    const VecX value = m.value;
    Eigen::LLT<MatX> noise_llt(measurement_noise(spec));
    if (noise_llt.info() != Eigen::Success)
      throw ConfigError("measurement noise covariance not positive definite");
    const MatX white = noise_llt.matrixL().solve(
        MatX::Identity(b.rows, b.rows));
    b.eval = [spec, value, white, layout](const VecX& theta, VecX& r,
                                          MatX& jac) {
      const ParamVector pv(layout, theta);
      r = white * (measurement_mean(pv, spec) - value);
      jac = white * measurement_jacobian(pv, spec);
    };
    blocks.push_back(std::move(b));
  }
  return solve_map(blocks, prior, init.values, opts);
}

// ---------------------------------------------------------------------------
// Monte Carlo sweep
// ---------------------------------------------------------------------------

namespace {

struct TrialRecord {
  bool converged = false;
  double pos_sq_err = 0.0;
  double weighted_sq_err = 0.0;
  std::map<std::string, int> type_counts;
};

std::vector<Measurement> pick_measurements(
    const std::vector<std::vector<Measurement>>& all,
    const std::vector<std::vector<int>>& chosen) {
  std::vector<Measurement> out;
  for (std::size_t a = 0; a < chosen.size(); ++a) {
    // Order by atom id so the estimate depends on the set, not on the
    // order a selector happened to pick it in.
    std::vector<int> ids = chosen[a];
    std::sort(ids.begin(), ids.end());
    for (int id : ids) out.push_back(all[a][id]);
  }
  return out;
}

}  // namespace

SweepResult monte_carlo_sweep(const Scenario& scenario,
                              const SweepOptions& opts) {
  if (opts.trials < 1) throw UsageError("sweep needs at least one trial");
  const BuiltPools built = build_pools(scenario);
  const MatX& q0 = built.base_information;
  const GaussianPrior& prior = built.prior;
  const int n_agents = static_cast<int>(built.pools.size());

  Eigen::LLT<MatX> prior_llt(prior.covariance);
  const MatX prior_chol = prior_llt.matrixL();

  // Deterministic selectors pick the same set every trial; compute once per
  // (selector, budget). Random repicks per trial.
  struct Cell {
    std::string selector;
    int budget;
    std::vector<std::vector<int>> chosen;  // empty for random: per trial
  };
  std::vector<Cell> cells;
  for (const auto& sel : opts.selectors) {
    for (int budget : opts.budgets) {
      Cell cell{sel, budget, {}};
      std::vector<CandidatePool> pools = built.pools;
      for (auto& p : pools)
        p.budget = std::min<int>(budget, static_cast<int>(p.atoms.size()));
      if (sel == "greedy" || sel == "independent") {
        for (const auto& p : pools)
          cell.chosen.push_back(greedy_select(p, q0).chosen);
      } else if (sel == "lazy") {
        for (const auto& p : pools)
          cell.chosen.push_back(lazy_greedy_select(p, q0).chosen);
      } else if (sel == "cooperative") {
        auto coop = cooperative_select(pools, q0);
        for (const auto& r : coop.per_agent) cell.chosen.push_back(r.chosen);
      } else if (sel == "random") {
        // per-trial
      } else {
        throw ConfigError("unknown selector tag: " + sel);
      }
      cells.push_back(std::move(cell));
    }
  }

  // Valid specs per agent in schedule order; synthesized once per trial.
  std::vector<std::vector<int>> valid_ids(n_agents);
  for (int a = 0; a < n_agents; ++a)
    for (const auto& atom : built.pools[a].atoms)
      valid_ids[a].push_back(atom.id());

  const int n_cells = static_cast<int>(cells.size());
  std::vector<std::vector<TrialRecord>> records(
      n_cells, std::vector<TrialRecord>(opts.trials));

  auto run_trial = [&](int trial) {
    // Truth draw.
    std::mt19937_64 theta_eng(derive_seed(opts.seed, "truth", trial));
    const VecX z = gaussian_vector(theta_eng, prior.mean.dim());
    const ParamVector theta_true(prior.mean.layout,
                                 prior.mean.values + prior_chol * z);

    // Synthesize the full valid schedule once; subsets share the draws.
    std::vector<std::vector<Measurement>> all(n_agents);
    bool trial_valid = true;
    for (int a = 0; a < n_agents && trial_valid; ++a) {
      std::vector<MeasurementSpec> specs;
      specs.reserve(valid_ids[a].size());
      for (int id : valid_ids[a]) specs.push_back(built.schedule[a][id]);
      try {
        auto ms = synthesize(theta_true, specs,
                             derive_seed(opts.seed, "noise", trial));
        // Index measurements by atom id for subset extraction.
        all[a].resize(built.schedule[a].size());
        for (std::size_t i = 0; i < ms.size(); ++i)
          all[a][valid_ids[a][i]] = std::move(ms[i]);
      } catch (const GeometryError&) {
        trial_valid = false;
      }
    }

    for (int c = 0; c < n_cells; ++c) {
      TrialRecord& rec = records[c][trial];
      if (!trial_valid) {
        rec.converged = false;
        continue;
      }
      const Cell& cell = cells[c];
      std::vector<std::vector<int>> chosen = cell.chosen;
      if (cell.selector == "random") {
        for (int a = 0; a < n_agents; ++a) {
          CandidatePool p = built.pools[a];
          p.budget =
              std::min<int>(cell.budget, static_cast<int>(p.atoms.size()));
          chosen.push_back(
              random_select(p, q0,
                            derive_seed(opts.seed, "random",
                                        (static_cast<std::uint64_t>(trial)
                                         << 20) ^
                                            (cell.budget << 4) ^ a))
                  .chosen);
        }
      }

      for (int a = 0; a < n_agents; ++a)
        for (int id : chosen[a])
          rec.type_counts[built.pools[a].find_meta(id)->sensor_type]++;

      auto meas = pick_measurements(all, chosen);
      MapEstimate est = map_estimate(meas, prior, prior.mean);
      if (!est.converged) {
        // One deterministic restart from a prior-perturbed point.
        VecX dir = VecX::Ones(prior.mean.dim()).normalized();
        ParamVector init2(prior.mean.layout,
                          prior.mean.values + 0.5 * (prior_chol * dir));
        est = map_estimate(meas, prior, init2);
      }
      rec.converged = est.converged;
      if (est.converged) {
        const VecX diff = est.theta.values - theta_true.values;
        rec.pos_sq_err = diff.segment<3>(0).squaredNorm();
        rec.weighted_sq_err = diff.dot(q0 * diff);
      }
    }
  };

  int n_threads = opts.threads;
  if (n_threads == 0)
    n_threads = std::max(1u, std::thread::hardware_concurrency());
  if (n_threads <= 1 || opts.trials == 1) {
    for (int t = 0; t < opts.trials; ++t) run_trial(t);
  } else {
    std::atomic<int> next{0};
    auto worker = [&]() {
      for (;;) {
        const int t = next.fetch_add(1);
        if (t >= opts.trials) return;
        run_trial(t);
      }
    };
    std::vector<std::thread> threads;
    for (int i = 0; i < std::min(n_threads, opts.trials); ++i)
      threads.emplace_back(worker);
    for (auto& th : threads) th.join();
  }

  SweepResult out;
  for (int c = 0; c < n_cells; ++c) {
    const Cell& cell = cells[c];
    ErrorCurvePoint pt;
    pt.selector = cell.selector;
    pt.budget = cell.budget;
    pt.trials = opts.trials;
    double pos_sq = 0.0, w_sq = 0.0;
    int ok = 0;
    std::map<std::string, double> type_totals;
    for (const auto& rec : records[c]) {
      if (rec.converged) {
        ++ok;
        pos_sq += rec.pos_sq_err;
        w_sq += rec.weighted_sq_err;
      }
      for (const auto& [type, n] : rec.type_counts)
        type_totals[type] += n;
    }
    pt.nonconverged = opts.trials - ok;
    if (pt.nonconverged > opts.max_nonconverged_share * opts.trials)
      throw NumericError("sweep cell " + cell.selector + "/b" +
                         std::to_string(cell.budget) +
                         " exceeded the nonconvergence budget");
    pt.rmse_pos = ok > 0 ? std::sqrt(pos_sq / ok) : 0.0;
    pt.weighted_err = ok > 0 ? std::sqrt(w_sq / ok) : 0.0;
    out.curve.push_back(pt);
    for (const auto& [type, total] : type_totals)
      out.mix.push_back({cell.selector, cell.budget, type,
                         total / opts.trials});
  }
  return out;
}

std::vector<MixReportRow> selection_mix_report(
    const std::vector<CandidatePool>& pools,
    const std::vector<std::vector<int>>& chosen_per_pool) {
  if (pools.size() != chosen_per_pool.size())
    throw UsageError("mix report needs one id list per pool");
  std::vector<MixReportRow> rows;
  for (std::size_t a = 0; a < pools.size(); ++a) {
    std::map<std::string, int> counts;
    int total = 0;
    for (int id : chosen_per_pool[a]) {
      const AtomMeta* meta = pools[a].find_meta(id);
      if (!meta) throw UsageError("chosen id missing from pool");
      counts[meta->sensor_type]++;
      ++total;
    }
    for (const auto& [type, count] : counts)
      rows.push_back({pools[a].agent_id, type, count,
                      total > 0 ? static_cast<double>(count) / total : 0.0});
  }
  return rows;
}

}  // namespace fimsel
