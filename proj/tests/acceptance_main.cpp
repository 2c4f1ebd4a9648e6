// Acceptance gate: one self-contained check per criterion, each printing a
// single [PASS]/[FAIL] line. Exit code is the number of failed criteria.
//
// argv[1] = path to the fimsel CLI binary (used by the determinism check)
// argv[2] = scratch directory for CLI outputs

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fimsel/estimate.hpp"
#include "fimsel/fim.hpp"
#include "fimsel/rng.hpp"
#include "fimsel/scenario.hpp"
#include "fimsel/select.hpp"
#include "oracles.hpp"

using namespace fimsel;
namespace fs = std::filesystem;

namespace {

int failures = 0;

class Timer {
 public:
  Timer() : t0_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         t0_).count();
  }

 private:
  std::chrono::steady_clock::time_point t0_;
};

void report(const std::string& id, bool ok, double elapsed, double budget,
            const std::string& detail) {
  const bool in_time = elapsed <= budget;
  std::printf("[%s] %s %s (%.1fs of %.0fs budget)\n",
              ok && in_time ? "PASS" : "FAIL", id.c_str(), detail.c_str(),
              elapsed, budget);
  std::fflush(stdout);
  if (!(ok && in_time)) ++failures;
}

// Random pool of rank-1/rank-2 atoms over a p-dimensional parameter space.
CandidatePool random_pool(std::mt19937_64& eng, int p, int n_atoms,
                          int budget) {
  std::normal_distribution<double> g;
  CandidatePool pool;
  pool.budget = budget;
  for (int k = 0; k < n_atoms; ++k) {
    const int r = 1 + static_cast<int>(eng() % 2);
    JacobianBlocks blocks;
    blocks.rows = r;
    blocks.dim = p;
    MatX j(r, p);
    for (int a = 0; a < r; ++a)
      for (int b = 0; b < p; ++b) j(a, b) = g(eng);
    blocks.segments.push_back({0, j});
    pool.atoms.emplace_back(k, blocks, MatX::Identity(r, r));
    pool.meta.push_back({"synthetic", "s", 0.0});
  }
  return pool;
}

// ---------------------------------------------------------------------------

void a1_greedy_guarantee() {
  Timer timer;
  const double bound = 1.0 - 1.0 / std::exp(1.0);
  const double tol = 1e-9;
  int ok_count = 0;
  const int instances = 100;
  double worst_ratio = 1e300;
  for (int i = 0; i < instances; ++i) {
    std::mt19937_64 eng(derive_seed(101, "a1", i));
    CandidatePool pool = random_pool(eng, 9, 12, 4);
    const MatX q0 = MatX::Identity(9, 9);
    const double f_greedy = greedy_select(pool, q0).f;
    const double f_opt = brute_force_select(pool, q0).f;
    if (f_opt > 0.0) worst_ratio = std::min(worst_ratio, f_greedy / f_opt);
    if (f_greedy >= bound * f_opt - tol) ++ok_count;
  }
  std::ostringstream d;
  d << "greedy within (1-1/e) of the exhaustive optimum on " << ok_count
    << "/" << instances << " instances, worst ratio " << worst_ratio;
  report("A1", ok_count == instances, timer.seconds(), 60.0, d.str());
}

void a2_submodular_monotone() {
  Timer timer;
  const double tol = 1e-10;
  int ok_count = 0;
  const int triples = 200;
  for (int i = 0; i < triples; ++i) {
    std::mt19937_64 eng(derive_seed(202, "a2", i));
    const int p = 5 + static_cast<int>(eng() % 5);
    CandidatePool pool = random_pool(eng, p, 10, 10);
    const MatX q0 = oracle::random_spd(eng, p, 0.5, 2.0);

    // X subset Y subset pool, s outside Y.
    std::vector<int> ids(10);
    for (int k = 0; k < 10; ++k) ids[k] = k;
    std::shuffle(ids.begin(), ids.end(), eng);
    const int nx = static_cast<int>(eng() % 4);
    const int ny = nx + 1 + static_cast<int>(eng() % 4);
    FimState x(q0), y(q0);
    for (int k = 0; k < ny; ++k) {
      const InfoAtom* atom = pool.find(ids[k]);
      if (k < nx) x.push(*atom);
      y.push(*atom);
    }
    const InfoAtom* s = pool.find(ids[9]);
    const double gx = x.gain(*s);
    const double gy = y.gain(*s);
    const bool submodular = gx >= gy - tol;
    const bool monotone = gx >= -tol && gy >= -tol;
    const FimState empty_state(q0);
    const bool empty_zero = (empty_state.logdet() - empty_state.base_logdet()) == 0.0;
    if (submodular && monotone && empty_zero) ++ok_count;
  }
  std::ostringstream d;
  d << "submodularity and monotonicity held on " << ok_count << "/" << triples
    << " random nested triples, f(empty)=0 exact";
  report("A2", ok_count == triples, timer.seconds(), 10.0, d.str());
}

void a3_example1_trend() {
  Timer timer;
  Scenario sc = builtin_scenario("example1");
  SweepOptions opts;
  opts.budgets = {10, 50, 100};
  opts.selectors = {"greedy", "random"};
  opts.trials = 50;
  opts.seed = 303;
  opts.threads = 0;
  SweepResult res = monte_carlo_sweep(sc, opts);
  auto rmse = [&](const std::string& sel, int b) {
    for (const auto& pt : res.curve)
      if (pt.selector == sel && pt.budget == b) return pt.rmse_pos;
    return -1.0;
  };
  bool ok = true;
  std::ostringstream d;
  d << "rmse greedy/random:";
  for (int b : opts.budgets) {
    const double g = rmse("greedy", b);
    const double r = rmse("random", b);
    ok = ok && g <= r;
    if (b == 10) ok = ok && g <= 0.5 * r;
    d << " b" << b << " " << g << "/" << r;
  }
  report("A3", ok, timer.seconds(), 300.0, d.str());
}

void a4_example2_mix() {
  Timer timer;
  Scenario sc = builtin_scenario("example2");
  BuiltPools built = build_pools(sc);
  CandidatePool pool = built.pools[0];
  pool.budget = 10;
  auto sel = greedy_select(pool, built.base_information);
  int camera = 0;
  for (int id : sel.chosen)
    if (pool.find_meta(id)->sensor_type == "camera") ++camera;
  const double fraction =
      static_cast<double>(camera) / static_cast<double>(sel.chosen.size());
  std::ostringstream d;
  d << "camera fraction at budget 10 = " << fraction << " (band 0.5..0.85)";
  report("A4", fraction >= 0.5 && fraction <= 0.85, timer.seconds(), 120.0,
         d.str());
}

void a5_cooperative() {
  Timer timer;
  // Random-instance bound: cooperative at least matches independent in the
  // joint objective and reaches 0.387 of the joint exhaustive optimum.
  const double ratio_bound = 0.387;
  int ok_count = 0;
  const int instances = 100;
  for (int i = 0; i < instances; ++i) {
    std::mt19937_64 eng(derive_seed(505, "a5", i));
    const int p = 6;
    std::vector<CandidatePool> pools;
    pools.push_back(random_pool(eng, p, 6, 2));
    pools.push_back(random_pool(eng, p, 6, 2));
    pools[0].agent_id = 0;
    pools[1].agent_id = 1;
    const MatX q0 = oracle::random_spd(eng, p, 0.5, 2.0);

    const MultiAgentResult coop = cooperative_select(pools, q0);
    const MultiAgentResult indep = independent_select(pools, q0);
    auto chosen_of = [](const MultiAgentResult& r) {
      std::vector<std::vector<int>> out;
      for (const auto& pa : r.per_agent) out.push_back(pa.chosen);
      return out;
    };
    const double f_coop = joint_objective(pools, chosen_of(coop), q0);
    const double f_indep = joint_objective(pools, chosen_of(indep), q0);

    // Joint exhaustive optimum: per-agent subsets of size <= 2 each.
    double f_best = 0.0;
    auto subsets = [](int n, int bmax) {
      std::vector<std::vector<int>> out{{}};
      for (int a = 0; a < n; ++a)
        for (std::size_t s = 0, e = out.size(); s < e; ++s)
          if (static_cast<int>(out[s].size()) < bmax) {
            auto t = out[s];
            t.push_back(a);
            out.push_back(std::move(t));
          }
      return out;
    };
    const auto sub0 = subsets(6, 2);
    const auto sub1 = subsets(6, 2);
    for (const auto& s0 : sub0)
      for (const auto& s1 : sub1)
        f_best = std::max(f_best, joint_objective(pools, {s0, s1}, q0));

    if (f_coop >= f_indep - 1e-12 && f_coop >= ratio_bound * f_best - 1e-9)
      ++ok_count;
  }

  // Builtin demo trend: cooperative error at or below independent error.
  Scenario sc = builtin_scenario("cooperative");
  SweepOptions opts;
  opts.budgets = {1, 2, 3};
  opts.selectors = {"independent", "cooperative"};
  opts.trials = 200;
  opts.seed = 0;
  opts.threads = 0;
  SweepResult res = monte_carlo_sweep(sc, opts);
  auto rmse = [&](const std::string& sel, int b) {
    for (const auto& pt : res.curve)
      if (pt.selector == sel && pt.budget == b) return pt.rmse_pos;
    return -1.0;
  };
  bool curve_ok = true;
  std::ostringstream curves;
  for (int b : opts.budgets) {
    const double c = rmse("cooperative", b);
    const double i = rmse("independent", b);
    curve_ok = curve_ok && c <= i;
    curves << " b" << b << " " << c << "/" << i;
  }

  std::ostringstream d;
  d << "bound held on " << ok_count << "/" << instances
    << " random instances; demo rmse coop/indep:" << curves.str();
  report("A5", ok_count == instances && curve_ok, timer.seconds(), 300.0,
         d.str());
}

void a6_numerics() {
  Timer timer;
  const double jac_tol = 1e-6;

  // Sensor Jacobians against 5-point central differences.
  auto layout = make_layout(
      {{"t0", NuisanceKind::Toa}, {"d0", NuisanceKind::Doppler}});
  const int p = layout->total_dim();
  int jac_ok = 0;
  const int geoms = 20;
  double worst_rel = 0.0;
  for (int sensor_kind = 0; sensor_kind < 3; ++sensor_kind) {
    for (int i = 0; i < geoms; ++i) {
      std::mt19937_64 eng(derive_seed(606, "a6", sensor_kind * 1000 + i));
      std::normal_distribution<double> g;
      AgentPath path({{0.0, Vec3(20 + 5 * g(eng), 10 * g(eng), 5)},
                      {10.0, Vec3(10 * g(eng), 20 + 5 * g(eng), 8)}});
      VecX theta_v = VecX::Zero(p);
      for (int k = 0; k < 3; ++k) theta_v(k) = 2.0 * g(eng);
      for (int k = 3; k < 6; ++k) theta_v(k) = 0.2 * g(eng);
      for (int k = 6; k < 9; ++k) theta_v(k) = 0.02 * g(eng);
      for (int k = 9; k < p; ++k) theta_v(k) = g(eng);
      ParamVector theta(layout, theta_v);

      MeasurementSpec spec;
      spec.time = 2.0 + 6.0 * uniform_unit(eng);
      spec.t_start = 0.0;
      if (sensor_kind == 0) {
        spec.sensor = std::make_shared<const Sensor>(
            ToaSensor{"t0", path, 1.0, 0});
        spec.symbol_index = static_cast<int>(eng() % 50);
      } else if (sensor_kind == 1) {
        spec.sensor = std::make_shared<const Sensor>(
            DopplerSensor{"d0", path, 1.0});
      } else {
        CameraSensor cam;
        cam.id = "c0";
        cam.path = path;
        cam.intrinsics = {60.0, 55.0, 0.4, 2.0, -1.0};
        cam.orientation.mode = CameraOrientation::Mode::LookAt;
        cam.orientation.look_at = Vec3(0, 0, 0);
        cam.pixel_cov = Eigen::Matrix2d::Identity();
        spec.sensor = std::make_shared<const Sensor>(cam);
      }

      const MatX analytic = measurement_jacobian(theta, spec);
      const MatX numeric = oracle::numeric_jacobian(
          [&](const VecX& v) {
            return measurement_mean(ParamVector(layout, v), spec);
          },
          theta_v, 1e-5);
      const double rel = oracle::rel_err(analytic, numeric);
      worst_rel = std::max(worst_rel, rel);
      if (rel <= jac_tol) ++jac_ok;
    }
  }

  // Incremental log-det against dense recomputation over 1000 pushes.
  const int pushes = 1000;
  const int pdim = 12;
  std::mt19937_64 eng(derive_seed(606, "a6-push"));
  const MatX q0 = oracle::random_spd(eng, pdim, 0.5, 2.0);
  FimState state(q0);
  MatX dense = q0;
  std::normal_distribution<double> g;
  double worst_drift = 0.0;
  for (int k = 0; k < pushes; ++k) {
    const int r = 1 + static_cast<int>(eng() % 2);
    JacobianBlocks blocks;
    blocks.rows = r;
    blocks.dim = pdim;
    MatX j(r, pdim);
    for (int a = 0; a < r; ++a)
      for (int b = 0; b < pdim; ++b) j(a, b) = 0.3 * g(eng);
    blocks.segments.push_back({0, j});
    InfoAtom atom(k, blocks, MatX::Identity(r, r));
    state.push(atom);
    dense += atom.dense_information();
    const double drift = std::abs(state.logdet() - oracle::logdet(dense));
    worst_drift = std::max(worst_drift, drift);
  }
  const bool push_ok = worst_drift <= 1e-9 * pdim;

  std::ostringstream d;
  d << "jacobians " << jac_ok << "/" << 3 * geoms << " within 1e-6 (worst "
    << worst_rel << "); logdet drift " << worst_drift << " over " << pushes
    << " pushes";
  report("A6", jac_ok == 3 * geoms && push_ok, timer.seconds(), 30.0, d.str());
}

void a7_estimator_soundness() {
  Timer timer;
  auto layout = make_layout();
  const int p = 9;
  std::mt19937_64 eng(707);
  std::normal_distribution<double> g;

  // Closed-form check on random linear-Gaussian instances.
  bool closed_ok = true;
  double worst_mean_err = 0.0;
  for (int rep = 0; rep < 10; ++rep) {
    const MatX cov = oracle::random_spd(eng, p, 0.5, 3.0);
    VecX mean(p);
    for (int i = 0; i < p; ++i) mean(i) = g(eng);
    GaussianPrior prior(ParamVector(layout, mean), cov);

    MatX info = cov.inverse();
    VecX rhs = info * mean;
    std::vector<ResidualBlock> blocks;
    for (int k = 0; k < 5; ++k) {
      MatX j(2, p);
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < p; ++b) j(a, b) = g(eng);
      VecX y(2);
      y << g(eng), g(eng);
      const MatX noise = oracle::random_spd(eng, 2, 0.4, 1.5);
      info += j.transpose() * noise.inverse() * j;
      rhs += j.transpose() * noise.inverse() * y;
      ResidualBlock blk;
      blk.rows = 2;
      Eigen::LLT<MatX> llt(noise);
      const MatX w = llt.matrixL().solve(MatX::Identity(2, 2));
      blk.eval = [j, y, w](const VecX& theta, VecX& r, MatX& jac) {
        r = w * (j * theta - y);
        jac = w * j;
      };
      blocks.push_back(std::move(blk));
    }
    const VecX expect = info.ldlt().solve(rhs);
    auto est = solve_map(blocks, prior, mean);
    const double err = (est.theta.values - expect).cwiseAbs().maxCoeff();
    worst_mean_err = std::max(worst_mean_err, err);
    closed_ok = closed_ok && est.converged && err <= 1e-8;
  }

  // Cramer-Rao echo: over 500 trials of one fixed linear model, the sample
  // mean squared error must not undercut trace(FIM^-1) beyond 3 sigma.
  const MatX cov = 2.0 * MatX::Identity(p, p);
  GaussianPrior prior(ParamVector(layout, VecX::Zero(p)), cov);
  MatX j(4, p);
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < p; ++b) j(a, b) = g(eng);
  const MatX noise = 0.8 * MatX::Identity(4, 4);
  const MatX fim = cov.inverse() + j.transpose() * noise.inverse() * j;
  const MatX post_cov = fim.inverse();
  const double crlb_trace = post_cov.trace();

  const int trials = 500;
  Eigen::LLT<MatX> pl(cov);
  Eigen::LLT<MatX> nl(noise);
  double sum_sq = 0.0;
  bool all_converged = true;
  for (int t = 0; t < trials; ++t) {
    std::mt19937_64 teng(derive_seed(707, "crlb", t));
    const VecX truth = MatX(pl.matrixL()) * gaussian_vector(teng, p);
    const VecX y = j * truth + MatX(nl.matrixL()) * gaussian_vector(teng, 4);
    ResidualBlock blk;
    blk.rows = 4;
    const MatX w = nl.matrixL().solve(MatX::Identity(4, 4));
    blk.eval = [&j, y, w](const VecX& theta, VecX& r, MatX& jac) {
      r = w * (j * theta - y);
      jac = w * j;
    };
    auto est = solve_map({blk}, prior, VecX::Zero(p));
    all_converged = all_converged && est.converged;
    sum_sq += (est.theta.values - truth).squaredNorm();
  }
  const double sample_trace = sum_sq / trials;
  // Var(|e|^2) = 2 tr(C^2) for Gaussian errors with covariance C.
  const double sigma =
      std::sqrt(2.0 * (post_cov * post_cov).trace() / trials);
  const bool crlb_ok = sample_trace >= crlb_trace - 3.0 * sigma;

  std::ostringstream d;
  d << "closed form max err " << worst_mean_err << " (tol 1e-8); sample msq "
    << sample_trace << " vs bound " << crlb_trace << " - 3x" << sigma;
  report("A7", closed_ok && crlb_ok && all_converged, timer.seconds(), 120.0,
         d.str());
}

void a8_determinism(const std::string& cli, const fs::path& scratch) {
  Timer timer;
  const fs::path d1 = scratch / "a8_run1";
  const fs::path d2 = scratch / "a8_run2";
  fs::remove_all(d1);
  fs::remove_all(d2);
  fs::create_directories(d1);
  fs::create_directories(d2);

  auto run_once = [&](const fs::path& out) {
    const std::string cmd = "\"" + cli + "\" demo example1 --seed 0 --out \"" +
                            out.string() + "\"";
    return std::system(cmd.c_str());
  };
  const int rc1 = run_once(d1);
  const int rc2 = run_once(d2);

  bool ok = rc1 == 0 && rc2 == 0;
  int compared = 0;
  std::string mismatch;
  if (ok) {
    for (const auto& entry : fs::directory_iterator(d1)) {
      if (entry.path().extension() != ".csv") continue;
      ++compared;
      std::ifstream f1(entry.path(), std::ios::binary);
      std::ifstream f2(d2 / entry.path().filename(), std::ios::binary);
      std::ostringstream s1, s2;
      s1 << f1.rdbuf();
      s2 << f2.rdbuf();
      if (!f2.good() || s1.str() != s2.str()) {
        ok = false;
        mismatch = entry.path().filename().string();
        break;
      }
    }
    ok = ok && compared > 0;
  }

  std::ostringstream d;
  if (!mismatch.empty())
    d << "csv differs between reruns: " << mismatch;
  else
    d << compared << " csv files byte-identical across reruns";
  report("A8", ok, timer.seconds(), 120.0, d.str());
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 3) {
    std::cerr << "usage: fimsel_acceptance <fimsel-cli> <scratch-dir>\n";
    return 64;
  }
  const std::string cli = argv[1];
  const fs::path scratch(argv[2]);
  fs::create_directories(scratch);

  a1_greedy_guarantee();
  a2_submodular_monotone();
  a3_example1_trend();
  a4_example2_mix();
  a5_cooperative();
  a6_numerics();
  a7_estimator_soundness();
  a8_determinism(cli, scratch);

  if (failures) std::printf("%d criterion(s) failed\n", failures);
  return failures;
}
