#include "fimsel/cli.hpp"

#include <chrono>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fimsel/errors.hpp"
#include "fimsel/estimate.hpp"
#include "fimsel/report.hpp"
#include "fimsel/rng.hpp"
#include "fimsel/scenario.hpp"
#include "fimsel/select.hpp"

namespace fimsel {
namespace {

struct GlobalOpts {
  std::uint64_t seed = 0;
  std::string out = "./out";
  int threads = 0;
};

// Wall-clock phases for the run manifest.
class PhaseClock {
 public:
  void start(const std::string& name) {
    name_ = name;
    t0_ = std::chrono::steady_clock::now();
  }
  void stop() {
    const auto t1 = std::chrono::steady_clock::now();
    phases_.push_back(
        {name_, std::chrono::duration<double>(t1 - t0_).count()});
  }
  const std::vector<PhaseTiming>& phases() const { return phases_; }
  double total() const {
    double s = 0.0;
    for (const auto& p : phases_) s += p.seconds;
    return s;
  }

 private:
  std::string name_;
  std::chrono::steady_clock::time_point t0_;
  std::vector<PhaseTiming> phases_;
};

struct ResolvedScenario {
  Scenario scenario;
  std::string config_text;  // expanded form, hashed into the manifest
};

ResolvedScenario resolve_scenario(const std::string& config_arg,
                                  std::uint64_t seed_flag) {
  Scenario s = is_builtin_scenario(config_arg) ? builtin_scenario(config_arg)
                                               : load_scenario(config_arg);
  s.seed = seed_flag;
  return {s, scenario_to_config(s)};
}

std::string join_command(int argc, const char* const* argv) {
  std::string cmd;
  for (int i = 0; i < argc; ++i) {
    if (i) cmd += ' ';
    cmd += argv[i];
  }
  return cmd;
}

void emit_manifest(const GlobalOpts& g, const std::string& command,
                   const std::string& config_text, const PhaseClock& clock) {
  RunManifest m;
  m.command = command;
  m.config_hash = hash_str(config_text);
  m.seed = g.seed;
  m.wall_seconds = clock.total();
  m.phases = clock.phases();
  write_manifest(m, g.out + "/manifest.json");
}

std::vector<std::string> selection_header() {
  return {"step",   "atom_id",       "agent_id",    "sensor_type",
          "time_s", "marginal_gain", "cumulative_f"};
}

void append_selection_rows(CsvWriter& csv, const CandidatePool& pool,
                           const SelectionResult& result) {
  double cumulative = 0.0;
  for (std::size_t k = 0; k < result.chosen.size(); ++k) {
    const int id = result.chosen[k];
    const AtomMeta* meta = pool.find_meta(id);
    cumulative += result.gains[k];
    csv.add_row({std::to_string(k + 1), std::to_string(id),
                 std::to_string(pool.agent_id), meta->sensor_type,
                 format_double(meta->time), format_double(result.gains[k]),
                 format_double(cumulative)});
  }
}

SelectionResult run_algorithm(const std::string& algorithm,
                              const CandidatePool& pool, const MatX& base,
                              std::uint64_t seed, int agent_index) {
  if (algorithm == "greedy") return greedy_select(pool, base);
  if (algorithm == "lazy") return lazy_greedy_select(pool, base);
  if (algorithm == "oracle") return brute_force_select(pool, base);
  if (algorithm == "random")
    return random_select(pool, base, derive_seed(seed, "select", agent_index));
  throw UsageError("unknown algorithm: " + algorithm);
}

// One row per surviving candidate of one agent; `selected` flags membership
// in the chosen set. Multi-agent scenarios get one file per agent so the
// column set stays as documented.
void write_path_csv(const std::string& path, const AgentPath& agent_path,
                    const CandidatePool& pool,
                    const std::vector<int>& chosen) {
  std::vector<char> picked(pool.atoms.size(), 0);
  for (int id : chosen)
    for (std::size_t i = 0; i < pool.atoms.size(); ++i)
      if (pool.atoms[i].id() == id) picked[i] = 1;
  CsvWriter csv(
      {"t", "agent_x", "agent_y", "agent_z", "selected", "sensor_type"});
  for (std::size_t i = 0; i < pool.atoms.size(); ++i) {
    const double t = pool.meta[i].time;
    const Vec3 pos = agent_path.position(t);
    csv.add_row({format_double(t), format_double(pos.x()),
                 format_double(pos.y()), format_double(pos.z()),
                 picked[i] ? "1" : "0", pool.meta[i].sensor_type});
  }
  csv.write(path);
}

int cmd_select(const GlobalOpts& g, const std::string& config_arg,
               const std::string& algorithm, int budget_override,
               const std::string& command) {
  PhaseClock clock;
  clock.start("load");
  ResolvedScenario rs = resolve_scenario(config_arg, g.seed);
  clock.stop();

  clock.start("build");
  BuiltPools built = build_pools(rs.scenario);
  clock.stop();

  clock.start("select");
  CsvWriter csv(selection_header());
  for (std::size_t a = 0; a < built.pools.size(); ++a) {
    CandidatePool pool = built.pools[a];
    if (budget_override >= 0)
      pool.budget = std::min<int>(budget_override,
                                  static_cast<int>(pool.atoms.size()));
    auto result = run_algorithm(algorithm, pool, built.base_information,
                                g.seed, static_cast<int>(a));
    append_selection_rows(csv, pool, result);
  }
  clock.stop();

  clock.start("write");
  ensure_directory(g.out);
  csv.write(g.out + "/selection.csv");
  clock.stop();
  emit_manifest(g, command, rs.config_text, clock);
  return 0;
}

int cmd_sweep(const GlobalOpts& g, const std::string& config_arg,
              std::vector<int> budgets, int trials,
              std::vector<std::string> selectors, const std::string& command) {
  PhaseClock clock;
  clock.start("load");
  ResolvedScenario rs = resolve_scenario(config_arg, g.seed);
  clock.stop();

  clock.start("sweep");
  SweepOptions opts;
  opts.budgets = std::move(budgets);
  opts.selectors = std::move(selectors);
  opts.trials = trials;
  opts.seed = g.seed;
  opts.threads = g.threads;
  SweepResult result = monte_carlo_sweep(rs.scenario, opts);
  clock.stop();

  clock.start("write");
  ensure_directory(g.out);
  CsvWriter curve({"selector", "budget", "trials", "rmse_pos_m",
                   "weighted_err", "nonconverged"});
  for (const auto& pt : result.curve)
    curve.add_row({pt.selector, std::to_string(pt.budget),
                   std::to_string(pt.trials), format_double(pt.rmse_pos),
                   format_double(pt.weighted_err),
                   std::to_string(pt.nonconverged)});
  curve.write(g.out + "/error_curve.csv");

  CsvWriter mix({"selector", "budget", "sensor_type", "count"});
  for (const auto& row : result.mix)
    mix.add_row({row.selector, std::to_string(row.budget), row.sensor_type,
                 format_double(row.count)});
  mix.write(g.out + "/mix.csv");
  clock.stop();
  emit_manifest(g, command, rs.config_text, clock);
  return 0;
}

// Selection demos write, per budget, the FIM-greedy and random picks plus
// per-agent path/selection plot data for the greedy run.
void demo_selection_files(const GlobalOpts& g, const Scenario& scenario,
                       const BuiltPools& built, const std::vector<int>& budgets,
                       bool cooperative_pick) {
  for (int budget : budgets) {
    std::vector<CandidatePool> pools = built.pools;
    for (auto& p : pools)
      p.budget = std::min<int>(budget, static_cast<int>(p.atoms.size()));

    std::vector<SelectionResult> greedy;
    if (cooperative_pick) {
      greedy = cooperative_select(pools, built.base_information).per_agent;
    } else {
      for (const auto& p : pools)
        greedy.push_back(greedy_select(p, built.base_information));
    }

    CsvWriter gcsv(selection_header());
    for (std::size_t a = 0; a < pools.size(); ++a)
      append_selection_rows(gcsv, pools[a], greedy[a]);
    gcsv.write(g.out + "/selection_greedy_b" + std::to_string(budget) +
               ".csv");

    CsvWriter rcsv(selection_header());
    for (std::size_t a = 0; a < pools.size(); ++a) {
      auto r = random_select(pools[a], built.base_information,
                             derive_seed(g.seed, "select", a));
      append_selection_rows(rcsv, pools[a], r);
    }
    rcsv.write(g.out + "/selection_random_b" + std::to_string(budget) +
               ".csv");

    for (std::size_t a = 0; a < pools.size(); ++a) {
      const AgentPath path(scenario.agents[a].waypoints);
      const std::string name =
          pools.size() == 1
              ? g.out + "/path_b" + std::to_string(budget) + ".csv"
              : g.out + "/path_agent" +
                    std::to_string(scenario.agents[a].id) + "_b" +
                    std::to_string(budget) + ".csv";
      write_path_csv(name, path, pools[a], greedy[a].chosen);
    }
  }
}

int cmd_demo(const GlobalOpts& g, const std::string& tag,
             const std::string& command) {
  if (!is_builtin_scenario(tag))
    throw ConfigError("unknown demo tag: " + tag);
  PhaseClock clock;
  clock.start("load");
  ResolvedScenario rs = resolve_scenario(tag, g.seed);
  clock.stop();

  ensure_directory(g.out);
  write_text_file(g.out + "/config.json", rs.config_text);

  if (tag == "cooperative") {
    // Error-curve comparison between independent and cooperative selection.
    // Small budgets: that is where coordination changes what gets picked;
    // at large budgets both schemes saturate the same information.
    clock.start("sweep");
    SweepOptions opts;
    opts.budgets = {1, 2, 3};
    opts.selectors = {"independent", "cooperative"};
    opts.trials = 200;
    opts.seed = g.seed;
    opts.threads = g.threads;
    SweepResult result = monte_carlo_sweep(rs.scenario, opts);
    clock.stop();

    clock.start("write");
    CsvWriter curve({"selector", "budget", "trials", "rmse_pos_m",
                     "weighted_err", "nonconverged"});
    for (const auto& pt : result.curve)
      curve.add_row({pt.selector, std::to_string(pt.budget),
                     std::to_string(pt.trials), format_double(pt.rmse_pos),
                     format_double(pt.weighted_err),
                     std::to_string(pt.nonconverged)});
    curve.write(g.out + "/error_curve.csv");
    CsvWriter mix({"selector", "budget", "sensor_type", "count"});
    for (const auto& row : result.mix)
      mix.add_row({row.selector, std::to_string(row.budget), row.sensor_type,
                   format_double(row.count)});
    mix.write(g.out + "/mix.csv");
    clock.stop();
    emit_manifest(g, command, rs.config_text, clock);
    return 0;
  }

  clock.start("build");
  BuiltPools built = build_pools(rs.scenario);
  clock.stop();

  clock.start("select");
  const std::vector<int> budgets =
      tag == "example1" ? std::vector<int>{10, 50, 100} : std::vector<int>{10};
  demo_selection_files(g, rs.scenario, built, budgets, tag == "example3");
  clock.stop();
  emit_manifest(g, command, rs.config_text, clock);
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Measurement selection by Fisher information"};
  app.require_subcommand(1);
  app.fallthrough();  // accept global flags after the subcommand name

  GlobalOpts g;
  app.add_option("--seed", g.seed, "Master seed")->capture_default_str();
  app.add_option("--out", g.out, "Output directory")
      ->envname("FIMSEL_OUT")
      ->capture_default_str();
  app.add_option("--threads", g.threads, "Worker threads (0 = all cores)")
      ->capture_default_str();

  std::string config_arg;
  std::string algorithm = "greedy";
  int budget_override = -1;

  CLI::App* select =
      app.add_subcommand("select", "Select measurements from one config");
  select->add_option("config", config_arg,
                     "Config file path or builtin tag")->required();
  select->add_option("--algorithm", algorithm,
                     "greedy | lazy | random | oracle")
      ->check(CLI::IsMember({"greedy", "lazy", "random", "oracle"}))
      ->capture_default_str();
  select->add_option("--budget", budget_override,
                     "Override every agent budget (>= 0)");

  CLI::App* oracle = app.add_subcommand(
      "oracle", "Exhaustive optimum (select --algorithm oracle)");
  oracle->add_option("config", config_arg,
                     "Config file path or builtin tag")->required();
  oracle->add_option("--budget", budget_override,
                     "Override every agent budget (>= 0)");

  std::vector<int> budgets{10};
  int trials = 50;
  std::vector<std::string> selectors{"greedy", "random"};
  CLI::App* sweep =
      app.add_subcommand("sweep", "Monte-Carlo error sweep over budgets");
  sweep->add_option("config", config_arg,
                    "Config file path or builtin tag")->required();
  sweep->add_option("--budgets", budgets, "Budgets to sweep")
      ->delimiter(',')
      ->capture_default_str();
  sweep->add_option("--trials", trials, "Monte-Carlo trials")
      ->capture_default_str();
  sweep->add_option("--selectors", selectors,
                    "greedy | lazy | random | independent | cooperative")
      ->delimiter(',')
      ->capture_default_str();

  std::string demo_tag;
  CLI::App* demo = app.add_subcommand("demo", "Run a builtin demo scenario");
  demo->add_option("tag", demo_tag, "example1 | example2 | example3 | cooperative")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  const std::string command = join_command(argc, argv);
  try {
    if (select->parsed())
      return cmd_select(g, config_arg, algorithm, budget_override, command);
    if (oracle->parsed())
      return cmd_select(g, config_arg, "oracle", budget_override, command);
    if (sweep->parsed())
      return cmd_sweep(g, config_arg, budgets, trials, selectors, command);
    if (demo->parsed()) return cmd_demo(g, demo_tag, command);
    throw UsageError("no subcommand given");
  } catch (const OracleGuardError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    // Numerical and geometric failures: PD loss, nonconvergence, degeneracy.
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace fimsel
