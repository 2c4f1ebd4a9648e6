#include "fimsel/select.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <random>

#include "fimsel/rng.hpp"

namespace fimsel {

namespace {

int effective_budget(const CandidatePool& pool) {
  return std::min<int>(pool.budget, static_cast<int>(pool.atoms.size()));
}

SelectionResult greedy_core(const CandidatePool& pool, FimState& state,
                            const double base_f) {
  SelectionResult res;
  const int budget = effective_budget(pool);
  std::vector<bool> taken(pool.atoms.size(), false);
  double f = base_f;
  for (int step = 0; step < budget; ++step) {
    int best = -1;
    double best_gain = -1.0;
    for (std::size_t i = 0; i < pool.atoms.size(); ++i) {
      if (taken[i]) continue;
      const double g = state.gain(pool.atoms[i]);
      ++res.evaluations;
      if (g > best_gain ||
          (g == best_gain && pool.atoms[i].id() < pool.atoms[best].id())) {
        best_gain = g;
        best = static_cast<int>(i);
      }
    }
    if (best < 0) throw NumericError("no evaluable candidate remains");
    state.push(pool.atoms[best]);
    taken[best] = true;
    f += best_gain;
    res.chosen.push_back(pool.atoms[best].id());
    res.gains.push_back(best_gain);
  }
  res.f = f;
  return res;
}

double binomial_count(int n, int k) {
  double c = 1.0;
  for (int i = 0; i < k; ++i) c = c * (n - i) / (i + 1);
  return c;
}

}  // namespace

SelectionResult greedy_select(const CandidatePool& pool, const MatX& base) {
  FimState state(base);
  return greedy_core(pool, state, 0.0);
}

SelectionResult lazy_greedy_select(const CandidatePool& pool,
                                   const MatX& base) {
  FimState state(base);
  SelectionResult res;
  const int budget = effective_budget(pool);

  struct Entry {
    double gain;
    int id;
    int index;  // into pool.atoms
    int step;   // step the gain was computed at
  };
  // Max-heap on gain; among equal gains the lower atom id surfaces first,
  // matching the eager tie-break.
  auto cmp = [&](const Entry& a, const Entry& b) {
    if (a.gain != b.gain) return a.gain < b.gain;
    return a.id > b.id;
  };
  std::priority_queue<Entry, std::vector<Entry>, decltype(cmp)> heap(cmp);

  for (std::size_t i = 0; i < pool.atoms.size(); ++i) {
    heap.push({state.gain(pool.atoms[i]), pool.atoms[i].id(),
               static_cast<int>(i), 0});
    ++res.evaluations;
  }

  double f = 0.0;
  for (int step = 0; step < budget; ++step) {
    for (;;) {
      Entry top = heap.top();
      heap.pop();
      if (top.step == step) {
        // Submodularity makes every stale key an upper bound, so a fresh
        // top already dominates the rest of the heap.
        state.push(pool.atoms[top.index]);
        f += top.gain;
        res.chosen.push_back(pool.atoms[top.index].id());
        res.gains.push_back(top.gain);
        break;
      }
      top.gain = state.gain(pool.atoms[top.index]);
      ++res.evaluations;
      top.step = step;
      heap.push(top);
    }
  }
  res.f = f;
  return res;
}

SelectionResult brute_force_select(const CandidatePool& pool, const MatX& base,
                                   double max_combinations) {
  const int n = static_cast<int>(pool.atoms.size());
  const int budget = effective_budget(pool);
  double enumerated = 0.0;
  for (int k = 1; k <= budget; ++k) enumerated += binomial_count(n, k);
  if (binomial_count(n, budget) > max_combinations ||
      enumerated > 16.0 * max_combinations)
    throw OracleGuardError("combination count exceeds the exhaustive guard");

  const double base_logdet = FimState(base).logdet();

  // The empty set (f = 0) starts as the incumbent; every other subset must
  // strictly beat it or tie with a lexicographically smaller id tuple, which
  // an empty tuple makes impossible.
  SelectionResult best;
  best.f = 0.0;
  std::vector<int> best_ids;

  auto consider = [&](const std::vector<int>& subset) {
    MatX total = base;
    for (int i : subset) total += pool.atoms[i].dense_information();
    const double f = FimState(total).logdet() - base_logdet;
    ++best.evaluations;
    std::vector<int> ids;
    ids.reserve(subset.size());
    for (int i : subset) ids.push_back(pool.atoms[i].id());
    std::sort(ids.begin(), ids.end());
    if (f > best.f ||
        (f == best.f &&
         std::lexicographical_compare(ids.begin(), ids.end(),
                                      best_ids.begin(), best_ids.end()))) {
      best.f = f;
      best_ids = std::move(ids);
    }
  };

  // Enumerate sizes 1..budget, each in lexicographic index order.
  std::vector<int> subset;
  for (int k = 1; k <= budget; ++k) {
    subset.resize(k);
    for (int i = 0; i < k; ++i) subset[i] = i;
    for (;;) {
      consider(subset);
      int i = k - 1;
      while (i >= 0 && subset[i] == n - k + i) --i;
      if (i < 0) break;
      ++subset[i];
      for (int j = i + 1; j < k; ++j) subset[j] = subset[j - 1] + 1;
    }
  }

  best.chosen = best_ids;
  // Report per-step gains by replaying the winning set in id order.
  FimState state(base);
  for (int id : best.chosen) {
    const InfoAtom* atom = pool.find(id);
    const double g = state.gain(*atom);
    state.push(*atom);
    best.gains.push_back(g);
  }
  return best;
}

SelectionResult random_select(const CandidatePool& pool, const MatX& base,
                              std::uint64_t seed) {
  SelectionResult res;
  const int n = static_cast<int>(pool.atoms.size());
  const int budget = effective_budget(pool);
  std::mt19937_64 eng(derive_seed(seed, "random_select"));

  // Partial Fisher-Yates: first `budget` slots are a uniform ordered sample
  // without replacement.
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  for (int i = 0; i < budget; ++i) {
    std::uniform_int_distribution<int> pick(i, n - 1);
    std::swap(order[i], order[pick(eng)]);
  }

  FimState state(base);
  double f = 0.0;
  for (int i = 0; i < budget; ++i) {
    const InfoAtom& atom = pool.atoms[order[i]];
    const double g = state.gain(atom);
    state.push(atom);
    f += g;
    res.chosen.push_back(atom.id());
    res.gains.push_back(g);
  }
  res.f = f;
  return res;
}

MultiAgentResult cooperative_select(const std::vector<CandidatePool>& pools,
                                    const MatX& base) {
  MultiAgentResult out;
  MatX shared = base;
  for (const auto& pool : pools) {
    FimState state(shared);
    const SelectionResult r = greedy_core(pool, state, 0.0);
    // state.total() now holds shared + this agent's picks; carry it forward
    // as the next agent's base.
    shared = state.total();
    out.per_agent.push_back(r);
  }
  out.joint_f = FimState(shared).logdet() - FimState(base).logdet();
  return out;
}

MultiAgentResult independent_select(const std::vector<CandidatePool>& pools,
                                    const MatX& base) {
  MultiAgentResult out;
  std::vector<std::vector<int>> chosen;
  for (const auto& pool : pools) {
    out.per_agent.push_back(greedy_select(pool, base));
    chosen.push_back(out.per_agent.back().chosen);
  }
  out.joint_f = joint_objective(pools, chosen, base);
  return out;
}

double joint_objective(const std::vector<CandidatePool>& pools,
                       const std::vector<std::vector<int>>& chosen,
                       const MatX& base) {
  if (chosen.size() != pools.size())
    throw UsageError("joint objective needs one id list per pool");
  MatX total = base;
  for (std::size_t i = 0; i < pools.size(); ++i) {
    for (int id : chosen[i]) {
      const InfoAtom* atom = pools[i].find(id);
      if (!atom) throw UsageError("chosen id missing from pool");
      total += atom->dense_information();
    }
  }
  return FimState(total).logdet() - FimState(base).logdet();
}

}  // namespace fimsel
