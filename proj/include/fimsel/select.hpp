#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fimsel/fim.hpp"

namespace fimsel {

// Reporting sidecar for one candidate: which sensor produced it and when.
struct AtomMeta {
  std::string sensor_type;  // "toa" | "doppler" | "camera"
  std::string sensor_str_id;
  double time = 0.0;
};

// One agent's candidate set. Atom ids are stable indices into the original
// schedule, so dropped (degenerate) candidates leave gaps rather than
// renumbering survivors.
struct CandidatePool {
  int agent_id = 0;
  int budget = 0;
  std::vector<InfoAtom> atoms;
  std::vector<AtomMeta> meta;  // parallel to atoms

  const InfoAtom* find(int atom_id) const {
    for (const auto& a : atoms)
      if (a.id() == atom_id) return &a;
    return nullptr;
  }
  const AtomMeta* find_meta(int atom_id) const {
    for (std::size_t i = 0; i < atoms.size(); ++i)
      if (atoms[i].id() == atom_id) return &meta[i];
    return nullptr;
  }
};

struct SelectionResult {
  std::vector<int> chosen;           // atom ids in pick order
  std::vector<double> gains;         // marginal gain at each pick
  double f = 0.0;                    // final objective value
  std::int64_t evaluations = 0;      // marginal-gain evaluations spent
};

// Greedy maximization of f(F) = logdet(base + sum Q) - logdet(base). Exactly
// min(budget, pool size) picks; ties broken toward the lowest atom id.
SelectionResult greedy_select(const CandidatePool& pool, const MatX& base);

// Lazy greedy (stale upper bounds on a heap). Picks the identical set and
// order as greedy_select while spending no more gain evaluations.
SelectionResult lazy_greedy_select(const CandidatePool& pool,
                                   const MatX& base);

// Exhaustive optimum over subsets of size at most the budget. Refuses pools
// where C(|pool|, budget) exceeds the guard. Ties resolved toward the
// lexicographically smallest sorted id tuple; chosen ids come back sorted.
SelectionResult brute_force_select(const CandidatePool& pool, const MatX& base,
                                   double max_combinations = 1e6);

// Uniform random subset of size min(budget, pool size), deterministic per
// seed. Gains are recorded for reporting but play no part in the choice.
SelectionResult random_select(const CandidatePool& pool, const MatX& base,
                              std::uint64_t seed);

struct MultiAgentResult {
  std::vector<SelectionResult> per_agent;  // pool order
  double joint_f = 0.0;  // objective of the union against the shared base
};

// Sequential cooperative selection: agents run greedy in pool order, each
// against the base augmented with every previously selected atom, mirroring
// single-message FIM sharing around a fully connected clique.
MultiAgentResult cooperative_select(const std::vector<CandidatePool>& pools,
                                    const MatX& base);

// Every agent selects against the bare base; no sharing.
MultiAgentResult independent_select(const std::vector<CandidatePool>& pools,
                                    const MatX& base);

// Objective of an explicit union of per-agent selections.
double joint_objective(const std::vector<CandidatePool>& pools,
                       const std::vector<std::vector<int>>& chosen,
                       const MatX& base);

}  // namespace fimsel
