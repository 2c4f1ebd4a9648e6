#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "fimsel/sensors.hpp"

namespace fimsel {

// ---------------------------------------------------------------------------
// Information atoms
//
// One candidate measurement contributes J^T S^-1 J to the total information.
// The atom keeps the whitened Jacobian W = chol(S)^-1 J (r x p, r in {1, 2})
// so the contribution is W^T W by construction: symmetric and PSD without a
// separate cleanup step. The sparse column structure of J is preserved for
// inspection; the dense whitened rows drive the fast gain path.
// ---------------------------------------------------------------------------

class InfoAtom {
 public:
  InfoAtom() = default;
  InfoAtom(int id, const JacobianBlocks& jacobian, const MatX& noise_cov);

  int id() const { return id_; }
  int rows() const { return static_cast<int>(whitened_.rows()); }
  int dim() const { return static_cast<int>(whitened_.cols()); }
  const MatX& whitened() const { return whitened_; }
  const JacobianBlocks& jacobian() const { return jacobian_; }
  const MatX& noise_cov() const { return noise_cov_; }

  // Dense p x p information contribution, symmetrized.
  MatX dense_information() const;

 private:
  int id_ = -1;
  JacobianBlocks jacobian_;
  MatX noise_cov_;
  MatX whitened_;  // r x p
};

// Atom for one measurement spec, linearized at the reference parameters.
// Geometry errors from the sensor models propagate out of here; callers
// building pools catch and drop those candidates.
InfoAtom atom_from_measurement(int id, const ParamVector& theta_ref,
                               const MeasurementSpec& spec);

// ---------------------------------------------------------------------------
// Incremental information state
//
// Holds base + sum of pushed atoms along with a lower-triangular Cholesky
// factor of the total. Marginal gains use the matrix determinant lemma
// against the factor, O(r p^2) per query; pushes update the factor with
// rank-one Cholesky updates and a full refactorization every 64 pushes keeps
// drift bounded.
// ---------------------------------------------------------------------------

class FimState {
 public:
  // Throws NumericError unless base is symmetric positive definite.
  explicit FimState(const MatX& base);

  int dim() const { return static_cast<int>(total_.rows()); }
  const MatX& total() const { return total_; }
  double logdet() const { return logdet_; }
  double base_logdet() const { return base_logdet_; }
  const std::vector<int>& chosen() const { return chosen_; }

  // log det(total + atom) - log det(total), nonnegative up to roundoff.
  double gain(const InfoAtom& atom) const;

  // Adds the atom; rejects a second push of the same atom id.
  void push(const InfoAtom& atom);

 private:
  void refactor();

  MatX total_;
  MatX chol_;  // lower triangular
  double logdet_ = 0.0;
  double base_logdet_ = 0.0;
  std::vector<int> chosen_;
  int pushes_since_refactor_ = 0;
};

MatX information_sum(const MatX& base, const std::vector<InfoAtom>& atoms);

// ---------------------------------------------------------------------------
// Criterion report. The selection objective is the normalized log
// determinant
//
//   f(F) = log det(base + sum_F Q_k) - log det(base),
//
// zero on the empty set, monotone, and submodular for positive definite
// base. The two inverse-based ratios are diagnostics only; neither is
// submodular in general and nothing in the selection path consumes them.
// ---------------------------------------------------------------------------

struct CriterionReport {
  double f_logdet = 0.0;
  double trace_inv_ratio = 1.0;    // trace(total^-1) / trace(base^-1)
  double max_eig_inv_ratio = 1.0;  // max eig(total^-1) / max eig(base^-1)
};

CriterionReport criterion_report(const FimState& state, const MatX& base);

}  // namespace fimsel
