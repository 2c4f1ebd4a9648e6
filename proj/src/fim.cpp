#include "fimsel/fim.hpp"

#include <cmath>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

namespace fimsel {

namespace {

constexpr int kRefactorInterval = 64;

double logdet_from_factor(const MatX& chol) {
  double s = 0.0;
  for (int i = 0; i < chol.rows(); ++i) s += std::log(chol(i, i));
  return 2.0 * s;
}

// Classic rank-one Cholesky update: L L^T + x x^T = L' L'^T.
void chol_rank1_update(MatX& chol, VecX x) {
  const int n = static_cast<int>(chol.rows());
  for (int k = 0; k < n; ++k) {
    const double lkk = chol(k, k);
    const double r = std::hypot(lkk, x(k));
    const double c = r / lkk;
    const double s = x(k) / lkk;
    chol(k, k) = r;
    if (k + 1 < n) {
      chol.col(k).tail(n - k - 1) =
          (chol.col(k).tail(n - k - 1) + s * x.tail(n - k - 1)) / c;
      x.tail(n - k - 1) =
          c * x.tail(n - k - 1) - s * chol.col(k).tail(n - k - 1);
    }
  }
}

}  // namespace

InfoAtom::InfoAtom(int id, const JacobianBlocks& jacobian,
                   const MatX& noise_cov)
    : id_(id), jacobian_(jacobian), noise_cov_(noise_cov) {
  const MatX j = jacobian.dense();
  if (noise_cov_.rows() != j.rows() || noise_cov_.cols() != j.rows())
    throw UsageError("atom noise covariance dimension mismatch");
  if ((noise_cov_ - noise_cov_.transpose()).cwiseAbs().maxCoeff() >
      1e-12 * std::max(1.0, noise_cov_.cwiseAbs().maxCoeff()))
    throw NumericError("atom noise covariance not symmetric");
  Eigen::LLT<MatX> llt(noise_cov_);
  if (llt.info() != Eigen::Success ||
      llt.matrixL().toDenseMatrix().diagonal().minCoeff() <= 0.0)
    throw NumericError("atom noise covariance not positive definite");
  whitened_ = llt.matrixL().solve(j);
}

MatX InfoAtom::dense_information() const {
  MatX q = whitened_.transpose() * whitened_;
  q = 0.5 * (q + q.transpose()).eval();
  return q;
}

InfoAtom atom_from_measurement(int id, const ParamVector& theta_ref,
                               const MeasurementSpec& spec) {
  return InfoAtom(id, measurement_jacobian_blocks(theta_ref, spec),
                  measurement_noise(spec));
}

FimState::FimState(const MatX& base) : total_(base) {
  if (base.rows() != base.cols()) throw NumericError("base matrix not square");
  if ((base - base.transpose()).cwiseAbs().maxCoeff() >
      1e-10 * std::max(1.0, base.cwiseAbs().maxCoeff()))
    throw NumericError("base matrix not symmetric");
  total_ = 0.5 * (total_ + total_.transpose()).eval();
  refactor();
  base_logdet_ = logdet_;
}

void FimState::refactor() {
  Eigen::LLT<MatX> llt(total_);
  if (llt.info() != Eigen::Success)
    throw NumericError("information matrix not positive definite");
  chol_ = llt.matrixL();
  if (chol_.diagonal().minCoeff() <= 0.0)
    throw NumericError("information matrix not positive definite");
  logdet_ = logdet_from_factor(chol_);
  pushes_since_refactor_ = 0;
}

double FimState::gain(const InfoAtom& atom) const {
  if (atom.dim() != dim())
    throw UsageError("atom dimension does not match state");
  const int r = atom.rows();
  // Matrix determinant lemma on the whitened rows:
  //   log det(T + W^T W) - log det(T) = log det(I_r + W T^-1 W^T),
  // with W T^-1 W^T = Y^T Y for Y = L^-1 W^T.
  const MatX y = chol_.triangularView<Eigen::Lower>().solve(
      atom.whitened().transpose());
  if (r == 1) return std::log1p(y.col(0).squaredNorm());
  const MatX s = MatX::Identity(r, r) + y.transpose() * y;
  if (r == 2)
    return std::log(s(0, 0) * s(1, 1) - s(0, 1) * s(1, 0));
  return logdet_from_factor(MatX(Eigen::LLT<MatX>(s).matrixL()));
}

void FimState::push(const InfoAtom& atom) {
  if (atom.dim() != dim())
    throw UsageError("atom dimension does not match state");
  for (int id : chosen_)
    if (id == atom.id()) throw UsageError("atom already pushed");
  total_ += atom.dense_information();
  for (int i = 0; i < atom.rows(); ++i)
    chol_rank1_update(chol_, atom.whitened().row(i).transpose());
  logdet_ = logdet_from_factor(chol_);
  chosen_.push_back(atom.id());
  if (++pushes_since_refactor_ >= kRefactorInterval) refactor();
}

MatX information_sum(const MatX& base, const std::vector<InfoAtom>& atoms) {
  MatX total = base;
  for (const auto& a : atoms) total += a.dense_information();
  return 0.5 * (total + total.transpose()).eval();
}

CriterionReport criterion_report(const FimState& state, const MatX& base) {
  CriterionReport rep;
  rep.f_logdet = state.logdet() - state.base_logdet();

  const int p = state.dim();
  Eigen::LLT<MatX> base_llt(base);
  if (base_llt.info() != Eigen::Success)
    throw NumericError("base matrix not positive definite");
  Eigen::LLT<MatX> total_llt(state.total());
  if (total_llt.info() != Eigen::Success)
    throw NumericError("information matrix not positive definite");

  const MatX eye = MatX::Identity(p, p);
  rep.trace_inv_ratio =
      total_llt.solve(eye).trace() / base_llt.solve(eye).trace();

  // Largest eigenvalue of the inverse is the reciprocal smallest eigenvalue.
  Eigen::SelfAdjointEigenSolver<MatX> base_eig(base);
  Eigen::SelfAdjointEigenSolver<MatX> total_eig(state.total());
  rep.max_eig_inv_ratio = base_eig.eigenvalues().minCoeff() /
                          total_eig.eigenvalues().minCoeff();
  return rep;
}

}  // namespace fimsel
