#include "repsim/moments.hpp"

#include "repsim/error.hpp"

#include <cmath>
#include <limits>

namespace repsim {

namespace {

constexpr double kSymmetryTol = 1e-10;

void require_normalized(const Representation& rep) {
  if (!rep.is_normalized())
    throw InputError("representation '" + rep.name() + "' must be normalized");
}

void require_symmetric(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) throw InputError("matrix must be square");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > kSymmetryTol * scale)
    throw InputError("matrix is not symmetric");
}

}  // namespace

double pinv_cutoff(Eigen::Index dim, double max_eigenvalue) {
  return static_cast<double>(dim) * std::numeric_limits<double>::epsilon() *
         std::max(max_eigenvalue, 0.0);
}

Eigen::MatrixXd covariance(const Representation& rep) {
  require_normalized(rep);
  const auto& a = rep.data();
  Eigen::MatrixXd s = (a.transpose() * a) / static_cast<double>(a.rows());
  return (s + s.transpose()) / 2.0;
}

Eigen::MatrixXd cross_covariance(const Representation& a, const Representation& b) {
  require_normalized(a);
  require_normalized(b);
  if (a.samples() != b.samples())
    throw InputError("mismatched n: '" + a.name() + "' has " + std::to_string(a.samples()) +
                     " samples, '" + b.name() + "' has " + std::to_string(b.samples()));
  return (a.data().transpose() * b.data()) / static_cast<double>(a.samples());
}

Eigen::MatrixXd regularized_inverse(const Eigen::MatrixXd& sigma, double lambda) {
  if (!(lambda >= 0.0)) throw InputError("lambda must be >= 0");
  require_symmetric(sigma);
  const Eigen::MatrixXd sym = (sigma + sigma.transpose()) / 2.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
  if (eig.info() != Eigen::Success) throw NumericalError("eigendecomposition failed");

  Eigen::VectorXd values = eig.eigenvalues().cwiseMax(0.0);
  const double cutoff = pinv_cutoff(sym.rows(), values.size() ? values.maxCoeff() : 0.0);
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (lambda > 0.0)
      values(i) = 1.0 / (values(i) + lambda);
    else
      values(i) = values(i) > cutoff ? 1.0 / values(i) : 0.0;
  }
  const auto& v = eig.eigenvectors();
  Eigen::MatrixXd inv = v * values.asDiagonal() * v.transpose();
  return (inv + inv.transpose()) / 2.0;
}

MomentSet compute_moments(const Representation& a, const Representation& b,
                          std::optional<double> lambda) {
  MomentSet m;
  m.name_phi = a.name();
  m.name_psi = b.name();
  m.sigma_phi = covariance(a);
  m.sigma_psi = covariance(b);
  m.sigma_cross = cross_covariance(a, b);
  m.n = a.samples();

  const Eigen::Index k = a.features();
  const Eigen::Index l = b.features();
  Eigen::MatrixXd joint(m.n, k + l);
  joint << a.data(), b.data();
  joint /= std::sqrt(static_cast<double>(m.n));
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(joint);
  const Eigen::Index p = std::min(m.n, k + l);
  m.joint_root = qr.matrixQR().topRows(p).triangularView<Eigen::Upper>();

  if (lambda) {
    m.lambda = *lambda;
    m.inv_phi = regularized_inverse(m.sigma_phi, *lambda);
    m.inv_psi = regularized_inverse(m.sigma_psi, *lambda);
  }
  return m;
}

MomentSet moments_from_covariances(const Eigen::MatrixXd& sigma_phi,
                                   const Eigen::MatrixXd& sigma_psi,
                                   const Eigen::MatrixXd& sigma_cross, Eigen::Index n,
                                   std::optional<double> lambda) {
  require_symmetric(sigma_phi);
  require_symmetric(sigma_psi);
  const Eigen::Index k = sigma_phi.rows();
  const Eigen::Index l = sigma_psi.rows();
  if (sigma_cross.rows() != k || sigma_cross.cols() != l)
    throw InputError("cross-covariance shape does not match the covariance blocks");

  MomentSet m;
  m.sigma_phi = sigma_phi;
  m.sigma_psi = sigma_psi;
  m.sigma_cross = sigma_cross;
  m.n = n;

  Eigen::MatrixXd joint(k + l, k + l);
  joint << sigma_phi, sigma_cross, sigma_cross.transpose(), sigma_psi;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(joint);
  if (eig.info() != Eigen::Success) throw NumericalError("eigendecomposition failed");
  const Eigen::VectorXd& w = eig.eigenvalues();
  if (w.minCoeff() < -1e-10 * std::max(1.0, w.maxCoeff()))
    throw NumericalError("joint second-moment matrix is not positive semidefinite");
  m.joint_root = w.cwiseMax(0.0).cwiseSqrt().asDiagonal() * eig.eigenvectors().transpose();

  if (lambda) {
    m.lambda = *lambda;
    m.inv_phi = regularized_inverse(sigma_phi, *lambda);
    m.inv_psi = regularized_inverse(sigma_psi, *lambda);
  }
  return m;
}

HatMatrix hat_matrix(const Eigen::MatrixXd& factor, double lambda) {
  if (!(lambda >= 0.0)) throw InputError("lambda must be >= 0");
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(factor, Eigen::ComputeThinU);
  const Eigen::VectorXd& s = svd.singularValues();
  const Eigen::MatrixXd& u = svd.matrixU();

  HatMatrix hat;
  Eigen::VectorXd weights(s.size());
  const double max_eig = s.size() ? s(0) * s(0) : 0.0;
  const double cutoff = pinv_cutoff(factor.cols(), max_eig);
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    const double e = s(i) * s(i);
    const bool retained = e > cutoff;
    if (retained) ++hat.rank;
    if (lambda > 0.0)
      weights(i) = e / (e + lambda);
    else
      weights(i) = retained ? 1.0 : 0.0;
  }
  hat.matrix = u * weights.asDiagonal() * u.transpose();
  return hat;
}

}  // namespace repsim
