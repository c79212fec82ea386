#pragma once

#include "repsim/repdata.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>

namespace repsim {

/// Second-moment statistics of a pair of representations evaluated on the
/// same samples.
///
/// Besides the covariance blocks, the set keeps a square-root factor R of the
/// joint second-moment matrix, [sigma_phi sigma_cross; sigma_cross^T
/// sigma_psi] = R^T R, computed from the data by QR. Distances evaluated from
/// R avoid squaring the condition number of the data and can be written as
/// sums of squares, which keeps values near zero accurate.
struct MomentSet {
  std::string name_phi;
  std::string name_psi;

  Eigen::MatrixXd sigma_phi;    // k x k
  Eigen::MatrixXd sigma_psi;    // l x l
  Eigen::MatrixXd sigma_cross;  // k x l
  Eigen::Index n = 0;

  std::optional<double> lambda;  // set when inverses are materialized
  Eigen::MatrixXd inv_phi;       // (sigma_phi + lambda I)^-1, or pseudo-inverse at 0
  Eigen::MatrixXd inv_psi;

  Eigen::MatrixXd joint_root;  // p x (k + l); first k columns belong to phi

  Eigen::Index dim_phi() const noexcept { return sigma_phi.rows(); }
  Eigen::Index dim_psi() const noexcept { return sigma_psi.rows(); }
  auto root_phi() const { return joint_root.leftCols(dim_phi()); }
  auto root_psi() const { return joint_root.rightCols(dim_psi()); }
};

/// (1/n) A^T A, symmetrized. Requires a normalized representation.
Eigen::MatrixXd covariance(const Representation& rep);

/// (1/n) A^T B. Both normalized, same sample count.
Eigen::MatrixXd cross_covariance(const Representation& a, const Representation& b);

/// (sigma + lambda I)^-1 through a symmetric eigendecomposition. At lambda = 0
/// returns the Moore-Penrose pseudo-inverse, dropping eigenvalues at or below
/// pinv_cutoff(). Negative round-off eigenvalues are clamped to zero.
Eigen::MatrixXd regularized_inverse(const Eigen::MatrixXd& sigma, double lambda);

/// Eigenvalue threshold dim * eps * max_eigenvalue used for every pseudo-inverse.
double pinv_cutoff(Eigen::Index dim, double max_eigenvalue);

/// Builds the moment set of a pair. Inverses are materialized when `lambda`
/// is given.
MomentSet compute_moments(const Representation& a, const Representation& b,
                          std::optional<double> lambda = std::nullopt);

/// Moment set from given covariance blocks; the joint root is taken from the
/// eigendecomposition of the joint matrix, which must be PSD.
MomentSet moments_from_covariances(const Eigen::MatrixXd& sigma_phi,
                                   const Eigen::MatrixXd& sigma_psi,
                                   const Eigen::MatrixXd& sigma_cross, Eigen::Index n,
                                   std::optional<double> lambda = std::nullopt);

/// Ridge hat matrix F (F^T F + lambda I)^-1 F^T of a root factor F (p x k),
/// built from the SVD of F. At lambda = 0 it is the projector onto the
/// retained singular directions.
struct HatMatrix {
  Eigen::MatrixXd matrix;  // p x p, symmetric
  Eigen::Index rank = 0;   // singular directions above the pseudo-inverse cutoff
};
HatMatrix hat_matrix(const Eigen::MatrixXd& factor, double lambda);

}  // namespace repsim
