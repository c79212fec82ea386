#pragma once

// Shared helpers for the test binaries: seeded random representations and
// straightforward reference implementations used as oracles. The oracles work
// from the raw data with textbook formulas (Cholesky solves, explicit Gram
// matrices) and deliberately share no code with the library routines.

#include "repsim/repdata.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <random>
#include <string>

namespace testing {

inline Eigen::MatrixXd gaussian(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = normal(rng);
  return m;
}

inline Eigen::MatrixXd orthogonal(Eigen::Index d, std::mt19937_64& rng) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(gaussian(d, d, rng));
  Eigen::MatrixXd q = qr.householderQ();
  return q;
}

/// Gaussian features with an uneven spectrum so that lambda matters.
inline Eigen::MatrixXd shaped(Eigen::Index n, Eigen::Index k, std::mt19937_64& rng) {
  Eigen::MatrixXd x = gaussian(n, k, rng);
  for (Eigen::Index j = 0; j < k; ++j) x.col(j) *= std::pow(0.7, static_cast<double>(j));
  return x * orthogonal(k, rng);
}

inline repsim::Representation rep(const Eigen::MatrixXd& x, std::string name = "rep") {
  return repsim::normalize(repsim::Representation(std::move(name), x));
}

/// Pair with a shared latent part so that distances are neither 0 nor maximal.
inline std::pair<repsim::Representation, repsim::Representation> related_pair(
    Eigen::Index n, Eigen::Index k, Eigen::Index l, std::mt19937_64& rng) {
  const Eigen::Index shared = std::min(k, l);
  const Eigen::MatrixXd latent = shaped(n, shared, rng);
  Eigen::MatrixXd a = shaped(n, k, rng) * 0.5;
  Eigen::MatrixXd b = shaped(n, l, rng) * 0.5;
  a.leftCols(shared) += latent;
  b.leftCols(shared) += latent * gaussian(shared, shared, rng);
  return {rep(a, "a"), rep(b, "b")};
}

// ---------------------------------------------------------------------------
// Oracles (inputs are normalized data matrices)

inline Eigen::MatrixXd second_moment(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
  return x.transpose() * y / static_cast<double>(x.rows());
}

/// (S + lambda I)^-1 by Cholesky for lambda > 0, Moore-Penrose otherwise.
inline Eigen::MatrixXd resolvent(const Eigen::MatrixXd& s, double lambda) {
  const Eigen::Index k = s.rows();
  if (lambda > 0.0)
    return (s + lambda * Eigen::MatrixXd::Identity(k, k)).llt().solve(Eigen::MatrixXd::Identity(k, k));
  return s.completeOrthogonalDecomposition().pseudoInverse();
}

/// Squared GULP through the trace expansion.
inline double gulp_sq_trace(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double lambda) {
  const Eigen::MatrixXd saa = second_moment(a, a);
  const Eigen::MatrixXd sbb = second_moment(b, b);
  const Eigen::MatrixXd sab = second_moment(a, b);
  const Eigen::MatrixXd ia = resolvent(saa, lambda);
  const Eigen::MatrixXd ib = resolvent(sbb, lambda);
  return (ia * saa * ia * saa).trace() + (ib * sbb * ib * sbb).trace() -
         2.0 * (ia * sab * ib * sab.transpose()).trace();
}

/// Sum of squared canonical correlations through Cholesky whitening.
inline double cca_trace(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const Eigen::MatrixXd la = second_moment(a, a).llt().matrixL();
  const Eigen::MatrixXd lb = second_moment(b, b).llt().matrixL();
  const Eigen::MatrixXd sab = second_moment(a, b);
  const Eigen::MatrixXd left = la.triangularView<Eigen::Lower>().solve(sab);
  const Eigen::MatrixXd whitened =
      lb.triangularView<Eigen::Lower>().solve(left.transpose()).transpose();
  return whitened.squaredNorm();
}

inline double cca_sq(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return 1.0 - cca_trace(a, b) / static_cast<double>(std::min(a.cols(), b.cols()));
}

/// 1 - <K_a, K_b> / (|K_a| |K_b|) on the n x n linear Gram matrices.
inline double cka_sq(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const Eigen::MatrixXd ka = a * a.transpose();
  const Eigen::MatrixXd kb = b * b.transpose();
  return 1.0 - (ka.cwiseProduct(kb)).sum() / (ka.norm() * kb.norm());
}

inline double procrustes_sq(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::BDCSVD<Eigen::MatrixXd> svd(second_moment(a, b));
  return second_moment(a, a).trace() + second_moment(b, b).trace() -
         2.0 * svd.singularValues().sum();
}

/// Projection-weighted CCA distance with `a` as the base view, from explicit
/// canonical variates.
inline double pwcca_value(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const Eigen::MatrixXd saa = second_moment(a, a);
  const Eigen::MatrixXd sbb = second_moment(b, b);
  const Eigen::MatrixXd sab = second_moment(a, b);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ea(saa), eb(sbb);
  const Eigen::MatrixXd wa = ea.operatorInverseSqrt();
  const Eigen::MatrixXd wb = eb.operatorInverseSqrt();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(wa * sab * wb, Eigen::ComputeThinU);
  const Eigen::Index c = std::min(a.cols(), b.cols());
  const Eigen::MatrixXd variates = a * wa * svd.matrixU().leftCols(c);  // n x c
  Eigen::VectorXd weight(c);
  for (Eigen::Index i = 0; i < c; ++i) {
    weight(i) = 0.0;
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      weight(i) += std::abs(variates.col(i).dot(a.col(j)));
  }
  weight /= weight.sum();
  return 1.0 - weight.dot(svd.singularValues().head(c).cwiseMin(1.0));
}

/// Kernel GULP from explicit Gram matrices and Cholesky solves.
inline double kernel_gulp_sq(const Eigen::MatrixXd& ga_raw, const Eigen::MatrixXd& gb_raw,
                             double lambda) {
  const Eigen::Index n = ga_raw.rows();
  const Eigen::MatrixXd h =
      Eigen::MatrixXd::Identity(n, n) - Eigen::MatrixXd::Constant(n, n, 1.0 / static_cast<double>(n));
  auto smoother = [&](const Eigen::MatrixXd& g_raw) {
    Eigen::MatrixXd g = h * g_raw * h;
    g *= static_cast<double>(n) / g.trace();
    const Eigen::MatrixXd gn = g / static_cast<double>(n);
    const Eigen::MatrixXd reg = gn + lambda * Eigen::MatrixXd::Identity(n, n);
    // R = gn * reg^-1 = (reg^-1 gn)^T since both are symmetric
    return Eigen::MatrixXd(reg.llt().solve(gn).transpose());
  };
  return (smoother(ga_raw) - smoother(gb_raw)).squaredNorm();
}

inline Eigen::MatrixXd rbf_gram(const Eigen::MatrixXd& x, double bandwidth) {
  const Eigen::Index n = x.rows();
  Eigen::MatrixXd g(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      g(i, j) = std::exp(-(x.row(i) - x.row(j)).squaredNorm() / (2.0 * bandwidth * bandwidth));
  return g;
}

}  // namespace testing
