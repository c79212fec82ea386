#include "repsim/distances.hpp"

#include "repsim/error.hpp"

#include <algorithm>
#include <cmath>

namespace repsim {

namespace {

DistanceRecord make_record(std::string name_a, std::string name_b, const MetricId& metric,
                           double squared) {
  DistanceRecord r;
  r.name_a = std::move(name_a);
  r.name_b = std::move(name_b);
  r.metric = metric;
  r.squared_value = squared;
  r.value = std::sqrt(std::max(squared, 0.0));
  return r;
}

double clamp_small_negative(double v) { return v < 0.0 && v > -1e-9 ? 0.0 : v; }

void require_lambda(double lambda) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw InputError("lambda must be >= 0");
}

void require_shared_samples(const Representation& a, const Representation& b) {
  if (!a.is_normalized() || !b.is_normalized())
    throw InputError("distances require normalized representations");
  if (a.samples() != b.samples())
    throw InputError("mismatched n: '" + a.name() + "' and '" + b.name() +
                     "' are not evaluated on the same samples");
}

bool rank_deficient(const MomentSet& m, Eigen::Index rank_phi, Eigen::Index rank_psi) {
  return m.n <= std::max(m.dim_phi(), m.dim_psi()) || rank_phi < m.dim_phi() ||
         rank_psi < m.dim_psi();
}

Eigen::MatrixXd block(const Eigen::MatrixXd& root, Eigen::Index first, Eigen::Index cols) {
  return root.middleCols(first, cols);
}

/// Orthonormal basis (p x r) of the column span of a root factor, keeping
/// singular directions above the pseudo-inverse cutoff.
Eigen::MatrixXd span_basis(const Eigen::MatrixXd& factor) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(factor, Eigen::ComputeThinU);
  const Eigen::VectorXd& s = svd.singularValues();
  const double cutoff = pinv_cutoff(factor.cols(), s.size() ? s(0) * s(0) : 0.0);
  Eigen::Index r = 0;
  while (r < s.size() && s(r) * s(r) > cutoff) ++r;
  return svd.matrixU().leftCols(r);
}

}  // namespace

// ---------------------------------------------------------------------------

MetricKind parse_metric_kind(std::string_view name) {
  if (name == "gulp") return MetricKind::gulp;
  if (name == "gulp_pairwise") return MetricKind::gulp_pairwise;
  if (name == "gulp_kernel") return MetricKind::gulp_kernel;
  if (name == "cca") return MetricKind::cca;
  if (name == "ridge_cca_inner" || name == "ridge_cca") return MetricKind::ridge_cca_inner;
  if (name == "cka") return MetricKind::cka;
  if (name == "pwcca") return MetricKind::pwcca;
  if (name == "procrustes") return MetricKind::procrustes;
  throw InputError("unknown metric '" + std::string(name) + "'");
}

std::string_view to_string(MetricKind kind) {
  switch (kind) {
    case MetricKind::gulp: return "gulp";
    case MetricKind::gulp_pairwise: return "gulp_pairwise";
    case MetricKind::gulp_kernel: return "gulp_kernel";
    case MetricKind::cca: return "cca";
    case MetricKind::ridge_cca_inner: return "ridge_cca_inner";
    case MetricKind::cka: return "cka";
    case MetricKind::pwcca: return "pwcca";
    case MetricKind::procrustes: return "procrustes";
  }
  return "unknown";
}

bool uses_lambda(MetricKind kind) {
  return kind == MetricKind::gulp || kind == MetricKind::gulp_pairwise ||
         kind == MetricKind::gulp_kernel || kind == MetricKind::ridge_cca_inner;
}

void MetricId::validate() const {
  require_lambda(lambda);
  if (kind == MetricKind::gulp_kernel && kernel.type == Kernel::Type::rbf &&
      !(kernel.bandwidth > 0.0 && std::isfinite(kernel.bandwidth)))
    throw InputError("rbf bandwidth must be > 0");
}

// ---------------------------------------------------------------------------
// GULP

DistanceRecord gulp(const MomentSet& moments) {
  if (!moments.lambda) throw InputError("gulp: moment set has no lambda");
  const double lambda = *moments.lambda;
  require_lambda(lambda);

  const Eigen::Index k = moments.dim_phi();
  const Eigen::Index l = moments.dim_psi();
  const HatMatrix hat_a = hat_matrix(block(moments.joint_root, 0, k), lambda);
  const HatMatrix hat_b = hat_matrix(block(moments.joint_root, k, l), lambda);
  const double squared = (hat_a.matrix - hat_b.matrix).squaredNorm();

  auto r = make_record(moments.name_phi, moments.name_psi,
                       MetricId{MetricKind::gulp, lambda, {}}, squared);
  if (lambda == 0.0 && rank_deficient(moments, hat_a.rank, hat_b.rank))
    r.flags.emplace_back(kFlagRankDeficient);
  return r;
}

DistanceRecord gulp(const Representation& a, const Representation& b, double lambda) {
  require_lambda(lambda);
  return gulp(compute_moments(a, b, lambda));
}

DistanceRecord gulp_pairwise(const Representation& a, const Representation& b,
                             double lambda) {
  require_lambda(lambda);
  require_shared_samples(a, b);
  const Eigen::MatrixXd inv_a = regularized_inverse(covariance(a), lambda);
  const Eigen::MatrixXd inv_b = regularized_inverse(covariance(b), lambda);
  const auto& da = a.data();
  const auto& db = b.data();
  const Eigen::MatrixXd wa = da * inv_a;
  const Eigen::MatrixXd wb = db * inv_b;

  // Row blocks of the two n x n Gram matrices, so memory stays O(block * n).
  constexpr Eigen::Index kBlock = 256;
  const Eigen::Index n = a.samples();
  double total = 0.0;
  for (Eigen::Index start = 0; start < n; start += kBlock) {
    const Eigen::Index rows = std::min(kBlock, n - start);
    const Eigen::MatrixXd diff = wa.middleRows(start, rows) * da.transpose() -
                                 wb.middleRows(start, rows) * db.transpose();
    total += diff.squaredNorm();
  }
  const double nn = static_cast<double>(n);

  auto r = make_record(a.name(), b.name(), MetricId{MetricKind::gulp_pairwise, lambda, {}},
                       total / (nn * nn));
  if (lambda == 0.0 && n <= std::max(a.features(), b.features()))
    r.flags.emplace_back(kFlagRankDeficient);
  return r;
}

namespace {

Eigen::MatrixXd centered_gram(const Representation& rep, const Kernel& kernel) {
  const auto& x = rep.data();
  const Eigen::Index n = x.rows();
  Eigen::MatrixXd g;
  if (kernel.type == Kernel::Type::linear) {
    g = x * x.transpose();
  } else {
    // expm1 keeps the informative part of exp(-d^2/2h^2) when h is large;
    // the dropped constant 1 vanishes under double centering.
    const double scale = 1.0 / (2.0 * kernel.bandwidth * kernel.bandwidth);
    const Eigen::VectorXd sq = x.rowwise().squaredNorm();
    g = x * x.transpose();
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index i = 0; i < n; ++i) {
        const double d2 = std::max(sq(i) + sq(j) - 2.0 * g(i, j), 0.0);
        g(i, j) = std::expm1(-d2 * scale);
      }
  }
  const Eigen::RowVectorXd col_means = g.colwise().mean();
  g.rowwise() -= col_means;
  const Eigen::VectorXd row_means = g.rowwise().mean();
  g.colwise() -= row_means;
  g = (g + g.transpose()) / 2.0;

  const double trace = g.trace();
  if (!(trace > 0.0))
    throw NumericalError("degenerate Gram matrix for '" + rep.name() + "'");
  g *= static_cast<double>(n) / trace;
  return g;
}

Eigen::MatrixXd kernel_smoother(const Eigen::MatrixXd& gram, double lambda,
                                const std::string& name) {
  const Eigen::Index n = gram.rows();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram / static_cast<double>(n));
  if (eig.info() != Eigen::Success) throw NumericalError("eigendecomposition failed");
  Eigen::VectorXd w = eig.eigenvalues();
  const double top = w.maxCoeff();
  if (w.minCoeff() < -1e-8 * std::max(top, 1.0))
    throw NumericalError("Gram matrix of '" + name + "' is not PSD after centering");
  const double cutoff = pinv_cutoff(n, top);
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    const double e = std::max(w(i), 0.0);
    if (lambda > 0.0)
      w(i) = e / (e + lambda);
    else
      w(i) = e > cutoff ? 1.0 : 0.0;
  }
  const auto& v = eig.eigenvectors();
  return v * w.asDiagonal() * v.transpose();
}

}  // namespace

DistanceRecord gulp_kernel(const Representation& a, const Representation& b, double lambda,
                           const Kernel& kernel) {
  const MetricId metric{MetricKind::gulp_kernel, lambda, kernel};
  metric.validate();
  require_shared_samples(a, b);
  const Eigen::MatrixXd ra = kernel_smoother(centered_gram(a, kernel), lambda, a.name());
  const Eigen::MatrixXd rb = kernel_smoother(centered_gram(b, kernel), lambda, b.name());
  return make_record(a.name(), b.name(), metric, (ra - rb).squaredNorm());
}

double ridge_cca_inner(const MomentSet& moments, double lambda) {
  require_lambda(lambda);
  const Eigen::Index k = moments.dim_phi();
  const Eigen::Index l = moments.dim_psi();
  const HatMatrix hat_a = hat_matrix(block(moments.joint_root, 0, k), lambda);
  const HatMatrix hat_b = hat_matrix(block(moments.joint_root, k, l), lambda);
  // Both hat matrices are symmetric, so tr(H_a H_b) is their Frobenius product.
  return hat_a.matrix.cwiseProduct(hat_b.matrix).sum();
}

// ---------------------------------------------------------------------------
// Baselines

DistanceRecord cca(const MomentSet& moments) {
  const Eigen::Index k = moments.dim_phi();
  const Eigen::Index l = moments.dim_psi();
  const HatMatrix proj_a = hat_matrix(block(moments.joint_root, 0, k), 0.0);
  const HatMatrix proj_b = hat_matrix(block(moments.joint_root, k, l), 0.0);
  const double m = static_cast<double>(std::min(k, l));
  // tr(C) = tr(P_a P_b) = (r_a + r_b - |P_a - P_b|^2) / 2 for projectors.
  const double gap = (proj_a.matrix - proj_b.matrix).squaredNorm();
  const double squared =
      (2.0 * m - static_cast<double>(proj_a.rank + proj_b.rank) + gap) / (2.0 * m);

  auto r = make_record(moments.name_phi, moments.name_psi, MetricId{MetricKind::cca, 0.0, {}},
                       clamp_small_negative(squared));
  if (rank_deficient(moments, proj_a.rank, proj_b.rank))
    r.flags.emplace_back(kFlagRankDeficient);
  return r;
}

DistanceRecord cka(const MomentSet& moments) {
  const Eigen::Index k = moments.dim_phi();
  const Eigen::Index l = moments.dim_psi();
  const Eigen::MatrixXd fa = block(moments.joint_root, 0, k);
  const Eigen::MatrixXd fb = block(moments.joint_root, k, l);
  // F F^T has the same Frobenius norm as F^T F = S, and <F_a F_a^T, F_b F_b^T>
  // equals |S_ab|_F^2, so 1 - rho is half the squared distance of the
  // normalized Gram-side matrices.
  Eigen::MatrixXd ga = fa * fa.transpose();
  Eigen::MatrixXd gb = fb * fb.transpose();
  const double na = ga.norm();
  const double nb = gb.norm();
  if (!(na > 0.0) || !(nb > 0.0)) throw NumericalError("degenerate: zero covariance norm");
  ga /= na;
  gb /= nb;
  const double squared = 0.5 * (ga - gb).squaredNorm();
  return make_record(moments.name_phi, moments.name_psi, MetricId{MetricKind::cka, 0.0, {}},
                     squared);
}

DistanceRecord procrustes(const MomentSet& moments) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(moments.sigma_cross);
  const double nuclear = svd.singularValues().sum();
  const double squared =
      moments.sigma_phi.trace() + moments.sigma_psi.trace() - 2.0 * nuclear;
  return make_record(moments.name_phi, moments.name_psi,
                     MetricId{MetricKind::procrustes, 0.0, {}}, std::max(squared, 0.0));
}

DistanceRecord pwcca(const Representation& a, const Representation& b) {
  require_shared_samples(a, b);
  const MomentSet m = compute_moments(a, b);
  const Eigen::Index k = m.dim_phi();
  const Eigen::Index l = m.dim_psi();
  const Eigen::MatrixXd fa = block(m.joint_root, 0, k);
  const Eigen::MatrixXd basis_a = span_basis(fa);
  const Eigen::MatrixXd basis_b = span_basis(block(m.joint_root, k, l));
  if (basis_a.cols() == 0 || basis_b.cols() == 0)
    throw NumericalError("pwcca: representation has rank 0");

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(basis_a.transpose() * basis_b,
                                        Eigen::ComputeThinU);
  const Eigen::Index dirs = std::min(basis_a.cols(), basis_b.cols());
  const Eigen::VectorXd rho = svd.singularValues().head(dirs).cwiseMin(1.0);
  // Canonical variables of the base view, in joint-root coordinates.
  const Eigen::MatrixXd canon = basis_a * svd.matrixU().leftCols(dirs);
  const Eigen::VectorXd weights = (canon.transpose() * fa).cwiseAbs().rowwise().sum();
  const double total = weights.sum();
  if (!(total > 0.0)) throw NumericalError("pwcca: zero projection weights");
  const double similarity = weights.dot(rho) / total;
  const double value = std::max(1.0 - similarity, 0.0);

  DistanceRecord r;
  r.name_a = a.name();
  r.name_b = b.name();
  r.metric = MetricId{MetricKind::pwcca, 0.0, {}};
  r.value = value;
  r.squared_value = value * value;
  r.flags.emplace_back(kFlagAsymmetric);
  if (rank_deficient(m, basis_a.cols(), basis_b.cols()))
    r.flags.emplace_back(kFlagRankDeficient);
  return r;
}

double reported_value(const DistanceRecord& record) {
  return record.metric.kind == MetricKind::procrustes ? record.squared_value : record.value;
}

DistanceRecord compute_distance(const Representation& a, const Representation& b,
                                const MetricId& metric) {
  metric.validate();
  switch (metric.kind) {
    case MetricKind::gulp: return gulp(a, b, metric.lambda);
    case MetricKind::gulp_pairwise: return gulp_pairwise(a, b, metric.lambda);
    case MetricKind::gulp_kernel: return gulp_kernel(a, b, metric.lambda, metric.kernel);
    case MetricKind::cca: return cca(compute_moments(a, b));
    case MetricKind::cka: return cka(compute_moments(a, b));
    case MetricKind::procrustes: return procrustes(compute_moments(a, b));
    case MetricKind::pwcca: return pwcca(a, b);
    case MetricKind::ridge_cca_inner:
      throw InputError("ridge_cca_inner is a similarity, not a distance");
  }
  throw InputError("unhandled metric");
}

}  // namespace repsim
