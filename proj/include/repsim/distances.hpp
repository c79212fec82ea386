#pragma once

#include "repsim/moments.hpp"
#include "repsim/repdata.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace repsim {

enum class MetricKind {
  gulp,
  gulp_pairwise,
  gulp_kernel,
  cca,
  ridge_cca_inner,
  cka,
  pwcca,
  procrustes,
};

MetricKind parse_metric_kind(std::string_view name);
std::string_view to_string(MetricKind kind);
/// True for kinds whose value depends on the regularization lambda.
bool uses_lambda(MetricKind kind);

struct Kernel {
  enum class Type { linear, rbf };
  Type type = Type::linear;
  double bandwidth = 1.0;  // rbf: K(x, y) = exp(-|x - y|^2 / (2 bandwidth^2))

  static Kernel linear() { return {}; }
  static Kernel rbf(double bandwidth) { return {Type::rbf, bandwidth}; }
};

struct MetricId {
  MetricKind kind = MetricKind::gulp;
  double lambda = 0.0;
  Kernel kernel;

  void validate() const;
};

/// Regularization grid used by default across the tooling.
inline const std::vector<double>& default_lambda_grid() {
  static const std::vector<double> grid{0.0, 1e-6, 1e-4, 1e-2, 1.0};
  return grid;
}

struct DistanceRecord {
  std::string name_a;
  std::string name_b;
  MetricId metric;
  double value = 0.0;          // sqrt(max(squared_value, 0))
  double squared_value = 0.0;  // round-off below zero is clamped
  std::vector<std::string> flags;
};

inline constexpr std::string_view kFlagRankDeficient = "rank-deficient lambda=0";
inline constexpr std::string_view kFlagAsymmetric = "asymmetric";

// ---------------------------------------------------------------------------
// GULP

/// Plug-in GULP distance at the moment set's lambda (which must be set).
///
/// Evaluated as the squared Frobenius distance between the two ridge hat
/// matrices expressed in the joint root coordinates. This equals the trace
/// expansion
///   tr(S_a^-l S_a S_a^-l S_a) + tr(S_b^-l S_b S_b^-l S_b) - 2 tr(S_a^-l S_ab S_b^-l S_ab^T)
/// but needs no cancellation, so orthogonally related pairs give exact zeros.
DistanceRecord gulp(const MomentSet& moments);
DistanceRecord gulp(const Representation& a, const Representation& b, double lambda);

/// (1/n^2) sum_ij (phi_i^T S_a^-l phi_j - psi_i^T S_b^-l psi_j)^2 over the
/// sample Gram matrices. O(n^2) time; intended for n up to a few thousand.
DistanceRecord gulp_pairwise(const Representation& a, const Representation& b, double lambda);

/// GULP for kernel ridge regression. Gram matrices are double-centered and
/// scaled to trace n, then compared through R = (G/n)(G/n + lambda I)^-1.
/// With the linear kernel this matches gulp().
DistanceRecord gulp_kernel(const Representation& a, const Representation& b, double lambda,
                           const Kernel& kernel);

/// Ridge-CCA similarity tr(S_a^-l S_ab S_b^-l S_ba).
double ridge_cca_inner(const MomentSet& moments, double lambda);

// ---------------------------------------------------------------------------
// Baselines

/// squared_value = 1 - tr(C) / min(k, l), C the canonical correlation operator.
DistanceRecord cca(const MomentSet& moments);

/// squared_value = 1 - |S_ab|_F^2 / (|S_a|_F |S_b|_F).
DistanceRecord cka(const MomentSet& moments);

/// squared_value = tr S_a + tr S_b - 2 |S_ab|_* (nuclear norm), clamped at 0.
DistanceRecord procrustes(const MomentSet& moments);

/// Projection-weighted CCA: canonical correlations averaged with weights
/// proportional to how much of rep_a's columns each canonical variable
/// accounts for. value = 1 - weighted mean. Not symmetric: `a` is the base view.
DistanceRecord pwcca(const Representation& a, const Representation& b);

/// The number shown for a pair in distance matrices: the unsquared distance,
/// except for procrustes, whose customary form is the squared expression.
double reported_value(const DistanceRecord& record);

/// Dispatches on metric.kind. ridge_cca_inner is a similarity, not a distance,
/// and is rejected here.
DistanceRecord compute_distance(const Representation& a, const Representation& b,
                                const MetricId& metric);

}  // namespace repsim
