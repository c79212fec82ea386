#pragma once

#include "repsim/distances.hpp"
#include "repsim/repdata.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace repsim {

struct DistanceMatrix {
  std::vector<std::string> names;
  MetricId metric;
  Eigen::MatrixXd values;   // m x m
  bool symmetrized = false; // asymmetric metric averaged over both orders

  /// Square, matching names, symmetric and zero-diagonal within 1e-10,
  /// nonnegative. Throws InputError otherwise.
  void validate() const;
  Eigen::Index size() const noexcept { return values.rows(); }
};

/// Evaluates all m(m-1)/2 pairs, concurrently when threads > 1. Asymmetric
/// metrics (pwcca) are evaluated in both orders and averaged. Per-pair
/// failures are rethrown with the pair named.
DistanceMatrix distance_matrix(std::span<const Representation> reps, const MetricId& metric,
                               unsigned threads = 1);

struct Embedding {
  std::vector<std::string> names;
  Eigen::MatrixXd coords;       // m x dims
  Eigen::VectorXd eigenvalues;  // full spectrum of the centered Gram, descending
};

/// Torgerson scaling: B = -1/2 H D^2 H, coordinates from the top eigenpairs
/// scaled by sqrt(max(eigenvalue, 0)). Each axis is oriented so that the first
/// point with a nonzero coordinate is positive.
Embedding classical_mds(const DistanceMatrix& dm, int dims = 2);

struct Merge {
  Eigen::Index left = 0;   // cluster ids: leaves are 0..m-1, merge t creates m+t
  Eigen::Index right = 0;
  double height = 0.0;
  Eigen::Index size = 0;   // leaves under the new cluster
};

struct Dendrogram {
  std::vector<Merge> merges;  // m - 1 entries, heights nondecreasing
};

/// Agglomerative clustering with average (UPGMA) linkage. Ties go to the
/// lexicographically smallest pair of cluster ids.
Dendrogram cluster_average_linkage(const DistanceMatrix& dm);

struct ClassRatio {
  double ratio = 0.0;
  bool unbounded = false;  // zero within-class spread
};

/// sqrt(mean over all ordered pairs i != j of d^2 / mean over ordered pairs
/// inside the class of d^2), one entry per class.
std::vector<ClassRatio> std_ratio(const DistanceMatrix& dm,
                                  const std::vector<std::vector<std::string>>& classes);

struct ConvergenceCurve {
  std::vector<std::size_t> sizes;
  std::vector<double> rel_errors;
  double slope = 0.0;      // least-squares slope of log(error) against log(size)
  double reference = 0.0;  // full-sample squared GULP
};

/// For each size, subsamples that many shared rows without replacement,
/// re-normalizes both views and reports the relative error of the squared
/// GULP estimate against the full-sample value.
ConvergenceCurve convergence_curve(const Representation& a, const Representation& b,
                                   double lambda, std::span<const std::size_t> sizes,
                                   std::uint64_t seed, unsigned threads = 1);

}  // namespace repsim
