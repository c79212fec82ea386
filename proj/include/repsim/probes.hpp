#pragma once

#include "repsim/distances.hpp"
#include "repsim/repdata.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace repsim {

/// Regression labels over the shared samples and a disjoint train/test split.
struct ProbeTask {
  Eigen::VectorXd labels;
  std::vector<Eigen::Index> train;
  std::vector<Eigen::Index> test;

  void validate(Eigen::Index samples) const;
};

/// Task whose train and test sets are both the full sample.
ProbeTask full_sample_task(Eigen::VectorXd labels);

struct RidgeProbe {
  double lambda = 0.0;
  Eigen::VectorXd beta;
  bool rank_deficient = false;  // lambda = 0 with a singular train covariance
};

/// beta = (S_train + lambda I)^-1 (1/n_train) sum_train y_i phi_i, where
/// S_train is the second-moment matrix of the train rows.
RidgeProbe ridge_fit(const Representation& rep, const ProbeTask& task, double lambda);

/// Mean over `rows` of (beta_a^T phi_a(x) - beta_b^T phi_b(x))^2.
double prediction_gap(const RidgeProbe& probe_a, const Representation& rep_a,
                      const RidgeProbe& probe_b, const Representation& rep_b,
                      std::span<const Eigen::Index> rows);

struct UniformBoundReport {
  double max_gap = 0.0;
  double gulp_sq = 0.0;
  std::size_t violations = 0;  // tasks with gap > gulp_sq + 1e-9
  std::size_t tasks = 0;
};

/// Draws `n_tasks` Gaussian label vectors scaled to unit empirical norm, fits
/// both probes on the full sample and compares each prediction gap with the
/// squared GULP distance.
UniformBoundReport uniform_bound_check(const Representation& a, const Representation& b,
                                       double lambda, std::size_t n_tasks,
                                       std::uint64_t seed);

/// Pearson correlation of average-tied ranks. Throws NumericalError when
/// either input is constant.
double spearman_rho(std::span<const double> x, std::span<const double> y);

/// Average-tied ranks (1-based).
std::vector<double> average_ranks(std::span<const double> values);

struct GeneralizationConfig {
  double task_lambda = 1e-2;
  std::size_t n_tasks = 10;
  std::uint64_t seed = 0;
  double train_fraction = 0.6;
  std::vector<MetricId> metrics;  // empty: default_generalization_metrics()
  unsigned threads = 1;
};

struct MetricCorrelation {
  MetricId metric;
  std::optional<double> mean_rho;  // empty when undefined for every task
  std::size_t defined_tasks = 0;
};

/// gulp over the default lambda grid, then cca, cka and procrustes.
std::vector<MetricId> default_generalization_metrics();

/// For each random task: fit every probe on the train split, collect the
/// held-out prediction gaps of all pairs, and correlate (Spearman) that vector
/// with each metric's pairwise distances on the full sample. Correlations are
/// averaged over the tasks on which they are defined.
std::vector<MetricCorrelation> generalization_experiment(std::span<const Representation> reps,
                                                         const GeneralizationConfig& config);

}  // namespace repsim
