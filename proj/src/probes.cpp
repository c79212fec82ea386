#include "repsim/probes.hpp"

#include "repsim/error.hpp"
#include "repsim/moments.hpp"
#include "repsim/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace repsim {

namespace {

constexpr double kBoundSlack = 1e-9;

/// Regularized inverse of the train-row second moments, reusable across label
/// vectors.
class RidgeSolver {
 public:
  RidgeSolver(const Representation& rep, std::span<const Eigen::Index> rows, double lambda)
      : rows_(rows.begin(), rows.end()), lambda_(lambda) {
    if (!rep.is_normalized())
      throw InputError("ridge probes require a normalized representation");
    if (rows_.empty()) throw InputError("ridge probe needs at least one training row");
    const auto& data = rep.data();
    train_.resize(static_cast<Eigen::Index>(rows_.size()), data.cols());
    for (std::size_t i = 0; i < rows_.size(); ++i)
      train_.row(static_cast<Eigen::Index>(i)) = data.row(rows_[i]);
    const double m = static_cast<double>(rows_.size());
    Eigen::MatrixXd second = train_.transpose() * train_ / m;
    second = (second + second.transpose()) / 2.0;
    inverse_ = regularized_inverse(second, lambda);

    if (lambda == 0.0) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(second, Eigen::EigenvaluesOnly);
      const Eigen::VectorXd& e = eig.eigenvalues();
      const double cutoff = pinv_cutoff(second.rows(), e.maxCoeff());
      rank_deficient_ = (e.array() <= cutoff).any();
    }
  }

  RidgeProbe fit(const Eigen::VectorXd& labels) const {
    Eigen::VectorXd y(static_cast<Eigen::Index>(rows_.size()));
    for (std::size_t i = 0; i < rows_.size(); ++i)
      y(static_cast<Eigen::Index>(i)) = labels(rows_[i]);
    const Eigen::VectorXd rhs = train_.transpose() * y / static_cast<double>(rows_.size());
    return RidgeProbe{lambda_, inverse_ * rhs, rank_deficient_};
  }

 private:
  std::vector<Eigen::Index> rows_;
  double lambda_;
  Eigen::MatrixXd train_;
  Eigen::MatrixXd inverse_;
  bool rank_deficient_ = false;
};

std::vector<Eigen::Index> all_rows(Eigen::Index n) {
  std::vector<Eigen::Index> rows(static_cast<std::size_t>(n));
  std::iota(rows.begin(), rows.end(), Eigen::Index{0});
  return rows;
}

Eigen::VectorXd gaussian_labels(Eigen::Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) y(i) = normal(rng);
  return y;
}

}  // namespace

// ---------------------------------------------------------------------------

void ProbeTask::validate(Eigen::Index samples) const {
  if (labels.size() != samples)
    throw InputError("probe task has " + std::to_string(labels.size()) +
                     " labels for " + std::to_string(samples) + " samples");
  if (train.empty() || test.empty()) throw InputError("probe task split must be nonempty");
  auto in_range = [samples](Eigen::Index i) { return i >= 0 && i < samples; };
  if (!std::all_of(train.begin(), train.end(), in_range) ||
      !std::all_of(test.begin(), test.end(), in_range))
    throw InputError("probe task index out of range");
}

ProbeTask full_sample_task(Eigen::VectorXd labels) {
  ProbeTask task;
  task.train = all_rows(labels.size());
  task.test = task.train;
  task.labels = std::move(labels);
  return task;
}

RidgeProbe ridge_fit(const Representation& rep, const ProbeTask& task, double lambda) {
  if (!(lambda >= 0.0)) throw InputError("lambda must be >= 0");
  task.validate(rep.samples());
  return RidgeSolver(rep, task.train, lambda).fit(task.labels);
}

double prediction_gap(const RidgeProbe& probe_a, const Representation& rep_a,
                      const RidgeProbe& probe_b, const Representation& rep_b,
                      std::span<const Eigen::Index> rows) {
  if (probe_a.beta.size() != rep_a.features() || probe_b.beta.size() != rep_b.features())
    throw InputError("probe width does not match its representation");
  if (rep_a.samples() != rep_b.samples())
    throw InputError("prediction_gap needs representations on the same samples");
  if (rows.empty()) throw InputError("prediction_gap needs at least one row");
  double total = 0.0;
  for (const Eigen::Index i : rows) {
    if (i < 0 || i >= rep_a.samples()) throw InputError("row index out of range");
    const double diff =
        rep_a.data().row(i).dot(probe_a.beta) - rep_b.data().row(i).dot(probe_b.beta);
    total += diff * diff;
  }
  return total / static_cast<double>(rows.size());
}

UniformBoundReport uniform_bound_check(const Representation& a, const Representation& b,
                                       double lambda, std::size_t n_tasks,
                                       std::uint64_t seed) {
  if (n_tasks == 0) throw InputError("uniform_bound_check needs at least one task");
  if (a.samples() != b.samples())
    throw InputError("uniform_bound_check needs representations on the same samples");

  UniformBoundReport report;
  report.gulp_sq = gulp(a, b, lambda).squared_value;
  report.tasks = n_tasks;

  const Eigen::Index n = a.samples();
  const std::vector<Eigen::Index> rows = all_rows(n);
  const RidgeSolver solver_a(a, rows, lambda);
  const RidgeSolver solver_b(b, rows, lambda);
  std::mt19937_64 rng(seed);
  for (std::size_t t = 0; t < n_tasks; ++t) {
    Eigen::VectorXd y = gaussian_labels(n, rng);
    y *= std::sqrt(static_cast<double>(n)) / y.norm();
    const double gap =
        prediction_gap(solver_a.fit(y), a, solver_b.fit(y), b, rows);
    report.max_gap = std::max(report.max_gap, gap);
    if (gap > report.gulp_sq + kBoundSlack) ++report.violations;
  }
  return report;
}

std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return values[i] < values[j]; });
  std::vector<double> ranks(n);
  for (std::size_t start = 0; start < n;) {
    std::size_t end = start + 1;
    while (end < n && values[order[end]] == values[order[start]]) ++end;
    // Positions start..end-1 hold rank (start+1)..end; ties share the mean.
    const double rank = 0.5 * static_cast<double>(start + 1 + end);
    for (std::size_t p = start; p < end; ++p) ranks[order[p]] = rank;
    start = end;
  }
  return ranks;
}

double spearman_rho(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw InputError("spearman_rho: length mismatch");
  if (x.size() < 3) throw InputError("spearman_rho: need at least 3 observations");
  const std::vector<double> rx = average_ranks(x);
  const std::vector<double> ry = average_ranks(y);
  const Eigen::Map<const Eigen::VectorXd> vx(rx.data(), static_cast<Eigen::Index>(rx.size()));
  const Eigen::Map<const Eigen::VectorXd> vy(ry.data(), static_cast<Eigen::Index>(ry.size()));
  const Eigen::VectorXd cx = vx.array() - vx.mean();
  const Eigen::VectorXd cy = vy.array() - vy.mean();
  const double sx = cx.norm();
  const double sy = cy.norm();
  if (sx == 0.0 || sy == 0.0) throw NumericalError("undefined correlation: constant input");
  return std::clamp(cx.dot(cy) / (sx * sy), -1.0, 1.0);
}

std::vector<MetricId> default_generalization_metrics() {
  std::vector<MetricId> metrics;
  for (const double lambda : default_lambda_grid())
    metrics.push_back(MetricId{MetricKind::gulp, lambda, {}});
  metrics.push_back(MetricId{MetricKind::cca, 0.0, {}});
  metrics.push_back(MetricId{MetricKind::cka, 0.0, {}});
  metrics.push_back(MetricId{MetricKind::procrustes, 0.0, {}});
  return metrics;
}

std::vector<MetricCorrelation> generalization_experiment(std::span<const Representation> reps,
                                                         const GeneralizationConfig& config) {
  const std::size_t m = reps.size();
  if (m < 4) throw InputError("generalization_experiment needs at least 4 representations");
  if (config.n_tasks == 0) throw InputError("generalization_experiment needs n_tasks >= 1");
  if (!(config.train_fraction > 0.0 && config.train_fraction < 1.0))
    throw InputError("train_fraction must lie in (0, 1)");
  const Eigen::Index n = reps.front().samples();
  for (const auto& r : reps)
    if (r.samples() != n) throw InputError("representations must share samples");

  const std::vector<MetricId> metrics =
      config.metrics.empty() ? default_generalization_metrics() : config.metrics;

  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j) pairs.emplace_back(i, j);

  // Distances on the full shared sample, one vector per metric.
  std::vector<std::vector<double>> distances(metrics.size(),
                                             std::vector<double>(pairs.size()));
  parallel_for(metrics.size() * pairs.size(), config.threads, [&](std::size_t job) {
    const std::size_t mi = job / pairs.size();
    const std::size_t pi = job % pairs.size();
    const auto [i, j] = pairs[pi];
    distances[mi][pi] = compute_distance(reps[i], reps[j], metrics[mi]).value;
  });

  std::mt19937_64 rng(config.seed);
  std::vector<Eigen::Index> perm = all_rows(n);
  std::shuffle(perm.begin(), perm.end(), rng);
  const auto n_train = std::clamp<Eigen::Index>(
      static_cast<Eigen::Index>(std::llround(config.train_fraction * static_cast<double>(n))),
      1, n - 1);
  const std::vector<Eigen::Index> train(perm.begin(), perm.begin() + n_train);
  const std::vector<Eigen::Index> test(perm.begin() + n_train, perm.end());

  std::vector<RidgeSolver> solvers;
  solvers.reserve(m);
  for (const auto& r : reps) solvers.emplace_back(r, train, config.task_lambda);

  std::vector<Eigen::VectorXd> labels;
  for (std::size_t t = 0; t < config.n_tasks; ++t) labels.push_back(gaussian_labels(n, rng));

  // rho[t][metric], NaN when undefined for that task.
  std::vector<std::vector<double>> rho(config.n_tasks,
                                       std::vector<double>(metrics.size(), std::nan("")));
  parallel_for(config.n_tasks, config.threads, [&](std::size_t t) {
    std::vector<RidgeProbe> probes;
    probes.reserve(m);
    for (const auto& s : solvers) probes.push_back(s.fit(labels[t]));
    std::vector<double> tau(pairs.size());
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      const auto [i, j] = pairs[p];
      tau[p] = prediction_gap(probes[i], reps[i], probes[j], reps[j], test);
    }
    for (std::size_t mi = 0; mi < metrics.size(); ++mi) {
      try {
        rho[t][mi] = spearman_rho(tau, distances[mi]);
      } catch (const NumericalError&) {
        // undefined for this task
      }
    }
  });

  std::vector<MetricCorrelation> out;
  for (std::size_t mi = 0; mi < metrics.size(); ++mi) {
    MetricCorrelation row;
    row.metric = metrics[mi];
    double sum = 0.0;
    for (std::size_t t = 0; t < config.n_tasks; ++t) {
      if (std::isnan(rho[t][mi])) continue;
      sum += rho[t][mi];
      ++row.defined_tasks;
    }
    if (row.defined_tasks > 0) row.mean_rho = sum / static_cast<double>(row.defined_tasks);
    out.push_back(row);
  }
  return out;
}

}  // namespace repsim
