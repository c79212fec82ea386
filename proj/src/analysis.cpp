#include "repsim/analysis.hpp"

#include "repsim/error.hpp"
#include "repsim/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <set>

namespace repsim {

namespace {

constexpr double kMatrixTol = 1e-10;

std::string pair_label(const std::string& a, const std::string& b, const MetricId& metric) {
  std::string label = "pair ('" + a + "', '" + b + "') metric " + std::string(to_string(metric.kind));
  if (uses_lambda(metric.kind)) label += " lambda=" + std::to_string(metric.lambda);
  return label;
}

// Fixed evaluation order for a pair, independent of where the two sit in the
// input list. Distances are symmetric only up to round-off, so this is what
// makes reordering the inputs permute the matrix exactly.
bool canonical_before(const Representation& a, const Representation& b) {
  if (a.name() != b.name()) return a.name() < b.name();
  if (a.features() != b.features()) return a.features() < b.features();
  const auto& x = a.data();
  const auto& y = b.data();
  return std::lexicographical_compare(x.data(), x.data() + x.size(), y.data(), y.data() + y.size());
}

}  // namespace

void DistanceMatrix::validate() const {
  const Eigen::Index m = values.rows();
  if (values.cols() != m) throw InputError("distance matrix must be square");
  if (static_cast<Eigen::Index>(names.size()) != m)
    throw InputError("distance matrix names do not match its size");
  if (!values.allFinite()) throw InputError("distance matrix has non-finite entries");
  for (Eigen::Index i = 0; i < m; ++i) {
    if (std::abs(values(i, i)) > kMatrixTol)
      throw InputError("distance matrix diagonal must be zero");
    for (Eigen::Index j = 0; j < m; ++j) {
      if (values(i, j) < -kMatrixTol) throw InputError("distance matrix has negative entries");
      if (std::abs(values(i, j) - values(j, i)) > kMatrixTol)
        throw InputError("distance matrix is not symmetric");
    }
  }
}

DistanceMatrix distance_matrix(std::span<const Representation> reps, const MetricId& metric,
                               unsigned threads) {
  metric.validate();
  const std::size_t m = reps.size();
  if (m < 2) throw InputError("distance_matrix needs at least 2 representations");
  for (const auto& r : reps)
    if (r.samples() != reps.front().samples())
      throw InputError("representations must share samples: '" + r.name() + "' has " +
                       std::to_string(r.samples()) + " rows, '" + reps.front().name() +
                       "' has " + std::to_string(reps.front().samples()));

  const bool asymmetric = metric.kind == MetricKind::pwcca;
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j) pairs.emplace_back(i, j);

  std::vector<double> results(pairs.size());
  parallel_for(pairs.size(), threads, [&](std::size_t p) {
    const auto [i, j] = pairs[p];
    const bool swap = canonical_before(reps[j], reps[i]);
    const Representation& x = reps[swap ? j : i];
    const Representation& y = reps[swap ? i : j];
    try {
      double v = reported_value(compute_distance(x, y, metric));
      if (asymmetric) v = 0.5 * (v + reported_value(compute_distance(y, x, metric)));
      results[p] = v;
    } catch (const NumericalError& e) {
      throw NumericalError(pair_label(reps[i].name(), reps[j].name(), metric) + ": " + e.what());
    } catch (const InputError& e) {
      throw InputError(pair_label(reps[i].name(), reps[j].name(), metric) + ": " + e.what());
    }
  });

  DistanceMatrix dm;
  dm.metric = metric;
  dm.symmetrized = asymmetric;
  for (const auto& r : reps) dm.names.push_back(r.name());
  dm.values = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const auto i = static_cast<Eigen::Index>(pairs[p].first);
    const auto j = static_cast<Eigen::Index>(pairs[p].second);
    dm.values(i, j) = dm.values(j, i) = results[p];
  }
  return dm;
}

// ---------------------------------------------------------------------------

Embedding classical_mds(const DistanceMatrix& dm, int dims) {
  dm.validate();
  const Eigen::Index m = dm.size();
  if (m < 3) throw InputError("classical_mds needs at least 3 points");
  if (dims < 1 || dims > m) throw InputError("classical_mds: invalid target dimension");

  const Eigen::MatrixXd sq = dm.values.cwiseProduct(dm.values);
  Eigen::MatrixXd b = sq;
  b.rowwise() -= sq.colwise().mean();
  b.colwise() -= b.rowwise().mean();
  b = -0.5 * (b + b.transpose()) / 2.0;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(b);
  if (eig.info() != Eigen::Success) throw NumericalError("classical_mds: eigensolver failed");

  Embedding emb;
  emb.names = dm.names;
  emb.eigenvalues = eig.eigenvalues().reverse();
  emb.coords.resize(m, dims);
  const double scale = std::max(1.0, dm.values.cwiseAbs().maxCoeff());
  for (int d = 0; d < dims; ++d) {
    const Eigen::Index col = m - 1 - d;
    const double lambda = std::max(eig.eigenvalues()(col), 0.0);
    Eigen::VectorXd axis = eig.eigenvectors().col(col) * std::sqrt(lambda);
    for (Eigen::Index i = 0; i < m; ++i) {
      if (std::abs(axis(i)) > 1e-12 * scale) {
        if (axis(i) < 0.0) axis = -axis;
        break;
      }
    }
    emb.coords.col(d) = axis;
  }
  return emb;
}

Dendrogram cluster_average_linkage(const DistanceMatrix& dm) {
  dm.validate();
  const Eigen::Index m = dm.size();
  if (m < 2) throw InputError("clustering needs at least 2 points");

  const Eigen::Index slots = 2 * m - 1;
  Eigen::MatrixXd link = Eigen::MatrixXd::Zero(slots, slots);
  link.topLeftCorner(m, m) = dm.values;
  std::vector<Eigen::Index> size(static_cast<std::size_t>(slots), 1);
  std::vector<Eigen::Index> active(static_cast<std::size_t>(m));
  std::iota(active.begin(), active.end(), Eigen::Index{0});

  Dendrogram tree;
  double floor = 0.0;
  for (Eigen::Index t = 0; t < m - 1; ++t) {
    // `active` stays sorted by id, so strict < keeps the lexicographic first tie.
    std::size_t best_i = 0, best_j = 1;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < active.size(); ++i)
      for (std::size_t j = i + 1; j < active.size(); ++j)
        if (link(active[i], active[j]) < best) {
          best = link(active[i], active[j]);
          best_i = i;
          best_j = j;
        }

    const Eigen::Index left = active[best_i];
    const Eigen::Index right = active[best_j];
    const Eigen::Index merged = m + t;
    // Average linkage is monotone; the max absorbs round-off in the averages.
    floor = std::max(floor, best);
    size[merged] = size[left] + size[right];
    tree.merges.push_back(Merge{left, right, floor, size[merged]});

    active.erase(active.begin() + static_cast<std::ptrdiff_t>(best_j));
    active.erase(active.begin() + static_cast<std::ptrdiff_t>(best_i));
    const double wl = static_cast<double>(size[left]);
    const double wr = static_cast<double>(size[right]);
    for (const Eigen::Index other : active) {
      const double d = (wl * link(left, other) + wr * link(right, other)) / (wl + wr);
      link(merged, other) = link(other, merged) = d;
    }
    active.push_back(merged);
  }
  return tree;
}

std::vector<ClassRatio> std_ratio(const DistanceMatrix& dm,
                                  const std::vector<std::vector<std::string>>& classes) {
  dm.validate();
  const Eigen::Index m = dm.size();
  std::map<std::string, Eigen::Index> index;
  for (Eigen::Index i = 0; i < m; ++i) index.emplace(dm.names[static_cast<std::size_t>(i)], i);

  // Both means are summed by the same routine over sorted ids, so a class
  // holding every point reproduces the overall mean bit for bit.
  const Eigen::MatrixXd sq = dm.values.cwiseProduct(dm.values);
  auto mean_sq = [&sq](std::vector<Eigen::Index> ids) {
    std::sort(ids.begin(), ids.end());
    double sum = 0.0;
    for (const auto i : ids)
      for (const auto j : ids)
        if (i != j) sum += sq(i, j);
    const double c = static_cast<double>(ids.size());
    return sum / (c * (c - 1.0));
  };
  std::vector<Eigen::Index> everyone(static_cast<std::size_t>(m));
  std::iota(everyone.begin(), everyone.end(), Eigen::Index{0});
  const double overall = mean_sq(everyone);

  std::set<Eigen::Index> seen;
  std::vector<ClassRatio> out;
  for (const auto& members : classes) {
    if (members.size() < 2) throw InputError("std_ratio: singleton class");
    std::vector<Eigen::Index> ids;
    for (const auto& name : members) {
      const auto it = index.find(name);
      if (it == index.end()) throw InputError("std_ratio: unknown name '" + name + "'");
      if (!seen.insert(it->second).second)
        throw InputError("std_ratio: '" + name + "' appears in more than one class");
      ids.push_back(it->second);
    }
    const double within = mean_sq(ids);

    ClassRatio r;
    if (within > 0.0) {
      r.ratio = std::sqrt(overall / within);
    } else {
      r.ratio = std::numeric_limits<double>::infinity();
      r.unbounded = true;
    }
    out.push_back(r);
  }
  return out;
}

// ---------------------------------------------------------------------------

ConvergenceCurve convergence_curve(const Representation& a, const Representation& b,
                                   double lambda, std::span<const std::size_t> sizes,
                                   std::uint64_t seed, unsigned threads) {
  if (sizes.size() < 3) throw InputError("grid too small: need at least 3 sample sizes");
  if (a.samples() != b.samples())
    throw InputError("convergence_curve needs representations on the same samples");
  const auto n = static_cast<std::size_t>(a.samples());
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (sizes[i] < 2 || sizes[i] > n)
      throw InputError("sample size " + std::to_string(sizes[i]) + " outside [2, " +
                       std::to_string(n) + "]");
    if (i > 0 && sizes[i] <= sizes[i - 1])
      throw InputError("sample sizes must be strictly increasing");
  }

  ConvergenceCurve curve;
  curve.sizes.assign(sizes.begin(), sizes.end());
  curve.reference = gulp(a, b, lambda).squared_value;
  if (!(curve.reference > 1e-12))
    throw NumericalError("pair too close for relative error (reference squared GULP " +
                         std::to_string(curve.reference) + ")");

  curve.rel_errors.assign(sizes.size(), 0.0);
  parallel_for(sizes.size(), threads, [&](std::size_t i) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(i)};
    std::mt19937_64 rng(seq);
    std::vector<Eigen::Index> rows(n);
    std::iota(rows.begin(), rows.end(), Eigen::Index{0});
    std::shuffle(rows.begin(), rows.end(), rng);
    rows.resize(sizes[i]);
    std::sort(rows.begin(), rows.end());
    const Representation sub_a = normalize(a.select_rows(rows));
    const Representation sub_b = normalize(b.select_rows(rows));
    const double estimate = gulp(sub_a, sub_b, lambda).squared_value;
    curve.rel_errors[i] = std::abs(estimate - curve.reference) / curve.reference;
  });

  const auto k = static_cast<Eigen::Index>(sizes.size());
  Eigen::VectorXd x(k), y(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    x(i) = std::log(static_cast<double>(curve.sizes[static_cast<std::size_t>(i)]));
    y(i) = std::log(std::max(curve.rel_errors[static_cast<std::size_t>(i)],
                             std::numeric_limits<double>::min()));
  }
  const Eigen::VectorXd xc = x.array() - x.mean();
  curve.slope = xc.dot(y.array().matrix() - Eigen::VectorXd::Constant(k, y.mean())) /
                xc.squaredNorm();
  return curve;
}

}  // namespace repsim
