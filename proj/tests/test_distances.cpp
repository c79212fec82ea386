#include "repsim/distances.hpp"
#include "repsim/error.hpp"
#include "repsim/moments.hpp"
#include "support.hpp"

#include <doctest.h>

using namespace repsim;

namespace {

// a = (1, 1, -1, -1), b = a/2 + (sqrt(3)/2) (1, -1, 1, -1): both normalized,
// unit variance, cross-covariance exactly 0.5 up to rounding.
std::pair<Representation, Representation> scalar_pair() {
  Eigen::MatrixXd a(4, 1), c(4, 1);
  a << 1, 1, -1, -1;
  c << 1, -1, 1, -1;
  const Eigen::MatrixXd b = 0.5 * a + (std::sqrt(3.0) / 2.0) * c;
  return {Representation("a", a, RepState::normalized), testing::rep(b, "b")};
}

Eigen::MatrixXd scalar(double v) { return Eigen::MatrixXd::Constant(1, 1, v); }

double rel(double x, double ref) { return std::abs(x - ref) / std::max(std::abs(ref), 1e-300); }

}  // namespace

TEST_CASE("metric names and ids") {
  for (auto kind : {MetricKind::gulp, MetricKind::gulp_pairwise, MetricKind::gulp_kernel,
                    MetricKind::cca, MetricKind::ridge_cca_inner, MetricKind::cka,
                    MetricKind::pwcca, MetricKind::procrustes})
    CHECK(parse_metric_kind(to_string(kind)) == kind);
  CHECK_THROWS_AS(parse_metric_kind("euclid"), InputError);
  CHECK_THROWS_AS((MetricId{MetricKind::gulp, -1.0, {}}.validate()), InputError);
  CHECK_THROWS_AS((MetricId{MetricKind::gulp_kernel, 1.0, Kernel::rbf(0.0)}.validate()),
                  InputError);
  CHECK(default_lambda_grid() == std::vector<double>{0.0, 1e-6, 1e-4, 1e-2, 1.0});
}

TEST_CASE("scalar hand values from moments") {
  const MomentSet m = moments_from_covariances(scalar(1.0), scalar(1.0), scalar(0.5), 4, 1.0);
  CHECK(std::abs(gulp(m).squared_value - 0.375) <= 1e-10);
  CHECK(std::abs(cca(m).squared_value - 0.75) <= 1e-10);
  CHECK(std::abs(cka(m).squared_value - 0.75) <= 1e-10);
  CHECK(std::abs(procrustes(m).squared_value - 1.0) <= 1e-10);
  CHECK(std::abs(ridge_cca_inner(m, 1.0) - 0.0625) <= 1e-12);
}

TEST_CASE("scalar hand values from data, all routes") {
  const auto [a, b] = scalar_pair();
  CHECK(std::abs(gulp(a, b, 1.0).squared_value - 0.375) <= 1e-10);
  CHECK(std::abs(gulp_pairwise(a, b, 1.0).squared_value - 0.375) <= 1e-10);
  CHECK(std::abs(gulp_kernel(a, b, 1.0, Kernel::linear()).squared_value - 0.375) <= 1e-10);
  const MomentSet m = compute_moments(a, b);
  CHECK(std::abs(cca(m).squared_value - 0.75) <= 1e-10);
  CHECK(std::abs(cka(m).squared_value - 0.75) <= 1e-10);
  CHECK(std::abs(procrustes(m).squared_value - 1.0) <= 1e-10);
  CHECK(std::abs(ridge_cca_inner(m, 1.0) - 0.0625) <= 1e-12);
  // value is the square root of the squared value
  const auto r = gulp(a, b, 1.0);
  CHECK(r.value == doctest::Approx(std::sqrt(0.375)).epsilon(1e-12));
}

TEST_CASE("ridge cca inner on isotropic covariance") {
  for (Eigen::Index k : {1, 3, 6}) {
    const Eigen::MatrixXd s = Eigen::MatrixXd::Identity(k, k) / static_cast<double>(k);
    const MomentSet m = moments_from_covariances(s, s, s, 100, std::nullopt);
    const double kd = static_cast<double>(k);
    CHECK(ridge_cca_inner(m, 1.0) == doctest::Approx(kd / ((kd + 1) * (kd + 1))).epsilon(1e-12));
  }
  std::mt19937_64 rng(8);
  const auto x = testing::rep(testing::gaussian(20000, 3, rng));
  const auto y = testing::rep(testing::gaussian(20000, 3, rng));
  CHECK(ridge_cca_inner(compute_moments(x, y), 1.0) < 1e-3);
}

TEST_CASE("gulp matches the trace oracle") {
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 12; ++trial) {
    const Eigen::Index k = 2 + trial % 4;
    const Eigen::Index l = 3 + (trial * 7) % 5;
    const auto [a, b] = testing::related_pair(150, k, l, rng);
    for (double lambda : default_lambda_grid()) {
      const double oracle = testing::gulp_sq_trace(a.data(), b.data(), lambda);
      CHECK(rel(gulp(a, b, lambda).squared_value, oracle) <= 1e-8);
      CHECK(rel(gulp_pairwise(a, b, lambda).squared_value, oracle) <= 1e-8);
      CHECK(rel(gulp_kernel(a, b, lambda, Kernel::linear()).squared_value, oracle) <= 1e-6);
    }
  }
}

TEST_CASE("baselines match their oracles") {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::Index k = 2 + trial % 3;
    const Eigen::Index l = 2 + (trial * 5) % 4;
    const auto [a, b] = testing::related_pair(120, k, l, rng);
    const MomentSet m = compute_moments(a, b);
    CHECK(rel(cca(m).squared_value, testing::cca_sq(a.data(), b.data())) <= 1e-8);
    CHECK(rel(cka(m).squared_value, testing::cka_sq(a.data(), b.data())) <= 1e-8);
    CHECK(rel(procrustes(m).squared_value, testing::procrustes_sq(a.data(), b.data())) <= 1e-8);
    CHECK(rel(pwcca(a, b).value, testing::pwcca_value(a.data(), b.data())) <= 1e-8);
  }
}

TEST_CASE("identical representations are at distance zero") {
  std::mt19937_64 rng(13);
  const auto a = testing::rep(testing::shaped(100, 5, rng));
  for (double lambda : default_lambda_grid()) {
    CHECK(gulp(a, a, lambda).value <= 1e-10);
    CHECK(gulp_pairwise(a, a, lambda).value <= 1e-10);
    CHECK(gulp_kernel(a, a, lambda, Kernel::rbf(1.0)).value <= 1e-10);
  }
  const MomentSet m = compute_moments(a, a);
  CHECK(cca(m).value <= 1e-8);
  CHECK(cka(m).value <= 1e-8);
  CHECK(procrustes(m).value <= 1e-8);
  CHECK(pwcca(a, a).value <= 1e-8);
}

TEST_CASE("rotations leave every distance at zero") {
  std::mt19937_64 rng(14);
  const auto a = testing::rep(testing::shaped(500, 10, rng), "a");
  const Representation b("b", a.data() * testing::orthogonal(10, rng).transpose(),
                         RepState::normalized);
  CHECK(gulp(a, b, 0.01).value <= 1e-8);
  const MomentSet m = compute_moments(a, b);
  CHECK(cka(m).value <= 1e-8);
  CHECK(procrustes(m).value <= 1e-8);
  CHECK(pwcca(a, b).value <= 1e-8);
}

TEST_CASE("invertible maps leave cca at zero") {
  std::mt19937_64 rng(15);
  const auto a = testing::rep(testing::shaped(400, 6, rng), "a");
  const auto b = testing::rep(a.data() * testing::gaussian(6, 6, rng), "b");
  CHECK(cca(compute_moments(a, b)).value <= 1e-8);
  CHECK(gulp(a, b, 0.0).value <= 1e-6);
}

TEST_CASE("pwcca on independent data and asymmetry") {
  std::mt19937_64 rng(16);
  const auto a = testing::rep(testing::gaussian(10000, 2, rng));
  const auto b = testing::rep(testing::gaussian(10000, 2, rng));
  const auto r = pwcca(a, b);
  CHECK(std::abs(r.value - 1.0) <= 0.1);
  CHECK(std::find(r.flags.begin(), r.flags.end(), kFlagAsymmetric) != r.flags.end());

  const auto [c, d] = testing::related_pair(300, 2, 5, rng);
  CHECK(std::abs(pwcca(c, d).value - pwcca(d, c).value) > 1e-6);
}

TEST_CASE("rank-deficient lambda=0 is flagged") {
  std::mt19937_64 rng(17);
  const auto a = testing::rep(testing::gaussian(6, 8, rng));
  const auto b = testing::rep(testing::gaussian(6, 3, rng));
  const auto r = gulp(a, b, 0.0);
  CHECK(std::find(r.flags.begin(), r.flags.end(), kFlagRankDeficient) != r.flags.end());
  CHECK(std::isfinite(r.value));
  const auto ok = gulp(a, b, 0.1);
  CHECK(ok.flags.empty());
}

TEST_CASE("kernel gulp") {
  std::mt19937_64 rng(18);
  const auto [a, b] = testing::related_pair(80, 3, 4, rng);
  SUBCASE("rbf matches the explicit kernel oracle") {
    for (double h : {0.5, 1.0, 3.0}) {
      const double oracle = testing::kernel_gulp_sq(testing::rbf_gram(a.data(), h),
                                                    testing::rbf_gram(b.data(), h), 0.05);
      CHECK(rel(gulp_kernel(a, b, 0.05, Kernel::rbf(h)).squared_value, oracle) <= 1e-6);
    }
  }
  SUBCASE("very wide rbf approaches the linear kernel") {
    const double linear = gulp_kernel(a, b, 0.01, Kernel::linear()).squared_value;
    const double wide = gulp_kernel(a, b, 0.01, Kernel::rbf(1e6)).squared_value;
    CHECK(rel(wide, linear) <= 0.05);
  }
}

TEST_CASE("compute_distance dispatch") {
  std::mt19937_64 rng(19);
  const auto [a, b] = testing::related_pair(60, 3, 3, rng);
  const MetricId id{MetricKind::gulp, 0.01, {}};
  const auto r = compute_distance(a, b, id);
  CHECK(r.name_a == "a");
  CHECK(r.name_b == "b");
  CHECK(r.value == gulp(a, b, 0.01).value);
  CHECK_THROWS_AS(compute_distance(a, b, MetricId{MetricKind::ridge_cca_inner, 1.0, {}}),
                  InputError);
  const auto short_rep = testing::rep(testing::gaussian(30, 3, rng));
  CHECK_THROWS_AS(compute_distance(a, short_rep, id), InputError);
}

TEST_CASE("cka rejects degenerate moments") {
  const Eigen::MatrixXd z = Eigen::MatrixXd::Zero(2, 2);
  const MomentSet m = moments_from_covariances(z, Eigen::MatrixXd::Identity(2, 2) / 2.0,
                                               Eigen::MatrixXd::Zero(2, 2), 10, std::nullopt);
  CHECK_THROWS_WITH(cka(m), doctest::Contains("degenerate"));
}
