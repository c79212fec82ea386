#include "repsim/error.hpp"
#include "repsim/moments.hpp"
#include "support.hpp"

#include <doctest.h>

using namespace repsim;

TEST_CASE("covariance") {
  Eigen::MatrixXd m(2, 1);
  m << 1, -1;
  CHECK(covariance(Representation("x", m, RepState::normalized))(0, 0) == 1.0);

  Eigen::MatrixXd two(2, 2);
  two << 1, 0, -1, 0;
  const Eigen::MatrixXd c = covariance(testing::rep(two));
  CHECK(c.trace() == doctest::Approx(1.0).epsilon(1e-14));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(c);
  CHECK(eig.eigenvalues()(0) == doctest::Approx(0.0));

  std::mt19937_64 rng(1);
  const auto r = testing::rep(testing::gaussian(1000, 4, rng));
  const Eigen::MatrixXd s = covariance(r);
  CHECK(std::abs(s.trace() - 1.0) <= 1e-12);
  CHECK((s - s.transpose()).cwiseAbs().maxCoeff() <= 1e-12);

  CHECK_THROWS_AS(covariance(Representation("raw", m)), InputError);
}

TEST_CASE("cross covariance") {
  std::mt19937_64 rng(2);
  const auto a = testing::rep(testing::gaussian(300, 4, rng), "a");
  CHECK((cross_covariance(a, a) - covariance(a)).cwiseAbs().maxCoeff() <= 1e-14);

  Eigen::PermutationMatrix<Eigen::Dynamic> p(4);
  p.indices() << 2, 0, 3, 1;
  const Representation b("b", a.data() * p, RepState::normalized);
  CHECK((cross_covariance(a, b) - covariance(a) * p).cwiseAbs().maxCoeff() <= 1e-14);

  const auto x = testing::rep(testing::gaussian(100000, 1, rng));
  const auto y = testing::rep(testing::gaussian(100000, 1, rng));
  CHECK(std::abs(cross_covariance(x, y)(0, 0)) <= 0.02);

  const auto short_rep = testing::rep(testing::gaussian(50, 4, rng));
  CHECK_THROWS_WITH_AS(cross_covariance(a, short_rep), doctest::Contains("mismatched n"),
                       InputError);
}

TEST_CASE("regularized inverse") {
  CHECK(regularized_inverse(Eigen::MatrixXd::Identity(3, 3), 1.0)
            .isApprox(0.5 * Eigen::MatrixXd::Identity(3, 3), 1e-15));

  Eigen::MatrixXd d = Eigen::Vector2d(1.0, 0.0).asDiagonal();
  CHECK((regularized_inverse(d, 0.0) - d).cwiseAbs().maxCoeff() <= 1e-15);

  d = Eigen::Vector2d(2.0, 1.0).asDiagonal();
  const Eigen::MatrixXd inv = regularized_inverse(d, 0.5);
  CHECK(inv(0, 0) == doctest::Approx(0.4).epsilon(1e-14));
  CHECK(inv(1, 1) == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
  CHECK(std::abs(inv(0, 1)) <= 1e-15);

  Eigen::MatrixXd asym = Eigen::MatrixXd::Identity(2, 2);
  asym(0, 1) = 1e-6;
  CHECK_THROWS_AS(regularized_inverse(asym, 1.0), InputError);
  CHECK_THROWS_AS(regularized_inverse(Eigen::MatrixXd::Identity(2, 2), -1.0), InputError);
}

TEST_CASE("regularized inverse properties on random covariances") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Index k = 2 + trial % 7;
    const auto r = testing::rep(testing::shaped(40, k, rng));
    const Eigen::MatrixXd s = covariance(r);
    for (double lambda : {1e-6, 1e-2, 1.0}) {
      const Eigen::MatrixXd inv = regularized_inverse(s, lambda);
      const Eigen::MatrixXd prod = inv * (s + lambda * Eigen::MatrixXd::Identity(k, k));
      CHECK((prod - Eigen::MatrixXd::Identity(k, k)).cwiseAbs().maxCoeff() <= 1e-8);
      CHECK((inv - inv.transpose()).cwiseAbs().maxCoeff() == 0.0);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(inv);
      CHECK(eig.eigenvalues().minCoeff() >= 0.0);
    }
    // pseudo-inverse agrees with the Moore-Penrose oracle on a full-rank case
    const Eigen::MatrixXd pinv = regularized_inverse(s, 0.0);
    CHECK((pinv - testing::resolvent(s, 0.0)).norm() <= 1e-8 * pinv.norm());
  }
}

TEST_CASE("moment set") {
  std::mt19937_64 rng(4);
  const auto [a, b] = testing::related_pair(200, 3, 5, rng);
  const MomentSet m = compute_moments(a, b, 0.1);
  CHECK(m.dim_phi() == 3);
  CHECK(m.dim_psi() == 5);
  CHECK(m.n == 200);
  REQUIRE(m.lambda.has_value());
  CHECK(*m.lambda == 0.1);
  CHECK(std::abs(m.sigma_phi.trace() - 1.0) <= 1e-10);
  CHECK(std::abs(m.sigma_psi.trace() - 1.0) <= 1e-10);
  // the joint root reproduces every second-moment block
  const Eigen::MatrixXd ra = m.root_phi();
  const Eigen::MatrixXd rb = m.root_psi();
  CHECK((ra.transpose() * ra - m.sigma_phi).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((rb.transpose() * rb - m.sigma_psi).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((ra.transpose() * rb - m.sigma_cross).cwiseAbs().maxCoeff() <= 1e-12);

  const MomentSet from_cov =
      moments_from_covariances(m.sigma_phi, m.sigma_psi, m.sigma_cross, m.n, 0.1);
  const Eigen::MatrixXd fa = from_cov.root_phi();
  const Eigen::MatrixXd fb = from_cov.root_psi();
  CHECK((fa.transpose() * fb - m.sigma_cross).cwiseAbs().maxCoeff() <= 1e-12);

  CHECK_FALSE(compute_moments(a, b).lambda.has_value());
}

TEST_CASE("hat matrix") {
  std::mt19937_64 rng(5);
  const Eigen::MatrixXd f = testing::gaussian(6, 3, rng);
  const auto h0 = hat_matrix(f, 0.0);
  CHECK(h0.rank == 3);
  CHECK((h0.matrix * h0.matrix - h0.matrix).cwiseAbs().maxCoeff() <= 1e-12);
  const auto h1 = hat_matrix(f, 0.5);
  const Eigen::MatrixXd direct =
      f * (f.transpose() * f + 0.5 * Eigen::MatrixXd::Identity(3, 3)).inverse() * f.transpose();
  CHECK((h1.matrix - direct).cwiseAbs().maxCoeff() <= 1e-12);

  Eigen::MatrixXd deficient = f;
  deficient.col(2) = deficient.col(0) + deficient.col(1);
  CHECK(hat_matrix(deficient, 0.0).rank == 2);
}
