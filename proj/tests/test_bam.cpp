#include <doctest.h>

#include "fgvi/bam.hpp"
#include "fgvi/solvers.hpp"
#include "oracles.hpp"

using namespace fgvi;

namespace {

VectorXd vec(std::initializer_list<double> xs) {
  VectorXd v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

/// Batch statistics in the infinite-batch limit for a Gaussian target: draws
/// from q have mean nu and variance psi, scores -Sigma^-1 (z - mu) have mean
/// -Sigma^-1 (nu - mu) and variances diag(Sigma^-1 Psi Sigma^-1).
BamBatch population_batch(const GaussianTargetd& p, const FactorizedGaussiand& q) {
  const MatrixXd& prec = p.prec().entries();
  BamBatch b;
  b.z_bar = q.mean();
  b.c_diag = q.var();
  b.g_bar = -prec * (q.mean() - p.mean());
  b.gamma_diag = (prec * q.var().asDiagonal() * prec).diagonal();
  return b;
}

/// The diagonal iteration stops moving where psi_i [Sigma^-1 Psi Sigma^-1]_ii = 1,
/// the stationary point of the convex 1/2 psi^T H psi - sum log psi with
/// H = Sigma^-1 o Sigma^-1.
VectorXd population_fixed_point(const GaussianTargetd& p) {
  const MatrixXd prec = p.prec().entries();
  const MatrixXd h = prec.cwiseProduct(prec);
  auto f = [&](const VectorXd& psi) { return 0.5 * psi.dot(h * psi) - psi.array().log().sum(); };
  return oracle::coordinate_minimize(f, p.cov().diag());
}

}  // namespace

TEST_CASE("bam_statistics") {
  MatrixXd draws(3, 2);
  draws << 1, 2, 3, 4, 5, 9;
  MatrixXd scores(3, 2);
  scores << 0, 1, 0, 1, 0, 4;
  const auto b = bam_statistics(draws, scores);
  CHECK(b.z_bar(0) == (1.0 + 3 + 5) / 3);
  CHECK(b.z_bar(1) == (2.0 + 4 + 9) / 3);
  CHECK(b.c_diag(0) == doctest::Approx(8.0 / 3));
  CHECK(b.g_bar(1) == 2.0);
  CHECK(b.gamma_diag(0) == 0.0);
  CHECK(b.gamma_diag(1) == doctest::Approx(2.0));

  MatrixXd same = MatrixXd::Constant(4, 2, 0.5);
  const auto s = bam_statistics(same, same);
  CHECK(s.c_diag.isZero(0.0));
  CHECK(s.gamma_diag.isZero(0.0));

  CHECK_THROWS_AS(bam_statistics(MatrixXd::Zero(1, 2), MatrixXd::Zero(1, 2)), Error);
  CHECK_THROWS_AS(bam_statistics(MatrixXd::Zero(3, 2), MatrixXd::Zero(3, 3)), Error);
}

TEST_CASE("bam_batch at the truth has a small mean score") {
  const auto t = zoo_target("standard_normal2d");
  const BamState state{FactorizedGaussiand(VectorXd::Zero(2), VectorXd::Ones(2)), 0, 1.0, 9};
  for (std::size_t batch : {100, 10000}) {
    const auto b = bam_batch(state, t, batch);
    CHECK(b.draws.rows() == static_cast<Eigen::Index>(batch));
    CHECK(b.g_bar.norm() <= 4.0 / std::sqrt(static_cast<double>(batch)));
    double sum = 0;
    for (Eigen::Index r = 0; r < b.draws.rows(); ++r) sum += b.draws(r, 0);
    CHECK(b.z_bar(0) == doctest::Approx(sum / static_cast<double>(batch)).epsilon(1e-15));
  }
  // A batch is a pure function of the state.
  const auto a = bam_batch(state, t, 50);
  const auto c = bam_batch(state, t, 50);
  CHECK(a.draws == c.draws);
  BamState other = state;
  other.step = 1;
  CHECK(bam_batch(other, t, 50).draws != a.draws);
}

TEST_CASE("bam_batch reports non-finite scores") {
  BlackBoxTarget bad;
  bad.name = "bad";
  bad.dim = 1;
  bad.log_density_unnormalized = [](const VectorXd&) { return 0.0; };
  bad.score = [](const VectorXd& z) { return VectorXd::Constant(1, z(0) > 0 ? std::nan("") : 0.0); };
  const BamState state{FactorizedGaussiand(vec({0}), vec({1})), 0, 1.0, 0};
  try {
    bam_batch(state, bad, 100);
    FAIL("expected NonFiniteScore");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonFiniteScore);
  }
}

TEST_CASE("bam_positive_root") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-6, 6);
  for (int k = 0; k < 1000; ++k) {
    const double a = std::exp(u(rng)), b = std::exp(u(rng)), c = std::exp(u(rng));
    const double x = bam_positive_root(a, b, c);
    const double disc = std::sqrt(b * b + 4 * a * c);
    const double plus = (-b + disc) / (2 * a);
    const double minus = (-b - disc) / (2 * a);
    CHECK(x > 0.0);
    CHECK(minus < 0.0);
    CHECK(x == doctest::Approx(plus).epsilon(1e-6));
    CHECK(std::abs(a * x * x + b * x - c) <= 1e-12 * (a * x * x + b * x + c));
  }
  CHECK(bam_positive_root(0.0, 2.0, 3.0) == 1.5);
  CHECK_THROWS_AS(bam_positive_root(1.0, 1.0, 0.0), Error);
  CHECK_THROWS_AS(bam_positive_root(-1.0, 1.0, 1.0), Error);
  CHECK_THROWS_AS(bam_positive_root(0.0, 0.0, 1.0), Error);
  CHECK_THROWS_AS(bam_positive_root(1.0, std::nan(""), 1.0), Error);
}

TEST_CASE("bam_match: flat scores and identical draws leave the iterate unchanged") {
  const BamState state{FactorizedGaussiand(vec({0.3, -1}), vec({2, 0.5})), 4, 0.7, 0};
  MatrixXd draws(4, 2);
  draws.rowwise() = state.iterate.mean().transpose();
  const auto next = bam_match(state, bam_statistics(draws, MatrixXd::Zero(4, 2)));
  CHECK(next.iterate.var().isApprox(state.iterate.var(), 1e-15));
  CHECK(next.iterate.mean().isApprox(state.iterate.mean(), 1e-15));
  CHECK(next.step == 5);
}

TEST_CASE("bam_match: standard normal is a fixed point of the population map") {
  const GaussianTargetd p(SpdMatrixd::identity(1));
  for (double lambda : {0.1, 1.0, 10.0}) {
    const BamState state{FactorizedGaussiand(vec({0}), vec({1})), 0, lambda, 0};
    const auto next = bam_match(state, population_batch(p, state.iterate));
    CHECK(next.iterate.var()(0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(next.iterate.mean()(0) == 0.0);
  }
}

TEST_CASE("population iteration converges to the derived fixed point") {
  const auto pair = correlated_pair(0.5);
  const double expected = 3.0 / std::sqrt(20.0);
  std::vector<GaussianTargetd> targets{pair, random_correlation_target(3, 8), random_correlation_target(4, 12)};
  for (const auto& p : targets) {
    const auto n = p.dim();
    BamState state{FactorizedGaussiand(VectorXd::Zero(n), VectorXd::Ones(n)), 0, 1.0, 0};
    for (int t = 0; t < 2000; ++t) state = bam_match(state, population_batch(p, state.iterate));
    const VectorXd oracle_psi = population_fixed_point(p);
    CHECK(((state.iterate.var() - oracle_psi).array() / oracle_psi.array()).abs().maxCoeff() <= 1e-6);
    CHECK((state.iterate.mean() - p.mean()).cwiseAbs().maxCoeff() <= 1e-10);
    const MatrixXd& prec = p.prec().entries();
    const VectorXd gamma = (prec * state.iterate.var().asDiagonal() * prec).diagonal();
    CHECK((state.iterate.var().cwiseProduct(gamma).array() - 1).abs().maxCoeff() <= 1e-9);
  }
  BamState state{FactorizedGaussiand(VectorXd::Zero(2), VectorXd::Ones(2)), 0, 1.0, 0};
  for (int t = 0; t < 2000; ++t) state = bam_match(state, population_batch(pair, state.iterate));
  CHECK(state.iterate.var()(0) == doctest::Approx(expected).epsilon(1e-10));
  // This is not the S(q||p) minimizer (0.6 here); see the README.
  CHECK(std::abs(state.iterate.var()(0) - solve_score_qp(pair).psi(0)) > 0.05);
}

TEST_CASE("bam_run on a Gaussian target") {
  const auto t = zoo_target("gaussian2d_rho05");
  BamConfig cfg;
  cfg.batch_size = 100000;
  cfg.iterations = 40;
  cfg.seed = 3;
  const auto r = bam_run(t, FactorizedGaussiand(VectorXd::Zero(2), VectorXd::Ones(2)), cfg);
  REQUIRE(r.trace.size() == 41);
  CHECK(r.trace.front().iter == 0);
  CHECK(r.trace.front().psi.isOnes());
  CHECK(r.trace.back().psi == r.final_q.var());
  CHECK(r.suspected_collapse.empty());
  const double expected = 3.0 / std::sqrt(20.0);
  for (Eigen::Index i = 0; i < 2; ++i) {
    CHECK(std::abs(r.final_q.var()(i) / expected - 1) <= 0.05);
  }
  CHECK(r.trace.back().divergence_proxy < r.trace.front().divergence_proxy);
  for (const auto& row : r.trace) CHECK((row.psi.array() > 0).all());

  // Bit-for-bit determinism, and the seed matters.
  cfg.batch_size = 500;
  const auto a = bam_run(t, FactorizedGaussiand(VectorXd::Zero(2), VectorXd::Ones(2)), cfg);
  const auto b = bam_run(t, FactorizedGaussiand(VectorXd::Zero(2), VectorXd::Ones(2)), cfg);
  for (std::size_t k = 0; k < a.trace.size(); ++k) {
    CHECK(a.trace[k].psi == b.trace[k].psi);
    CHECK(a.trace[k].nu == b.trace[k].nu);
  }
  cfg.seed = 4;
  const auto c = bam_run(t, FactorizedGaussiand(VectorXd::Zero(2), VectorXd::Ones(2)), cfg);
  CHECK(c.final_q.var() != a.final_q.var());
}

TEST_CASE("bam_run validation") {
  const auto t = zoo_target("gaussian2d_rho05");
  const FactorizedGaussiand init(VectorXd::Zero(2), VectorXd::Ones(2));
  BamConfig cfg;
  cfg.iterations = 0;
  CHECK_THROWS_AS(bam_run(t, init, cfg), Error);
  cfg.iterations = 5;
  cfg.batch_size = 1;
  CHECK_THROWS_AS(bam_run(t, init, cfg), Error);
  cfg.batch_size = 10;
  CHECK_THROWS_AS(bam_run(t, FactorizedGaussiand(VectorXd::Zero(3), VectorXd::Ones(3)), cfg), Error);
  CHECK_THROWS_AS(LearningRateSchedule::constant(0.0), Error);
}

TEST_CASE("bam_run on the Rosenbrock target") {
  const auto t = rosenbrock_target();
  BamConfig cfg;
  cfg.batch_size = 5000;
  cfg.iterations = 200;
  cfg.seed = 1;
  const auto r = bam_run(t, FactorizedGaussiand(VectorXd::Zero(2), VectorXd::Ones(2)), cfg);
  CHECK(r.final_q.mean().allFinite());
  CHECK(r.final_q.var().allFinite());
  CHECK((r.final_q.var().array() > 0).all());
  for (const auto& row : r.trace) CHECK(std::isfinite(row.divergence_proxy));

  // Near stationarity one more large-batch step barely moves the variances.
  const BamState state{r.final_q, cfg.iterations + 1, 1.0, 99};
  const auto next = bam_match(state, bam_batch(state, t, 200000));
  CHECK(((next.iterate.var() - r.final_q.var()).array() / r.final_q.var().array()).abs().maxCoeff() <= 0.05);
}
