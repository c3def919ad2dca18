#include <doctest.h>

#include <cmath>

#include "support/oracles.hpp"
#include "tfmm/qcqp.hpp"
#include "tfmm/rng.hpp"

using namespace tfmm;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

QuadraticSurrogate<double> quadratic(MatrixXd h, VectorXd b, double c = 0.0) {
  QuadraticSurrogate<double> q;
  q.H = std::move(h);
  q.b = std::move(b);
  q.c = c;
  return q;
}

MatrixXd random_psd(Rng<double>& rng, Index n, double ridge = 0.0) {
  MatrixXd root(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) root(i, j) = rng.gaussian();
  return root.transpose() * root + ridge * MatrixXd::Identity(n, n);
}

// Random strongly convex instance with a strict interior at the origin.
QcqpProblem<double> random_problem(Rng<double>& rng, Index n, int m_constraints) {
  QcqpProblem<double> p;
  p.objective = quadratic(random_psd(rng, n, 1.0), 2.0 * rng.gaussian_vector(n));
  for (int j = 0; j < m_constraints; ++j) {
    ConvexQuadConstraint<double> c;
    c.M = random_psd(rng, n);
    c.q = rng.gaussian_vector(n);
    c.r = -0.5 - rng.uniform();
    p.constraints.push_back(std::move(c));
  }
  return p;
}

std::vector<oracles::QuadConstraintOracle> to_oracle(const QcqpProblem<double>& p) {
  std::vector<oracles::QuadConstraintOracle> cs;
  for (const auto& c : p.constraints) cs.push_back({c.M, c.q, c.r});
  return cs;
}

}  // namespace

TEST_CASE("solve: unconstrained closed form") {
  QcqpProblem<double> p;
  p.objective = quadratic(2.0 * MatrixXd::Identity(3, 3), VectorXd::Zero(3));
  const auto sol = solve(p);
  CHECK(sol.status == QcqpStatus::Optimal);
  CHECK(sol.x_star.norm() == 0.0);
  CHECK(sol.iterations == 0);
}

TEST_CASE("solve: projection onto the unit disk") {
  // minimize ||x - (2,0)||^2 s.t. ||x||^2 <= 1: solution (1,0) with multiplier 1.
  QcqpProblem<double> p;
  p.objective = quadratic(2.0 * MatrixXd::Identity(2, 2), VectorXd{{-4.0, 0.0}}, 4.0);
  p.constraints.push_back({MatrixXd::Identity(2, 2), VectorXd::Zero(2), -1.0});
  const auto sol = solve(p);
  REQUIRE(sol.status == QcqpStatus::Optimal);
  CHECK(sol.x_star[0] == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(std::abs(sol.x_star[1]) < 1e-7);
  CHECK(sol.multipliers[0] == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(sol.kkt_residual <= 1e-8);
}

TEST_CASE("solve: random instances match the projected-gradient oracle") {
  Rng<double> rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    const auto p = random_problem(rng, 4, 2);
    const auto sol = solve(p);
    REQUIRE(sol.status == QcqpStatus::Optimal);
    REQUIRE(sol.kkt_residual <= 1e-8);
    for (Index j = 0; j < sol.multipliers.size(); ++j) CHECK(sol.multipliers[j] >= 0.0);

    const VectorXd x_pg = oracles::projected_gradient_qcqp(p.objective.H, p.objective.b,
                                                           to_oracle(p), VectorXd::Zero(4));
    CHECK(sol.x_star.dot(0.5 * p.objective.H * sol.x_star) + p.objective.b.dot(sol.x_star) ==
          doctest::Approx(x_pg.dot(0.5 * p.objective.H * x_pg) + p.objective.b.dot(x_pg))
              .epsilon(1e-5));
  }
}

TEST_CASE("solve_unconstrained: identity and prior-only cases") {
  Rng<double> rng(22);
  const VectorXd v = rng.gaussian_vector(4);
  CHECK((solve_unconstrained(quadratic(MatrixXd::Identity(4, 4), -v)) - v).norm() < 1e-12);

  // Prior-only objective: tangency of the quadratic term puts the minimizer at
  // the prior mean.
  MapObjective<double> obj;
  obj.prior_mean = rng.gaussian_vector(3);
  obj.prior_precision = random_psd(rng, 3, 0.5);
  obj.C = MatrixXd(0, 3);
  obj.y = VectorXd(0);
  obj.sigma = VectorXd(0);
  obj.nu = VectorXd(0);
  const auto s = build_surrogate_log(obj, obj.prior_mean);
  CHECK((solve_unconstrained(s) - obj.prior_mean).norm() < 1e-10);
}

TEST_CASE("solve_unconstrained: matches conjugate-gradient oracle") {
  Rng<double> rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    const MatrixXd h = random_psd(rng, 5, 0.5);
    const VectorXd b = 3.0 * rng.gaussian_vector(5);
    const VectorXd x = solve_unconstrained(quadratic(h, b));
    const VectorXd x_cg = oracles::conjugate_gradient(h, -b);
    CHECK((x - x_cg).norm() < 1e-8 * (1.0 + x_cg.norm()));
    CHECK((h * x + b).norm() <= 1e-10 * (1.0 + b.norm()));
  }
}

TEST_CASE("solve_unconstrained: non-PD Hessian is an error") {
  CHECK_THROWS_AS(solve_unconstrained(quadratic(-MatrixXd::Identity(2, 2), VectorXd::Zero(2))),
                  std::invalid_argument);
}

TEST_CASE("solve: objective scaling leaves the minimizer unchanged") {
  Rng<double> rng(24);
  auto p = random_problem(rng, 3, 2);
  const auto base = solve(p);
  REQUIRE(base.status == QcqpStatus::Optimal);
  auto scaled = p;
  scaled.objective.H *= 3.7;
  scaled.objective.b *= 3.7;
  scaled.objective.c *= 3.7;
  const auto s = solve(scaled);
  REQUIRE(s.status == QcqpStatus::Optimal);
  CHECK((base.x_star - s.x_star).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("solve: merit is nonincreasing within each centering block") {
  Rng<double> rng(25);
  const auto p = random_problem(rng, 4, 3);
  const auto sol = solve(p);
  REQUIRE(sol.status == QcqpStatus::Optimal);
  REQUIRE(!sol.merit_history.empty());
  for (std::size_t i = 1; i < sol.merit_history.size(); ++i) {
    if (sol.merit_history[i].first == sol.merit_history[i - 1].first)
      CHECK(sol.merit_history[i].second <= sol.merit_history[i - 1].second + 1e-12);
  }
}

TEST_CASE("solve: equality-constrained quadratic matches closed form") {
  Rng<double> rng(26);
  const MatrixXd h = random_psd(rng, 4, 1.0);
  const VectorXd b = rng.gaussian_vector(4);
  const VectorXd a = rng.gaussian_vector(4);
  const double beta = 0.7;

  // KKT system [H a; a' 0] [x; nu] = [-b; beta].
  MatrixXd kkt = MatrixXd::Zero(5, 5);
  kkt.topLeftCorner(4, 4) = h;
  kkt.topRightCorner(4, 1) = a;
  kkt.bottomLeftCorner(1, 4) = a.transpose();
  VectorXd rhs(5);
  rhs.head(4) = -b;
  rhs[4] = beta;
  const VectorXd x_closed = kkt.fullPivLu().solve(rhs).head(4);

  QcqpProblem<double> p;
  p.objective = quadratic(h, b);
  p.equalities.emplace_back(a, beta);
  const auto sol = solve(p);
  REQUIRE(sol.status == QcqpStatus::Optimal);
  CHECK((sol.x_star - x_closed).cwiseAbs().maxCoeff() < 1e-8);

  // Same hyperplane enforced through an active linear inequality.
  const bool flip = a.dot(-h.llt().solve(b)) < beta;
  QcqpProblem<double> q;
  q.objective = quadratic(h, b);
  q.constraints.push_back(
      {MatrixXd::Zero(4, 4), flip ? VectorXd(-a) : a, flip ? beta : -beta});
  const auto sol_ineq = solve(q);
  REQUIRE(sol_ineq.status == QcqpStatus::Optimal);
  CHECK((sol_ineq.x_star - x_closed).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("solve: domain box activates like linear constraints") {
  QcqpProblem<double> p;
  p.objective = quadratic(2.0 * MatrixXd::Identity(2, 2), VectorXd{{-4.0, -1.0}});
  p.domain_box = {{VectorXd::Constant(2, -1.0), VectorXd::Constant(2, 1.0)}};
  const auto sol = solve(p);
  REQUIRE(sol.status == QcqpStatus::Optimal);
  CHECK(sol.x_star[0] == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(sol.x_star[1] == doctest::Approx(0.5).epsilon(1e-7));
}

TEST_CASE("solve: disjoint constraints are reported infeasible") {
  QcqpProblem<double> p;
  p.objective = quadratic(MatrixXd::Identity(2, 2), VectorXd::Zero(2));
  p.constraints.push_back({MatrixXd::Identity(2, 2), VectorXd::Zero(2), -1.0});
  VectorXd far(2);
  far << -20.0, 0.0;  // ||x - (10,0)||^2 <= 1
  p.constraints.push_back({MatrixXd::Identity(2, 2), far, 99.0});
  const auto sol = solve(p);
  CHECK(sol.status == QcqpStatus::Infeasible);
}

TEST_CASE("solve: deterministic across repeated calls") {
  Rng<double> rng(27);
  const auto p = random_problem(rng, 4, 2);
  const auto a = solve(p);
  const auto b = solve(p);
  CHECK((a.x_star - b.x_star).norm() == 0.0);
  CHECK(a.iterations == b.iterations);
}

TEST_CASE("solve: exhausted budget is not reported optimal") {
  QcqpProblem<double> p;
  p.objective = quadratic(2.0 * MatrixXd::Identity(2, 2), VectorXd{{-4.0, 0.0}});
  p.constraints.push_back({MatrixXd::Identity(2, 2), VectorXd::Zero(2), -1.0});
  QcqpOptions<double> opts;
  opts.max_iter = 2;
  const auto sol = solve(p, opts);
  CHECK(sol.status != QcqpStatus::Optimal);
}
