#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "test_support.hpp"
#include "tripleq/envs.hpp"
#include "tripleq/lp.hpp"
#include "tripleq/simplex.hpp"

#include <cmath>

using namespace tripleq;

TEST_CASE("simplex on small textbook programs") {
  SUBCASE("bounded optimum") {
    // max 3x + 5y  s.t. x <= 4, 2y <= 12, 3x + 2y <= 18 (slacks s1..s3).
    Matrix<double> A(3, 5);
    A << 1, 0, 1, 0, 0,
         0, 2, 0, 1, 0,
         3, 2, 0, 0, 1;
    Vector<double> b(3);
    b << 4, 12, 18;
    Vector<double> c(5);
    c << 3, 5, 0, 0, 0;
    const auto res = simplex_maximize(A, b, c);
    REQUIRE(res.status == SimplexStatus::optimal);
    CHECK(res.objective == doctest::Approx(36.0).epsilon(1e-12));
    CHECK(res.x(0) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(res.x(1) == doctest::Approx(6.0).epsilon(1e-12));
  }
  SUBCASE("infeasible") {
    // x + y = 1 and x + y = 2.
    Matrix<double> A(2, 2);
    A << 1, 1, 1, 1;
    Vector<double> b(2);
    b << 1, 2;
    Vector<double> c(2);
    c << 1, 0;
    CHECK(simplex_maximize(A, b, c).status == SimplexStatus::infeasible);
  }
  SUBCASE("unbounded") {
    // x - y = 1, maximize x.
    Matrix<double> A(1, 2);
    A << 1, -1;
    Vector<double> b(1);
    b << 1;
    Vector<double> c(2);
    c << 1, 0;
    CHECK(simplex_maximize(A, b, c).status == SimplexStatus::unbounded);
  }
  SUBCASE("negative right-hand side and redundant rows") {
    // -x - y = -2, 2x + 2y = 4, maximize x + 2y -> y = 2.
    Matrix<double> A(2, 2);
    A << -1, -1, 2, 2;
    Vector<double> b(2);
    b << -2, 4;
    Vector<double> c(2);
    c << 1, 2;
    const auto res = simplex_maximize(A, b, c);
    REQUIRE(res.status == SimplexStatus::optimal);
    CHECK(res.objective == doctest::Approx(4.0).epsilon(1e-12));
  }
  SUBCASE("iteration cap raises") {
    Matrix<double> A(3, 5);
    A << 1, 0, 1, 0, 0,
         0, 2, 0, 1, 0,
         3, 2, 0, 0, 1;
    Vector<double> b(3);
    b << 4, 12, 18;
    Vector<double> c(5);
    c << 3, 5, 0, 0, 0;
    SimplexOptions opts;
    opts.max_iterations = 1;
    CHECK_THROWS_AS(simplex_maximize(A, b, c, opts), SimplexIterationLimit);
  }
}

TEST_CASE("two-action chain: mixing is required") {
  const auto spec = chain_cmdp();
  const auto sol = solve_cmdp_lp(spec, 0.0);
  REQUIRE(sol.status == LpStatus::optimal);
  CHECK(sol.objective == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(sol.occupancy[0](0, 0) == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(sol.occupancy[0](0, 1) == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(sol.utility_value >= 0.5 - 1e-9);

  const auto tight = solve_cmdp_lp(spec, 0.1);
  REQUIRE(tight.status == LpStatus::optimal);
  CHECK(tight.objective == doctest::Approx(0.4).epsilon(1e-9));

  CHECK(solve_cmdp_lp(spec.with_rho(1.0), 0.0).objective == doctest::Approx(0.0).scale(1.0).epsilon(1e-9));
  CHECK(solve_cmdp_lp(spec, 0.6).status == LpStatus::infeasible);
  CHECK_THROWS_AS(solve_cmdp_lp(spec, -0.1), std::invalid_argument);
}

TEST_CASE("threshold above the horizon is infeasible") {
  Kernel<double> P(2, 1);
  P << 1.0, 1.0;
  Matrix<double> r(1, 2);
  r << 1.0, 0.0;
  Matrix<double> g(1, 2);
  g << 0.0, 1.0;
  Vector<double> mu(1);
  mu << 1.0;
  // H = 1 and rho + epsilon = 1.5 cannot be met.
  const Cmdp spec(1, 2, 1, {P}, {r}, {g}, 1.0, mu);
  CHECK(solve_cmdp_lp(spec, 0.5).status == LpStatus::infeasible);
  CHECK_FALSE(brute_force_optimal(spec, 0.5).has_value());
}

TEST_CASE("LP agrees with the brute-force oracle on enumerable instances") {
  Rng rng(31);
  int compared = 0;
  for (int trial = 0; trial < 40; ++trial) {
    const int S = 1 + trial % 3;
    const int A = 2 + trial % 2;
    const int H = 1 + trial % 3;
    if (!is_enumerable(S, A, H)) continue;
    auto spec = testing::small_random_model(S, A, H, rng);
    double max_w = 0.0;
    for (const auto& p : deterministic_policy_values(spec)) max_w = std::max(max_w, p.second);
    spec = spec.with_rho(0.8 * max_w);
    for (double eps : {0.0, 0.05 * max_w}) {
      const auto oracle = brute_force_optimal(spec, eps);
      const auto sol = solve_cmdp_lp(spec, eps);
      REQUIRE(oracle.has_value() == (sol.status == LpStatus::optimal));
      if (!oracle) continue;
      CHECK(std::abs(sol.objective - *oracle) <= 1e-8);
      CHECK(occupancy_residual(spec, sol.occupancy) <= 1e-8);
      ++compared;
    }
  }
  CHECK(compared >= 40);
}

TEST_CASE("seed-11 random instance: policy extraction round-trips") {
  const auto spec = random_cmdp(2, 2, 3, 11);
  const auto sol = solve_cmdp_lp(spec, 0.0);
  REQUIRE(sol.status == LpStatus::optimal);
  CHECK(occupancy_residual(spec, sol.occupancy) <= 1e-8);
  const auto oracle = brute_force_optimal(spec, 0.0);
  REQUIRE(oracle.has_value());
  CHECK(std::abs(sol.objective - *oracle) <= 1e-8);

  const auto pi = occupancy_to_policy(sol.occupancy);
  const auto [v, w] = expected_initial_value(spec, policy_eval(spec, pi));
  CHECK(std::abs(v - sol.objective) <= 1e-6);
  CHECK(w >= spec.rho() - 1e-6);
}

TEST_CASE("occupancy_to_policy normalizes rows and falls back to uniform") {
  Occupancy q(1, Matrix<double>(2, 2));
  q[0] << 0.1, 0.3,
          0.0, 0.0;
  const auto pi = occupancy_to_policy(q);
  CHECK(pi.prob(0, 0, 0) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(pi.prob(0, 0, 1) == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(pi.prob(0, 1, 0) == 0.5);
  CHECK(pi.prob(0, 1, 1) == 0.5);
}

TEST_CASE("tightening the constraint never raises the optimum") {
  const auto spec = random_cmdp(3, 2, 3, 5);
  double previous = std::numeric_limits<double>::infinity();
  for (double eps = 0.0; eps <= 1.0; eps += 0.05) {
    const auto sol = solve_cmdp_lp(spec, eps);
    if (sol.status == LpStatus::infeasible) break;
    CHECK(sol.objective <= previous + 1e-9);
    previous = sol.objective;
  }
}

TEST_CASE("optimum moves by at most (delta / slack) times H for a threshold shift") {
  const auto spec = random_cmdp(2, 2, 3, 11);
  const double slack = slater_slack(spec);
  REQUIRE(slack > 0.0);
  const double base = solve_cmdp_lp(spec, 0.0).objective;
  for (double delta : {0.01, 0.05, 0.1}) {
    if (delta >= slack) continue;
    const auto shifted = solve_cmdp_lp(spec, delta);
    REQUIRE(shifted.status == LpStatus::optimal);
    CHECK(base - shifted.objective <= delta / slack * spec.horizon() + 1e-9);
  }
}

TEST_CASE("brute force refuses large instances") {
  CHECK(count_deterministic_policies(2, 2, 3) == 64);
  CHECK(is_enumerable(2, 2, 6));
  CHECK_FALSE(is_enumerable(3, 2, 5));
  Rng rng(1);
  const auto spec = testing::small_random_model(3, 3, 3, rng);
  CHECK_THROWS_AS(brute_force_optimal(spec, 0.0), EnumerationLimitError);
}

TEST_CASE("LP is generic over the scalar type") {
  const auto spec = chain_cmdp();
  std::vector<Kernel<long double>> P{spec.transition(0).cast<long double>()};
  const BasicCmdp<long double> wide(1, 2, 1, P, {spec.rewards(0).cast<long double>()},
                                    {spec.utilities(0).cast<long double>()}, 0.5L,
                                    spec.initial_dist().cast<long double>());
  const auto sol = solve_cmdp_lp(wide, 0.0L);
  REQUIRE(sol.status == LpStatus::optimal);
  CHECK(std::abs(static_cast<double>(sol.objective) - 0.5) < 1e-12);
}
