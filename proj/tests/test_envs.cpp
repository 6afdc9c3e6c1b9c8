#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "tripleq/envs.hpp"
#include "tripleq/io.hpp"
#include "tripleq/lp.hpp"

#include <cmath>

using namespace tripleq;

namespace {

int idx(const GridWorldConfig& cfg, int row, int col) { return cfg.cell_index({row, col}); }
constexpr int kUp = static_cast<int>(GridAction::up);
constexpr int kDown = static_cast<int>(GridAction::down);
constexpr int kLeft = static_cast<int>(GridAction::left);
constexpr int kRight = static_cast<int>(GridAction::right);

}  // namespace

TEST_CASE("grid rewards: goal pays 1, other cells the distance margin over 100") {
  const GridWorldConfig cfg;
  CHECK(grid_raw_reward(cfg, cfg.goal) == 100.0);
  const double longest = std::hypot(7.0, 7.0);
  CHECK(grid_raw_reward(cfg, {0, 0}) == doctest::Approx(0.0).scale(1.0));
  CHECK(grid_raw_reward(cfg, {7, 6}) == doctest::Approx(longest - 1.0));

  const auto spec = grid_world(cfg);
  // (7,5) -> right enters (7,6); (6,7) -> down enters the goal.
  CHECK(spec.rewards(0)(idx(cfg, 7, 5), kRight) == doctest::Approx((longest - 1.0) / 100.0).epsilon(1e-15));
  CHECK(spec.rewards(0)(idx(cfg, 6, 7), kDown) == 1.0);
  double best = 0.0;
  for (int h = 0; h < cfg.horizon; ++h) {
    CHECK(spec.rewards(h).minCoeff() >= 0.0);
    CHECK(spec.rewards(h).maxCoeff() <= 1.0);
    best = std::max(best, spec.rewards(h).maxCoeff());
  }
  CHECK(best == 1.0);
}

TEST_CASE("grid transitions, walls and the absorbing goal") {
  const GridWorldConfig cfg;
  const auto spec = grid_world(cfg);
  const int start = idx(cfg, 0, 0);
  CHECK(spec.prob(0, start, kUp, start) == 1.0);
  CHECK(spec.prob(0, start, kLeft, start) == 1.0);
  CHECK(spec.prob(0, start, kRight, idx(cfg, 0, 1)) == 1.0);
  CHECK(spec.prob(0, start, kDown, idx(cfg, 1, 0)) == 1.0);
  const int goal = idx(cfg, 7, 7);
  for (int a = 0; a < 4; ++a) {
    CHECK(spec.prob(3, goal, a, goal) == 1.0);
    CHECK(spec.rewards(3)(goal, a) == 0.0);
    CHECK(spec.utilities(3)(goal, a) == 1.0);
  }
  CHECK(spec.initial_dist()(start) == 1.0);
  CHECK(spec.num_states() == 64);
  CHECK(spec.num_actions() == 4);
  CHECK(spec.horizon() == 20);
}

TEST_CASE("grid obstacles become zero utility and set rho = H - budget") {
  const GridWorldConfig cfg;
  const auto spec = grid_world(cfg);
  CHECK(spec.rho() == 14.0);
  // (6,5) -> right enters the obstacle (6,6).
  CHECK(spec.utilities(0)(idx(cfg, 6, 5), kRight) == 0.0);
  CHECK(spec.utilities(0)(idx(cfg, 6, 5), kUp) == 1.0);
  // Bumping a wall from inside an obstacle re-enters it.
  CHECK(spec.utilities(0)(idx(cfg, 6, 7), kRight) == 0.0);
}

TEST_CASE("slip spreads mass uniformly over the four moves") {
  GridWorldConfig cfg;
  cfg.slip_prob = 0.2;
  const auto spec = grid_world(cfg);
  const int x = idx(cfg, 3, 3);
  CHECK(spec.prob(0, x, kRight, idx(cfg, 3, 4)) == doctest::Approx(0.85).epsilon(1e-15));
  CHECK(spec.prob(0, x, kRight, idx(cfg, 2, 3)) == doctest::Approx(0.05).epsilon(1e-15));
  // Corner: up and left both bounce back.
  CHECK(spec.prob(0, 0, kRight, 0) == doctest::Approx(0.1).epsilon(1e-15));
  // (3,3) -> right enters the obstacle (3,4) with prob 0.85.
  CHECK(spec.utilities(0)(x, kRight) == doctest::Approx(0.15).epsilon(1e-14));
}

TEST_CASE("default grid has a binding budget") {
  const auto spec = grid_world(GridWorldConfig{});
  const auto tight = solve_cmdp_lp(spec, 0.0);
  const auto loose = solve_cmdp_lp(spec.with_rho(0.0), 0.0);
  REQUIRE(tight.status == LpStatus::optimal);
  REQUIRE(loose.status == LpStatus::optimal);
  CHECK(tight.objective < loose.objective - 1e-6);
  CHECK(tight.utility_value == doctest::Approx(14.0).epsilon(1e-9));
  CHECK(occupancy_residual(spec, tight.occupancy) <= 1e-8);
}

TEST_CASE("grid configuration errors") {
  auto expect_error = [](const GridWorldConfig& cfg, const char* needle) {
    try {
      grid_world(cfg);
      FAIL("expected CmdpError");
    } catch (const CmdpError& e) {
      CHECK(std::string(e.what()).find(needle) != std::string::npos);
    }
  };
  GridWorldConfig goal_blocked;
  goal_blocked.obstacles.push_back({7, 7});
  expect_error(goal_blocked, "goal");
  GridWorldConfig over_budget;
  over_budget.cost_budget = 21;
  expect_error(over_budget, "cost_budget");
  GridWorldConfig slip;
  slip.slip_prob = 1.0;
  expect_error(slip, "slip");
  GridWorldConfig start;
  start.start_dist = std::vector<double>(64, 0.01);
  expect_error(start, "start distribution");
  GridWorldConfig outside;
  outside.obstacles.push_back({8, 0});
  expect_error(outside, "obstacle");
}

TEST_CASE("start distribution overrides the start cell") {
  GridWorldConfig cfg;
  std::vector<double> mu(64, 0.0);
  mu[0] = 0.5;
  mu[9] = 0.5;
  cfg.start_dist = mu;
  const auto spec = grid_world(cfg);
  CHECK(spec.initial_dist()(0) == 0.5);
  CHECK(spec.initial_dist()(9) == 0.5);
}

TEST_CASE("random_cmdp is normalized and fully determined by its seed") {
  const auto a = random_cmdp(3, 2, 3, 42);
  const auto b = random_cmdp(3, 2, 3, 42);
  const auto c = random_cmdp(3, 2, 3, 43);
  CHECK(cmdp_to_json(a).dump() == cmdp_to_json(b).dump());
  CHECK(cmdp_to_json(a).dump() != cmdp_to_json(c).dump());
  for (int h = 0; h < 3; ++h) {
    const auto sums = a.transition(h).rowwise().sum();
    CHECK((sums.array() - 1.0).abs().maxCoeff() <= 1e-12);
    CHECK(a.rewards(h).maxCoeff() < 1.0);
    CHECK(a.utilities(h).minCoeff() >= 0.0);
  }
  // Threshold is 0.8 of the best achievable utility.
  double best = 0.0;
  for (const auto& p : deterministic_policy_values(a)) best = std::max(best, p.second);
  CHECK(a.rho() == doctest::Approx(0.8 * best).epsilon(1e-15));
  // Too large to enumerate: half the horizon.
  CHECK(random_cmdp(5, 3, 4, 1).rho() == 2.0);
}

TEST_CASE("seed-11 instance: LP and brute force agree") {
  const auto spec = random_cmdp(2, 2, 3, 11);
  const auto sol = solve_cmdp_lp(spec, 0.0);
  const auto oracle = brute_force_optimal(spec, 0.0);
  REQUIRE(sol.status == LpStatus::optimal);
  REQUIRE(oracle.has_value());
  CHECK(std::abs(sol.objective - *oracle) <= 1e-6);
}

TEST_CASE("chain fixture") {
  const auto spec = chain_cmdp();
  CHECK(spec.num_states() == 1);
  CHECK(spec.num_actions() == 2);
  CHECK(spec.horizon() == 1);
  CHECK(spec.rho() == 0.5);
  CHECK(*brute_force_optimal(spec, 0.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(*brute_force_optimal(spec.with_rho(0.0), 0.0) == 1.0);
  const auto sol = solve_cmdp_lp(spec, 0.0);
  const auto pi = occupancy_to_policy(sol.occupancy);
  CHECK(pi.prob(0, 0, 0) == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(pi.prob(0, 0, 1) == doctest::Approx(0.5).epsilon(1e-9));
}
