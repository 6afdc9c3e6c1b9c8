#include "tripleq/envs.hpp"

#include "tripleq/lp.hpp"
#include "tripleq/rng.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

namespace tripleq {

std::vector<Cell> default_obstacles() {
  return {{1, 5}, {2, 2}, {3, 4}, {4, 1}, {5, 3}, {4, 6}, {6, 4}, {6, 6}, {6, 7}, {7, 6}};
}

void GridWorldConfig::validate() const {
  if (width < 1 || height < 1) throw CmdpError("grid: width and height must be positive");
  if (horizon < 1) throw CmdpError("grid: horizon must be positive");
  auto inside = [&](Cell c) { return c.row >= 0 && c.row < height && c.col >= 0 && c.col < width; };
  if (!inside(goal)) throw CmdpError("grid: goal outside the board");
  if (!inside(start)) throw CmdpError("grid: start outside the board");
  for (const auto& o : obstacles) {
    if (!inside(o)) throw CmdpError("grid: obstacle outside the board");
    if (o == goal) throw CmdpError("grid: goal must not be an obstacle");
  }
  if (start_dist) {
    if (static_cast<int>(start_dist->size()) != width * height) {
      throw CmdpError("grid: start distribution needs width*height entries");
    }
    double total = 0.0;
    for (double p : *start_dist) {
      if (!(p >= 0.0)) throw CmdpError("grid: start distribution has a negative entry");
      total += p;
    }
    if (std::abs(total - 1.0) > kProbabilityTolerance) throw CmdpError("grid: start distribution must sum to 1");
  }
  if (!(cost_budget >= 0.0 && cost_budget <= horizon)) throw CmdpError("grid: cost_budget must lie in [0, H]");
  if (!(slip_prob >= 0.0 && slip_prob < 1.0)) throw CmdpError("grid: slip_prob must lie in [0, 1)");
}

double grid_raw_reward(const GridWorldConfig& cfg, Cell cell) {
  if (cell == cfg.goal) return 100.0;
  const double longest = std::hypot(cfg.width - 1, cfg.height - 1);
  return longest - std::hypot(cell.row - cfg.goal.row, cell.col - cfg.goal.col);
}

Cmdp grid_world(const GridWorldConfig& cfg) {
  cfg.validate();
  const int S = cfg.width * cfg.height;
  const int A = 4;
  const int H = cfg.horizon;
  const int goal = cfg.cell_index(cfg.goal);

  std::vector<char> obstacle(static_cast<std::size_t>(S), 0);
  for (const auto& o : cfg.obstacles) obstacle[static_cast<std::size_t>(cfg.cell_index(o))] = 1;

  auto move = [&](int x, int a) {
    Cell c{x / cfg.width, x % cfg.width};
    switch (static_cast<GridAction>(a)) {
      case GridAction::up: c.row = std::max(0, c.row - 1); break;
      case GridAction::down: c.row = std::min(cfg.height - 1, c.row + 1); break;
      case GridAction::left: c.col = std::max(0, c.col - 1); break;
      case GridAction::right: c.col = std::min(cfg.width - 1, c.col + 1); break;
    }
    return cfg.cell_index(c);
  };

  Kernel<double> P = Kernel<double>::Zero(S * A, S);
  Matrix<double> reward = Matrix<double>::Zero(S, A);
  Matrix<double> cost = Matrix<double>::Zero(S, A);
  for (int x = 0; x < S; ++x) {
    for (int a = 0; a < A; ++a) {
      const int row = x * A + a;
      if (x == goal) {
        P(row, goal) = 1.0;
        continue;
      }
      P(row, move(x, a)) += 1.0 - cfg.slip_prob;
      if (cfg.slip_prob > 0.0) {
        for (int d = 0; d < A; ++d) P(row, move(x, d)) += cfg.slip_prob / A;
      }
      for (int next = 0; next < S; ++next) {
        const double p = P(row, next);
        if (p == 0.0) continue;
        const Cell nc{next / cfg.width, next % cfg.width};
        reward(x, a) += p * grid_raw_reward(cfg, nc) / 100.0;
        if (obstacle[static_cast<std::size_t>(next)]) cost(x, a) += p;
      }
      reward(x, a) = std::min(reward(x, a), 1.0);
      cost(x, a) = std::min(cost(x, a), 1.0);
    }
  }

  Vector<double> mu0 = Vector<double>::Zero(S);
  if (cfg.start_dist) {
    for (int x = 0; x < S; ++x) mu0(x) = (*cfg.start_dist)[static_cast<std::size_t>(x)];
  } else {
    mu0(cfg.cell_index(cfg.start)) = 1.0;
  }

  const Cmdp with_costs(S, A, H, std::vector<Kernel<double>>(static_cast<std::size_t>(H), P),
                        StepTables<double>(static_cast<std::size_t>(H), reward),
                        StepTables<double>(static_cast<std::size_t>(H), cost), 0.0, mu0);
  return cost_to_utility(with_costs, cfg.cost_budget);
}

Cmdp random_cmdp(int S, int A, int H, std::uint64_t seed) {
  if (S < 1 || A < 1 || H < 1) throw CmdpError("random_cmdp: S, A and H must be positive");
  Rng rng(seed);

  std::vector<Kernel<double>> transitions;
  for (int h = 0; h < H; ++h) {
    Kernel<double> P(S * A, S);
    for (int row = 0; row < S * A; ++row) {
      for (int next = 0; next < S; ++next) P(row, next) = rng.uniform_open_zero();
      P.row(row) /= P.row(row).sum();
    }
    transitions.push_back(std::move(P));
  }
  auto draw_tables = [&] {
    StepTables<double> tables;
    for (int h = 0; h < H; ++h) {
      Matrix<double> t(S, A);
      for (int x = 0; x < S; ++x) {
        for (int a = 0; a < A; ++a) t(x, a) = rng.uniform();
      }
      tables.push_back(std::move(t));
    }
    return tables;
  };
  StepTables<double> rewards = draw_tables();
  StepTables<double> utilities = draw_tables();
  Vector<double> mu0(S);
  for (int x = 0; x < S; ++x) mu0(x) = rng.uniform_open_zero();
  mu0 /= mu0.sum();

  Cmdp spec(S, A, H, std::move(transitions), std::move(rewards), std::move(utilities), 0.0, std::move(mu0));
  if (!is_enumerable(S, A, H)) return spec.with_rho(0.5 * H);
  double best = 0.0;
  for (const auto& point : deterministic_policy_values(spec)) best = std::max(best, point.second);
  return spec.with_rho(0.8 * best);
}

Cmdp chain_cmdp() {
  Kernel<double> P(2, 1);
  P << 1.0, 1.0;
  Matrix<double> r(1, 2);
  r << 1.0, 0.0;
  Matrix<double> g(1, 2);
  g << 0.0, 1.0;
  Vector<double> mu0(1);
  mu0 << 1.0;
  return Cmdp(1, 2, 1, {P}, {r}, {g}, 0.5, mu0);
}

}  // namespace tripleq
