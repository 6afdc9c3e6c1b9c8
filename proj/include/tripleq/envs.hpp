#pragma once

#include "tripleq/cmdp.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace tripleq {

struct Cell {
  int row = 0;
  int col = 0;
  friend bool operator==(const Cell&, const Cell&) = default;
};

/// Grid actions in index order.
enum class GridAction { up = 0, down = 1, left = 2, right = 3 };

/// Obstacle layout used when a config does not name one. Cells are
/// (row, col) on the default 8 x 8 board.
std::vector<Cell> default_obstacles();

struct GridWorldConfig {
  int width = 8;
  int height = 8;
  std::vector<Cell> obstacles = default_obstacles();
  Cell start{0, 0};
  std::optional<std::vector<double>> start_dist;  // row-major over cells; overrides `start`
  Cell goal{7, 7};
  int horizon = 20;
  double cost_budget = 6.0;
  double slip_prob = 0.0;

  /// Throws CmdpError naming the offending field.
  void validate() const;
  int cell_index(Cell c) const { return c.row * width + c.col; }
};

/// Grid world with obstacles. A step moves to the neighboring cell (walls
/// keep the agent in place); with probability slip_prob the move is replaced
/// by one in a uniformly random direction. Reward and cost are paid for the
/// cell entered: reward (max pairwise distance - distance to goal) / 100, or
/// 100 / 100 = 1 for the goal; cost 1 for an obstacle. The goal is absorbing
/// with reward 0 and cost 0. Costs are converted to utilities 1 - cost with
/// rho = H - cost_budget.
Cmdp grid_world(const GridWorldConfig& cfg);

/// Raw per-cell reward before normalization (100 at the goal).
double grid_raw_reward(const GridWorldConfig& cfg, Cell cell);

/// Seeded random instance. Kernel rows are normalized uniform draws; rewards
/// and utilities are uniform on [0, 1); mu0 is a normalized uniform draw.
/// rho is 0.8 times the best achievable utility when the instance is small
/// enough to enumerate deterministic policies, otherwise 0.5 H.
Cmdp random_cmdp(int S, int A, int H, std::uint64_t seed);

/// 1 state, 2 actions, H = 1, r = (1, 0), g = (0, 1), rho = 0.5.
Cmdp chain_cmdp();

}  // namespace tripleq
