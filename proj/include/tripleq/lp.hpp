#pragma once

// Occupancy-measure linear program for a tabular CMDP:
//
//   max  sum_{h,x,a} q_h(x,a) r_h(x,a)
//   s.t. sum_{h,x,a} q_h(x,a) g_h(x,a) >= rho + epsilon
//        sum_a q_h(x,a) = sum_{x',a'} P_{h-1}(x|x',a') q_{h-1}(x',a')   (h >= 2)
//        sum_a q_1(x,a) = mu0(x)
//        q >= 0
//
// Per-step normalization sum_{x,a} q_h(x,a) = 1 is implied by the flow rows
// (kernel rows sum to one) and is therefore left out of the tableau; it is
// still part of the feasibility certificate.
//
// brute_force_optimal is the independent oracle: it never touches the
// simplex and works purely from policy_eval over deterministic policies.

#include "tripleq/cmdp.hpp"
#include "tripleq/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace tripleq {

template <class Scalar>
using BasicOccupancy = StepTables<Scalar>;

enum class LpStatus { optimal, infeasible };

template <class Scalar>
struct BasicLpSolution {
  BasicOccupancy<Scalar> occupancy;  // empty when infeasible
  Scalar objective = std::numeric_limits<Scalar>::quiet_NaN();
  Scalar utility_value = std::numeric_limits<Scalar>::quiet_NaN();
  LpStatus status = LpStatus::infeasible;
};

class LpSolverError : public std::runtime_error {
 public:
  LpSolverError(const std::string& what, double best_bound)
      : std::runtime_error(what), best_bound(best_bound) {}
  double best_bound;
};

class EnumerationLimitError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline constexpr long kMaxEnumeratedPolicies = 4096;

/// Pairs (h, x) that some policy reaches with positive probability. Only
/// these carry occupancy, so the LP is built over them alone.
template <class Scalar>
std::vector<std::vector<char>> reachable_states(const BasicCmdp<Scalar>& spec) {
  const int S = spec.num_states();
  const int A = spec.num_actions();
  const int H = spec.horizon();
  std::vector<std::vector<char>> reach(static_cast<std::size_t>(H), std::vector<char>(static_cast<std::size_t>(S), 0));
  for (int x = 0; x < S; ++x) reach[0][static_cast<std::size_t>(x)] = spec.initial_dist()(x) > Scalar(0);
  for (int h = 0; h + 1 < H; ++h) {
    const auto& P = spec.transition(h);
    for (int x = 0; x < S; ++x) {
      if (!reach[static_cast<std::size_t>(h)][static_cast<std::size_t>(x)]) continue;
      for (int a = 0; a < A; ++a) {
        for (int next = 0; next < S; ++next) {
          if (P(x * A + a, next) > Scalar(0)) reach[static_cast<std::size_t>(h + 1)][static_cast<std::size_t>(next)] = 1;
        }
      }
    }
  }
  return reach;
}

/// Solves the epsilon-tightened LP (epsilon = 0 is the plain CMDP LP).
/// Infeasibility is reported through `status`; an exhausted pivot budget
/// raises LpSolverError carrying the best bound found.
template <class Scalar>
BasicLpSolution<Scalar> solve_cmdp_lp(const BasicCmdp<Scalar>& spec, Scalar epsilon,
                                      SimplexOptions opts = {}) {
  if (!(epsilon >= Scalar(0))) throw std::invalid_argument("epsilon: must be >= 0");
  const int S = spec.num_states();
  const int A = spec.num_actions();
  const int H = spec.horizon();
  const auto reach = reachable_states(spec);

  // Row index of each reachable (h, x); variables q_h(x, a) follow row order.
  std::vector<Eigen::Index> row_of(static_cast<std::size_t>(H) * S, -1);
  Eigen::Index pairs = 0;
  for (int h = 0; h < H; ++h) {
    for (int x = 0; x < S; ++x) {
      if (reach[static_cast<std::size_t>(h)][static_cast<std::size_t>(x)]) {
        row_of[static_cast<std::size_t>(h) * S + x] = pairs++;
      }
    }
  }
  const Eigen::Index nq = pairs * A;
  const Eigen::Index rows = pairs + 1;
  auto row = [&](int h, int x) { return row_of[static_cast<std::size_t>(h) * S + x]; };
  auto var = [&](int h, int x, int a) { return row(h, x) * A + a; };

  Matrix<Scalar> Aeq = Matrix<Scalar>::Zero(rows, nq + 1);
  Vector<Scalar> b = Vector<Scalar>::Zero(rows);
  Vector<Scalar> c = Vector<Scalar>::Zero(nq + 1);
  const Eigen::Index urow = rows - 1;

  for (int h = 0; h < H; ++h) {
    for (int x = 0; x < S; ++x) {
      if (row(h, x) < 0) continue;
      for (int a = 0; a < A; ++a) {
        Aeq(row(h, x), var(h, x, a)) = Scalar(1);
        Aeq(urow, var(h, x, a)) = spec.utilities(h)(x, a);
        c(var(h, x, a)) = spec.rewards(h)(x, a);
      }
      if (h == 0) {
        b(row(h, x)) = spec.initial_dist()(x);
        continue;
      }
      const auto& P = spec.transition(h - 1);
      for (int xp = 0; xp < S; ++xp) {
        if (row(h - 1, xp) < 0) continue;
        for (int ap = 0; ap < A; ++ap) Aeq(row(h, x), var(h - 1, xp, ap)) -= P(xp * A + ap, x);
      }
    }
  }
  Aeq(urow, nq) = Scalar(-1);  // surplus
  b(urow) = spec.rho() + epsilon;

  SimplexResult<Scalar> res;
  try {
    res = simplex_maximize(Aeq, b, c, opts);
  } catch (const SimplexIterationLimit& e) {
    throw LpSolverError(e.what(), e.best_bound);
  }

  BasicLpSolution<Scalar> sol;
  if (res.status == SimplexStatus::infeasible) return sol;
  if (res.status == SimplexStatus::unbounded) {
    throw LpSolverError("occupancy LP reported unbounded", std::numeric_limits<double>::infinity());
  }

  sol.status = LpStatus::optimal;
  sol.occupancy.assign(static_cast<std::size_t>(H), Matrix<Scalar>::Zero(S, A));
  sol.objective = Scalar(0);
  sol.utility_value = Scalar(0);
  for (int h = 0; h < H; ++h) {
    auto& q = sol.occupancy[static_cast<std::size_t>(h)];
    for (int x = 0; x < S; ++x) {
      if (row(h, x) < 0) continue;
      for (int a = 0; a < A; ++a) q(x, a) = std::max(Scalar(0), res.x(var(h, x, a)));
    }
    sol.objective += (q.array() * spec.rewards(h).array()).sum();
    sol.utility_value += (q.array() * spec.utilities(h).array()).sum();
  }
  return sol;
}

/// Largest violation of the flow, normalization, initial-condition and
/// non-negativity constraints.
template <class Scalar>
Scalar occupancy_residual(const BasicCmdp<Scalar>& spec, const BasicOccupancy<Scalar>& q) {
  const int S = spec.num_states();
  const int A = spec.num_actions();
  const int H = spec.horizon();
  if (static_cast<int>(q.size()) != H) throw CmdpError("occupancy: expected H step tables");
  Scalar worst = Scalar(0);
  for (int h = 0; h < H; ++h) {
    const auto& qh = q[static_cast<std::size_t>(h)];
    if (qh.rows() != S || qh.cols() != A) throw CmdpError("occupancy: expected S x A tables");
    worst = std::max(worst, -qh.minCoeff());
    worst = std::max(worst, std::abs(qh.sum() - Scalar(1)));
    const Vector<Scalar> state_mass = qh.rowwise().sum();
    Vector<Scalar> inflow;
    if (h == 0) {
      inflow = spec.initial_dist();
    } else {
      const auto& prev = q[static_cast<std::size_t>(h - 1)];
      inflow = Vector<Scalar>::Zero(S);
      for (int xp = 0; xp < S; ++xp) {
        for (int ap = 0; ap < A; ++ap) {
          inflow += prev(xp, ap) * spec.transition(h - 1).row(xp * A + ap).transpose();
        }
      }
    }
    worst = std::max(worst, (state_mass - inflow).cwiseAbs().maxCoeff());
  }
  return worst;
}

/// pi_h(a|x) = q_h(x,a) / sum_a' q_h(x,a'); uniform where the state mass is
/// below 1e-12.
template <class Scalar>
BasicPolicy<Scalar> occupancy_to_policy(const BasicOccupancy<Scalar>& q) {
  StepTables<Scalar> probs;
  probs.reserve(q.size());
  for (const auto& qh : q) {
    Matrix<Scalar> pi(qh.rows(), qh.cols());
    for (Eigen::Index x = 0; x < qh.rows(); ++x) {
      const Scalar mass = qh.row(x).sum();
      if (mass < Scalar(1e-12)) {
        pi.row(x).setConstant(Scalar(1) / Scalar(qh.cols()));
      } else {
        pi.row(x) = qh.row(x) / mass;
      }
    }
    probs.push_back(std::move(pi));
  }
  return BasicPolicy<Scalar>::stochastic(std::move(probs));
}

/// Number of deterministic Markov policies, saturating just above the
/// enumeration guard.
inline long count_deterministic_policies(int S, int A, int H) {
  long count = 1;
  for (long i = 0; i < static_cast<long>(S) * H; ++i) {
    count *= A;
    if (count > kMaxEnumeratedPolicies) return kMaxEnumeratedPolicies + 1;
  }
  return count;
}

inline bool is_enumerable(int S, int A, int H) {
  return count_deterministic_policies(S, A, H) <= kMaxEnumeratedPolicies;
}

/// (V_1, W_1) under mu0 for every deterministic policy.
template <class Scalar>
std::vector<std::pair<Scalar, Scalar>> deterministic_policy_values(const BasicCmdp<Scalar>& spec) {
  const int S = spec.num_states();
  const int A = spec.num_actions();
  const int H = spec.horizon();
  const long total = count_deterministic_policies(S, A, H);
  if (total > kMaxEnumeratedPolicies) {
    throw EnumerationLimitError("brute force: A^(S*H) exceeds " +
                                std::to_string(kMaxEnumeratedPolicies) + " policies");
  }
  std::vector<std::pair<Scalar, Scalar>> points;
  points.reserve(static_cast<std::size_t>(total));
  Eigen::MatrixXi actions = Eigen::MatrixXi::Zero(H, S);
  for (long id = 0; id < total; ++id) {
    long digits = id;
    for (int h = 0; h < H; ++h) {
      for (int x = 0; x < S; ++x) {
        actions(h, x) = static_cast<int>(digits % A);
        digits /= A;
      }
    }
    const auto values = policy_eval(spec, BasicPolicy<Scalar>::deterministic(A, actions));
    points.push_back(expected_initial_value(spec, values));
  }
  return points;
}

/// Maximum of V over the convex hull of deterministic (V, W) points subject
/// to W >= rho + epsilon, or nullopt when no mixture reaches the threshold.
/// The optimum lies at a feasible point or on a segment between a point
/// above and a point below the threshold, so all such pairs are scanned.
template <class Scalar>
std::optional<Scalar> brute_force_optimal(const BasicCmdp<Scalar>& spec, Scalar epsilon) {
  const auto points = deterministic_policy_values(spec);
  const Scalar threshold = spec.rho() + epsilon;
  const Scalar slack = Scalar(1e-12);
  std::optional<Scalar> best;
  auto offer = [&](Scalar v) {
    if (!best || v > *best) best = v;
  };
  for (const auto& [v, w] : points) {
    if (w >= threshold - slack) offer(v);
  }
  for (const auto& [vi, wi] : points) {
    if (wi < threshold) continue;
    for (const auto& [vj, wj] : points) {
      if (wj >= threshold) continue;
      const Scalar lambda = (threshold - wj) / (wi - wj);
      offer(lambda * vi + (Scalar(1) - lambda) * vj);
    }
  }
  return best;
}

/// Slater slack: max over policies of E[W_1] - rho, by enumeration.
template <class Scalar>
Scalar slater_slack(const BasicCmdp<Scalar>& spec) {
  Scalar best = -std::numeric_limits<Scalar>::infinity();
  for (const auto& point : deterministic_policy_values(spec)) best = std::max(best, point.second);
  return best - spec.rho();
}

using Occupancy = BasicOccupancy<double>;
using LpSolution = BasicLpSolution<double>;

}  // namespace tripleq
