#pragma once

// Tabular episodic constrained MDP: model, policies and exact Bellman
// policy evaluation.
//
// Steps are 0-based in code: step h in [0, H) corresponds to step h+1 of the
// usual 1-based notation. Value tables carry an explicit terminal row H of
// zeros.

#include <Eigen/Core>

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace tripleq {

template <class Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <class Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <class Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// One S x A matrix per step.
template <class Scalar>
using StepTables = std::vector<Matrix<Scalar>>;

/// Transition kernel of one step: row x*A + a holds P(. | x, a).
template <class Scalar>
using Kernel = RowMatrix<Scalar>;

/// Thrown when a model, policy or table fails validation. The message names
/// the offending table.
class CmdpError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline constexpr double kProbabilityTolerance = 1e-12;

namespace detail {

template <class Derived>
void check_distribution(const Eigen::MatrixBase<Derived>& row, const std::string& what) {
  using Scalar = typename Derived::Scalar;
  if (!row.allFinite() || (row.array() < Scalar(0)).any()) {
    throw CmdpError(what + ": negative or non-finite probability");
  }
  const Scalar total = row.sum();
  if (std::abs(static_cast<double>(total) - 1.0) > kProbabilityTolerance) {
    throw CmdpError(what + ": probabilities sum to " + std::to_string(static_cast<double>(total)) +
                    ", expected 1");
  }
}

template <class Scalar>
void check_unit_interval(const StepTables<Scalar>& tables, int steps, int S, int A,
                         const std::string& name) {
  if (static_cast<int>(tables.size()) != steps) {
    throw CmdpError(name + ": expected " + std::to_string(steps) + " step tables, got " +
                    std::to_string(tables.size()));
  }
  for (int h = 0; h < steps; ++h) {
    const auto& t = tables[static_cast<std::size_t>(h)];
    if (t.rows() != S || t.cols() != A) {
      throw CmdpError(name + "[" + std::to_string(h) + "]: expected " + std::to_string(S) + "x" +
                      std::to_string(A) + " table");
    }
    if (!t.allFinite() || (t.array() < Scalar(0)).any() || (t.array() > Scalar(1)).any()) {
      throw CmdpError(name + "[" + std::to_string(h) + "]: entries must lie in [0,1]");
    }
  }
}

}  // namespace detail

/// Full tabular model (S, A, H, P, r, g, rho, mu0). Validated on construction
/// and immutable afterwards; invalid input is rejected, never normalized.
template <class Scalar>
class BasicCmdp {
 public:
  BasicCmdp(int num_states, int num_actions, int horizon, std::vector<Kernel<Scalar>> transitions,
            StepTables<Scalar> rewards, StepTables<Scalar> utilities, Scalar rho,
            Vector<Scalar> initial_dist)
      : S_(num_states),
        A_(num_actions),
        H_(horizon),
        transitions_(std::move(transitions)),
        rewards_(std::move(rewards)),
        utilities_(std::move(utilities)),
        rho_(rho),
        initial_(std::move(initial_dist)) {
    if (S_ < 1 || A_ < 1 || H_ < 1) {
      throw CmdpError("shape: S, A and H must be positive");
    }
    if (static_cast<int>(transitions_.size()) != H_) {
      throw CmdpError("transitions: expected " + std::to_string(H_) + " step kernels, got " +
                      std::to_string(transitions_.size()));
    }
    for (int h = 0; h < H_; ++h) {
      const auto& P = transitions_[static_cast<std::size_t>(h)];
      const std::string name = "transitions[" + std::to_string(h) + "]";
      if (P.rows() != S_ * A_ || P.cols() != S_) {
        throw CmdpError(name + ": expected " + std::to_string(S_ * A_) + "x" + std::to_string(S_) +
                        " kernel");
      }
      for (Eigen::Index row = 0; row < P.rows(); ++row) {
        detail::check_distribution(P.row(row), name + " row " + std::to_string(row));
      }
    }
    detail::check_unit_interval(rewards_, H_, S_, A_, "rewards");
    detail::check_unit_interval(utilities_, H_, S_, A_, "utilities");
    if (initial_.size() != S_) {
      throw CmdpError("initial_dist: expected " + std::to_string(S_) + " entries");
    }
    detail::check_distribution(initial_, "initial_dist");
    if (!(rho_ >= Scalar(0) && rho_ <= Scalar(H_))) {
      throw CmdpError("rho: threshold must lie in [0, H]");
    }
  }

  int num_states() const { return S_; }
  int num_actions() const { return A_; }
  int horizon() const { return H_; }
  Scalar rho() const { return rho_; }

  const Kernel<Scalar>& transition(int h) const { return transitions_[static_cast<std::size_t>(h)]; }
  const std::vector<Kernel<Scalar>>& transitions() const { return transitions_; }
  const Matrix<Scalar>& rewards(int h) const { return rewards_[static_cast<std::size_t>(h)]; }
  const Matrix<Scalar>& utilities(int h) const { return utilities_[static_cast<std::size_t>(h)]; }
  const StepTables<Scalar>& rewards() const { return rewards_; }
  const StepTables<Scalar>& utilities() const { return utilities_; }
  const Vector<Scalar>& initial_dist() const { return initial_; }

  /// P_h(x' | x, a).
  Scalar prob(int h, int x, int a, int next) const { return transition(h)(x * A_ + a, next); }

  /// Copy with a different threshold (validated).
  BasicCmdp with_rho(Scalar rho) const {
    return BasicCmdp(S_, A_, H_, transitions_, rewards_, utilities_, rho, initial_);
  }

 private:
  int S_;
  int A_;
  int H_;
  std::vector<Kernel<Scalar>> transitions_;
  StepTables<Scalar> rewards_;
  StepTables<Scalar> utilities_;
  Scalar rho_;
  Vector<Scalar> initial_;
};

enum class PolicyKind { deterministic, stochastic };

/// Per-step Markov policy, either a deterministic action table (H x S) or a
/// table of action distributions (one S x A matrix per step).
template <class Scalar>
class BasicPolicy {
 public:
  static BasicPolicy deterministic(int num_actions, Eigen::MatrixXi actions) {
    if ((actions.array() < 0).any() || (actions.array() >= num_actions).any()) {
      throw CmdpError("policy: deterministic entries must be valid action indices");
    }
    BasicPolicy p;
    p.kind_ = PolicyKind::deterministic;
    p.A_ = num_actions;
    p.actions_ = std::move(actions);
    return p;
  }

  static BasicPolicy stochastic(StepTables<Scalar> probs) {
    if (probs.empty()) throw CmdpError("policy: no step tables");
    const auto rows = probs.front().rows();
    const auto cols = probs.front().cols();
    for (std::size_t h = 0; h < probs.size(); ++h) {
      if (probs[h].rows() != rows || probs[h].cols() != cols) {
        throw CmdpError("policy[" + std::to_string(h) + "]: inconsistent table shape");
      }
      for (Eigen::Index x = 0; x < rows; ++x) {
        detail::check_distribution(probs[h].row(x), "policy[" + std::to_string(h) + "] state " +
                                                        std::to_string(x));
      }
    }
    BasicPolicy p;
    p.kind_ = PolicyKind::stochastic;
    p.A_ = static_cast<int>(cols);
    p.probs_ = std::move(probs);
    return p;
  }

  PolicyKind kind() const { return kind_; }
  int num_actions() const { return A_; }
  int horizon() const {
    return kind_ == PolicyKind::deterministic ? static_cast<int>(actions_.rows())
                                              : static_cast<int>(probs_.size());
  }
  int num_states() const {
    return kind_ == PolicyKind::deterministic ? static_cast<int>(actions_.cols())
                                              : static_cast<int>(probs_.front().rows());
  }

  /// pi_h(a | x).
  Scalar prob(int h, int x, int a) const {
    if (kind_ == PolicyKind::deterministic) return actions_(h, x) == a ? Scalar(1) : Scalar(0);
    return probs_[static_cast<std::size_t>(h)](x, a);
  }

  /// Action of a deterministic policy.
  int action(int h, int x) const { return actions_(h, x); }
  const Eigen::MatrixXi& actions() const { return actions_; }
  const StepTables<Scalar>& probabilities() const { return probs_; }

  friend bool operator==(const BasicPolicy& l, const BasicPolicy& r) {
    if (l.kind_ != r.kind_ || l.A_ != r.A_) return false;
    if (l.kind_ == PolicyKind::deterministic) {
      return l.actions_.rows() == r.actions_.rows() && l.actions_.cols() == r.actions_.cols() &&
             l.actions_ == r.actions_;
    }
    return l.probs_ == r.probs_;
  }

 private:
  BasicPolicy() = default;
  PolicyKind kind_ = PolicyKind::deterministic;
  int A_ = 0;
  Eigen::MatrixXi actions_;
  StepTables<Scalar> probs_;
};

/// V, W have H+1 rows (row H is zero); Q, C have one S x A table per step.
template <class Scalar>
struct BasicValueTables {
  Matrix<Scalar> v;
  Matrix<Scalar> w;
  StepTables<Scalar> q;
  StepTables<Scalar> c;
};

/// Exact backward recursion:
///   Q_h(x,a) = r_h(x,a) + sum_x' P_h(x'|x,a) V_{h+1}(x'),  V_h(x) = sum_a pi_h(a|x) Q_h(x,a)
/// and the same for (C, W) with utilities.
template <class Scalar>
BasicValueTables<Scalar> policy_eval(const BasicCmdp<Scalar>& spec, const BasicPolicy<Scalar>& policy) {
  const int S = spec.num_states();
  const int A = spec.num_actions();
  const int H = spec.horizon();
  if (policy.horizon() != H || policy.num_states() != S || policy.num_actions() != A) {
    throw CmdpError("policy: shape (H=" + std::to_string(policy.horizon()) + ", S=" +
                    std::to_string(policy.num_states()) + ", A=" + std::to_string(policy.num_actions()) +
                    ") does not match spec (H=" + std::to_string(H) + ", S=" + std::to_string(S) +
                    ", A=" + std::to_string(A) + ")");
  }

  BasicValueTables<Scalar> out;
  out.v = Matrix<Scalar>::Zero(H + 1, S);
  out.w = Matrix<Scalar>::Zero(H + 1, S);
  out.q.resize(static_cast<std::size_t>(H));
  out.c.resize(static_cast<std::size_t>(H));

  for (int h = H - 1; h >= 0; --h) {
    const auto& P = spec.transition(h);
    const Vector<Scalar> pv = P * out.v.row(h + 1).transpose();
    const Vector<Scalar> pw = P * out.w.row(h + 1).transpose();
    auto& q = out.q[static_cast<std::size_t>(h)];
    auto& c = out.c[static_cast<std::size_t>(h)];
    q = spec.rewards(h) + Eigen::Map<const RowMatrix<Scalar>>(pv.data(), S, A);
    c = spec.utilities(h) + Eigen::Map<const RowMatrix<Scalar>>(pw.data(), S, A);

    for (int x = 0; x < S; ++x) {
      if (policy.kind() == PolicyKind::deterministic) {
        const int a = policy.action(h, x);
        out.v(h, x) = q(x, a);
        out.w(h, x) = c(x, a);
      } else {
        const auto& pi = policy.probabilities()[static_cast<std::size_t>(h)];
        out.v(h, x) = pi.row(x).dot(q.row(x));
        out.w(h, x) = pi.row(x).dot(c.row(x));
      }
    }
  }
  return out;
}

/// (sum_x mu0(x) V_1(x), sum_x mu0(x) W_1(x)).
template <class Scalar>
std::pair<Scalar, Scalar> expected_initial_value(const BasicCmdp<Scalar>& spec,
                                                 const BasicValueTables<Scalar>& values) {
  const auto& mu = spec.initial_dist();
  return {values.v.row(0).dot(mu.transpose()), values.w.row(0).dot(mu.transpose())};
}

/// Rewrites a cost constraint E[sum cost] <= budget as a utility constraint:
/// utilities become 1 - cost and the threshold becomes H - budget. The input's
/// utility tables are read as costs; its rho is ignored.
template <class Scalar>
BasicCmdp<Scalar> cost_to_utility(const BasicCmdp<Scalar>& with_costs, Scalar budget) {
  const int H = with_costs.horizon();
  if (!(budget >= Scalar(0) && budget <= Scalar(H))) {
    throw CmdpError("budget: must lie in [0, H]");
  }
  StepTables<Scalar> utilities;
  utilities.reserve(static_cast<std::size_t>(H));
  for (const auto& cost : with_costs.utilities()) {
    utilities.push_back((Scalar(1) - cost.array()).matrix());
  }
  return BasicCmdp<Scalar>(with_costs.num_states(), with_costs.num_actions(), H,
                           with_costs.transitions(), with_costs.rewards(), std::move(utilities),
                           Scalar(H) - budget, with_costs.initial_dist());
}

using Cmdp = BasicCmdp<double>;
using Policy = BasicPolicy<double>;
using ValueTables = BasicValueTables<double>;

}  // namespace tripleq
