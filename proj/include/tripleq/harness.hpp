#pragma once

// Online experiment loop around LearnerState with exact per-episode
// evaluation of the executed policy.
//
// The policy of episode k is the greedy pseudo-Q snapshot taken at the start
// of the episode. In-episode updates only touch the step that was just left,
// so the snapshot reproduces every action the learner takes in that episode.
//
// RNG draw order per episode: initial state, then one next-state draw per step.

#include "tripleq/cmdp.hpp"
#include "tripleq/triple_q.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace tripleq {

struct MetricsRow {
  long k = 0;
  double reward_realized = 0.0;
  double utility_realized = 0.0;
  double v_pik = 0.0;  // exact V_1 of the episode policy (held between evaluations)
  double w_pik = 0.0;  // exact W_1 of the episode policy (held between evaluations)
  double z = 0.0;      // virtual queue at episode start
  double regret_cum = 0.0;
  double violation_cum = 0.0;
  bool evaluated = false;  // v_pik / w_pik computed at this episode
};

struct RunMetrics {
  std::uint64_t seed = 0;
  HyperParams hp;
  double baseline = 0.0;  // V_1^* from the untightened LP
  double rho = 0.0;
  long eval_every = 1;
  std::vector<MetricsRow> rows;
};

/// Learner tables and queue at the start of episode k.
struct LearnerSnapshot {
  long k = 0;
  StepTables<double> q;
  StepTables<double> c;
  double z = 0.0;
};

struct EpisodeTrace {
  long k = 0;
  std::vector<int> states;
  std::vector<int> actions;
};

struct RunHooks {
  /// Before any action of episode k.
  std::function<void(long k, const LearnerState&)> on_episode_start;
  /// After the last step update of episode k, before the frame bookkeeping.
  std::function<void(long k, const LearnerState&)> on_updates_done;
  /// After end_episode; `boundary` tells whether a frame boundary fired.
  std::function<void(const EpisodeTrace&, const LearnerState&, bool boundary, double z_before)> on_episode_end;
};

struct RunOptions {
  long eval_every = 1;
  std::optional<double> baseline;  // solved from the LP when absent
  long audit_every = 0;            // record LearnerSnapshot every n episodes (0: never)
  long snapshot_every = 0;         // keep the evaluated policy every n episodes (0: never)
  RunHooks hooks;
};

struct RunResult {
  RunMetrics metrics;
  LearnerState final_state;
  std::vector<LearnerSnapshot> audit_history;
  std::vector<Policy> snapshots;
  long frame_boundaries = 0;
};

/// The untightened LP has no feasible occupancy measure.
class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Deterministic greedy pseudo-Q policy of the current tables.
Policy snapshot_policy(const LearnerState& state);

/// Optimal value of the plain CMDP LP; throws InfeasibleError.
double baseline_value(const Cmdp& spec);

RunResult run_experiment(const Cmdp& spec, const HyperParams& hp, std::uint64_t seed,
                         const RunOptions& opts = {});

/// Mean (V_1, W_1) over the policies, which equals the value of the uniform
/// mixture over them.
std::pair<double, double> mixture_policy_value(std::span<const Policy> snapshots, const Cmdp& spec);

/// Continues from a finished run with frozen Q and C tables. Only the virtual
/// queue adapts, on frames of floor(sqrt(K)) episodes.
RunResult run_stop_mode(const LearnerState& state, const Cmdp& spec, long extra_episodes,
                        std::uint64_t seed, const RunOptions& opts = {});

/// Fraction of audited (k, h, x, a) where the learner's pseudo-Q value falls
/// below the pseudo-Q value of the epsilon-tightened optimal policy by more
/// than 1e-9. Throws InfeasibleError if the tightened LP is infeasible.
double overestimation_audit(std::span<const LearnerSnapshot> history, const Cmdp& spec, double epsilon,
                            double eta);

}  // namespace tripleq
