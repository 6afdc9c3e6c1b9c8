#include "tripleq/harness.hpp"

#include "tripleq/lp.hpp"
#include "tripleq/rng.hpp"
#include "tripleq/simulate.hpp"

#include <cmath>

namespace tripleq {

namespace {

long floor_sqrt(long K) {
  auto r = static_cast<long>(std::sqrt(static_cast<double>(K)));
  while (r > 0 && r * r > K) --r;
  while ((r + 1) * (r + 1) <= K) ++r;
  return std::max(1L, r);
}

struct Evaluation {
  double v = 0.0;
  double w = 0.0;
};

Evaluation evaluate(const Cmdp& spec, const Policy& policy) {
  const auto [v, w] = expected_initial_value(spec, policy_eval(spec, policy));
  return {v, w};
}

// One episode, either learning (tables updated) or frozen. Returns C_1(x_1, a_1)
// as read at the first step.
double play_episode(const Cmdp& spec, LearnerState& learner, bool learn, Rng& rng, EpisodeTrace& trace,
                    MetricsRow& row) {
  const int H = spec.horizon();
  trace.states.clear();
  trace.actions.clear();
  int x = sample_initial_state(spec, rng);
  int prev_x = 0;
  int prev_a = 0;
  double prev_r = 0.0;
  double prev_g = 0.0;
  double c1 = 0.0;
  for (int h = 0; h < H; ++h) {
    const int a = learner.select_action(h, x);
    if (h == 0) c1 = learner.c(0, x, a);
    if (learn && h > 0) {
      learner.update_step(h - 1, prev_x, prev_a, prev_r, prev_g, learner.q(h, x, a), learner.c(h, x, a));
    }
    const double r = spec.rewards(h)(x, a);
    const double g = spec.utilities(h)(x, a);
    row.reward_realized += r;
    row.utility_realized += g;
    trace.states.push_back(x);
    trace.actions.push_back(a);
    const int next = sample_next_state(spec, h, x, a, rng);
    prev_x = x;
    prev_a = a;
    prev_r = r;
    prev_g = g;
    x = next;
  }
  if (learn) learner.update_step(H - 1, prev_x, prev_a, prev_r, prev_g, 0.0, 0.0);
  return c1;
}

}  // namespace

Policy snapshot_policy(const LearnerState& state) {
  Eigen::MatrixXi actions(state.horizon(), state.num_states());
  for (int h = 0; h < state.horizon(); ++h) {
    for (int x = 0; x < state.num_states(); ++x) actions(h, x) = state.select_action(h, x);
  }
  return Policy::deterministic(state.num_actions(), std::move(actions));
}

double baseline_value(const Cmdp& spec) {
  const auto sol = solve_cmdp_lp(spec, 0.0);
  if (sol.status != LpStatus::optimal) throw InfeasibleError("no policy satisfies the utility constraint");
  return sol.objective;
}

namespace {

// Shared loop of run_experiment and run_stop_mode.
RunResult run_loop(const Cmdp& spec, LearnerState learner, long episodes, bool learn, long stop_frame,
                   std::uint64_t seed, const RunOptions& opts) {
  if (opts.eval_every < 1) throw std::invalid_argument("eval_every: must be >= 1");
  const double baseline = opts.baseline ? *opts.baseline : baseline_value(spec);

  RunResult out{RunMetrics{}, learner, {}, {}, 0};
  out.metrics.seed = seed;
  out.metrics.hp = learner.hp();
  out.metrics.baseline = baseline;
  out.metrics.rho = spec.rho();
  out.metrics.eval_every = opts.eval_every;
  out.metrics.rows.reserve(static_cast<std::size_t>(episodes));

  Rng rng(seed);
  Evaluation last;
  double regret = 0.0;
  double violation = 0.0;
  double stop_cbar = 0.0;
  long stop_count = 0;
  EpisodeTrace trace;

  for (long k = 1; k <= episodes; ++k) {
    MetricsRow row;
    row.k = k;
    row.z = learner.z();
    if (opts.hooks.on_episode_start) opts.hooks.on_episode_start(k, learner);

    if ((k - 1) % opts.eval_every == 0) {
      const Policy pi = snapshot_policy(learner);
      last = evaluate(spec, pi);
      row.evaluated = true;
      if (opts.snapshot_every > 0 && (k - 1) % opts.snapshot_every == 0) out.snapshots.push_back(pi);
    }
    if (opts.audit_every > 0 && (k - 1) % opts.audit_every == 0) {
      out.audit_history.push_back({k, learner.q_table(), learner.c_table(), learner.z()});
    }
    row.v_pik = last.v;
    row.w_pik = last.w;

    trace.k = k;
    const double c1 = play_episode(spec, learner, learn, rng, trace, row);
    if (opts.hooks.on_updates_done) opts.hooks.on_updates_done(k, learner);

    const double z_before = learner.z();
    bool boundary = false;
    if (learn) {
      boundary = learner.end_episode(c1);
    } else {
      stop_cbar += c1;
      if (++stop_count == stop_frame) {
        learner.update_virtual_queue(stop_cbar / static_cast<double>(stop_frame));
        stop_cbar = 0.0;
        stop_count = 0;
        boundary = true;
      }
    }
    if (boundary) ++out.frame_boundaries;
    if (opts.hooks.on_episode_end) opts.hooks.on_episode_end(trace, learner, boundary, z_before);

    regret += baseline - row.v_pik;
    violation += spec.rho() - row.w_pik;
    row.regret_cum = regret;
    row.violation_cum = violation;
    out.metrics.rows.push_back(row);
  }
  out.final_state = std::move(learner);
  return out;
}

}  // namespace

RunResult run_experiment(const Cmdp& spec, const HyperParams& hp, std::uint64_t seed, const RunOptions& opts) {
  return run_loop(spec, LearnerState(spec, hp), hp.K, /*learn=*/true, 0, seed, opts);
}

RunResult run_stop_mode(const LearnerState& state, const Cmdp& spec, long extra_episodes, std::uint64_t seed,
                        const RunOptions& opts) {
  if (state.num_states() != spec.num_states() || state.num_actions() != spec.num_actions() ||
      state.horizon() != spec.horizon()) {
    throw CmdpError("stop mode: learner tables do not match the spec");
  }
  return run_loop(spec, state, extra_episodes, /*learn=*/false, floor_sqrt(state.hp().K), seed, opts);
}

std::pair<double, double> mixture_policy_value(std::span<const Policy> snapshots, const Cmdp& spec) {
  if (snapshots.empty()) throw std::invalid_argument("mixture_policy_value: no policies");
  double v = 0.0;
  double w = 0.0;
  for (const auto& pi : snapshots) {
    const auto e = evaluate(spec, pi);
    v += e.v;
    w += e.w;
  }
  const double n = static_cast<double>(snapshots.size());
  return {v / n, w / n};
}

double overestimation_audit(std::span<const LearnerSnapshot> history, const Cmdp& spec, double epsilon,
                            double eta) {
  const auto sol = solve_cmdp_lp(spec, epsilon);
  if (sol.status != LpStatus::optimal) throw InfeasibleError("overestimation audit: tightened LP infeasible");
  const auto star = policy_eval(spec, occupancy_to_policy(sol.occupancy));

  long total = 0;
  long below = 0;
  for (const auto& snap : history) {
    const double weight = snap.z / eta;
    for (int h = 0; h < spec.horizon(); ++h) {
      const auto i = static_cast<std::size_t>(h);
      const auto learned = (snap.q[i] + weight * snap.c[i]).eval();
      const auto target = (star.q[i] + weight * star.c[i]).eval();
      below += ((learned.array() < target.array() - 1e-9).count());
      total += learned.size();
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(below) / static_cast<double>(total);
}

}  // namespace tripleq
