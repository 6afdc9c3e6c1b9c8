#pragma once

#include "tripleq/cmdp.hpp"
#include "tripleq/rng.hpp"

#include <vector>

namespace tripleq {

struct EpisodeSample {
  std::vector<int> states;   // x_1..x_H
  std::vector<int> actions;  // a_1..a_H
  double reward = 0.0;       // sum of r_h(x_h, a_h)
  double utility = 0.0;      // sum of g_h(x_h, a_h)
};

inline int sample_initial_state(const Cmdp& spec, Rng& rng) {
  return rng.categorical(spec.initial_dist());
}

inline int sample_next_state(const Cmdp& spec, int h, int x, int a, Rng& rng) {
  return rng.categorical(spec.transition(h).row(x * spec.num_actions() + a));
}

/// Simulates one episode under `policy`. Draw order per episode: initial
/// state, then for each step the action (stochastic policies only) followed
/// by the next state.
EpisodeSample sample_episode(const Cmdp& spec, const Policy& policy, Rng& rng);

}  // namespace tripleq
