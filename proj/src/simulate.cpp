#include "tripleq/simulate.hpp"

namespace tripleq {

EpisodeSample sample_episode(const Cmdp& spec, const Policy& policy, Rng& rng) {
  const int H = spec.horizon();
  EpisodeSample ep;
  ep.states.reserve(static_cast<std::size_t>(H));
  ep.actions.reserve(static_cast<std::size_t>(H));
  int x = sample_initial_state(spec, rng);
  for (int h = 0; h < H; ++h) {
    const int a = policy.kind() == PolicyKind::deterministic
                      ? policy.action(h, x)
                      : rng.categorical(policy.probabilities()[static_cast<std::size_t>(h)].row(x));
    ep.states.push_back(x);
    ep.actions.push_back(a);
    ep.reward += spec.rewards(h)(x, a);
    ep.utility += spec.utilities(h)(x, a);
    x = sample_next_state(spec, h, x, a, rng);
  }
  return ep;
}

}  // namespace tripleq
