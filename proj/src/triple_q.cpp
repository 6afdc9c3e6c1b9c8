#include "tripleq/triple_q.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace tripleq {

namespace {

// floor(K^0.6) = largest f with f^5 <= K^3, computed exactly.
long floor_k_pow_0_6(long K) {
  const auto k3 = static_cast<__int128>(K) * K * K;
  auto f = static_cast<long>(std::floor(std::pow(static_cast<double>(K), 0.6)));
  auto pow5 = [](long v) {
    const auto w = static_cast<__int128>(v);
    return w * w * w * w * w;
  };
  while (f > 0 && pow5(f) > k3) --f;
  while (pow5(f + 1) <= k3) ++f;
  return std::max(1L, f);
}

}  // namespace

HyperParams HyperParams::theory(int S, int A, int H, long K) {
  if (K < 1) throw std::invalid_argument("K: must be >= 1");
  HyperParams hp;
  hp.K = K;
  hp.mode = Mode::theory;
  const double k = static_cast<double>(K);
  hp.chi = std::pow(k, 0.2);
  hp.eta = std::pow(k, 0.2);
  hp.iota = 128.0 * std::log(std::sqrt(2.0 * S * A * H) * k);
  hp.alpha_exp = 0.6;
  hp.frame_len = floor_k_pow_0_6(K);
  const double h6 = std::pow(static_cast<double>(H), 6);
  hp.epsilon = 8.0 * std::sqrt(static_cast<double>(S) * A * h6 * std::pow(hp.iota, 3)) / std::pow(k, 0.2);
  hp.validate();
  return hp;
}

HyperParams HyperParams::practical(int S, int A, int H, long K, const PracticalOverrides& o) {
  if (K < 1) throw std::invalid_argument("K: must be >= 1");
  (void)S;
  (void)A;
  (void)H;
  HyperParams hp;
  hp.K = K;
  hp.mode = Mode::practical;
  const double k = static_cast<double>(K);
  hp.chi = o.chi.value_or(std::pow(k, 0.2));
  hp.eta = o.eta.value_or(std::pow(k, 0.2));
  hp.iota = o.iota.value_or(1.0);
  hp.alpha_exp = 0.6;
  hp.frame_len = o.frame_len.value_or(floor_k_pow_0_6(K));
  hp.epsilon = o.epsilon.value_or(0.0);
  hp.validate();
  return hp;
}

void HyperParams::validate() const {
  if (K < 1) throw std::invalid_argument("K: must be >= 1");
  if (!(chi > 0.0) || !std::isfinite(chi)) throw std::invalid_argument("chi: must be > 0");
  if (!(eta > 0.0) || !std::isfinite(eta)) throw std::invalid_argument("eta: must be > 0");
  if (!(iota > 0.0) || !std::isfinite(iota)) throw std::invalid_argument("iota: must be > 0");
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) throw std::invalid_argument("epsilon: must be >= 0");
  if (frame_len < 1 || frame_len > K) throw std::invalid_argument("frame_len: must lie in [1, K]");
}

double learning_rate(long t, double chi) {
  if (t < 1) throw std::invalid_argument("learning_rate: t must be >= 1");
  return (chi + 1.0) / (chi + static_cast<double>(t));
}

double bonus(long t, double chi, double iota, int H) {
  if (t < 1) throw std::invalid_argument("bonus: t must be >= 1");
  const double h = static_cast<double>(H);
  return 0.25 * std::sqrt(h * h * iota * (chi + 1.0) / (chi + static_cast<double>(t)));
}

std::pair<double, std::vector<double>> weight_sequence(long t, double chi) {
  if (t < 0) throw std::invalid_argument("weight_sequence: t must be >= 0");
  std::vector<double> weights(static_cast<std::size_t>(t));
  // Backward accumulation of prod_{j>i} (1 - alpha_j).
  double tail = 1.0;
  for (long i = t; i >= 1; --i) {
    const double a = learning_rate(i, chi);
    weights[static_cast<std::size_t>(i - 1)] = a * tail;
    tail *= 1.0 - a;
  }
  return {tail, std::move(weights)};
}

LearnerState::LearnerState(const Cmdp& spec, const HyperParams& hp)
    : S_(spec.num_states()), A_(spec.num_actions()), H_(spec.horizon()), rho_(spec.rho()), hp_(hp) {
  hp_.validate();
  const double H = static_cast<double>(H_);
  q_.assign(static_cast<std::size_t>(H_), Matrix<double>::Constant(S_, A_, H));
  c_.assign(static_cast<std::size_t>(H_), Matrix<double>::Constant(S_, A_, H));
  n_.assign(static_cast<std::size_t>(H_), Eigen::Matrix<long, Eigen::Dynamic, Eigen::Dynamic>::Zero(S_, A_));
}

LearnerState::LearnerState(Fields f)
    : S_(f.q.empty() ? 0 : static_cast<int>(f.q.front().rows())),
      A_(f.q.empty() ? 0 : static_cast<int>(f.q.front().cols())),
      H_(static_cast<int>(f.q.size())),
      rho_(f.rho),
      hp_(f.hp),
      q_(std::move(f.q)),
      c_(std::move(f.c)),
      n_(std::move(f.n)),
      z_(f.z),
      cbar_(f.cbar),
      episode_in_frame_(f.episode_in_frame),
      episodes_done_(f.episodes_done),
      frames_done_(f.frames_done) {
  hp_.validate();
  if (H_ < 1 || c_.size() != q_.size() || n_.size() != q_.size()) {
    throw CmdpError("learner snapshot: tables must have H >= 1 matching steps");
  }
  for (int h = 0; h < H_; ++h) {
    const auto i = static_cast<std::size_t>(h);
    if (q_[i].rows() != S_ || q_[i].cols() != A_ || c_[i].rows() != S_ || c_[i].cols() != A_ ||
        n_[i].rows() != S_ || n_[i].cols() != A_) {
      throw CmdpError("learner snapshot: table shape mismatch at step " + std::to_string(h));
    }
  }
  if (z_ < 0.0 || cbar_ < 0.0) throw CmdpError("learner snapshot: z and cbar must be >= 0");
}

double LearnerState::pseudo_q(int h, int x, int a) const {
  return q(h, x, a) + (z_ / hp_.eta) * c(h, x, a);
}

int LearnerState::select_action(int h, int x) const {
  const double weight = z_ / hp_.eta;
  const auto& qh = q_[static_cast<std::size_t>(h)];
  const auto& ch = c_[static_cast<std::size_t>(h)];
  int best = 0;
  double best_value = qh(x, 0) + weight * ch(x, 0);
  for (int a = 1; a < A_; ++a) {
    const double value = qh(x, a) + weight * ch(x, a);
    if (value > best_value) {
      best_value = value;
      best = a;
    }
  }
  return best;
}

void LearnerState::update_step(int h, int x, int a, double r, double g, double v_next, double w_next) {
  if (h < 0 || h >= H_) throw std::out_of_range("update_step: step " + std::to_string(h) + " outside [0, H)");
  const auto i = static_cast<std::size_t>(h);
  const long t = ++n_[i](x, a);
  const double alpha = learning_rate(t, hp_.chi);
  const double b = bonus(t, hp_.chi, hp_.iota, H_);
  q_[i](x, a) = (1.0 - alpha) * q_[i](x, a) + alpha * (r + v_next + b);
  c_[i](x, a) = (1.0 - alpha) * c_[i](x, a) + alpha * (g + w_next + b);
}

bool LearnerState::end_episode(double c1_first) {
  cbar_ += c1_first;
  ++episode_in_frame_;
  ++episodes_done_;
  if (episode_in_frame_ == hp_.frame_len || episodes_done_ == hp_.K) {
    frame_boundary();
    return true;
  }
  return false;
}

void LearnerState::frame_boundary() {
  const double H = static_cast<double>(H_);
  const double extra = 2.0 * H * H * H * std::sqrt(hp_.iota) / hp_.eta;
  for (int h = 0; h < H_; ++h) {
    const auto i = static_cast<std::size_t>(h);
    n_[i].setZero();
    q_[i].array() += extra;
    for (int x = 0; x < S_; ++x) {
      for (int a = 0; a < A_; ++a) {
        if (q_[i](x, a) >= H || c_[i](x, a) >= H) {
          q_[i](x, a) = H;
          c_[i](x, a) = H;
        }
      }
    }
  }
  const long episodes = episode_in_frame_ > 0 ? episode_in_frame_ : hp_.frame_len;
  update_virtual_queue(cbar_ / static_cast<double>(episodes));
  cbar_ = 0.0;
  episode_in_frame_ = 0;
  ++frames_done_;
}

void LearnerState::update_virtual_queue(double frame_mean) {
  z_ = std::max(z_ + rho_ + hp_.epsilon - frame_mean, 0.0);
}

double LearnerState::table_bound() const {
  const double H = static_cast<double>(H_);
  return H * H * std::sqrt(hp_.iota);
}

}  // namespace tripleq
