#pragma once

// Triple-Q: a reward Q-table, a utility Q-table and a virtual queue.
//
// Actions are greedy in the pseudo-Q value Q_h(x,a) + (Z/eta) C_h(x,a). Both
// tables take SARSA-style updates with learning rate (chi+1)/(chi+t) and a UCB
// bonus, where t counts visits within the current frame. Every frame_len
// episodes the counts reset, Q gets an extra optimism bonus, entries at or
// above H are clamped back to H, and Z moves by rho + epsilon minus the
// frame average of C_1(x_1, a_1).

#include "tripleq/cmdp.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

namespace tripleq {

enum class Mode { theory, practical };

struct PracticalOverrides {
  std::optional<double> iota;
  std::optional<double> epsilon;
  std::optional<double> chi;
  std::optional<double> eta;
  std::optional<long> frame_len;

  bool empty() const { return !iota && !epsilon && !chi && !eta && !frame_len; }
};

struct HyperParams {
  long K = 1;
  double chi = 1.0;
  double eta = 1.0;
  double iota = 1.0;
  double alpha_exp = 0.6;
  long frame_len = 1;
  double epsilon = 0.0;
  Mode mode = Mode::theory;

  /// Every field from the formulas chi = eta = K^0.2,
  /// iota = 128 ln(sqrt(2SAH) K), frame_len = floor(K^0.6),
  /// epsilon = 8 sqrt(S A H^6 iota^3) / K^0.2.
  static HyperParams theory(int S, int A, int H, long K);

  /// Desk-scale defaults (epsilon = 0, iota = 1, chi = eta = K^0.2,
  /// frame_len = floor(K^0.6)) with optional overrides.
  static HyperParams practical(int S, int A, int H, long K, const PracticalOverrides& overrides = {});

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;

  friend bool operator==(const HyperParams&, const HyperParams&) = default;
};

double learning_rate(long t, double chi);

/// (1/4) sqrt(H^2 iota (chi+1)/(chi+t)).
double bonus(long t, double chi, double iota, int H);

/// Weights of the learning-rate recursion:
///   alpha_t^0 = prod_{j<=t} (1 - alpha_j),  alpha_t^i = alpha_i prod_{i<j<=t} (1 - alpha_j).
/// Returns (alpha_t^0, [alpha_t^1 .. alpha_t^t]).
std::pair<double, std::vector<double>> weight_sequence(long t, double chi);

class LearnerState {
 public:
  LearnerState(const Cmdp& spec, const HyperParams& hp);

  /// Lowest-index argmax of the pseudo-Q value at (h, x).
  int select_action(int h, int x) const;

  /// Pseudo-Q value Q_h(x,a) + (Z/eta) C_h(x,a).
  double pseudo_q(int h, int x, int a) const;

  /// SARSA update of (h, x, a). v_next / w_next are Q_{h+1}, C_{h+1} at the
  /// next step's state and chosen action (0 after the last step).
  void update_step(int h, int x, int a, double r, double g, double v_next, double w_next);

  /// Closes an episode. `c1_first` is C_1(x_1, a_1) as read at step 1.
  /// Fires frame_boundary when the frame is full, or when the K-th episode
  /// completes a partial frame. Returns true if a boundary fired.
  bool end_episode(double c1_first);

  /// Count reset, extra bonus, clamping, then the virtual-queue update with
  /// the mean C_1 of the episodes accumulated in this frame.
  void frame_boundary();

  /// Z <- max(Z + rho + epsilon - frame_mean, 0).
  void update_virtual_queue(double frame_mean);

  double q(int h, int x, int a) const { return q_[static_cast<std::size_t>(h)](x, a); }
  double c(int h, int x, int a) const { return c_[static_cast<std::size_t>(h)](x, a); }
  long visits(int h, int x, int a) const { return n_[static_cast<std::size_t>(h)](x, a); }

  const StepTables<double>& q_table() const { return q_; }
  const StepTables<double>& c_table() const { return c_; }
  const std::vector<Eigen::Matrix<long, Eigen::Dynamic, Eigen::Dynamic>>& counts() const { return n_; }
  double z() const { return z_; }
  double cbar() const { return cbar_; }
  long episode_in_frame() const { return episode_in_frame_; }
  long episodes_done() const { return episodes_done_; }
  long frames_done() const { return frames_done_; }
  const HyperParams& hp() const { return hp_; }
  int num_states() const { return S_; }
  int num_actions() const { return A_; }
  int horizon() const { return H_; }
  double rho() const { return rho_; }

  /// H^2 sqrt(iota), the a-priori bound on every table entry.
  double table_bound() const;

  /// Rebuilds a state from serialized fields (snapshots).
  struct Fields {
    StepTables<double> q;
    StepTables<double> c;
    std::vector<Eigen::Matrix<long, Eigen::Dynamic, Eigen::Dynamic>> n;
    double z = 0.0;
    double cbar = 0.0;
    long episode_in_frame = 0;
    long episodes_done = 0;
    long frames_done = 0;
    double rho = 0.0;
    HyperParams hp;
  };
  explicit LearnerState(Fields fields);

  friend bool operator==(const LearnerState&, const LearnerState&) = default;

 private:
  int S_;
  int A_;
  int H_;
  double rho_;
  HyperParams hp_;
  StepTables<double> q_;
  StepTables<double> c_;
  std::vector<Eigen::Matrix<long, Eigen::Dynamic, Eigen::Dynamic>> n_;
  double z_ = 0.0;
  double cbar_ = 0.0;
  long episode_in_frame_ = 0;
  long episodes_done_ = 0;
  long frames_done_ = 0;
};

}  // namespace tripleq
