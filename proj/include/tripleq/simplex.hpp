#pragma once

// Dense two-phase tableau simplex for small LPs in standard form
//
//   maximize c^T x  subject to  A x = b,  x >= 0.
//
// Phase one minimizes the sum of implicit artificial variables (their columns
// are never stored, so an artificial that leaves the basis cannot re-enter).
// Pricing is Dantzig's rule, switching to Bland's rule after a streak of
// degenerate pivots and back once the objective moves again.

#include "tripleq/cmdp.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace tripleq {

enum class SimplexStatus { optimal, infeasible, unbounded };

struct SimplexOptions {
  double pivot_tolerance = 1e-10;
  double feasibility_tolerance = 1e-9;
  long max_iterations = 0;  // 0: 50 (m + n) + 1000
  int degenerate_streak = 50;
};

template <class Scalar>
struct SimplexResult {
  SimplexStatus status = SimplexStatus::infeasible;
  Vector<Scalar> x;
  Scalar objective = Scalar(0);
  long iterations = 0;
};

/// Raised when the pivot budget runs out. `best_bound` is the objective of the
/// last basic solution (NaN if phase one had not finished).
class SimplexIterationLimit : public std::runtime_error {
 public:
  SimplexIterationLimit(long iterations, double best_bound)
      : std::runtime_error("simplex: iteration cap of " + std::to_string(iterations) +
                           " exceeded (best bound " + std::to_string(best_bound) + ")"),
        best_bound(best_bound) {}
  double best_bound;
};

template <class Scalar>
class DenseSimplex {
 public:
  using Index = Eigen::Index;

  DenseSimplex(const Matrix<Scalar>& A, const Vector<Scalar>& b, const Vector<Scalar>& c,
               SimplexOptions opts = {})
      : m_(A.rows()), n_(A.cols()), opts_(opts), c_(c) {
    if (b.size() != m_ || c.size() != n_) {
      throw std::invalid_argument("simplex: inconsistent problem dimensions");
    }
    T_ = RowMatrix<Scalar>::Zero(m_ + 1, n_ + 1);
    T_.topLeftCorner(m_, n_) = A;
    T_.col(n_).head(m_) = b;
    for (Index i = 0; i < m_; ++i) {
      if (T_(i, n_) < Scalar(0)) T_.row(i).head(n_ + 1) *= Scalar(-1);
    }
    basis_.assign(static_cast<std::size_t>(m_), -1);
    limit_ = opts_.max_iterations > 0 ? opts_.max_iterations : 50 * static_cast<long>(m_ + n_) + 1000;
  }

  SimplexResult<Scalar> solve() {
    SimplexResult<Scalar> out;

    // Phase one: reduced costs of min sum(artificials).
    for (Index j = 0; j <= n_; ++j) T_(m_, j) = -T_.col(j).head(m_).sum();
    if (!run_phase(/*phase_one=*/true)) {
      out.status = SimplexStatus::unbounded;  // cannot happen in phase one
      return out;
    }
    const Scalar infeasibility = -T_(m_, n_);
    const Scalar scale = std::max<Scalar>(Scalar(1), T_.col(n_).head(m_).cwiseAbs().maxCoeff());
    if (infeasibility > Scalar(opts_.feasibility_tolerance) * scale) {
      out.status = SimplexStatus::infeasible;
      out.iterations = iterations_;
      return out;
    }
    drive_out_artificials();

    // Phase two: min -c^T x.
    for (Index j = 0; j <= n_; ++j) T_(m_, j) = (j < n_) ? -c_(j) : Scalar(0);
    for (Index i = 0; i < m_; ++i) {
      const Index k = basis_[static_cast<std::size_t>(i)];
      if (k >= 0 && c_(k) != Scalar(0)) T_.row(m_) += c_(k) * T_.row(i);
    }
    if (!run_phase(/*phase_one=*/false)) {
      out.status = SimplexStatus::unbounded;
      out.iterations = iterations_;
      return out;
    }

    out.status = SimplexStatus::optimal;
    out.x = Vector<Scalar>::Zero(n_);
    for (Index i = 0; i < m_; ++i) {
      const Index k = basis_[static_cast<std::size_t>(i)];
      if (k >= 0) out.x(k) = T_(i, n_);
    }
    out.objective = c_.dot(out.x);
    out.iterations = iterations_;
    return out;
  }

 private:
  // Returns false on an unbounded ray.
  bool run_phase(bool phase_one) {
    const Scalar tol = Scalar(opts_.pivot_tolerance);
    int streak = 0;
    while (true) {
      const bool bland = streak >= opts_.degenerate_streak;
      Index enter = -1;
      if (bland) {
        for (Index j = 0; j < n_; ++j) {
          if (T_(m_, j) < -tol) {
            enter = j;
            break;
          }
        }
      } else {
        Index j;
        const Scalar best = T_.row(m_).head(n_).minCoeff(&j);
        if (best < -tol) enter = j;
      }
      if (enter < 0) return true;

      Index leave = -1;
      Scalar best_ratio = std::numeric_limits<Scalar>::infinity();
      for (Index i = 0; i < m_; ++i) {
        const Scalar a = T_(i, enter);
        if (a <= tol) continue;
        const Scalar ratio = T_(i, n_) / a;
        if (leave < 0 || ratio < best_ratio - tol) {
          best_ratio = ratio;
          leave = i;
        } else if (ratio <= best_ratio + tol && prefer(i, leave)) {
          best_ratio = std::min(best_ratio, ratio);
          leave = i;
        }
      }
      if (leave < 0) return false;

      if (++iterations_ > limit_) {
        const double bound = phase_one ? std::numeric_limits<double>::quiet_NaN()
                                       : static_cast<double>(T_(m_, n_));
        throw SimplexIterationLimit(limit_, bound);
      }
      streak = (best_ratio <= tol) ? streak + 1 : 0;
      pivot(leave, enter);
    }
  }

  // Leaving-row tie-break: artificials first, then lowest variable index.
  bool prefer(Index candidate, Index incumbent) const {
    const Index a = basis_[static_cast<std::size_t>(candidate)];
    const Index b = basis_[static_cast<std::size_t>(incumbent)];
    if (a < 0 || b < 0) return a < 0 && b >= 0;
    return a < b;
  }

  void drive_out_artificials() {
    const Scalar tol = Scalar(opts_.pivot_tolerance);
    for (Index i = 0; i < m_; ++i) {
      if (basis_[static_cast<std::size_t>(i)] >= 0) continue;
      Index j;
      const Scalar magnitude = T_.row(i).head(n_).cwiseAbs().maxCoeff(&j);
      // A row with no usable entry is redundant; its artificial stays basic at zero.
      if (magnitude > tol) pivot(i, j);
    }
  }

  // Row-major tableau; only rows with a nonzero entry in the entering column
  // change, which keeps sparse problems cheap.
  void pivot(Index r, Index e) {
    T_.row(r) /= T_(r, e);
    const auto prow = T_.row(r);
    for (Index i = 0; i <= m_; ++i) {
      if (i == r) continue;
      const Scalar f = T_(i, e);
      if (f == Scalar(0)) continue;
      T_.row(i) -= f * prow;
      T_(i, e) = Scalar(0);
    }
    T_(r, e) = Scalar(1);
    basis_[static_cast<std::size_t>(r)] = e;
  }

  Index m_;
  Index n_;
  SimplexOptions opts_;
  Vector<Scalar> c_;
  RowMatrix<Scalar> T_;
  std::vector<Index> basis_;
  long iterations_ = 0;
  long limit_ = 0;
};

/// maximize c^T x s.t. A x = b, x >= 0.
template <class Scalar>
SimplexResult<Scalar> simplex_maximize(const Matrix<Scalar>& A, const Vector<Scalar>& b,
                                       const Vector<Scalar>& c, SimplexOptions opts = {}) {
  return DenseSimplex<Scalar>(A, b, c, opts).solve();
}

}  // namespace tripleq
