#pragma once

// Revised simplex for linear programs with general variable bounds.
// One engine instance holds a canonicalized problem (min sense, one slack per
// row), a dense basis inverse maintained by pivot updates with periodic
// refactorization, and supports three entry points:
//   - solve(): from-scratch solve (dual simplex from the slack basis when that
//     basis is dual feasible, otherwise two-phase primal with Bland fallback);
//   - reoptimize_dual(): re-solve after variable bound changes, reusing the
//     current basis (used by branch-and-bound);
//   - set_var_bounds(): mutate bounds between re-solves.
// Row duals and reduced costs are available after an optimal solve.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <vector>

#include "nke/linprog.hpp"

namespace nke {

class SimplexEngine {
 public:
  struct Limits {
    std::int64_t max_iterations = 500000;
    double feas_tol = 1e-7;
    double dual_tol = 1e-7;
    double pivot_tol = 1e-8;
    int refactor_every = 120;
    int stall_before_bland = 4000;
    double time_limit_s = 0.0;  // wall clock per solve entry point, 0 disables
  };

  void load(const LinearProgram& lp) {
    lp.validate();
    maximize_ = (lp.sense == Sense::Max);
    n_ = static_cast<int>(lp.num_vars());
    m_ = static_cast<int>(lp.num_rows());
    ncol_ = n_ + m_;

    cost_.assign(ncol_, 0.0);
    lo_.assign(ncol_, 0.0);
    hi_.assign(ncol_, 0.0);
    rhs_.assign(m_, 0.0);
    col_starts_.assign(ncol_ + 1, 0);
    col_rows_.clear();
    col_vals_.clear();

    for (int j = 0; j < n_; ++j) {
      cost_[j] = maximize_ ? -lp.vars[j].obj : lp.vars[j].obj;
      lo_[j] = lp.vars[j].lo;
      hi_[j] = lp.vars[j].hi;
    }
    // slack for row i: a'x + s = b
    for (int i = 0; i < m_; ++i) {
      const auto& row = lp.rows[i];
      rhs_[i] = row.rhs;
      int s = n_ + i;
      switch (row.rel) {
        case Rel::Le: lo_[s] = 0.0; hi_[s] = kInf; break;
        case Rel::Eq: lo_[s] = 0.0; hi_[s] = 0.0; break;
        case Rel::Ge: lo_[s] = -kInf; hi_[s] = 0.0; break;
      }
    }
    // column-major copy of the structural matrix (duplicate terms are summed)
    std::vector<std::vector<std::pair<int, double>>> cols(n_);
    for (int i = 0; i < m_; ++i)
      for (const auto& [v, coef] : lp.rows[i].terms)
        if (coef != 0.0) cols[v].push_back({i, coef});
    for (int j = 0; j < n_; ++j) {
      auto& cl = cols[j];
      std::sort(cl.begin(), cl.end());
      col_starts_[j] = static_cast<int>(col_rows_.size());
      int last_row = -1;
      for (const auto& [i, v] : cl) {
        if (i == last_row) {
          col_vals_.back() += v;
        } else {
          col_rows_.push_back(i);
          col_vals_.push_back(v);
          last_row = i;
        }
      }
    }
    for (int j = n_; j < ncol_; ++j) {
      col_starts_[j] = static_cast<int>(col_rows_.size());
      col_rows_.push_back(j - n_);
      col_vals_.push_back(1.0);
    }
    col_starts_[ncol_] = static_cast<int>(col_rows_.size());

    // on large bases the cubic refactorization dominates; stretch the period
    // and let the drift checks force earlier rebuilds when needed
    refactor_period_ = std::max(limits_.refactor_every, m_ / 2);

    reset_to_slack_basis();
  }

  void set_var_bounds(int j, double lo, double hi) {
    if (j < 0 || j >= n_) throw std::invalid_argument("set_var_bounds: bad variable index");
    if (lo > hi) throw std::invalid_argument("set_var_bounds: crossing bounds");
    lo_[j] = lo;
    hi_[j] = hi;
  }
  double var_lo(int j) const { return lo_[j]; }
  double var_hi(int j) const { return hi_[j]; }

  void reset_to_slack_basis() {
    basic_.resize(m_);
    in_row_.assign(ncol_, -1);
    status_.assign(ncol_, kAtLower);
    x_.assign(ncol_, 0.0);
    binv_.assign(static_cast<std::size_t>(m_) * m_, 0.0);
    for (int i = 0; i < m_; ++i) {
      basic_[i] = n_ + i;
      in_row_[n_ + i] = i;
      status_[n_ + i] = kBasic;
      binv_[static_cast<std::size_t>(i) * m_ + i] = 1.0;
    }
    for (int j = 0; j < n_; ++j) place_nonbasic(j);
    compute_basic_values();
    iterations_ = 0;
    pivots_since_refactor_ = 0;
  }

  /// From-scratch solve. The basis is rebuilt from the slack basis.
  SolveStatus solve() {
    arm_deadline();
    reset_to_slack_basis();
    SolveStatus st;
    if (slack_basis_dual_feasible()) {
      compute_reduced_costs();
      st = dual_loop();
      if (st == SolveStatus::IterationLimit || st == SolveStatus::NumericalFailure) {
        reset_to_slack_basis();
        st = primal_two_phase();
      }
    } else {
      st = primal_two_phase();
    }
    status_code_ = st;
    if (st == SolveStatus::Optimal) finalize();
    return st;
  }

  /// Re-solve after bound changes using the current basis. Falls back to a
  /// full primal solve when the basis cannot be repaired to dual feasibility.
  SolveStatus reoptimize_dual() {
    arm_deadline();
    iterations_ = 0;
    // a previous solve may have stopped mid-stream on a limit, leaving the
    // inverse with accumulated update error; rebuild it before trusting it
    if (pivots_since_refactor_ > 0 && !refactorize()) {
      reset_to_slack_basis();
      SolveStatus st = primal_two_phase();
      status_code_ = st;
      if (st == SolveStatus::Optimal) finalize();
      return st;
    }
    // nonbasic variables must sit on a bound that still exists
    for (int j = 0; j < ncol_; ++j) {
      if (status_[j] == kBasic) continue;
      place_nonbasic_preserving(j);
    }
    compute_reduced_costs();
    if (!repair_dual_feasibility()) {
      SolveStatus st = primal_two_phase();
      status_code_ = st;
      if (st == SolveStatus::Optimal) finalize();
      return st;
    }
    compute_basic_values();
    SolveStatus st = dual_loop();
    if (st == SolveStatus::IterationLimit || st == SolveStatus::NumericalFailure) {
      reset_to_slack_basis();
      st = primal_two_phase();
    }
    status_code_ = st;
    if (st == SolveStatus::Optimal) finalize();
    return st;
  }

  SolveStatus status() const { return status_code_; }
  std::int64_t iterations() const { return iterations_; }

  double objective() const { return maximize_ ? -objective_ : objective_; }

  double primal_value(int j) const { return x_[j]; }

  /// Row dual y_i (sign convention: strong duality reads obj = y'b + bound terms;
  /// for >= rows in a min problem the dual is >= 0).
  double row_dual(int i) const { return maximize_ ? -y_[i] : y_[i]; }

  /// Reduced cost of a structural variable at optimality.
  double reduced_cost(int j) const { return maximize_ ? -dj_[j] : dj_[j]; }

  Limits& limits() { return limits_; }

  /// Max primal row violation of the current point (for external checks).
  double primal_residual() const {
    double worst = 0.0;
    std::vector<double> r = rhs_;
    for (int j = 0; j < ncol_; ++j) {
      if (x_[j] == 0.0) continue;
      for (int t = col_starts_[j]; t < col_starts_[j + 1]; ++t) r[col_rows_[t]] -= col_vals_[t] * x_[j];
    }
    for (int i = 0; i < m_; ++i) worst = std::max(worst, std::fabs(r[i]));
    return worst;
  }

 private:
  static constexpr signed char kBasic = 0;
  static constexpr signed char kAtLower = 1;
  static constexpr signed char kAtUpper = 2;
  static constexpr signed char kFreeZero = 3;

  void arm_deadline() {
    deadline_active_ = limits_.time_limit_s > 0.0;
    if (deadline_active_)
      deadline_ = std::chrono::steady_clock::now() +
                  std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                      std::chrono::duration<double>(limits_.time_limit_s));
  }

  bool deadline_hit() const {
    return deadline_active_ && std::chrono::steady_clock::now() > deadline_;
  }

  void place_nonbasic(int j) {
    if (std::isfinite(lo_[j])) {
      status_[j] = kAtLower;
      x_[j] = lo_[j];
    } else if (std::isfinite(hi_[j])) {
      status_[j] = kAtUpper;
      x_[j] = hi_[j];
    } else {
      status_[j] = kFreeZero;
      x_[j] = 0.0;
    }
  }

  void place_nonbasic_preserving(int j) {
    // keep the variable's current bound status when still valid
    if (status_[j] == kAtLower && std::isfinite(lo_[j])) {
      x_[j] = lo_[j];
    } else if (status_[j] == kAtUpper && std::isfinite(hi_[j])) {
      x_[j] = hi_[j];
    } else {
      place_nonbasic(j);
    }
  }

  bool slack_basis_dual_feasible() const {
    for (int j = 0; j < n_; ++j) {
      if (std::isfinite(lo_[j])) {
        if (cost_[j] < -limits_.dual_tol) return false;  // would start at lower with d<0
      } else if (std::isfinite(hi_[j])) {
        if (cost_[j] > limits_.dual_tol) return false;
      } else {
        if (std::fabs(cost_[j]) > limits_.dual_tol) return false;
      }
    }
    return true;
  }

  // ---- linear algebra helpers ----

  // w = B^-1 * A_col(j)
  void ftran_column(int j, std::vector<double>& w) const {
    w.assign(m_, 0.0);
    for (int t = col_starts_[j]; t < col_starts_[j + 1]; ++t) {
      const int i = col_rows_[t];
      const double v = col_vals_[t];
      const double* bi = &binv_[0];
      for (int r = 0; r < m_; ++r) w[r] += v * bi[static_cast<std::size_t>(r) * m_ + i];
    }
  }

  // y = c_B' * B^-1 for the given basic costs
  void btran_costs(const std::vector<double>& cb, std::vector<double>& y) const {
    y.assign(m_, 0.0);
    for (int r = 0; r < m_; ++r) {
      const double cr = cb[r];
      if (cr == 0.0) continue;
      const double* row = &binv_[static_cast<std::size_t>(r) * m_];
      for (int i = 0; i < m_; ++i) y[i] += cr * row[i];
    }
  }

  double dot_column(int j, const std::vector<double>& y) const {
    double s = 0.0;
    for (int t = col_starts_[j]; t < col_starts_[j + 1]; ++t) s += y[col_rows_[t]] * col_vals_[t];
    return s;
  }

  void compute_basic_values() {
    std::vector<double> r = rhs_;
    for (int j = 0; j < ncol_; ++j) {
      if (status_[j] == kBasic || x_[j] == 0.0) continue;
      for (int t = col_starts_[j]; t < col_starts_[j + 1]; ++t) r[col_rows_[t]] -= col_vals_[t] * x_[j];
    }
    for (int i = 0; i < m_; ++i) {
      const double* row = &binv_[static_cast<std::size_t>(i) * m_];
      double v = 0.0;
      for (int t = 0; t < m_; ++t) v += row[t] * r[t];
      x_[basic_[i]] = v;
    }
  }

  // Rank-one pivot update of B^-1: entering column j, leaving row r, with
  // w = B^-1 A_j already computed.
  void update_binv(int r, const std::vector<double>& w) {
    double piv = w[r];
    double* rowr = &binv_[static_cast<std::size_t>(r) * m_];
    const double inv = 1.0 / piv;
    for (int i = 0; i < m_; ++i) rowr[i] *= inv;
    for (int q = 0; q < m_; ++q) {
      if (q == r) continue;
      const double f = w[q];
      if (f == 0.0) continue;
      double* rowq = &binv_[static_cast<std::size_t>(q) * m_];
      for (int i = 0; i < m_; ++i) rowq[i] -= f * rowr[i];
    }
    ++pivots_since_refactor_;
  }

  // Rebuild B^-1 from the basis list by Gauss-Jordan with partial pivoting.
  // Returns false when the basis matrix is numerically singular.
  bool refactorize() {
    std::vector<double> B(static_cast<std::size_t>(m_) * m_, 0.0);
    for (int r = 0; r < m_; ++r) {
      int j = basic_[r];
      for (int t = col_starts_[j]; t < col_starts_[j + 1]; ++t)
        B[static_cast<std::size_t>(col_rows_[t]) * m_ + r] = col_vals_[t];
    }
    std::vector<double>& inv = binv_;
    inv.assign(static_cast<std::size_t>(m_) * m_, 0.0);
    for (int i = 0; i < m_; ++i) inv[static_cast<std::size_t>(i) * m_ + i] = 1.0;
    for (int col = 0; col < m_; ++col) {
      int piv_row = col;
      double best = std::fabs(B[static_cast<std::size_t>(col) * m_ + col]);
      for (int r = col + 1; r < m_; ++r) {
        double v = std::fabs(B[static_cast<std::size_t>(r) * m_ + col]);
        if (v > best) { best = v; piv_row = r; }
      }
      if (best < 1e-12) return false;
      if (piv_row != col) {
        for (int t = 0; t < m_; ++t) {
          std::swap(B[static_cast<std::size_t>(piv_row) * m_ + t], B[static_cast<std::size_t>(col) * m_ + t]);
          std::swap(inv[static_cast<std::size_t>(piv_row) * m_ + t], inv[static_cast<std::size_t>(col) * m_ + t]);
        }
      }
      const double inv_piv = 1.0 / B[static_cast<std::size_t>(col) * m_ + col];
      double* brow = &B[static_cast<std::size_t>(col) * m_];
      double* irow = &inv[static_cast<std::size_t>(col) * m_];
      for (int t = 0; t < m_; ++t) { brow[t] *= inv_piv; irow[t] *= inv_piv; }
      for (int r = 0; r < m_; ++r) {
        if (r == col) continue;
        const double f = B[static_cast<std::size_t>(r) * m_ + col];
        if (f == 0.0) continue;
        double* br = &B[static_cast<std::size_t>(r) * m_];
        double* ir = &inv[static_cast<std::size_t>(r) * m_];
        for (int t = 0; t < m_; ++t) { br[t] -= f * brow[t]; ir[t] -= f * irow[t]; }
      }
    }
    pivots_since_refactor_ = 0;
    return true;
  }

  // 0: not due yet, 1: refreshed (derived values recomputed), -1: singular
  int maybe_refactorize() {
    if (pivots_since_refactor_ < refactor_period_) return 0;
    if (!refactorize()) return -1;
    compute_basic_values();
    return 1;
  }

  // Terminal verdicts (optimal, infeasible, unbounded) must never rest on
  // values accumulated through rank-one updates: the claim is re-derived
  // after an exact refactorization, and the loop continues when the exact
  // values disagree. These helpers rebuild the state; false means the basis
  // went singular and the caller has to give up on this solve path.
  bool exact_refresh_primal() {
    if (!refactorize()) return false;
    compute_basic_values();
    return true;
  }

  bool exact_refresh_dual() {
    if (!refactorize()) return false;
    compute_basic_values();
    compute_reduced_costs();
    if (!repair_dual_feasibility()) return false;
    compute_basic_values();
    return true;
  }

  // ---- primal simplex ----

  SolveStatus primal_two_phase() {
    compute_basic_values();
    SolveStatus st = primal_loop(/*phase1=*/true);
    if (st != SolveStatus::Optimal) return st;
    if (total_infeasibility() > 1e2 * limits_.feas_tol * (1.0 + norm_rhs()))
      return SolveStatus::Infeasible;
    return primal_loop(/*phase1=*/false);
  }

  double total_infeasibility() const {
    double s = 0.0;
    for (int i = 0; i < m_; ++i) {
      int j = basic_[i];
      if (x_[j] < lo_[j]) s += lo_[j] - x_[j];
      else if (x_[j] > hi_[j]) s += x_[j] - hi_[j];
    }
    return s;
  }

  double norm_rhs() const {
    double s = 0.0;
    for (double v : rhs_) s = std::max(s, std::fabs(v));
    return s;
  }

  SolveStatus primal_loop(bool phase1) {
    std::vector<double> cb(m_), y(m_), w;
    int stall = 0;
    double last_obj = kInf;
    bool bland = false;

    while (true) {
      if (++iterations_ > limits_.max_iterations) return SolveStatus::IterationLimit;
      if ((iterations_ & 127) == 0 && deadline_hit()) return SolveStatus::TimeLimit;
      if (maybe_refactorize() < 0) return SolveStatus::NumericalFailure;

      double infeas = total_infeasibility();
      if (phase1 && infeas <= limits_.feas_tol * (1.0 + norm_rhs())) {
        if (pivots_since_refactor_ > 0) {
          // feasibility must be confirmed on exact values
          if (!exact_refresh_primal()) return SolveStatus::NumericalFailure;
          continue;
        }
        return SolveStatus::Optimal;
      }

      // basic costs: phase 1 prices infeasibility, phase 2 the true objective
      for (int i = 0; i < m_; ++i) {
        int j = basic_[i];
        if (phase1) {
          if (x_[j] > hi_[j] + limits_.feas_tol) cb[i] = 1.0;
          else if (x_[j] < lo_[j] - limits_.feas_tol) cb[i] = -1.0;
          else cb[i] = 0.0;
        } else {
          cb[i] = cost_[j];
        }
      }
      btran_costs(cb, y);

      // entering variable
      int enter = -1, dir = 0;
      double best = limits_.dual_tol;
      for (int j = 0; j < ncol_; ++j) {
        if (status_[j] == kBasic) continue;
        if (lo_[j] == hi_[j]) continue;  // fixed, never enters
        double cj = phase1 ? 0.0 : cost_[j];
        double d = cj - dot_column(j, y);
        int cand_dir = 0;
        double score = 0.0;
        if (status_[j] == kAtLower && d < -limits_.dual_tol) { cand_dir = +1; score = -d; }
        else if (status_[j] == kAtUpper && d > limits_.dual_tol) { cand_dir = -1; score = d; }
        else if (status_[j] == kFreeZero && std::fabs(d) > limits_.dual_tol) {
          cand_dir = d < 0 ? +1 : -1;
          score = std::fabs(d);
        }
        if (cand_dir == 0) continue;
        if (bland) { enter = j; dir = cand_dir; break; }
        if (score > best) { best = score; enter = j; dir = cand_dir; }
      }
      if (enter < 0) {
        if (pivots_since_refactor_ > 0) {
          // price out again from an exact factorization before concluding
          if (!exact_refresh_primal()) return SolveStatus::NumericalFailure;
          continue;
        }
        if (phase1) return SolveStatus::Optimal;  // priced out; feasibility decided by caller
        current_objective();
        return SolveStatus::Optimal;
      }

      ftran_column(enter, w);

      // ratio test: how far can the entering variable move
      double t_own = hi_[enter] - lo_[enter];  // finite only when both bounds finite
      double t_best = std::isfinite(t_own) && status_[enter] != kFreeZero ? t_own : kInf;
      int leave_row = -1;
      double leave_piv = 0.0;
      signed char leave_status = kAtLower;  // status of the leaving variable
      double leave_value = 0.0;             // the bound it lands on
      for (int r = 0; r < m_; ++r) {
        double rate = -static_cast<double>(dir) * w[r];  // d x_basic[r] / dt
        if (std::fabs(rate) < limits_.pivot_tol) continue;
        int j = basic_[r];
        double t_block = kInf;
        signed char target_status = kAtLower;
        double target_value = 0.0;
        if (rate < 0.0) {
          // moving down: blocked by the lower bound, or by the upper bound
          // when the variable starts infeasible above it
          double floor_v;
          if (phase1 && x_[j] > hi_[j] + limits_.feas_tol) {
            floor_v = hi_[j];
            target_status = kAtUpper;
          } else if (phase1 && x_[j] < lo_[j] - limits_.feas_tol) {
            continue;  // already below lower and moving away: priced via cb
          } else {
            floor_v = lo_[j];
            target_status = kAtLower;
          }
          if (std::isfinite(floor_v)) t_block = (x_[j] - floor_v) / (-rate), target_value = floor_v;
        } else {
          double ceil_v;
          if (phase1 && x_[j] < lo_[j] - limits_.feas_tol) {
            ceil_v = lo_[j];
            target_status = kAtLower;
          } else if (phase1 && x_[j] > hi_[j] + limits_.feas_tol) {
            continue;
          } else {
            ceil_v = hi_[j];
            target_status = kAtUpper;
          }
          if (std::isfinite(ceil_v)) t_block = (ceil_v - x_[j]) / rate, target_value = ceil_v;
        }
        if (t_block < -1e-12) t_block = 0.0;
        bool better;
        if (bland) {
          // anti-cycling: among ties prefer the smallest leaving variable index
          better = t_block < t_best - 1e-12 ||
                   (t_block <= t_best + 1e-12 && (leave_row < 0 || basic_[r] < basic_[leave_row]));
        } else {
          better = t_block < t_best - 1e-10 ||
                   (t_block < t_best + 1e-10 &&
                    (leave_row < 0 || std::fabs(w[r]) > std::fabs(leave_piv)));
        }
        if (better) {
          t_best = std::min(t_best, std::max(t_block, 0.0));
          leave_row = r;
          leave_piv = w[r];
          leave_status = target_status;
          leave_value = target_value;
        }
      }

      if (!std::isfinite(t_best)) {
        if (pivots_since_refactor_ > 0) {
          if (!exact_refresh_primal()) return SolveStatus::NumericalFailure;
          continue;
        }
        return phase1 ? SolveStatus::NumericalFailure : SolveStatus::Unbounded;
      }

      if (leave_row < 0 || (std::isfinite(t_own) && status_[enter] != kFreeZero && t_own <= t_best + 1e-10)) {
        // bound flip: entering runs to its opposite bound, basis unchanged
        double t = t_own;
        for (int r = 0; r < m_; ++r) x_[basic_[r]] += -static_cast<double>(dir) * w[r] * t;
        x_[enter] += dir * t;
        status_[enter] = (dir > 0) ? kAtUpper : kAtLower;
      } else {
        double t = std::max(t_best, 0.0);
        if (std::fabs(leave_piv) < limits_.pivot_tol) {
          if (!refactorize()) return SolveStatus::NumericalFailure;
          compute_basic_values();
          continue;
        }
        for (int r = 0; r < m_; ++r) x_[basic_[r]] += -static_cast<double>(dir) * w[r] * t;
        int leaving = basic_[leave_row];
        x_[enter] += dir * t;
        status_[leaving] = leave_status;
        x_[leaving] = leave_value;
        in_row_[leaving] = -1;
        basic_[leave_row] = enter;
        in_row_[enter] = leave_row;
        status_[enter] = kBasic;
        update_binv(leave_row, w);
      }

      // cycling guard: switch to Bland's rule when the objective stalls
      double obj_now = phase1 ? total_infeasibility() : current_objective();
      if (obj_now < last_obj - 1e-12) { stall = 0; last_obj = obj_now; }
      else if (++stall > limits_.stall_before_bland) bland = true;
    }
  }

  double current_objective() {
    double s = 0.0;
    for (int j = 0; j < ncol_; ++j)
      if (x_[j] != 0.0) s += cost_[j] * x_[j];
    objective_ = s;
    return s;
  }

  // ---- dual simplex ----

  void compute_reduced_costs() {
    std::vector<double> cb(m_);
    for (int i = 0; i < m_; ++i) cb[i] = cost_[basic_[i]];
    btran_costs(cb, y_);
    dj_.assign(ncol_, 0.0);
    for (int j = 0; j < ncol_; ++j) {
      if (status_[j] == kBasic) continue;
      dj_[j] = cost_[j] - dot_column(j, y_);
    }
  }

  // Flip nonbasic variables whose reduced-cost sign disagrees with their bound.
  // Returns false when dual feasibility cannot be restored by flips.
  bool repair_dual_feasibility() {
    for (int j = 0; j < ncol_; ++j) {
      if (status_[j] == kBasic) continue;
      if (lo_[j] == hi_[j]) continue;  // fixed variables are always dual ok
      if (status_[j] == kAtLower && dj_[j] < -limits_.dual_tol) {
        if (!std::isfinite(hi_[j])) return false;
        status_[j] = kAtUpper;
        x_[j] = hi_[j];
      } else if (status_[j] == kAtUpper && dj_[j] > limits_.dual_tol) {
        if (!std::isfinite(lo_[j])) return false;
        status_[j] = kAtLower;
        x_[j] = lo_[j];
      } else if (status_[j] == kFreeZero && std::fabs(dj_[j]) > limits_.dual_tol) {
        return false;
      }
    }
    return true;
  }

  SolveStatus dual_loop() {
    std::vector<double> w;
    std::vector<double> alpha(ncol_, 0.0);
    int stall = 0;
    double last_infeas = kInf;
    bool bland = false;

    while (true) {
      if (++iterations_ > limits_.max_iterations) return SolveStatus::IterationLimit;
      if ((iterations_ & 127) == 0 && deadline_hit()) return SolveStatus::TimeLimit;
      int rf = maybe_refactorize();
      if (rf < 0) return SolveStatus::NumericalFailure;
      if (rf > 0) compute_reduced_costs();

      // leaving row: largest bound violation among basic variables
      int r = -1;
      double worst = limits_.feas_tol * (1.0 + norm_rhs());
      double total_viol = 0.0;
      for (int i = 0; i < m_; ++i) {
        int j = basic_[i];
        double v = 0.0;
        if (x_[j] < lo_[j]) v = lo_[j] - x_[j];
        else if (x_[j] > hi_[j]) v = x_[j] - hi_[j];
        total_viol += v;
        if (v > worst) { worst = v; r = i; }
      }
      if (r < 0) {
        if (pivots_since_refactor_ > 0) {
          // never declare optimality off accumulated updates
          if (!exact_refresh_dual()) return SolveStatus::NumericalFailure;
          continue;
        }
        current_objective();
        return SolveStatus::Optimal;
      }
      if (total_viol < last_infeas - 1e-12) { stall = 0; last_infeas = total_viol; }
      else if (++stall > limits_.stall_before_bland) bland = true;

      const int leave = basic_[r];
      const double sgn = (x_[leave] > hi_[leave]) ? 1.0 : -1.0;  // +1: above upper
      const double target = sgn > 0 ? hi_[leave] : lo_[leave];
      const double* rho = &binv_[static_cast<std::size_t>(r) * m_];

      // dual ratio test over nonbasic columns
      int enter = -1;
      double best_ratio = kInf;
      double best_alpha = 0.0;
      for (int j = 0; j < ncol_; ++j) {
        if (status_[j] == kBasic || lo_[j] == hi_[j]) { alpha[j] = 0.0; continue; }
        double a = 0.0;
        for (int t = col_starts_[j]; t < col_starts_[j + 1]; ++t) a += rho[col_rows_[t]] * col_vals_[t];
        alpha[j] = a;
        double sa = sgn * a;  // normalized tableau entry
        bool eligible = (status_[j] == kAtLower && sa > limits_.pivot_tol) ||
                        (status_[j] == kAtUpper && sa < -limits_.pivot_tol) ||
                        (status_[j] == kFreeZero && std::fabs(sa) > limits_.pivot_tol);
        if (!eligible) continue;
        double ratio = dj_[j] / sa;
        if (ratio < -1e-9) ratio = 0.0;  // numerical noise
        if (bland) {
          if (enter < 0 || ratio < best_ratio - 1e-12) { enter = j; best_ratio = ratio; best_alpha = a; }
        } else if (ratio < best_ratio - 1e-10 ||
                   (ratio < best_ratio + 1e-10 && std::fabs(a) > std::fabs(best_alpha))) {
          enter = j;
          best_ratio = ratio;
          best_alpha = a;
        }
      }
      if (enter < 0) {
        if (pivots_since_refactor_ > 0) {
          // re-derive the infeasibility verdict from exact values
          if (!exact_refresh_dual()) return SolveStatus::NumericalFailure;
          continue;
        }
        return SolveStatus::Infeasible;  // dual unbounded
      }

      ftran_column(enter, w);
      if (std::fabs(w[r] - alpha[enter]) > 1e-6 * (1.0 + std::fabs(alpha[enter]))) {
        // basis inverse drifted; refactorize and retry this iteration
        if (!refactorize()) return SolveStatus::NumericalFailure;
        compute_basic_values();
        compute_reduced_costs();
        continue;
      }
      if (std::fabs(w[r]) < limits_.pivot_tol) {
        if (!refactorize()) return SolveStatus::NumericalFailure;
        compute_basic_values();
        compute_reduced_costs();
        continue;
      }

      // primal update: entering moves so the leaving basic lands on its bound
      const double delta = (x_[leave] - target) / w[r];
      for (int i = 0; i < m_; ++i) x_[basic_[i]] -= delta * w[i];
      const double enter_val = x_[enter] + delta;

      // dual update: d_j -= theta * sgn * alpha_j, keeping signs feasible
      const double theta = dj_[enter] / (sgn * alpha[enter]);
      for (int j = 0; j < ncol_; ++j) {
        if (status_[j] == kBasic || alpha[j] == 0.0) continue;
        dj_[j] -= theta * sgn * alpha[j];
      }
      dj_[leave] = -theta * sgn;
      dj_[enter] = 0.0;

      status_[leave] = sgn > 0 ? kAtUpper : kAtLower;
      if (!std::isfinite(target)) status_[leave] = kFreeZero;
      x_[leave] = std::isfinite(target) ? target : 0.0;
      in_row_[leave] = -1;
      basic_[r] = enter;
      in_row_[enter] = r;
      status_[enter] = kBasic;
      x_[enter] = enter_val;
      update_binv(r, w);
    }
  }

  void finalize() {
    // final duals / reduced costs from a clean factorization
    if (pivots_since_refactor_ > 0) {
      if (refactorize()) compute_basic_values();
    }
    compute_reduced_costs();
    current_objective();
  }

  bool maximize_ = false;
  int n_ = 0, m_ = 0, ncol_ = 0;
  std::vector<double> cost_, lo_, hi_, rhs_;
  std::vector<int> col_starts_, col_rows_;
  std::vector<double> col_vals_;

  std::vector<int> basic_;
  std::vector<int> in_row_;
  std::vector<signed char> status_;
  std::vector<double> x_;
  std::vector<double> binv_;
  std::vector<double> y_, dj_;
  double objective_ = 0.0;
  SolveStatus status_code_ = SolveStatus::NumericalFailure;
  std::int64_t iterations_ = 0;
  int pivots_since_refactor_ = 0;
  int refactor_period_ = 120;
  std::chrono::steady_clock::time_point deadline_{};
  bool deadline_active_ = false;
  Limits limits_;
};

}  // namespace nke
