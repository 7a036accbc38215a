#pragma once

// Branch and bound for mixed binary programs over the simplex engine.
// Depth-first diving with most-fractional branching: the next node processed
// differs from the engine's current bounds by a single fix, so the dual
// simplex restart from the incumbent basis typically needs a handful of
// pivots. The round-toward-LP child is explored first; the global bound over
// open nodes drives gap termination.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <set>
#include <vector>

#include "nke/linprog.hpp"
#include "nke/simplex.hpp"

namespace nke {

struct MilpOptions {
  double rel_gap = 1e-3;         // stop when (incumbent - bound) <= rel_gap * |incumbent|
  double abs_gap = 1e-9;
  double integer_tol = 1e-6;
  std::int64_t max_nodes = 5'000'000;
  double time_limit_s = 0.0;     // 0 disables the limit
  // Optional feasible starts: each entry assigns 0/1 to every binary, listed
  // in the order of MixedIntegerProgram::binaries. Used to seed the incumbent.
  std::vector<std::vector<int>> start_solutions;
};

class BranchBoundSolver {
 public:
  MipSolution solve(const MixedIntegerProgram& mip, const MilpOptions& opt = {}) {
    mip.validate();
    const auto t0 = std::chrono::steady_clock::now();
    const bool maximize = (mip.lp.sense == Sense::Max);
    const auto& bins = mip.binaries;

    engine_.load(mip.lp);
    root_lo_.resize(bins.size());
    root_hi_.resize(bins.size());
    for (std::size_t t = 0; t < bins.size(); ++t) {
      root_lo_[t] = mip.lp.vars[bins[t]].lo;
      root_hi_[t] = mip.lp.vars[bins[t]].hi;
    }

    MipSolution out;
    out.status = SolveStatus::Optimal;

    // canonical minimize objective for bounding; flip at the end
    auto as_min = [&](double v) { return maximize ? -v : v; };

    double incumbent = kInf;
    std::vector<double> incumbent_x;

    // node = list of (binary position, fixed value); bound from parent LP
    struct Node {
      double bound;
      std::vector<std::pair<int, int>> fixes;
    };
    // LIFO stack explored depth first; the multiset mirrors the bounds of all
    // open nodes so the global best bound stays available for gap termination
    std::vector<Node> open;
    std::multiset<double> open_bounds;
    std::int64_t processed = 0;

    auto apply_node = [&](const std::vector<std::pair<int, int>>& fixes) {
      for (std::size_t t = 0; t < bins.size(); ++t)
        engine_.set_var_bounds(bins[t], root_lo_[t], root_hi_[t]);
      for (const auto& [pos, val] : fixes)
        engine_.set_var_bounds(bins[pos], static_cast<double>(val), static_cast<double>(val));
    };

    auto node_solve = [&]() -> SolveStatus {
      SolveStatus st = engine_.reoptimize_dual();
      if (st == SolveStatus::IterationLimit || st == SolveStatus::NumericalFailure)
        st = engine_.solve();  // cold restart under the node bounds
      return st;
    };

    // remaining wall clock, or +inf when no limit was requested
    auto remaining_s = [&]() -> double {
      if (opt.time_limit_s <= 0.0) return kInf;
      double el = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      return opt.time_limit_s - el;
    };
    // cap the next LP solve at the remaining budget so a single hard node
    // cannot overshoot the limit by minutes
    auto arm_engine_clock = [&](double remaining) {
      if (opt.time_limit_s > 0.0) engine_.limits().time_limit_s = std::max(remaining, 1e-3);
    };

    // seed incumbents from caller-provided assignments
    arm_engine_clock(remaining_s());
    for (const auto& start : opt.start_solutions) {
      if (start.size() != bins.size()) continue;
      std::vector<std::pair<int, int>> fixes;
      fixes.reserve(bins.size());
      for (std::size_t t = 0; t < bins.size(); ++t) fixes.push_back({static_cast<int>(t), start[t]});
      apply_node(fixes);
      if (node_solve() == SolveStatus::Optimal) {
        double v = as_min(engine_.objective());
        if (v < incumbent) {
          incumbent = v;
          capture_solution(mip, incumbent_x);
        }
      }
    }

    // root relaxation
    apply_node({});
    arm_engine_clock(remaining_s());
    SolveStatus root_st = engine_.solve();
    if (root_st == SolveStatus::Infeasible) {
      out.status = (incumbent < kInf) ? SolveStatus::Optimal : SolveStatus::Infeasible;
      fill_output(out, maximize, incumbent, incumbent, incumbent_x, processed);
      return out;
    }
    if (root_st == SolveStatus::Unbounded) {
      out.status = SolveStatus::Unbounded;
      out.nodes = processed;
      return out;
    }
    if (root_st != SolveStatus::Optimal) {
      // limit hit or numerical failure: keep any seeded incumbent, no bound
      out.status = root_st;
      fill_output(out, maximize, incumbent, -kInf, incumbent_x, processed);
      return out;
    }
    double best_bound = as_min(engine_.objective());
    open.push_back({best_bound, {}});
    open_bounds.insert(best_bound);

    while (!open.empty()) {
      best_bound = *open_bounds.begin();
      if (incumbent < kInf) {
        double gap = incumbent - best_bound;
        if (gap <= opt.abs_gap || gap <= opt.rel_gap * std::max(1.0, std::fabs(incumbent))) break;
      }
      if (processed >= opt.max_nodes) {
        out.status = SolveStatus::NodeLimit;
        break;
      }
      double remaining = remaining_s();
      if (remaining <= 0.0) {
        out.status = SolveStatus::TimeLimit;
        break;
      }

      Node node = std::move(open.back());
      open.pop_back();
      open_bounds.erase(open_bounds.find(node.bound));
      if (incumbent < kInf && node.bound >= incumbent - opt.abs_gap) continue;  // pruned

      apply_node(node.fixes);
      arm_engine_clock(remaining);
      SolveStatus st = node_solve();
      ++processed;
      if (st == SolveStatus::TimeLimit) {
        out.status = SolveStatus::TimeLimit;
        break;
      }
      if (st == SolveStatus::Infeasible) continue;
      if (st != SolveStatus::Optimal) {
        out.status = SolveStatus::NumericalFailure;
        break;
      }
      double bound = as_min(engine_.objective());
      if (incumbent < kInf && bound >= incumbent - opt.abs_gap) continue;

      // most fractional binary; ties to the lowest variable index
      int branch_pos = -1;
      double most = opt.integer_tol;
      double branch_val = 0.0;
      for (std::size_t t = 0; t < bins.size(); ++t) {
        double v = engine_.primal_value(bins[t]);
        double frac = std::fabs(v - std::round(v));
        if (frac > most) {
          most = frac;
          branch_pos = static_cast<int>(t);
          branch_val = v;
        }
      }
      if (branch_pos < 0) {
        // integral: new incumbent
        if (bound < incumbent) {
          incumbent = bound;
          capture_solution(mip, incumbent_x);
        }
        continue;
      }
      // dive toward the relaxation value: the preferred child is pushed last
      // so it pops first and the warm basis differs by a single bound change
      int pref = (branch_val >= 0.5) ? 1 : 0;
      for (int v : {1 - pref, pref}) {
        Node child{bound, node.fixes};
        child.fixes.push_back({branch_pos, v});
        open_bounds.insert(bound);
        open.push_back(std::move(child));
      }
    }

    if (open.empty()) best_bound = incumbent;
    if (out.status == SolveStatus::Optimal && !(incumbent < kInf)) out.status = SolveStatus::Infeasible;
    fill_output(out, maximize, incumbent, best_bound, incumbent_x, processed);
    return out;
  }

 private:
  void capture_solution(const MixedIntegerProgram& mip, std::vector<double>& dst) {
    dst.resize(mip.lp.num_vars());
    for (std::size_t j = 0; j < mip.lp.num_vars(); ++j) dst[j] = engine_.primal_value(static_cast<int>(j));
    for (int b : mip.binaries) dst[b] = std::round(dst[b]);
  }

  void fill_output(MipSolution& out, bool maximize, double incumbent, double bound,
                   const std::vector<double>& x, std::int64_t processed) {
    out.nodes = processed;
    out.has_incumbent = incumbent < kInf;
    if (out.has_incumbent) {
      out.objective = maximize ? -incumbent : incumbent;
      out.best_bound = maximize ? -bound : bound;
      out.x = x;
      double denom = std::max(1.0, std::fabs(incumbent));
      out.gap = std::max(0.0, (incumbent - bound)) / denom;
    } else {
      out.objective = 0.0;
      out.best_bound = maximize ? -bound : bound;
      out.gap = kInf;
    }
  }

  SimplexEngine engine_;
  std::vector<double> root_lo_, root_hi_;
};

}  // namespace nke
