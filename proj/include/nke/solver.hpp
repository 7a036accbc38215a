#pragma once

// Solver facade. Everything above this layer talks to SolverBackend, so a
// commercial solver could be swapped in; the shipped backend pairs the
// revised simplex engine with branch and bound.

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "nke/branch_bound.hpp"
#include "nke/linprog.hpp"
#include "nke/model.hpp"
#include "nke/simplex.hpp"

namespace nke {

class SolverBackend {
 public:
  virtual ~SolverBackend() = default;
  virtual std::string name() const = 0;
  virtual LpSolution solve_lp(const LinearProgram& lp) = 0;
  virtual MipSolution solve_milp(const MixedIntegerProgram& mip, const MilpOptions& opt) = 0;
};

class BuiltinSolver final : public SolverBackend {
 public:
  std::string name() const override { return "builtin-simplex"; }

  LpSolution solve_lp(const LinearProgram& lp) override {
    SimplexEngine eng;
    eng.load(lp);
    SolveStatus st = eng.solve();
    LpSolution sol;
    sol.status = st;
    sol.iterations = eng.iterations();
    if (st != SolveStatus::Optimal) return sol;
    sol.objective = eng.objective();
    sol.x.resize(lp.num_vars());
    sol.reduced_costs.resize(lp.num_vars());
    for (std::size_t j = 0; j < lp.num_vars(); ++j) {
      sol.x[j] = eng.primal_value(static_cast<int>(j));
      sol.reduced_costs[j] = eng.reduced_cost(static_cast<int>(j));
    }
    sol.duals.resize(lp.num_rows());
    for (std::size_t i = 0; i < lp.num_rows(); ++i) sol.duals[i] = eng.row_dual(static_cast<int>(i));
    return sol;
  }

  MipSolution solve_milp(const MixedIntegerProgram& mip, const MilpOptions& opt) override {
    BranchBoundSolver bb;
    return bb.solve(mip, opt);
  }
};

inline LpSolution solve_lp(const LinearProgram& lp) {
  BuiltinSolver s;
  return s.solve_lp(lp);
}

inline MipSolution solve_milp(const MixedIntegerProgram& mip, const MilpOptions& opt = {}) {
  BuiltinSolver s;
  return s.solve_milp(mip, opt);
}

/// Certifies an optimal LP solution: primal feasibility, dual sign
/// feasibility, complementary slackness, and the duality identity
/// obj = y'b + d'x. Returns one violation per failed check.
inline std::vector<Violation> check_lp_optimality(const LinearProgram& lp, const LpSolution& sol,
                                                  double feas_tol = 1e-6, double dual_tol = 1e-6) {
  std::vector<Violation> out;
  if (sol.status != SolveStatus::Optimal) {
    out.push_back({"solution", "not optimal", to_string(sol.status)});
    return out;
  }
  auto note = [&](const std::string& el, const std::string& rule, double v) {
    out.push_back({el, rule, "violation " + std::to_string(v)});
  };

  const bool maximize = (lp.sense == Sense::Max);
  for (std::size_t j = 0; j < lp.num_vars(); ++j) {
    const auto& v = lp.vars[j];
    if (sol.x[j] < v.lo - feas_tol) note("var " + std::to_string(j), "below lower bound", v.lo - sol.x[j]);
    if (sol.x[j] > v.hi + feas_tol) note("var " + std::to_string(j), "above upper bound", sol.x[j] - v.hi);
  }
  std::vector<double> activity(lp.num_rows(), 0.0);
  for (std::size_t i = 0; i < lp.num_rows(); ++i) {
    const auto& row = lp.rows[i];
    double a = 0.0;
    for (const auto& [vj, c] : row.terms) a += c * sol.x[vj];
    activity[i] = a;
    double slack = row.rhs - a;
    bool bad = (row.rel == Rel::Le && slack < -feas_tol) || (row.rel == Rel::Ge && slack > feas_tol) ||
               (row.rel == Rel::Eq && std::fabs(slack) > feas_tol);
    if (bad) note("row " + std::to_string(i), "primal infeasible", std::fabs(slack));
  }

  // dual signs in the min convention; flip for max problems
  for (std::size_t i = 0; i < lp.num_rows(); ++i) {
    double y = maximize ? -sol.duals[i] : sol.duals[i];
    if (lp.rows[i].rel == Rel::Le && y > dual_tol) note("row " + std::to_string(i), "dual sign", y);
    if (lp.rows[i].rel == Rel::Ge && y < -dual_tol) note("row " + std::to_string(i), "dual sign", -y);
    // equality rows are unrestricted
    double slack = lp.rows[i].rhs - activity[i];
    if (std::fabs(sol.duals[i]) > dual_tol && std::fabs(slack) > feas_tol)
      note("row " + std::to_string(i), "complementary slackness", std::fabs(sol.duals[i] * slack));
  }
  for (std::size_t j = 0; j < lp.num_vars(); ++j) {
    const auto& v = lp.vars[j];
    double d = maximize ? -sol.reduced_costs[j] : sol.reduced_costs[j];
    double scale = 1.0 + std::fabs(lp.vars[j].obj);
    bool at_lo = std::isfinite(v.lo) && sol.x[j] <= v.lo + feas_tol;
    bool at_hi = std::isfinite(v.hi) && sol.x[j] >= v.hi - feas_tol;
    if (!at_lo && d > dual_tol * scale) note("var " + std::to_string(j), "reduced cost sign", d);
    if (!at_hi && d < -dual_tol * scale) note("var " + std::to_string(j), "reduced cost sign", -d);
  }

  double ybdx = 0.0;
  for (std::size_t i = 0; i < lp.num_rows(); ++i) ybdx += sol.duals[i] * lp.rows[i].rhs;
  for (std::size_t j = 0; j < lp.num_vars(); ++j) ybdx += sol.reduced_costs[j] * sol.x[j];
  double gap = std::fabs(sol.objective - ybdx) / (1.0 + std::fabs(sol.objective));
  if (gap > dual_tol) note("objective", "duality identity", gap);
  return out;
}

}  // namespace nke
