#pragma once

// Post-contingency dispatch: a linear DC power flow that minimizes load shed
// for a fixed build decision and failure state. The row layout is fixed so
// every dual multiplier can be read back by role:
//
//   balance (=)            alpha      per bus
//   flow definition ub (<=) beta_hat  per branch   B(th_i - th_j) - f <= M(1-x+d)
//   flow definition lb (<=) beta_chk  per branch   f - B(th_i - th_j) <= M(1-x+d)
//   capacity ub (<=)       delta      per branch   f  <= F x (1-d)
//   capacity lb (<=)       eta        per branch   -f <= F x (1-d)
//   generator cap (<=)     zeta       per gen      p  <= Pmax x (1-d)
//   shed cap (<=)          lambda     per bus      q  <= D
//
// The big-M rows deactivate the flow definition for absent circuits. Because
// dual feasibility does not involve the right-hand side, an optimal dual
// point remains feasible for every build vector, which is what makes the
// extracted inequality globally valid.

#include <atomic>
#include <cmath>
#include <map>
#include <stdexcept>
#include <vector>

#include "nke/contingency.hpp"
#include "nke/model.hpp"
#include "nke/solver.hpp"

namespace nke {

/// Deactivation constant per branch. The angle spread between any two buses
/// of one component is at most (|buses|-1) * max_e F_e/B_e when all flow
/// rows hold, so this M never cuts off a feasible dispatch.
struct BigMPolicy {
  double multiplier = 1.0;

  double value(const PowerSystem& sys, const TransmissionElement& e) const {
    double worst_ratio = 0.0;
    for (const auto& b : sys.branches) worst_ratio = std::max(worst_ratio, b.capacity / b.susceptance);
    double span = static_cast<double>(sys.buses.size()) - 1.0;
    return multiplier * e.susceptance * span * worst_ratio;
  }

  std::vector<double> values(const PowerSystem& sys) const {
    std::vector<double> out;
    out.reserve(sys.branches.size());
    for (const auto& e : sys.branches) out.push_back(value(sys, e));
    return out;
  }
};

struct PspDuals {
  std::map<int, double> alpha;                // bus id -> balance
  std::map<int, double> beta_hat, beta_chk;   // branch id -> flow definition ub/lb
  std::map<int, double> delta, eta;           // branch id -> capacity ub/lb
  std::map<int, double> zeta;                 // gen id -> capacity
  std::map<int, double> lambda;               // bus id -> shed cap
};

struct PspResult {
  SolveStatus status = SolveStatus::NumericalFailure;
  double shed = 0.0;
  Dispatch dispatch;
  std::map<int, double> shed_by_bus;
  PspDuals duals;
  double duality_gap = 0.0;  // relative primal/dual objective mismatch
};

/// Worst strong-duality violation seen by any dispatch solve in this process.
inline std::atomic<double>& psp_duality_gap_high_water() {
  static std::atomic<double> gap{0.0};
  return gap;
}

inline void reset_psp_duality_gap_high_water() { psp_duality_gap_high_water().store(0.0); }

struct PspModel {
  LinearProgram lp;
  std::vector<int> p_var, f_var, theta_var, q_var;  // by element position
  std::vector<int> balance_row, kcl_up_row, kcl_lo_row;
  std::vector<int> cap_up_row, cap_lo_row, gen_cap_row, shed_cap_row;
};

inline PspModel build_psp(const PowerSystem& sys, const PlanVector& x, const Contingency& c,
                          const BigMPolicy& bigM = {}) {
  if (x.gen_build.size() != sys.generators.size() || x.branch_build.size() != sys.branches.size())
    throw std::invalid_argument("build_psp: plan vector does not match the system");
  const auto eff = apply_contingency(sys, x, c);
  const auto M = bigM.values(sys);

  PspModel mdl;
  auto& lp = mdl.lp;
  lp.sense = Sense::Min;

  const int nb = static_cast<int>(sys.buses.size());
  const int ng = static_cast<int>(sys.generators.size());
  const int ne = static_cast<int>(sys.branches.size());

  for (int g = 0; g < ng; ++g)
    mdl.p_var.push_back(lp.add_var(0.0, kInf, 0.0, "p_" + std::to_string(sys.generators[g].id)));
  for (int e = 0; e < ne; ++e)
    mdl.f_var.push_back(lp.add_var(-kInf, kInf, 0.0, "f_" + std::to_string(sys.branches[e].id)));
  for (int i = 0; i < nb; ++i) {
    // pin the first bus angle; the rest are free
    double lo = (i == 0) ? 0.0 : -kInf;
    double hi = (i == 0) ? 0.0 : kInf;
    mdl.theta_var.push_back(lp.add_var(lo, hi, 0.0, "th_" + std::to_string(sys.buses[i].id)));
  }
  for (int i = 0; i < nb; ++i)
    mdl.q_var.push_back(lp.add_var(0.0, kInf, 1.0, "q_" + std::to_string(sys.buses[i].id)));

  for (int i = 0; i < nb; ++i) {
    std::vector<std::pair<int, double>> terms;
    for (int g = 0; g < ng; ++g)
      if (sys.generators[g].bus == sys.buses[i].id) terms.push_back({mdl.p_var[g], 1.0});
    for (int e = 0; e < ne; ++e) {
      if (sys.branches[e].to_bus == sys.buses[i].id) terms.push_back({mdl.f_var[e], 1.0});
      if (sys.branches[e].from_bus == sys.buses[i].id) terms.push_back({mdl.f_var[e], -1.0});
    }
    terms.push_back({mdl.q_var[i], 1.0});
    mdl.balance_row.push_back(lp.add_row(terms, Rel::Eq, sys.buses[i].demand));
  }
  for (int e = 0; e < ne; ++e) {
    const auto& br = sys.branches[e];
    const int ti = sys.bus_index(br.from_bus), tj = sys.bus_index(br.to_bus);
    const int d = c.fails_branch(br.id) ? 1 : 0;
    const double slack = M[e] * (1.0 - x.branch_build[e] + d);
    mdl.kcl_up_row.push_back(lp.add_row(
        {{mdl.theta_var[ti], br.susceptance}, {mdl.theta_var[tj], -br.susceptance}, {mdl.f_var[e], -1.0}},
        Rel::Le, slack));
    mdl.kcl_lo_row.push_back(lp.add_row(
        {{mdl.f_var[e], 1.0}, {mdl.theta_var[ti], -br.susceptance}, {mdl.theta_var[tj], br.susceptance}},
        Rel::Le, slack));
  }
  for (int e = 0; e < ne; ++e) {
    double cap = sys.branches[e].capacity * eff.branch_available.at(sys.branches[e].id);
    mdl.cap_up_row.push_back(lp.add_row({{mdl.f_var[e], 1.0}}, Rel::Le, cap));
    mdl.cap_lo_row.push_back(lp.add_row({{mdl.f_var[e], -1.0}}, Rel::Le, cap));
  }
  for (int g = 0; g < ng; ++g) {
    double cap = sys.generators[g].pmax * eff.gen_available.at(sys.generators[g].id);
    mdl.gen_cap_row.push_back(lp.add_row({{mdl.p_var[g], 1.0}}, Rel::Le, cap));
  }
  for (int i = 0; i < nb; ++i)
    mdl.shed_cap_row.push_back(lp.add_row({{mdl.q_var[i], 1.0}}, Rel::Le, sys.buses[i].demand));
  return mdl;
}

/// Objective of the dual dispatch problem at a given dual point and build
/// vector. Evaluating at the generating build reproduces the shed (strong
/// duality); at any other build it bounds the shed from below.
inline double dual_objective_value(const PowerSystem& sys, const PlanVector& x, const Contingency& c,
                                   const PspDuals& duals, const BigMPolicy& bigM = {}) {
  const auto M = bigM.values(sys);
  double v = 0.0;
  for (const auto& b : sys.buses)
    v += b.demand * (duals.alpha.at(b.id) + duals.lambda.at(b.id));
  for (std::size_t e = 0; e < sys.branches.size(); ++e) {
    const auto& br = sys.branches[e];
    const int d = c.fails_branch(br.id) ? 1 : 0;
    v += M[e] * (1.0 - x.branch_build[e] + d) * (duals.beta_hat.at(br.id) + duals.beta_chk.at(br.id));
    v += br.capacity * x.branch_build[e] * (1 - d) * (duals.delta.at(br.id) + duals.eta.at(br.id));
  }
  for (std::size_t g = 0; g < sys.generators.size(); ++g) {
    const auto& gen = sys.generators[g];
    const int d = c.fails_generator(gen.id) ? 1 : 0;
    v += gen.pmax * x.gen_build[g] * (1 - d) * duals.zeta.at(gen.id);
  }
  return v;
}

inline PspResult solve_psp(const PowerSystem& sys, const PlanVector& x, const Contingency& c,
                           const BigMPolicy& bigM = {}) {
  PspModel mdl = build_psp(sys, x, c, bigM);
  LpSolution sol = nke::solve_lp(mdl.lp);

  PspResult r;
  r.status = sol.status;
  if (sol.status != SolveStatus::Optimal) return r;

  r.shed = sol.objective;
  for (std::size_t g = 0; g < sys.generators.size(); ++g)
    r.dispatch.generation[sys.generators[g].id] = sol.x[mdl.p_var[g]];
  for (std::size_t e = 0; e < sys.branches.size(); ++e)
    r.dispatch.flow[sys.branches[e].id] = sol.x[mdl.f_var[e]];
  for (std::size_t i = 0; i < sys.buses.size(); ++i) {
    r.dispatch.angle[sys.buses[i].id] = sol.x[mdl.theta_var[i]];
    r.shed_by_bus[sys.buses[i].id] = sol.x[mdl.q_var[i]];
  }
  for (std::size_t i = 0; i < sys.buses.size(); ++i) {
    r.duals.alpha[sys.buses[i].id] = sol.duals[mdl.balance_row[i]];
    r.duals.lambda[sys.buses[i].id] = sol.duals[mdl.shed_cap_row[i]];
  }
  for (std::size_t e = 0; e < sys.branches.size(); ++e) {
    const int id = sys.branches[e].id;
    r.duals.beta_hat[id] = sol.duals[mdl.kcl_up_row[e]];
    r.duals.beta_chk[id] = sol.duals[mdl.kcl_lo_row[e]];
    r.duals.delta[id] = sol.duals[mdl.cap_up_row[e]];
    r.duals.eta[id] = sol.duals[mdl.cap_lo_row[e]];
  }
  for (std::size_t g = 0; g < sys.generators.size(); ++g)
    r.duals.zeta[sys.generators[g].id] = sol.duals[mdl.gen_cap_row[g]];

  double dual_obj = dual_objective_value(sys, x, c, r.duals, bigM);
  r.duality_gap = std::fabs(r.shed - dual_obj) / (1.0 + std::fabs(r.shed));
  auto& hw = psp_duality_gap_high_water();
  double seen = hw.load();
  while (r.duality_gap > seen && !hw.compare_exchange_weak(seen, r.duality_gap)) {
  }
  return r;
}

/// Survivability inequality in the build variables, valid for every plan:
/// constant + sum coeff_g x_g + sum coeff_e x_e <= threshold.
struct FeasibilityCut {
  double constant = 0.0;
  std::map<int, double> gen_coeff;
  std::map<int, double> branch_coeff;
  double threshold = 0.0;
  Contingency source;
  // provenance, filled by the planner: the plan whose dispatch produced the
  // cut and the shed observed there (the cut is tight at that plan)
  PlanVector source_plan;
  double source_shed = 0.0;
};

inline double evaluate_cut_lhs(const FeasibilityCut& cut, const PowerSystem& sys, const PlanVector& x) {
  double v = cut.constant;
  for (const auto& [id, coef] : cut.gen_coeff) v += coef * x.gen_build.at(static_cast<std::size_t>(sys.generator_index(id)));
  for (const auto& [id, coef] : cut.branch_coeff) v += coef * x.branch_build.at(static_cast<std::size_t>(sys.branch_index(id)));
  return v;
}

/// Regroups the dual objective by build variable. The x-independent part goes
/// to the constant; every occurrence of x picks up its dual weight.
inline FeasibilityCut extract_feasibility_cut(const PowerSystem& sys, const Contingency& c,
                                              const PspDuals& duals, double threshold,
                                              const BigMPolicy& bigM = {}) {
  const auto M = bigM.values(sys);
  FeasibilityCut cut;
  cut.threshold = threshold;
  cut.source = c;
  for (const auto& b : sys.buses)
    cut.constant += b.demand * (duals.alpha.at(b.id) + duals.lambda.at(b.id));
  for (std::size_t e = 0; e < sys.branches.size(); ++e) {
    const auto& br = sys.branches[e];
    const int d = c.fails_branch(br.id) ? 1 : 0;
    const double beta = duals.beta_hat.at(br.id) + duals.beta_chk.at(br.id);
    cut.constant += M[e] * (1.0 + d) * beta;
    double coef = -M[e] * beta + br.capacity * (1 - d) * (duals.delta.at(br.id) + duals.eta.at(br.id));
    if (coef != 0.0) cut.branch_coeff[br.id] = coef;
  }
  for (std::size_t g = 0; g < sys.generators.size(); ++g) {
    const auto& gen = sys.generators[g];
    const int d = c.fails_generator(gen.id) ? 1 : 0;
    double coef = gen.pmax * (1 - d) * duals.zeta.at(gen.id);
    if (coef != 0.0) cut.gen_coeff[gen.id] = coef;
  }
  return cut;
}

}  // namespace nke
