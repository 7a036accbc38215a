#pragma once

// Worst-case failure search for a fixed build decision: which set of at most
// j available elements maximizes the unavoidable load shed?
//
// The inner dispatch minimization is replaced by its dual (a maximization),
// which folds the bilevel problem into a single MILP: binary failure picks
// d multiply dual variables in the objective, and each product is replaced
// by an auxiliary variable with an exact linearization (the dual factor
// lives in a box [L, 0], so w = d * v needs three rows plus the box).
//
// Only elements present under the build vector participate: failing an
// absent element changes nothing, so the search space shrinks to the built
// subnetwork without affecting the optimum. Dual variables are boxed; the
// boxes are generous and a fresh dispatch solve at the returned failure set
// cross-checks the objective, so an instance that somehow needed a larger
// box is reported instead of silently mis-separated.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "nke/contingency.hpp"
#include "nke/model.hpp"
#include "nke/opf.hpp"
#include "nke/solver.hpp"

namespace nke {

/// Boxes for the dispatch dual variables inside the separation MILP. In a
/// meshed network the capacity and balance multipliers are NOT bounded by
/// the unit shed price (congestion components can push them well past it),
/// so the defaults carry headroom and the solver enlarges every box and
/// retries whenever a verification solve shows an optimal multiplier was
/// clipped. The flow-definition multipliers get a susceptance-scaled box.
struct DualBounds {
  double alpha_abs = 8.0;
  double lambda_abs = 8.0;
  double flowcap_abs = 4.0;
  double gencap_abs = 4.0;
  double beta_safety = 10.0;

  double beta_abs(const TransmissionElement& e, double big_m) const {
    return beta_safety * 2.0 * (2.0 * e.susceptance + 1.0) / big_m;
  }

  DualBounds scaled(double s) const {
    DualBounds b = *this;
    b.alpha_abs *= s;
    b.lambda_abs *= s;
    b.flowcap_abs *= s;
    b.gencap_abs *= s;
    b.beta_safety *= s;
    return b;
  }
};

struct SeparationOptions {
  DualBounds bounds;
  BigMPolicy big_m;
  bool greedy_warm_start = true;
  bool symmetry_breaking = true;
  double time_limit_s = 0.0;
  std::int64_t max_nodes = 5'000'000;
};

struct SeparationResult {
  SolveStatus status = SolveStatus::NumericalFailure;
  double worst_shed = 0.0;
  Contingency worst;       // empty when nothing sheds
  std::int64_t nodes = 0;
  std::int64_t psp_evals = 0;  // warm-start dispatch solves
};

struct SeparationModel {
  MixedIntegerProgram mip;
  std::vector<int> built_gen_pos, built_branch_pos;  // positions into the system
  std::vector<int> d_var;                            // per participating element, gens first
};

inline SeparationModel build_separation(const PowerSystem& sys, const PlanVector& x, int budget,
                                        const SeparationOptions& opt = {}) {
  if (budget < 1) throw std::invalid_argument("build_separation: budget must be >= 1");
  if (x.gen_build.size() != sys.generators.size() || x.branch_build.size() != sys.branches.size())
    throw std::invalid_argument("build_separation: plan vector does not match the system");

  const auto M = opt.big_m.values(sys);
  SeparationModel mdl;
  auto& lp = mdl.mip.lp;
  lp.sense = Sense::Max;

  for (std::size_t g = 0; g < sys.generators.size(); ++g)
    if (x.gen_build[g]) mdl.built_gen_pos.push_back(static_cast<int>(g));
  for (std::size_t e = 0; e < sys.branches.size(); ++e)
    if (x.branch_build[e]) mdl.built_branch_pos.push_back(static_cast<int>(e));

  const auto& B = opt.bounds;
  const int nb = static_cast<int>(sys.buses.size());

  // dual variables of the dispatch problem, objective coefficients attached
  std::vector<int> alpha(nb), lambda(nb);
  for (int i = 0; i < nb; ++i) {
    double d = sys.buses[i].demand;
    alpha[i] = lp.add_var(-B.alpha_abs, B.alpha_abs, d, "alpha_" + std::to_string(sys.buses[i].id));
    lambda[i] = lp.add_var(-B.lambda_abs, 0.0, d, "lambda_" + std::to_string(sys.buses[i].id));
  }
  std::vector<int> bhat, bchk, delta, eta, wbeta, wcap;
  for (int e : mdl.built_branch_pos) {
    const auto& br = sys.branches[e];
    const std::string id = std::to_string(br.id);
    double bb = B.beta_abs(br, M[e]);
    // unfailed branches keep the slack at zero, so beta enters the objective
    // only through the product w_beta = d * (bhat + bchk)
    bhat.push_back(lp.add_var(-bb, 0.0, 0.0, "bhat_" + id));
    bchk.push_back(lp.add_var(-bb, 0.0, 0.0, "bchk_" + id));
    delta.push_back(lp.add_var(-B.flowcap_abs, 0.0, br.capacity, "delta_" + id));
    eta.push_back(lp.add_var(-B.flowcap_abs, 0.0, br.capacity, "eta_" + id));
    wbeta.push_back(lp.add_var(-2.0 * bb, 0.0, M[e], "wbeta_" + id));
    wcap.push_back(lp.add_var(-2.0 * B.flowcap_abs, 0.0, -br.capacity, "wcap_" + id));
  }
  std::vector<int> zeta, wgen;
  for (int g : mdl.built_gen_pos) {
    const auto& gen = sys.generators[g];
    const std::string id = std::to_string(gen.id);
    zeta.push_back(lp.add_var(-B.gencap_abs, 0.0, gen.pmax, "zeta_" + id));
    wgen.push_back(lp.add_var(-B.gencap_abs, 0.0, -gen.pmax, "wgen_" + id));
  }

  // failure picks, gens first then branches, and the cardinality budget
  std::vector<std::pair<int, double>> budget_row;
  for (int g : mdl.built_gen_pos) {
    int v = lp.add_var(0.0, 1.0, 0.0, "d_g" + std::to_string(sys.generators[g].id));
    mdl.mip.mark_binary(v);
    mdl.d_var.push_back(v);
    budget_row.push_back({v, 1.0});
  }
  for (int e : mdl.built_branch_pos) {
    int v = lp.add_var(0.0, 1.0, 0.0, "d_e" + std::to_string(sys.branches[e].id));
    mdl.mip.mark_binary(v);
    mdl.d_var.push_back(v);
    budget_row.push_back({v, 1.0});
  }
  lp.add_row(budget_row, Rel::Le, static_cast<double>(budget), "budget");

  // dual feasibility: one row per dispatch variable of the built subnetwork
  for (int i = 0; i < nb; ++i)
    lp.add_row({{alpha[i], 1.0}, {lambda[i], 1.0}}, Rel::Le, 1.0, "col_q");
  for (std::size_t t = 0; t < mdl.built_gen_pos.size(); ++t) {
    int bus = sys.bus_index(sys.generators[mdl.built_gen_pos[t]].bus);
    lp.add_row({{alpha[bus], 1.0}, {zeta[t], 1.0}}, Rel::Le, 0.0, "col_p");
  }
  for (std::size_t t = 0; t < mdl.built_branch_pos.size(); ++t) {
    const auto& br = sys.branches[mdl.built_branch_pos[t]];
    int fi = sys.bus_index(br.from_bus), ti = sys.bus_index(br.to_bus);
    lp.add_row({{alpha[ti], 1.0},
                {alpha[fi], -1.0},
                {bhat[t], -1.0},
                {bchk[t], 1.0},
                {delta[t], 1.0},
                {eta[t], -1.0}},
               Rel::Eq, 0.0, "col_f");
  }
  for (int i = 1; i < nb; ++i) {  // bus 0 is the pinned angle reference
    std::vector<std::pair<int, double>> terms;
    for (std::size_t t = 0; t < mdl.built_branch_pos.size(); ++t) {
      const auto& br = sys.branches[mdl.built_branch_pos[t]];
      double sgn = 0.0;
      if (sys.bus_index(br.from_bus) == i) sgn = 1.0;
      else if (sys.bus_index(br.to_bus) == i) sgn = -1.0;
      if (sgn == 0.0) continue;
      terms.push_back({bhat[t], sgn * br.susceptance});
      terms.push_back({bchk[t], -sgn * br.susceptance});
    }
    if (!terms.empty()) lp.add_row(terms, Rel::Eq, 0.0, "col_th");
  }

  // exact product linearization: w = d * v with v in [L, 0]
  auto link_product = [&](int w, int d, int v, double L) {
    lp.add_row({{w, 1.0}, {d, -L}}, Rel::Ge, 0.0);
    lp.add_row({{w, 1.0}, {v, -1.0}}, Rel::Ge, 0.0);
    lp.add_row({{w, 1.0}, {v, -1.0}, {d, -L}}, Rel::Le, -L);
  };
  {
    std::size_t ng = mdl.built_gen_pos.size();
    for (std::size_t t = 0; t < ng; ++t)
      link_product(wgen[t], mdl.d_var[t], zeta[t], -B.gencap_abs);
    for (std::size_t t = 0; t < mdl.built_branch_pos.size(); ++t) {
      int d = mdl.d_var[ng + t];
      const auto& br = sys.branches[mdl.built_branch_pos[t]];
      double bb = B.beta_abs(br, M[mdl.built_branch_pos[t]]);
      // products of d with the sums (bhat+bchk) and (delta+eta)
      int sb = lp.add_var(-2.0 * bb, 0.0, 0.0, "sumb");
      lp.add_row({{sb, 1.0}, {bhat[t], -1.0}, {bchk[t], -1.0}}, Rel::Eq, 0.0);
      link_product(wbeta[t], d, sb, -2.0 * bb);
      int sc = lp.add_var(-2.0 * B.flowcap_abs, 0.0, 0.0, "sumc");
      lp.add_row({{sc, 1.0}, {delta[t], -1.0}, {eta[t], -1.0}}, Rel::Eq, 0.0);
      link_product(wcap[t], d, sc, -2.0 * B.flowcap_abs);
    }
  }

  // the objective never exceeds the total demand; stating that tightens the
  // relaxation considerably
  {
    std::vector<std::pair<int, double>> cap;
    for (std::size_t j = 0; j < lp.num_vars(); ++j)
      if (lp.vars[j].obj != 0.0) cap.push_back({static_cast<int>(j), lp.vars[j].obj});
    lp.add_row(cap, Rel::Le, total_demand(sys), "shed_ceiling");
  }

  if (opt.symmetry_breaking) {
    // interchangeable duplicates: force failures onto the lower id first
    std::size_t ng = mdl.built_gen_pos.size();
    for (std::size_t a = 0; a < mdl.built_branch_pos.size(); ++a)
      for (std::size_t b = a + 1; b < mdl.built_branch_pos.size(); ++b) {
        const auto& ea = sys.branches[mdl.built_branch_pos[a]];
        const auto& eb = sys.branches[mdl.built_branch_pos[b]];
        if (ea.from_bus == eb.from_bus && ea.to_bus == eb.to_bus &&
            ea.susceptance == eb.susceptance && ea.capacity == eb.capacity)
          lp.add_row({{mdl.d_var[ng + b], 1.0}, {mdl.d_var[ng + a], -1.0}}, Rel::Le, 0.0, "twin");
      }
    for (std::size_t a = 0; a < ng; ++a)
      for (std::size_t b = a + 1; b < ng; ++b) {
        const auto& ga = sys.generators[mdl.built_gen_pos[a]];
        const auto& gb = sys.generators[mdl.built_gen_pos[b]];
        if (ga.bus == gb.bus && ga.pmax == gb.pmax)
          lp.add_row({{mdl.d_var[b], 1.0}, {mdl.d_var[a], -1.0}}, Rel::Le, 0.0, "twin");
      }
  }
  return mdl;
}

/// Exhaustive reference oracle: dispatch solve per failure state.
inline SeparationResult brute_force_worst_case(const PowerSystem& sys, const PlanVector& x,
                                               int budget, const BigMPolicy& big_m = {},
                                               std::uint64_t state_guard = 100000) {
  std::vector<std::pair<bool, int>> built;  // (is_generator, id), enumeration order
  for (std::size_t g = 0; g < sys.generators.size(); ++g)
    if (x.gen_build[g]) built.push_back({true, sys.generators[g].id});
  for (std::size_t e = 0; e < sys.branches.size(); ++e)
    if (x.branch_build[e]) built.push_back({false, sys.branches[e].id});
  int n = static_cast<int>(built.size());
  int k = std::min(budget, n);
  if (k >= 1 && count_states(static_cast<std::size_t>(n), k) > BigCount(state_guard))
    throw std::invalid_argument("brute_force_worst_case: state space exceeds the guard of " +
                                std::to_string(state_guard));

  SeparationResult best;
  best.status = SolveStatus::Optimal;
  best.worst_shed = 0.0;

  std::vector<int> picks;
  auto eval = [&](const std::vector<int>& sel) {
    Contingency c;
    for (int t : sel)
      (built[t].first ? c.failed_generators : c.failed_branches).push_back(built[t].second);
    auto r = solve_psp(sys, x, c, big_m);
    ++best.psp_evals;
    if (r.status != SolveStatus::Optimal)
      throw std::runtime_error("brute_force_worst_case: dispatch solve failed");
    if (r.shed > best.worst_shed + 1e-9) {
      best.worst_shed = r.shed;
      best.worst = c;
    }
  };
  // cardinality-major enumeration, matching the state enumerator's order
  for (int card = 1; card <= k; ++card) {
    picks.assign(card, 0);
    for (int i = 0; i < card; ++i) picks[i] = i;
    while (true) {
      eval(picks);
      int i = card - 1;
      while (i >= 0 && picks[i] == n - card + i) --i;
      if (i < 0) break;
      ++picks[i];
      for (int t = i + 1; t < card; ++t) picks[t] = picks[t - 1] + 1;
    }
  }
  return best;
}

inline SeparationResult solve_separation(const PowerSystem& sys, const PlanVector& x, int budget,
                                         const SeparationOptions& opt = {}) {
  if (budget < 1) throw std::invalid_argument("solve_separation: budget must be >= 1");
  const auto t_start = std::chrono::steady_clock::now();
  auto remaining_s = [&]() -> double {
    if (opt.time_limit_s <= 0.0) return 0.0;  // 0 disables limits downstream
    double el = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return std::max(opt.time_limit_s - el, 1e-3);
  };

  std::vector<int> built_gen_pos, built_branch_pos;
  for (std::size_t g = 0; g < sys.generators.size(); ++g)
    if (x.gen_build[g]) built_gen_pos.push_back(static_cast<int>(g));
  for (std::size_t e = 0; e < sys.branches.size(); ++e)
    if (x.branch_build[e]) built_branch_pos.push_back(static_cast<int>(e));
  const std::size_t ng = built_gen_pos.size();
  const std::size_t n = ng + built_branch_pos.size();

  auto contingency_of = [&](const std::vector<int>& bits) {
    Contingency c;
    for (std::size_t t = 0; t < ng; ++t)
      if (bits[t]) c.failed_generators.push_back(sys.generators[built_gen_pos[t]].id);
    for (std::size_t t = 0; t < built_branch_pos.size(); ++t)
      if (bits[ng + t]) c.failed_branches.push_back(sys.branches[built_branch_pos[t]].id);
    c.normalize();
    return c;
  };

  SeparationResult out;
  out.status = SolveStatus::Optimal;

  // every singleton is priced regardless of the budget: at budget 1 this IS
  // the search (exact, no dual boxes involved), and beyond it the best seed
  // both warm starts the tree and provides a floor no boxed model may
  // undercut
  std::vector<int> bits(n, 0);
  double cur = 0.0;
  std::size_t cur_pick = n;
  for (std::size_t t = 0; t < n; ++t) {
    bits.assign(n, 0);
    bits[t] = 1;
    auto r = solve_psp(sys, x, contingency_of(bits), opt.big_m);
    ++out.psp_evals;
    if (r.status != SolveStatus::Optimal)
      throw std::runtime_error("solve_separation: dispatch solve failed: " +
                               std::string(to_string(r.status)));
    if (r.shed > cur) {
      cur = r.shed;
      cur_pick = t;
    }
  }
  if (budget == 1 || n <= 1) {
    out.worst_shed = cur;
    if (cur_pick < n) {
      bits.assign(n, 0);
      bits[cur_pick] = 1;
      out.worst = contingency_of(bits);
    }
    return out;
  }

  // greedy extension up to the budget
  bits.assign(n, 0);
  if (cur_pick < n) bits[cur_pick] = 1;
  for (int extend = 2; extend <= budget && cur_pick < n; ++extend) {
    std::size_t best_t = n;
    double best_v = cur;
    for (std::size_t t = 0; t < n; ++t) {
      if (bits[t]) continue;
      bits[t] = 1;
      auto r = solve_psp(sys, x, contingency_of(bits), opt.big_m);
      ++out.psp_evals;
      bits[t] = 0;
      if (r.status == SolveStatus::Optimal && r.shed > best_v) {
        best_v = r.shed;
        best_t = t;
      }
    }
    if (best_t == n) break;
    bits[best_t] = 1;
    cur = best_v;
  }
  const double greedy_floor = cur;
  const std::vector<int> greedy_bits = bits;

  // boxed-dual search; whenever verification shows a clipped multiplier,
  // enlarge every box and try again
  std::string last_complaint;
  for (double scale : {1.0, 10.0, 100.0}) {
    SeparationOptions scaled = opt;
    scaled.bounds = opt.bounds.scaled(scale);
    SeparationModel mdl = build_separation(sys, x, budget, scaled);

    MilpOptions milp;
    milp.rel_gap = 0.0;
    milp.abs_gap = 1e-9;
    milp.time_limit_s = remaining_s();
    milp.max_nodes = opt.max_nodes;
    if (greedy_floor > 0.0 && opt.greedy_warm_start) milp.start_solutions.push_back(greedy_bits);

    auto sol = solve_milp(mdl.mip, milp);
    out.status = sol.status;
    out.nodes += sol.nodes;
    if (sol.status != SolveStatus::Optimal) return out;  // limit hit or failed

    std::vector<int> pick(n, 0);
    for (std::size_t t = 0; t < n; ++t) pick[t] = sol.x[mdl.d_var[t]] > 0.5 ? 1 : 0;
    Contingency worst = contingency_of(pick);

    // verification: the claimed optimum must match a fresh dispatch solve at
    // the returned contingency and may not undercut the enumerated floor
    auto check = solve_psp(sys, x, worst, opt.big_m);
    ++out.psp_evals;
    if (check.status != SolveStatus::Optimal)
      throw std::runtime_error("solve_separation: verification dispatch failed: " +
                               std::string(to_string(check.status)));
    double tol = 1e-4 * (1.0 + std::fabs(sol.objective));
    if (std::fabs(check.shed - sol.objective) > tol) {
      last_complaint = "objective " + std::to_string(sol.objective) +
                       " disagrees with the dispatch shed " + std::to_string(check.shed) +
                       " at " + worst.to_string();
      continue;  // clipped: enlarge the boxes
    }
    if (sol.objective < greedy_floor - tol) {
      last_complaint = "objective " + std::to_string(sol.objective) +
                       " fell below the enumerated floor " + std::to_string(greedy_floor);
      continue;
    }
    out.worst_shed = check.shed;
    out.worst = worst;
    return out;
  }
  throw std::runtime_error("solve_separation: " + last_complaint +
                           "; the dual variable boxes stayed too tight after repeated enlargement");
}

}  // namespace nke
