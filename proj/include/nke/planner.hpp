#pragma once

// Expansion planning under a survivability criterion: pick the cheapest set
// of candidate generators and circuits such that after any failure of up to
// k elements the system can still serve demand, shedding at most the
// allowance granted to that failure cardinality.
//
// Three interchangeable algorithms:
//   solve_extensive      one dispatch block per failure state, single MILP
//   run_benders          master over builds, dispatch subproblem per state,
//                        violated states contribute dual feasibility cuts
//   run_cutting_planes   master over builds, worst-case failure search per
//                        cardinality class, one cut per round
//
// All three share the master skeleton: build binaries, a nominal dispatch
// block that must serve demand exactly, and the investment plus weighted
// nominal operating cost objective.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "nke/contingency.hpp"
#include "nke/model.hpp"
#include "nke/opf.hpp"
#include "nke/separation.hpp"
#include "nke/solver.hpp"

namespace nke {

/// Shed allowed for a failure state of the given cardinality.
inline double shed_allowance(const PowerSystem& sys, const SurvivabilityPolicy& policy, int card) {
  return policy.epsilon(card) * total_demand(sys);
}

enum class PlanOutcome {
  Optimal,
  Infeasible,
  IterationLimit,
  TimeLimit,
  StateLimit,
  NumericalFailure,
};

inline const char* to_string(PlanOutcome o) {
  switch (o) {
    case PlanOutcome::Optimal: return "optimal";
    case PlanOutcome::Infeasible: return "infeasible";
    case PlanOutcome::IterationLimit: return "iteration-limit";
    case PlanOutcome::TimeLimit: return "time-limit";
    case PlanOutcome::StateLimit: return "state-limit";
    case PlanOutcome::NumericalFailure: return "numerical-failure";
  }
  return "?";
}

struct PlannerConfig {
  BigMPolicy big_m;
  DualBounds dual_bounds;            // worst-case search boxes
  double mip_gap = 1e-3;             // relative gap for build decisions
  double violation_tol = 1e-6;       // shed above allowance by more than this counts
  int threads = 1;                   // dispatch sweep parallelism
  double time_limit_s = 0.0;         // 0 disables
  std::int64_t max_iterations = 500;
  std::uint64_t max_states = 10000;  // refuse extensive form beyond this
  bool separation_warm_start = true;
  bool separation_symmetry = true;
  bool trace = false;  // one progress line per iteration on stderr
};

struct PlanReport {
  std::string algorithm;
  PlanOutcome outcome = PlanOutcome::NumericalFailure;
  std::string note;

  double objective = 0.0;   // investment + weighted nominal operating cost
  double investment = 0.0;
  double operating = 0.0;
  PlanVector plan;
  Dispatch nominal;

  std::uint64_t states = 0;  // failure states in scope
  std::int64_t iterations = 0;
  std::int64_t cuts = 0;
  std::vector<FeasibilityCut> cut_pool;

  double runtime_s = 0.0;
  double master_s = 0.0;      // build MILP time
  double subproblem_s = 0.0;  // dispatch evaluations
  double separation_s = 0.0;  // worst-case search
};

namespace detail {

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

template <typename F>
inline void parallel_for(std::size_t n, int threads, F&& body) {
  threads = std::max(1, threads);
  if (threads == 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mu;
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n;) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  int count = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(threads), n));
  pool.reserve(count);
  for (int t = 0; t < count; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

/// Shared master skeleton: build binaries, nominal dispatch, objective.
struct MasterModel {
  MixedIntegerProgram mip;
  std::vector<int> xg, xe;            // build variable per element
  std::vector<int> p0, f0, th0, q0;   // q0 stays empty; nominal serves fully
};

inline MasterModel build_master(const PowerSystem& sys, const BigMPolicy& policy) {
  MasterModel m;
  auto& lp = m.mip.lp;
  lp.sense = Sense::Min;
  const auto M = policy.values(sys);
  const int nb = static_cast<int>(sys.buses.size());

  for (const auto& g : sys.generators) {
    double cost = g.existing ? 0.0 : g.invest_cost;
    double lo = g.existing ? 1.0 : 0.0;
    int v = lp.add_var(lo, 1.0, cost, "x_g" + std::to_string(g.id));
    m.mip.mark_binary(v);
    m.xg.push_back(v);
  }
  for (const auto& e : sys.branches) {
    double cost = e.existing ? 0.0 : e.invest_cost;
    double lo = e.existing ? 1.0 : 0.0;
    int v = lp.add_var(lo, 1.0, cost, "x_e" + std::to_string(e.id));
    m.mip.mark_binary(v);
    m.xe.push_back(v);
  }

  for (const auto& g : sys.generators)
    m.p0.push_back(lp.add_var(0.0, kInf, sys.sigma * g.marginal_cost, "p0_g" + std::to_string(g.id)));
  for (const auto& e : sys.branches)
    m.f0.push_back(lp.add_var(-kInf, kInf, 0.0, "f0_e" + std::to_string(e.id)));
  for (int i = 0; i < nb; ++i) {
    double hi = i == 0 ? 0.0 : kInf;          // angle reference
    double lo = i == 0 ? 0.0 : -kInf;
    m.th0.push_back(lp.add_var(lo, hi, 0.0, "th0_" + std::to_string(sys.buses[i].id)));
  }

  // nominal balance: full service, no shed variable
  for (int i = 0; i < nb; ++i) {
    std::vector<std::pair<int, double>> terms;
    for (std::size_t g = 0; g < sys.generators.size(); ++g)
      if (sys.bus_index(sys.generators[g].bus) == i) terms.push_back({m.p0[g], 1.0});
    for (std::size_t e = 0; e < sys.branches.size(); ++e) {
      const auto& br = sys.branches[e];
      if (sys.bus_index(br.to_bus) == i) terms.push_back({m.f0[e], 1.0});
      if (sys.bus_index(br.from_bus) == i) terms.push_back({m.f0[e], -1.0});
    }
    lp.add_row(terms, Rel::Eq, sys.buses[i].demand, "bal0");
  }
  for (std::size_t e = 0; e < sys.branches.size(); ++e) {
    const auto& br = sys.branches[e];
    int fi = sys.bus_index(br.from_bus), ti = sys.bus_index(br.to_bus);
    double b = br.susceptance;
    // flow definition holds when built, slack M when not
    lp.add_row({{m.th0[fi], b}, {m.th0[ti], -b}, {m.f0[e], -1.0}, {m.xe[e], M[e]}}, Rel::Le, M[e]);
    lp.add_row({{m.f0[e], 1.0}, {m.th0[fi], -b}, {m.th0[ti], b}, {m.xe[e], M[e]}}, Rel::Le, M[e]);
    lp.add_row({{m.f0[e], 1.0}, {m.xe[e], -br.capacity}}, Rel::Le, 0.0);
    lp.add_row({{m.f0[e], -1.0}, {m.xe[e], -br.capacity}}, Rel::Le, 0.0);
  }
  for (std::size_t g = 0; g < sys.generators.size(); ++g)
    lp.add_row({{m.p0[g], 1.0}, {m.xg[g], -sys.generators[g].pmax}}, Rel::Le, 0.0);

  return m;
}

inline void read_master_solution(const PowerSystem& sys, const MasterModel& m,
                                 const std::vector<double>& x, PlanReport& rep) {
  rep.plan.gen_build.resize(sys.generators.size());
  rep.plan.branch_build.resize(sys.branches.size());
  rep.investment = 0.0;
  for (std::size_t g = 0; g < sys.generators.size(); ++g) {
    rep.plan.gen_build[g] = x[m.xg[g]] > 0.5 ? 1 : 0;
    if (!sys.generators[g].existing && rep.plan.gen_build[g])
      rep.investment += sys.generators[g].invest_cost;
  }
  for (std::size_t e = 0; e < sys.branches.size(); ++e) {
    rep.plan.branch_build[e] = x[m.xe[e]] > 0.5 ? 1 : 0;
    if (!sys.branches[e].existing && rep.plan.branch_build[e])
      rep.investment += sys.branches[e].invest_cost;
  }
  rep.operating = 0.0;
  rep.nominal = Dispatch{};
  for (std::size_t g = 0; g < sys.generators.size(); ++g) {
    rep.nominal.generation[sys.generators[g].id] = x[m.p0[g]];
    rep.operating += sys.sigma * sys.generators[g].marginal_cost * x[m.p0[g]];
  }
  for (std::size_t e = 0; e < sys.branches.size(); ++e)
    rep.nominal.flow[sys.branches[e].id] = x[m.f0[e]];
  for (std::size_t i = 0; i < sys.buses.size(); ++i)
    rep.nominal.angle[sys.buses[i].id] = x[m.th0[i]];
  rep.objective = rep.investment + rep.operating;
}

inline PlanOutcome outcome_of(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return PlanOutcome::Optimal;
    case SolveStatus::Infeasible: return PlanOutcome::Infeasible;
    case SolveStatus::TimeLimit: return PlanOutcome::TimeLimit;
    case SolveStatus::NodeLimit: return PlanOutcome::IterationLimit;
    case SolveStatus::IterationLimit: return PlanOutcome::IterationLimit;
    default: return PlanOutcome::NumericalFailure;
  }
}

/// Adds the feasibility cut as a master row over the build binaries.
inline void add_cut_row(const PowerSystem& sys, MasterModel& m, const FeasibilityCut& cut) {
  std::vector<std::pair<int, double>> terms;
  for (const auto& [id, coef] : cut.gen_coeff) {
    int g = sys.generator_index(id);
    if (g < 0) throw std::logic_error("add_cut_row: unknown generator id");
    terms.push_back({m.xg[g], coef});
  }
  for (const auto& [id, coef] : cut.branch_coeff) {
    int e = sys.branch_index(id);
    if (e < 0) throw std::logic_error("add_cut_row: unknown branch id");
    terms.push_back({m.xe[e], coef});
  }
  m.mip.lp.add_row(std::move(terms), Rel::Le, cut.threshold - cut.constant,
                   "cut_" + cut.source.to_string());
}

inline void require_planner_inputs(const PowerSystem& sys, const SurvivabilityPolicy& policy) {
  auto defects = validate_system(sys);
  if (!defects.empty())
    throw std::invalid_argument("planner: system is not valid: " + defects.front().to_string());
  auto pd = policy.validate();
  if (!pd.empty())
    throw std::invalid_argument("planner: policy is not valid: " + pd.front().to_string());
}

}  // namespace detail

/// Extensive form: every failure state materialized as a dispatch block.
inline PlanReport solve_extensive(const PowerSystem& sys, const SurvivabilityPolicy& policy,
                                  const PlannerConfig& cfg = {}) {
  detail::require_planner_inputs(sys, policy);
  detail::Stopwatch clock;
  PlanReport rep;
  rep.algorithm = "extensive";

  const int n = static_cast<int>(sys.element_count());
  const int k = std::min(policy.k, n);
  BigCount m = count_states(static_cast<std::size_t>(n), k);
  if (m > BigCount(cfg.max_states)) {
    rep.outcome = PlanOutcome::StateLimit;
    rep.note = "state count " + m.str() + " exceeds the limit of " +
               std::to_string(cfg.max_states);
    rep.runtime_s = clock.seconds();
    return rep;
  }
  rep.states = static_cast<std::uint64_t>(m);

  auto master = detail::build_master(sys, cfg.big_m);
  auto& lp = master.mip.lp;
  const auto M = cfg.big_m.values(sys);
  const int nb = static_cast<int>(sys.buses.size());
  const double total = total_demand(sys);

  int state_no = 0;
  for (const auto& c : all_states(sys, k)) {
    ++state_no;
    const std::string tag = "s" + std::to_string(state_no);
    std::vector<int> p(sys.generators.size()), f(sys.branches.size()), th(nb), q(nb);
    for (std::size_t g = 0; g < sys.generators.size(); ++g) {
      double hi = c.fails_generator(sys.generators[g].id) ? 0.0 : kInf;
      p[g] = lp.add_var(0.0, hi, 0.0, tag + "_p");
    }
    for (std::size_t e = 0; e < sys.branches.size(); ++e) {
      double lim = c.fails_branch(sys.branches[e].id) ? 0.0 : kInf;
      f[e] = lp.add_var(-lim, lim, 0.0, tag + "_f");
    }
    for (int i = 0; i < nb; ++i) {
      double lim = i == 0 ? 0.0 : kInf;
      th[i] = lp.add_var(-lim, lim, 0.0, tag + "_th");
    }
    for (int i = 0; i < nb; ++i) q[i] = lp.add_var(0.0, sys.buses[i].demand, 0.0, tag + "_q");

    for (int i = 0; i < nb; ++i) {
      std::vector<std::pair<int, double>> terms;
      for (std::size_t g = 0; g < sys.generators.size(); ++g)
        if (sys.bus_index(sys.generators[g].bus) == i) terms.push_back({p[g], 1.0});
      for (std::size_t e = 0; e < sys.branches.size(); ++e) {
        const auto& br = sys.branches[e];
        if (sys.bus_index(br.to_bus) == i) terms.push_back({f[e], 1.0});
        if (sys.bus_index(br.from_bus) == i) terms.push_back({f[e], -1.0});
      }
      terms.push_back({q[i], 1.0});
      lp.add_row(terms, Rel::Eq, sys.buses[i].demand);
    }
    for (std::size_t e = 0; e < sys.branches.size(); ++e) {
      const auto& br = sys.branches[e];
      if (c.fails_branch(br.id)) continue;  // flow pinned to zero, angles decouple
      int fi = sys.bus_index(br.from_bus), ti = sys.bus_index(br.to_bus);
      double b = br.susceptance;
      lp.add_row({{th[fi], b}, {th[ti], -b}, {f[e], -1.0}, {master.xe[e], M[e]}}, Rel::Le, M[e]);
      lp.add_row({{f[e], 1.0}, {th[fi], -b}, {th[ti], b}, {master.xe[e], M[e]}}, Rel::Le, M[e]);
      lp.add_row({{f[e], 1.0}, {master.xe[e], -br.capacity}}, Rel::Le, 0.0);
      lp.add_row({{f[e], -1.0}, {master.xe[e], -br.capacity}}, Rel::Le, 0.0);
    }
    for (std::size_t g = 0; g < sys.generators.size(); ++g) {
      if (c.fails_generator(sys.generators[g].id)) continue;
      lp.add_row({{p[g], 1.0}, {master.xg[g], -sys.generators[g].pmax}}, Rel::Le, 0.0);
    }
    std::vector<std::pair<int, double>> shed;
    for (int i = 0; i < nb; ++i) shed.push_back({q[i], 1.0});
    lp.add_row(shed, Rel::Le, policy.epsilon(c.size()) * total, tag + "_shed");
  }

  MilpOptions mo;
  mo.rel_gap = cfg.mip_gap;
  mo.time_limit_s = cfg.time_limit_s;
  detail::Stopwatch master_clock;
  auto sol = solve_milp(master.mip, mo);
  rep.master_s = master_clock.seconds();
  rep.iterations = 1;
  rep.outcome = detail::outcome_of(sol.status);
  if (sol.status == SolveStatus::Optimal || sol.has_incumbent)
    detail::read_master_solution(sys, master, sol.x, rep);
  rep.runtime_s = clock.seconds();
  return rep;
}

/// Compliance audit for a fixed plan: dispatch every failure state up to k
/// (and the intact state, which must shed nothing) and compare against the
/// allowance of its cardinality.
struct ComplianceViolation {
  Contingency state;
  double shed = 0.0;
  double allowance = 0.0;
};

struct ComplianceReport {
  bool compliant = true;
  std::uint64_t states_checked = 0;
  double worst_margin = -kInf;  // shed minus allowance, most violated state
  Contingency worst_state;
  double worst_shed = 0.0;
  double worst_allowance = 0.0;
  std::vector<ComplianceViolation> violations;
};

inline ComplianceReport verify_compliance(const PowerSystem& sys, const PlanVector& x,
                                          const SurvivabilityPolicy& policy,
                                          const PlannerConfig& cfg = {}) {
  detail::require_planner_inputs(sys, policy);
  const int n = static_cast<int>(sys.element_count());
  const int k = std::min(policy.k, n);
  std::vector<Contingency> states;
  states.push_back({});  // intact system first
  for (auto& c : all_states(sys, k)) states.push_back(std::move(c));
  std::vector<double> shed(states.size());
  detail::parallel_for(states.size(), cfg.threads, [&](std::size_t i) {
    auto r = solve_psp(sys, x, states[i], cfg.big_m);
    if (r.status != SolveStatus::Optimal)
      throw std::runtime_error("verify_compliance: dispatch failed at state " +
                               states[i].to_string());
    shed[i] = r.shed;
  });

  ComplianceReport rep;
  rep.states_checked = states.size();
  const double total = total_demand(sys);
  for (std::size_t i = 0; i < states.size(); ++i) {
    double allow = states[i].empty() ? 0.0 : policy.epsilon(states[i].size()) * total;
    double margin = shed[i] - allow;
    if (margin > rep.worst_margin) {
      rep.worst_margin = margin;
      rep.worst_state = states[i];
      rep.worst_shed = shed[i];
      rep.worst_allowance = allow;
    }
    if (margin > cfg.violation_tol) {
      rep.compliant = false;
      rep.violations.push_back({states[i], shed[i], allow});
    }
  }
  return rep;
}

/// Packs a finished run into the persistable plan form (build decisions by
/// element id, nominal dispatch, total cost).
inline ExpansionPlan to_expansion_plan(const PowerSystem& sys, const PlanReport& rep) {
  ExpansionPlan plan;
  rep.plan.write_to(sys, plan);
  plan.dispatch0 = rep.nominal;
  plan.objective = rep.objective;
  return plan;
}

/// Master plus dispatch subproblems: sweep every failure state at the
/// current build, collect a dual feasibility cut per violated state, then
/// reoptimize the master; repeat until the sweep is clean.
inline PlanReport run_benders(const PowerSystem& sys, const SurvivabilityPolicy& policy,
                              const PlannerConfig& cfg = {}) {
  detail::require_planner_inputs(sys, policy);
  detail::Stopwatch clock;
  PlanReport rep;
  rep.algorithm = "benders";

  const int n = static_cast<int>(sys.element_count());
  const int k = std::min(policy.k, n);
  std::vector<Contingency> states = all_states(sys, k);
  rep.states = states.size();
  const double total = total_demand(sys);

  auto master = detail::build_master(sys, cfg.big_m);
  MilpOptions mo;
  mo.rel_gap = cfg.mip_gap;

  while (rep.iterations < cfg.max_iterations) {
    if (cfg.time_limit_s > 0.0 && clock.seconds() > cfg.time_limit_s) {
      rep.outcome = PlanOutcome::TimeLimit;
      break;
    }
    ++rep.iterations;
    if (cfg.time_limit_s > 0.0)
      mo.time_limit_s = std::max(0.1, cfg.time_limit_s - clock.seconds());
    detail::Stopwatch master_clock;
    auto sol = solve_milp(master.mip, mo);
    rep.master_s += master_clock.seconds();
    if (sol.status != SolveStatus::Optimal) {
      rep.outcome = detail::outcome_of(sol.status);
      rep.runtime_s = clock.seconds();
      return rep;
    }
    PlanVector x;
    x.gen_build.resize(sys.generators.size());
    x.branch_build.resize(sys.branches.size());
    for (std::size_t g = 0; g < sys.generators.size(); ++g)
      x.gen_build[g] = sol.x[master.xg[g]] > 0.5 ? 1 : 0;
    for (std::size_t e = 0; e < sys.branches.size(); ++e)
      x.branch_build[e] = sol.x[master.xe[e]] > 0.5 ? 1 : 0;

    detail::Stopwatch sweep_clock;
    std::vector<PspResult> results(states.size());
    detail::parallel_for(states.size(), cfg.threads, [&](std::size_t i) {
      results[i] = solve_psp(sys, x, states[i], cfg.big_m);
      if (results[i].status != SolveStatus::Optimal)
        throw std::runtime_error("benders: dispatch failed at state " + states[i].to_string());
    });
    rep.subproblem_s += sweep_clock.seconds();

    std::int64_t added = 0;
    for (std::size_t i = 0; i < states.size(); ++i) {
      double allow = policy.epsilon(states[i].size()) * total;
      if (results[i].shed > allow + cfg.violation_tol) {
        auto cut = extract_feasibility_cut(sys, states[i], results[i].duals, allow, cfg.big_m);
        cut.source_plan = x;
        cut.source_shed = results[i].shed;
        detail::add_cut_row(sys, master, cut);
        rep.cut_pool.push_back(std::move(cut));
        ++added;
      }
    }
    rep.cuts += added;
    if (cfg.trace)
      std::fprintf(stderr, "[bd] it=%lld obj=%.4f new-cuts=%lld total=%lld t=%.1fs\n",
                   static_cast<long long>(rep.iterations), sol.objective,
                   static_cast<long long>(added), static_cast<long long>(rep.cuts),
                   clock.seconds());
    if (added == 0) {
      rep.outcome = PlanOutcome::Optimal;
      detail::read_master_solution(sys, master, sol.x, rep);
      rep.runtime_s = clock.seconds();
      return rep;
    }
  }
  if (rep.outcome != PlanOutcome::TimeLimit) rep.outcome = PlanOutcome::IterationLimit;
  rep.runtime_s = clock.seconds();
  return rep;
}

/// Master plus worst-case search: per cardinality class, find the failure
/// set maximizing shed; cut off the most violated class and repeat. The
/// allowance schedule must be nondecreasing so that a class-j search, which
/// ranges over all cardinalities up to j, certifies every smaller class.
inline PlanReport run_cutting_planes(const PowerSystem& sys, const SurvivabilityPolicy& policy,
                                     const PlannerConfig& cfg = {}) {
  detail::require_planner_inputs(sys, policy);
  for (int j = 2; j <= policy.k; ++j)
    if (policy.epsilon(j) + 1e-12 < policy.epsilon(j - 1))
      throw std::invalid_argument(
          "run_cutting_planes: shed allowance must be nondecreasing in cardinality "
          "(class " + std::to_string(j) + " allows less than class " + std::to_string(j - 1) +
          ")");

  detail::Stopwatch clock;
  PlanReport rep;
  rep.algorithm = "cutting-plane";
  const int n = static_cast<int>(sys.element_count());
  const int k = std::min(policy.k, n);
  rep.states = static_cast<std::uint64_t>(count_states(static_cast<std::size_t>(n), k));
  const double total = total_demand(sys);

  auto master = detail::build_master(sys, cfg.big_m);
  MilpOptions mo;
  mo.rel_gap = cfg.mip_gap;

  SeparationOptions sep;
  sep.bounds = cfg.dual_bounds;
  sep.big_m = cfg.big_m;
  sep.greedy_warm_start = cfg.separation_warm_start;
  sep.symmetry_breaking = cfg.separation_symmetry;

  while (rep.iterations < cfg.max_iterations) {
    if (cfg.time_limit_s > 0.0 && clock.seconds() > cfg.time_limit_s) {
      rep.outcome = PlanOutcome::TimeLimit;
      break;
    }
    ++rep.iterations;
    if (cfg.time_limit_s > 0.0) {
      double remaining = std::max(0.1, cfg.time_limit_s - clock.seconds());
      mo.time_limit_s = remaining;
      sep.time_limit_s = remaining;
    }
    detail::Stopwatch master_clock;
    auto sol = solve_milp(master.mip, mo);
    rep.master_s += master_clock.seconds();
    if (sol.status != SolveStatus::Optimal) {
      rep.outcome = detail::outcome_of(sol.status);
      rep.runtime_s = clock.seconds();
      return rep;
    }
    PlanVector x;
    x.gen_build.resize(sys.generators.size());
    x.branch_build.resize(sys.branches.size());
    for (std::size_t g = 0; g < sys.generators.size(); ++g)
      x.gen_build[g] = sol.x[master.xg[g]] > 0.5 ? 1 : 0;
    for (std::size_t e = 0; e < sys.branches.size(); ++e)
      x.branch_build[e] = sol.x[master.xe[e]] > 0.5 ? 1 : 0;

    // most violated cardinality class wins the round
    double best_violation = 0.0;
    SeparationResult best;
    bool violated = false;
    detail::Stopwatch sep_clock;
    for (int j = 1; j <= k; ++j) {
      auto r = solve_separation(sys, x, j, sep);
      if (r.status != SolveStatus::Optimal) {
        rep.outcome = detail::outcome_of(r.status);
        rep.note = "worst-case search failed in class " + std::to_string(j) + ": " +
                   std::string(to_string(r.status));
        rep.separation_s += sep_clock.seconds();
        rep.runtime_s = clock.seconds();
        return rep;
      }
      double viol = r.worst_shed - policy.epsilon(j) * total;
      // strict improvement keeps ties on the smaller class
      if (viol > best_violation + cfg.violation_tol) {
        best_violation = viol;
        best = r;
        violated = true;
      }
    }
    rep.separation_s += sep_clock.seconds();
    if (cfg.trace)
      std::fprintf(stderr, "[cpa] it=%lld obj=%.4f worst=%s shed=%.3f viol=%.3f t=%.1fs\n",
                   static_cast<long long>(rep.iterations), sol.objective,
                   best.worst.to_string().c_str(), best.worst_shed, best_violation,
                   clock.seconds());

    if (!violated) {
      rep.outcome = PlanOutcome::Optimal;
      detail::read_master_solution(sys, master, sol.x, rep);
      rep.runtime_s = clock.seconds();
      return rep;
    }

    detail::Stopwatch psp_clock;
    auto psp = solve_psp(sys, x, best.worst, cfg.big_m);
    rep.subproblem_s += psp_clock.seconds();
    if (psp.status != SolveStatus::Optimal)
      throw std::runtime_error("run_cutting_planes: dispatch failed at " + best.worst.to_string());
    double allow = policy.epsilon(best.worst.size()) * total;
    auto cut = extract_feasibility_cut(sys, best.worst, psp.duals, allow, cfg.big_m);
    cut.source_plan = x;
    cut.source_shed = psp.shed;
    detail::add_cut_row(sys, master, cut);
    rep.cut_pool.push_back(std::move(cut));
    ++rep.cuts;
  }
  if (rep.iterations >= cfg.max_iterations && rep.outcome != PlanOutcome::TimeLimit)
    rep.outcome = PlanOutcome::IterationLimit;
  rep.runtime_s = clock.seconds();
  return rep;
}

}  // namespace nke
