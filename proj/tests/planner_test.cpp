#include <catch2/catch_amalgamated.hpp>

#include "nke/planner.hpp"
#include "support/fixtures.hpp"
#include "support/random_system.hpp"

using namespace nke;
using namespace nke::testing;

namespace {

PlannerConfig exact_config() {
  PlannerConfig cfg;
  cfg.mip_gap = 0.0;  // the desk instances have known exact optima
  return cfg;
}

void expect_compliant(const PowerSystem& sys, const PlanReport& rep,
                      const SurvivabilityPolicy& policy) {
  REQUIRE(rep.outcome == PlanOutcome::Optimal);
  auto audit = verify_compliance(sys, rep.plan, policy);
  INFO("worst state " << audit.worst_state.to_string() << " shed " << audit.worst_shed
                      << " allowance " << audit.worst_allowance);
  CHECK(audit.compliant);
}

}  // namespace

TEST_CASE("corridor expansion against single failures", "[planner]") {
  auto sys = two_bus();
  auto policy = SurvivabilityPolicy::uniform(1, 0.0);
  auto cfg = exact_config();

  // the load is lost when either the line or the generator fails, so both
  // spares must be built: 20 + 10 investment plus 80 nominal generation
  auto check = [&](const PlanReport& rep) {
    REQUIRE(rep.outcome == PlanOutcome::Optimal);
    CHECK(rep.objective == Catch::Approx(110.0).margin(1e-6));
    CHECK(rep.investment == Catch::Approx(30.0).margin(1e-6));
    CHECK(rep.operating == Catch::Approx(80.0).margin(1e-6));
    CHECK(rep.plan.gen_build == std::vector<int>{1, 1});
    CHECK(rep.plan.branch_build == std::vector<int>{1, 1});
    CHECK(rep.nominal.generation.at(1) == Catch::Approx(80.0).margin(1e-6));
    CHECK(rep.nominal.generation.at(2) == Catch::Approx(0.0).margin(1e-6));
    expect_compliant(sys, rep, policy);
  };

  SECTION("extensive form") {
    auto rep = solve_extensive(sys, policy, cfg);
    CHECK(rep.states == 4);
    check(rep);
  }
  SECTION("benders") {
    auto rep = run_benders(sys, policy, cfg);
    CHECK(rep.states == 4);
    check(rep);
  }
  SECTION("cutting planes") {
    auto rep = run_cutting_planes(sys, policy, cfg);
    check(rep);
  }
}

TEST_CASE("zero contingency budget reduces to nominal planning", "[planner]") {
  auto sys = two_bus();
  SurvivabilityPolicy policy;
  policy.k = 0;
  auto cfg = exact_config();

  // no failure states: serve 80 from the cheap existing unit, build nothing
  for (auto rep : {solve_extensive(sys, policy, cfg), run_benders(sys, policy, cfg),
                   run_cutting_planes(sys, policy, cfg)}) {
    REQUIRE(rep.outcome == PlanOutcome::Optimal);
    CHECK(rep.objective == Catch::Approx(80.0).margin(1e-6));
    CHECK(rep.investment == 0.0);
    CHECK(rep.states == 0);
    CHECK(rep.cuts == 0);
  }

  auto audit = verify_compliance(sys, PlanVector::existing_only(sys), policy);
  CHECK(audit.compliant);
  CHECK(audit.states_checked == 1);  // just the intact system
}

TEST_CASE("benders trace on the corridor", "[planner]") {
  auto sys = two_bus();
  auto rep = run_benders(sys, SurvivabilityPolicy::uniform(1, 0.0), exact_config());
  REQUIRE(rep.outcome == PlanOutcome::Optimal);

  // round one builds nothing and two states are violated; round two is clean
  CHECK(rep.iterations == 2);
  CHECK(rep.cuts == 2);
  REQUIRE(rep.cut_pool.size() == 2);

  const auto& gen_cut = rep.cut_pool[0];
  CHECK(gen_cut.source.to_string() == "g1");
  CHECK(gen_cut.threshold == Catch::Approx(0.0));
  CHECK(gen_cut.constant == Catch::Approx(80.0).margin(1e-6));
  REQUIRE(gen_cut.gen_coeff.count(2) == 1);
  CHECK(gen_cut.gen_coeff.at(2) == Catch::Approx(-100.0).margin(1e-6));

  const auto& line_cut = rep.cut_pool[1];
  CHECK(line_cut.source.to_string() == "e1");
  CHECK(line_cut.constant == Catch::Approx(80.0).margin(1e-6));
  REQUIRE(line_cut.branch_coeff.count(2) == 1);
  CHECK(line_cut.branch_coeff.at(2) <= -80.0);
}

TEST_CASE("cutting planes on the corridor", "[planner]") {
  auto sys = two_bus();
  auto rep = run_cutting_planes(sys, SurvivabilityPolicy::uniform(1, 0.0), exact_config());
  REQUIRE(rep.outcome == PlanOutcome::Optimal);
  CHECK(rep.objective == Catch::Approx(110.0).margin(1e-6));
  CHECK(rep.cuts == rep.iterations - 1);  // one cut per round until the clean round
  CHECK(rep.cuts <= 6);
}

TEST_CASE("tight double-failure allowance is infeasible", "[planner]") {
  auto sys = two_bus();
  SurvivabilityPolicy policy;
  policy.k = 2;
  policy.epsilon_schedule = {{1, 0.0}, {2, 0.05}};  // 4 MW allowance, both units lost sheds 80
  auto cfg = exact_config();

  CHECK(solve_extensive(sys, policy, cfg).outcome == PlanOutcome::Infeasible);
  CHECK(run_benders(sys, policy, cfg).outcome == PlanOutcome::Infeasible);
  CHECK(run_cutting_planes(sys, policy, cfg).outcome == PlanOutcome::Infeasible);
}

TEST_CASE("generous double-failure allowance matches the single-failure plan", "[planner]") {
  auto sys = two_bus();
  SurvivabilityPolicy policy;
  policy.k = 2;
  policy.epsilon_schedule = {{1, 0.0}, {2, 1.0}};  // double failures may shed everything
  auto cfg = exact_config();

  auto ef = solve_extensive(sys, policy, cfg);
  CHECK(ef.states == 10);
  CHECK(ef.objective == Catch::Approx(110.0).margin(1e-6));
  auto bd = run_benders(sys, policy, cfg);
  CHECK(bd.objective == Catch::Approx(110.0).margin(1e-6));
  auto cp = run_cutting_planes(sys, policy, cfg);
  CHECK(cp.objective == Catch::Approx(110.0).margin(1e-6));
}

TEST_CASE("triangle with candidate duplicates", "[planner]") {
  auto sys = three_bus_candidates();
  auto policy = SurvivabilityPolicy::uniform(1, 0.0);
  auto cfg = exact_config();

  // 100 nominal generation cost plus three 5-unit spares; several spare
  // combinations are optimal, so only value and compliance are pinned
  auto ef = solve_extensive(sys, policy, cfg);
  REQUIRE(ef.outcome == PlanOutcome::Optimal);
  CHECK(ef.objective == Catch::Approx(115.0).margin(1e-6));
  expect_compliant(sys, ef, policy);

  auto bd = run_benders(sys, policy, cfg);
  CHECK(bd.objective == Catch::Approx(115.0).margin(1e-6));
  expect_compliant(sys, bd, policy);

  auto cp = run_cutting_planes(sys, policy, cfg);
  CHECK(cp.objective == Catch::Approx(115.0).margin(1e-6));
  expect_compliant(sys, cp, policy);
}

TEST_CASE("algorithms agree on random systems", "[planner]") {
  auto policy = SurvivabilityPolicy::uniform(1, 0.0);
  auto cfg = exact_config();
  for (unsigned seed : {21u, 22u, 23u, 24u}) {
    DYNAMIC_SECTION("seed " << seed) {
      auto sys = random_system(seed);
      auto ef = solve_extensive(sys, policy, cfg);
      auto bd = run_benders(sys, policy, cfg);
      auto cp = run_cutting_planes(sys, policy, cfg);
      CHECK(bd.outcome == ef.outcome);
      CHECK(cp.outcome == ef.outcome);
      if (ef.outcome == PlanOutcome::Optimal) {
        CHECK(bd.objective == Catch::Approx(ef.objective).margin(1e-5));
        CHECK(cp.objective == Catch::Approx(ef.objective).margin(1e-5));
        expect_compliant(sys, bd, policy);
        expect_compliant(sys, cp, policy);
      }
    }
  }
}

TEST_CASE("benders and cutting planes agree at double failures", "[planner]") {
  auto sys = random_system(31);
  SurvivabilityPolicy policy;
  policy.k = 2;
  policy.epsilon_schedule = {{1, 0.0}, {2, 0.5}};
  auto cfg = exact_config();
  auto bd = run_benders(sys, policy, cfg);
  auto cp = run_cutting_planes(sys, policy, cfg);
  CHECK(bd.outcome == cp.outcome);
  if (bd.outcome == PlanOutcome::Optimal) {
    CHECK(bd.objective == Catch::Approx(cp.objective).margin(1e-5));
    expect_compliant(sys, bd, policy);
    expect_compliant(sys, cp, policy);
  }
}

TEST_CASE("compliance audit flags a bare plan", "[planner]") {
  auto sys = two_bus();
  auto x = PlanVector::existing_only(sys);
  auto audit = verify_compliance(sys, x, SurvivabilityPolicy::uniform(1, 0.0));
  CHECK_FALSE(audit.compliant);
  CHECK(audit.states_checked == 5);  // intact state plus four failures
  CHECK(audit.worst_margin == Catch::Approx(80.0).margin(1e-6));
  CHECK(audit.worst_shed == Catch::Approx(80.0).margin(1e-6));
  CHECK(audit.worst_allowance == 0.0);
  CHECK(audit.violations.size() == 2);  // the existing line and the existing unit
}

TEST_CASE("compliance audit accepts the full build", "[planner]") {
  auto sys = two_bus();
  auto audit = verify_compliance(sys, PlanVector::all_built(sys),
                                 SurvivabilityPolicy::uniform(1, 0.0));
  CHECK(audit.compliant);
  CHECK(audit.violations.empty());
}

TEST_CASE("cutting planes refuse a decreasing allowance schedule", "[planner]") {
  auto sys = two_bus();
  SurvivabilityPolicy policy;
  policy.k = 2;
  policy.epsilon_schedule = {{1, 0.0}, {2, 0.3}};
  auto relaxed = policy;
  relaxed.epsilon_schedule[1] = 0.4;  // would exceed class 2
  relaxed.allow_nonzero_eps1 = true;
  CHECK_THROWS_AS(run_cutting_planes(sys, relaxed), std::invalid_argument);
  CHECK_NOTHROW(run_cutting_planes(sys, policy, exact_config()));
}

TEST_CASE("extensive form refuses oversized state spaces", "[planner]") {
  auto sys = two_bus();
  PlannerConfig cfg;
  cfg.max_states = 3;  // four single-failure states exist
  auto rep = solve_extensive(sys, SurvivabilityPolicy::uniform(1, 0.0), cfg);
  CHECK(rep.outcome == PlanOutcome::StateLimit);
  CHECK_FALSE(rep.note.empty());
}

TEST_CASE("unservable demand is reported infeasible by every algorithm", "[planner]") {
  auto sys = two_bus();
  sys.buses[1].demand = 300.0;  // above the 200 of total capacity
  auto policy = SurvivabilityPolicy::uniform(1, 0.0);
  CHECK(solve_extensive(sys, policy).outcome == PlanOutcome::Infeasible);
  CHECK(run_benders(sys, policy).outcome == PlanOutcome::Infeasible);
  CHECK(run_cutting_planes(sys, policy).outcome == PlanOutcome::Infeasible);
}

TEST_CASE("planning is deterministic", "[planner]") {
  auto sys = three_bus_candidates();
  auto policy = SurvivabilityPolicy::uniform(1, 0.0);
  auto cfg = exact_config();
  auto a = run_benders(sys, policy, cfg);
  auto b = run_benders(sys, policy, cfg);
  CHECK(a.iterations == b.iterations);
  CHECK(a.cuts == b.cuts);
  CHECK(a.objective == b.objective);
  CHECK(a.plan.gen_build == b.plan.gen_build);
  CHECK(a.plan.branch_build == b.plan.branch_build);

  auto c = run_cutting_planes(sys, policy, cfg);
  auto d = run_cutting_planes(sys, policy, cfg);
  CHECK(c.iterations == d.iterations);
  CHECK(c.objective == d.objective);
}

TEST_CASE("threaded sweeps match the serial result", "[planner]") {
  auto sys = three_bus_candidates();
  auto policy = SurvivabilityPolicy::uniform(1, 0.0);
  auto serial = exact_config();
  auto threaded = exact_config();
  threaded.threads = 4;
  auto a = run_benders(sys, policy, serial);
  auto b = run_benders(sys, policy, threaded);
  CHECK(a.objective == Catch::Approx(b.objective).margin(1e-9));
  CHECK(a.iterations == b.iterations);
  CHECK(a.cuts == b.cuts);

  auto audit_serial = verify_compliance(sys, a.plan, policy, serial);
  auto audit_threaded = verify_compliance(sys, a.plan, policy, threaded);
  CHECK(audit_serial.compliant == audit_threaded.compliant);
  CHECK(audit_serial.worst_margin == Catch::Approx(audit_threaded.worst_margin).margin(1e-9));
}

TEST_CASE("planner input guards", "[planner]") {
  auto sys = two_bus();
  SurvivabilityPolicy bad;
  bad.k = -1;
  CHECK_THROWS_AS(run_benders(sys, bad), std::invalid_argument);

  PowerSystem broken = sys;
  broken.generators[0].pmax = -5.0;
  CHECK_THROWS_AS(solve_extensive(broken, SurvivabilityPolicy::uniform(1, 0.0)),
                  std::invalid_argument);
}
