#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "nke/opf.hpp"
#include "support/fixtures.hpp"
#include "support/random_system.hpp"

using namespace nke;
using Catch::Matchers::WithinAbs;

namespace {

Contingency fail_branches(std::initializer_list<int> ids) {
  Contingency c;
  c.failed_branches = ids;
  return c;
}

Contingency fail_generators(std::initializer_list<int> ids) {
  Contingency c;
  c.failed_generators = ids;
  return c;
}

// Every 0/1 choice over the candidate elements.
std::vector<PlanVector> all_plans(const PowerSystem& sys) {
  std::vector<std::size_t> cg, ce;
  for (std::size_t i = 0; i < sys.generators.size(); ++i)
    if (!sys.generators[i].existing) cg.push_back(i);
  for (std::size_t i = 0; i < sys.branches.size(); ++i)
    if (!sys.branches[i].existing) ce.push_back(i);
  std::vector<PlanVector> out;
  const std::size_t total = cg.size() + ce.size();
  for (std::uint32_t mask = 0; mask < (1u << total); ++mask) {
    PlanVector x = PlanVector::existing_only(sys);
    for (std::size_t t = 0; t < cg.size(); ++t) x.gen_build[cg[t]] = (mask >> t) & 1u;
    for (std::size_t t = 0; t < ce.size(); ++t) x.branch_build[ce[t]] = (mask >> (cg.size() + t)) & 1u;
    out.push_back(x);
  }
  return out;
}

}  // namespace

TEST_CASE("deactivation constants scale with the grid", "[opf]") {
  auto t2 = testing::two_bus();
  BigMPolicy m;
  CHECK_THAT(m.value(t2, t2.branches[0]), WithinAbs(100.0, 1e-12));  // 10 * 1 * 10

  auto t3 = testing::three_bus();
  CHECK_THAT(m.value(t3, t3.branches[0]), WithinAbs(160.0, 1e-12));  // 10 * 2 * 8

  BigMPolicy dense;
  dense.multiplier = 10.0;
  CHECK_THAT(dense.value(t2, t2.branches[0]), WithinAbs(1000.0, 1e-12));
}

TEST_CASE("intact triangle dispatch splits by susceptance", "[opf]") {
  auto sys = testing::three_bus();
  auto x = PlanVector::existing_only(sys);
  auto r = solve_psp(sys, x, {});
  REQUIRE(r.status == SolveStatus::Optimal);
  CHECK_THAT(r.shed, WithinAbs(0.0, 1e-7));
  CHECK_THAT(r.dispatch.flow.at(1), WithinAbs(160.0 / 3.0, 1e-6));
  CHECK_THAT(r.dispatch.flow.at(2), WithinAbs(140.0 / 3.0, 1e-6));
  CHECK_THAT(r.dispatch.flow.at(3), WithinAbs(-20.0 / 3.0, 1e-6));
  CHECK_THAT(r.dispatch.generation.at(1), WithinAbs(100.0, 1e-6));
  CHECK_THAT(r.dispatch.angle.at(1), WithinAbs(0.0, 1e-12));
  CHECK_THAT(r.dispatch.angle.at(2), WithinAbs(-16.0 / 3.0, 1e-6));
  CHECK_THAT(r.dispatch.angle.at(3), WithinAbs(-14.0 / 3.0, 1e-6));
}

TEST_CASE("single failures on the bare triangle", "[opf]") {
  auto sys = testing::three_bus();
  auto x = PlanVector::existing_only(sys);

  auto e1 = solve_psp(sys, x, fail_branches({1}));
  REQUIRE(e1.status == SolveStatus::Optimal);
  CHECK_THAT(e1.shed, WithinAbs(50.0, 1e-6));

  // without the 1-3 circuit everything rides the 1-2-3 path: at most 80
  // into bus 2 and 30 onward, so 20 of the 100 load is lost
  auto e2 = solve_psp(sys, x, fail_branches({2}));
  CHECK_THAT(e2.shed, WithinAbs(20.0, 1e-6));

  auto e3 = solve_psp(sys, x, fail_branches({3}));
  CHECK_THAT(e3.shed, WithinAbs(0.0, 1e-7));

  auto g1 = solve_psp(sys, x, fail_generators({1}));
  CHECK_THAT(g1.shed, WithinAbs(100.0, 1e-6));
}

TEST_CASE("two bus corridor with and without reinforcement", "[opf]") {
  auto sys = testing::two_bus();
  auto bare = PlanVector::existing_only(sys);
  auto full = PlanVector::all_built(sys);

  CHECK_THAT(solve_psp(sys, bare, {}).shed, WithinAbs(0.0, 1e-7));
  CHECK_THAT(solve_psp(sys, bare, fail_branches({1})).shed, WithinAbs(80.0, 1e-6));
  CHECK_THAT(solve_psp(sys, bare, fail_generators({1})).shed, WithinAbs(80.0, 1e-6));
  CHECK_THAT(solve_psp(sys, full, fail_branches({1})).shed, WithinAbs(0.0, 1e-7));
  CHECK_THAT(solve_psp(sys, full, fail_generators({1})).shed, WithinAbs(0.0, 1e-7));
  CHECK_THAT(solve_psp(sys, full, fail_generators({1, 2})).shed, WithinAbs(80.0, 1e-6));
}

TEST_CASE("unbuilt candidates carry no flow", "[opf]") {
  auto sys = testing::three_bus_candidates();
  auto x = PlanVector::existing_only(sys);
  auto r = solve_psp(sys, x, fail_branches({1}));
  REQUIRE(r.status == SolveStatus::Optimal);
  CHECK_THAT(r.shed, WithinAbs(50.0, 1e-6));
  for (int id : {11, 12, 13}) CHECK_THAT(r.dispatch.flow.at(id), WithinAbs(0.0, 1e-7));
  CHECK_THAT(r.dispatch.generation.at(11), WithinAbs(0.0, 1e-7));

  SECTION("building the duplicate corridor restores service") {
    auto y = x;
    y.branch_build[3] = 1;  // branch 11 duplicates branch 1
    auto rr = solve_psp(sys, y, fail_branches({1}));
    CHECK_THAT(rr.shed, WithinAbs(0.0, 1e-7));
    CHECK(std::fabs(rr.dispatch.flow.at(11)) > 1.0);
  }
}

TEST_CASE("dispatch is invariant to the deactivation multiplier", "[opf]") {
  auto sys = testing::three_bus_candidates();
  BigMPolicy loose;
  loose.multiplier = 10.0;
  for (unsigned ps = 0; ps < 4; ++ps) {
    auto x = testing::random_plan(sys, 900 + ps);
    for (const auto& c : all_states(sys, 2)) {
      auto a = solve_psp(sys, x, c);
      auto b = solve_psp(sys, x, c, loose);
      REQUIRE(a.status == SolveStatus::Optimal);
      REQUIRE(b.status == SolveStatus::Optimal);
      CAPTURE(c.to_string(), ps);
      CHECK_THAT(a.shed, WithinAbs(b.shed, 1e-5));
    }
  }
}

TEST_CASE("dispatch duals satisfy strong duality and sign conventions", "[opf]") {
  reset_psp_duality_gap_high_water();
  auto sys = testing::three_bus_candidates();
  for (unsigned ps = 0; ps < 6; ++ps) {
    auto x = testing::random_plan(sys, 300 + ps);
    for (const auto& c : all_states(sys, 2)) {
      auto r = solve_psp(sys, x, c);
      REQUIRE(r.status == SolveStatus::Optimal);
      CAPTURE(c.to_string(), ps);
      CHECK(r.duality_gap <= 1e-6);
      for (const auto& [id, v] : r.duals.beta_hat) CHECK(v <= 1e-7);
      for (const auto& [id, v] : r.duals.beta_chk) CHECK(v <= 1e-7);
      for (const auto& [id, v] : r.duals.delta) CHECK(v <= 1e-7);
      for (const auto& [id, v] : r.duals.eta) CHECK(v <= 1e-7);
      for (const auto& [id, v] : r.duals.zeta) CHECK(v <= 1e-7);
      for (const auto& [id, v] : r.duals.lambda) CHECK(v <= 1e-7);
    }
  }
  CHECK(psp_duality_gap_high_water().load() <= 1e-6);
}

TEST_CASE("extracted inequalities are tight at the source and valid everywhere",
          "[opf][cuts]") {
  // Weak duality argument, checked exhaustively: the cut left-hand side at any
  // other plan must stay below that plan's true shed.
  for (auto sys : {testing::two_bus(), testing::three_bus_candidates()}) {
    const auto plans = all_plans(sys);
    const double threshold = 0.0;
    for (const auto& c : all_states(sys, 2)) {
      for (unsigned ps = 0; ps < plans.size(); ps += 3) {
        const auto& xhat = plans[ps];
        auto r = solve_psp(sys, xhat, c);
        REQUIRE(r.status == SolveStatus::Optimal);
        auto cut = extract_feasibility_cut(sys, c, r.duals, threshold);
        CAPTURE(sys.name, c.to_string(), ps);
        CHECK_THAT(evaluate_cut_lhs(cut, sys, xhat), WithinAbs(r.shed, 1e-5));
        for (const auto& other : plans) {
          double lhs = evaluate_cut_lhs(cut, sys, other);
          double shed = solve_psp(sys, other, c).shed;
          CHECK(lhs <= shed + 1e-5);
        }
      }
    }
  }
}

TEST_CASE("cut structure on a total generation outage", "[opf][cuts]") {
  auto sys = testing::two_bus();
  auto x = PlanVector::all_built(sys);
  auto c = fail_generators({1, 2});
  auto r = solve_psp(sys, x, c);
  REQUIRE(r.status == SolveStatus::Optimal);
  CHECK_THAT(r.shed, WithinAbs(80.0, 1e-6));

  auto cut = extract_feasibility_cut(sys, c, r.duals, 0.05 * total_demand(sys));
  // with every generator failed, no build choice can reduce the shed: the cut
  // must exclude all four plans
  for (const auto& other : all_plans(sys))
    CHECK(evaluate_cut_lhs(cut, sys, other) > cut.threshold + 1e-6);
}

TEST_CASE("random systems keep the dual certificate", "[opf]") {
  for (unsigned seed = 1; seed <= 10; ++seed) {
    auto sys = testing::random_system(seed);
    REQUIRE(validate_system(sys).empty());
    auto x = testing::random_plan(sys, seed * 17);
    int checked = 0;
    for (const auto& c : all_states(sys, 1)) {
      auto r = solve_psp(sys, x, c);
      REQUIRE(r.status == SolveStatus::Optimal);
      CHECK(r.duality_gap <= 1e-6);
      ++checked;
    }
    CHECK(checked > 0);
  }
}

TEST_CASE("plan vector shape is validated", "[opf]") {
  auto sys = testing::two_bus();
  PlanVector bad;
  bad.gen_build = {1};
  bad.branch_build = {1, 1};
  CHECK_THROWS_AS(build_psp(sys, bad, {}), std::invalid_argument);
}
