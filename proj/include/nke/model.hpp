#pragma once

// Power system data model shared by all planning algorithms: buses,
// generators, transmission elements, survivability policy, contingencies
// and expansion plans. All types are plain value types, immutable by
// convention after construction, and safe to share across threads.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace nke {

/// A network node carrying a fixed real-power demand in MW.
struct Bus {
  int id = 0;
  double demand = 0.0;  // D >= 0, MW
};

/// A generating unit attached to one bus.
struct Generator {
  int id = 0;
  int bus = 0;
  double pmax = 0.0;           // max output, MW
  double invest_cost = 0.0;    // build cost; ignored for existing units
  double marginal_cost = 0.0;  // production cost per MWh
  bool existing = false;       // existing units have their build decision fixed to 1
};

/// A transmission element (line or transformer branch) between two buses.
/// Parallel elements with the same endpoints are permitted; ids distinguish them.
struct TransmissionElement {
  int id = 0;
  int from_bus = 0;  // tail
  int to_bus = 0;    // head; positive flow is tail -> head
  double susceptance = 0.0;  // couples angle difference to flow, MW per rad
  double capacity = 0.0;     // thermal limit, MW
  double invest_cost = 0.0;
  bool existing = false;
};

struct PowerSystem {
  std::string name;
  std::vector<Bus> buses;
  std::vector<Generator> generators;
  std::vector<TransmissionElement> branches;
  double sigma = 1.0;  // weighting factor between investment and operating cost

  std::size_t element_count() const { return generators.size() + branches.size(); }

  int bus_index(int id) const {
    for (std::size_t i = 0; i < buses.size(); ++i)
      if (buses[i].id == id) return static_cast<int>(i);
    return -1;
  }
  int generator_index(int id) const {
    for (std::size_t i = 0; i < generators.size(); ++i)
      if (generators[i].id == id) return static_cast<int>(i);
    return -1;
  }
  int branch_index(int id) const {
    for (std::size_t i = 0; i < branches.size(); ++i)
      if (branches[i].id == id) return static_cast<int>(i);
    return -1;
  }
};

/// One broken modelling rule found by validate_system. Violations are data,
/// not errors: an invalid system parses fine and reports its defects here.
struct Violation {
  std::string element;  // e.g. "branch 3", "generator 1", "system"
  std::string rule;     // short rule name, e.g. "self-loop"
  std::string detail;

  std::string to_string() const { return element + ": " + rule + " (" + detail + ")"; }
};

inline double total_demand(const PowerSystem& sys) {
  double sum = 0.0;
  for (const auto& b : sys.buses) sum += b.demand;
  return sum;
}

/// Checks every structural invariant of the data model. Returns an empty
/// vector iff the system is well formed.
inline std::vector<Violation> validate_system(const PowerSystem& sys) {
  std::vector<Violation> out;
  auto add = [&out](std::string element, std::string rule, std::string detail) {
    out.push_back({std::move(element), std::move(rule), std::move(detail)});
  };

  if (sys.buses.empty()) add("system", "no buses", "a system must contain at least one bus");
  if (!(sys.sigma > 0.0)) add("system", "nonpositive sigma", "sigma must be > 0");

  std::set<int> bus_ids;
  for (const auto& b : sys.buses) {
    std::string el = "bus " + std::to_string(b.id);
    if (!bus_ids.insert(b.id).second) add(el, "duplicate id", "bus ids must be unique");
    if (b.demand < 0.0) add(el, "negative demand", "demand must be >= 0");
  }

  std::set<int> gen_ids;
  for (const auto& g : sys.generators) {
    std::string el = "generator " + std::to_string(g.id);
    if (!gen_ids.insert(g.id).second) add(el, "duplicate id", "generator ids must be unique");
    if (!(g.pmax > 0.0)) add(el, "nonpositive pmax", "capacity must be > 0");
    if (g.invest_cost < 0.0) add(el, "negative invest cost", "investment cost must be >= 0");
    if (!bus_ids.count(g.bus))
      add(el, "dangling bus reference", "references missing bus " + std::to_string(g.bus));
  }

  std::set<int> branch_ids;
  for (const auto& e : sys.branches) {
    std::string el = "branch " + std::to_string(e.id);
    if (!branch_ids.insert(e.id).second) add(el, "duplicate id", "branch ids must be unique");
    if (!(e.susceptance > 0.0)) add(el, "nonpositive susceptance", "susceptance must be > 0");
    if (!(e.capacity > 0.0)) add(el, "nonpositive capacity", "capacity must be > 0");
    if (e.from_bus == e.to_bus) add(el, "self-loop", "from_bus equals to_bus");
    if (e.invest_cost < 0.0) add(el, "negative invest cost", "investment cost must be >= 0");
    if (!bus_ids.count(e.from_bus))
      add(el, "dangling bus reference", "references missing bus " + std::to_string(e.from_bus));
    if (!bus_ids.count(e.to_bus))
      add(el, "dangling bus reference", "references missing bus " + std::to_string(e.to_bus));
  }
  return out;
}

/// Survivability requirement: for every contingency of j <= k failed elements
/// the shed load must stay within epsilon_j times total demand. epsilon_1 = 0
/// unless allow_nonzero_eps1 is set explicitly.
struct SurvivabilityPolicy {
  int k = 0;
  std::map<int, double> epsilon_schedule;  // cardinality j in 1..k -> eps_j in [0,1]
  bool allow_nonzero_eps1 = false;

  /// eps for contingencies of cardinality j; entries missing from the
  /// schedule default to 0. Throws std::out_of_range when j is not in 1..k.
  double epsilon(int j) const {
    if (j < 1 || j > k) throw std::out_of_range("epsilon: cardinality " + std::to_string(j) + " outside 1.." + std::to_string(k));
    auto it = epsilon_schedule.find(j);
    return it == epsilon_schedule.end() ? 0.0 : it->second;
  }

  /// Constant schedule: eps_1 = 0, eps_j = eps for j >= 2.
  static SurvivabilityPolicy uniform(int k, double eps) {
    SurvivabilityPolicy p;
    p.k = k;
    for (int j = 1; j <= k; ++j) p.epsilon_schedule[j] = (j == 1) ? 0.0 : eps;
    return p;
  }

  std::vector<Violation> validate() const {
    std::vector<Violation> out;
    if (k < 0) out.push_back({"policy", "negative k", "contingency budget must be >= 0"});
    for (const auto& [j, eps] : epsilon_schedule) {
      std::string el = "policy eps[" + std::to_string(j) + "]";
      if (j < 1 || j > k) out.push_back({el, "cardinality out of range", "schedule keys must lie in 1..k"});
      if (eps < 0.0 || eps > 1.0) out.push_back({el, "epsilon out of range", "epsilon must lie in [0,1]"});
    }
    if (k >= 1 && !allow_nonzero_eps1) {
      auto it = epsilon_schedule.find(1);
      if (it != epsilon_schedule.end() && it->second != 0.0)
        out.push_back({"policy eps[1]", "nonzero eps_1", "single-failure states allow no shed unless overridden"});
    }
    return out;
  }
};

/// A set of simultaneously failed elements. The empty contingency is the
/// no-failure base state.
struct Contingency {
  std::vector<int> failed_generators;  // sorted, unique ids
  std::vector<int> failed_branches;

  int size() const { return static_cast<int>(failed_generators.size() + failed_branches.size()); }
  bool empty() const { return failed_generators.empty() && failed_branches.empty(); }

  void normalize() {
    auto fix = [](std::vector<int>& v) {
      std::sort(v.begin(), v.end());
      v.erase(std::unique(v.begin(), v.end()), v.end());
    };
    fix(failed_generators);
    fix(failed_branches);
  }

  bool fails_generator(int id) const {
    return std::binary_search(failed_generators.begin(), failed_generators.end(), id);
  }
  bool fails_branch(int id) const {
    return std::binary_search(failed_branches.begin(), failed_branches.end(), id);
  }

  std::string to_string() const {
    if (empty()) return "-";
    std::string s;
    for (int g : failed_generators) s += (s.empty() ? "g" : "+g") + std::to_string(g);
    for (int e : failed_branches) s += (s.empty() ? "e" : "+e") + std::to_string(e);
    return s;
  }

  bool operator==(const Contingency&) const = default;
};

/// State-0 operating point attached to a plan.
struct Dispatch {
  std::map<int, double> generation;  // generator id -> output
  std::map<int, double> flow;        // branch id -> flow (tail -> head positive)
  std::map<int, double> angle;       // bus id -> phase angle
};

/// Build decisions plus the base-state dispatch and the total cost they imply.
/// Existing elements always carry decision 1.
struct ExpansionPlan {
  std::map<int, int> build_generators;  // id -> 0/1
  std::map<int, int> build_branches;
  Dispatch dispatch0;
  double objective = 0.0;

  bool builds_generator(int id) const {
    auto it = build_generators.find(id);
    return it != build_generators.end() && it->second != 0;
  }
  bool builds_branch(int id) const {
    auto it = build_branches.find(id);
    return it != build_branches.end() && it->second != 0;
  }
};

/// Build decisions as 0/1 vectors aligned with the system's element order.
/// Compact form used by the solvers; existing elements are forced to 1.
struct PlanVector {
  std::vector<int> gen_build;
  std::vector<int> branch_build;

  static PlanVector all_built(const PowerSystem& sys) {
    PlanVector v;
    v.gen_build.assign(sys.generators.size(), 1);
    v.branch_build.assign(sys.branches.size(), 1);
    return v;
  }

  static PlanVector existing_only(const PowerSystem& sys) {
    PlanVector v;
    for (const auto& g : sys.generators) v.gen_build.push_back(g.existing ? 1 : 0);
    for (const auto& e : sys.branches) v.branch_build.push_back(e.existing ? 1 : 0);
    return v;
  }

  static PlanVector from_plan(const PowerSystem& sys, const ExpansionPlan& plan) {
    for (const auto& [id, on] : plan.build_generators)
      if (sys.generator_index(id) < 0)
        throw std::invalid_argument("plan references unknown generator id " + std::to_string(id));
    for (const auto& [id, on] : plan.build_branches)
      if (sys.branch_index(id) < 0)
        throw std::invalid_argument("plan references unknown branch id " + std::to_string(id));
    PlanVector v;
    for (const auto& g : sys.generators)
      v.gen_build.push_back(g.existing || plan.builds_generator(g.id) ? 1 : 0);
    for (const auto& e : sys.branches)
      v.branch_build.push_back(e.existing || plan.builds_branch(e.id) ? 1 : 0);
    return v;
  }

  void write_to(const PowerSystem& sys, ExpansionPlan& plan) const {
    for (std::size_t i = 0; i < sys.generators.size(); ++i)
      plan.build_generators[sys.generators[i].id] = gen_build[i];
    for (std::size_t i = 0; i < sys.branches.size(); ++i)
      plan.build_branches[sys.branches[i].id] = branch_build[i];
  }

  bool operator==(const PlanVector&) const = default;
};

/// Total investment cost of a plan; existing elements never pay.
inline double investment_cost(const PowerSystem& sys, const PlanVector& x) {
  double c = 0.0;
  for (std::size_t i = 0; i < sys.generators.size(); ++i)
    if (!sys.generators[i].existing && x.gen_build[i]) c += sys.generators[i].invest_cost;
  for (std::size_t i = 0; i < sys.branches.size(); ++i)
    if (!sys.branches[i].existing && x.branch_build[i]) c += sys.branches[i].invest_cost;
  return c;
}

}  // namespace nke
