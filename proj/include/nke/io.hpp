#pragma once

// Text formats: case files, plan files, the run report table, plus a
// converter for the classic exchange format of public bus/branch test data
// and an augmentation helper that derives candidate elements.
//
// Case files are line oriented:
//
//   # comment
//   [params]
//   sigma = 1
//   name = corridor
//   [buses]
//   # id demand
//   1 0
//   2 80
//   [generators]
//   # id bus pmax invest_cost marginal_cost existing
//   1 1 100 0 1 yes
//   [branches]
//   # id from to susceptance capacity invest_cost existing
//   1 1 2 10 100 0 yes
//
// Strict parsing rejects unknown sections, parameters, and surplus columns;
// lenient parsing records a warning and keeps going. Errors always name the
// offending line.

#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "nke/model.hpp"
#include "nke/planner.hpp"

namespace nke {

struct ParseOptions {
  bool strict = true;
};

struct ParseLog {
  std::vector<std::string> warnings;
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

inline std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

inline std::string strip_comment(const std::string& line) {
  auto pos = line.find('#');
  return pos == std::string::npos ? line : line.substr(0, pos);
}

[[noreturn]] inline void fail_at(int line, const std::string& msg) {
  throw std::runtime_error("line " + std::to_string(line) + ": " + msg);
}

inline double parse_number(const std::string& tok, int line, const std::string& field) {
  try {
    std::size_t used = 0;
    double v = std::stod(tok, &used);
    if (used != tok.size()) fail_at(line, field + ": trailing characters in '" + tok + "'");
    return v;
  } catch (const std::invalid_argument&) {
    fail_at(line, field + ": not a number '" + tok + "'");
  } catch (const std::out_of_range&) {
    fail_at(line, field + ": number out of range '" + tok + "'");
  }
}

inline int parse_int(const std::string& tok, int line, const std::string& field) {
  double v = parse_number(tok, line, field);
  int i = static_cast<int>(v);
  if (static_cast<double>(i) != v) fail_at(line, field + ": expected an integer, got '" + tok + "'");
  return i;
}

inline bool parse_flag(const std::string& tok, int line, const std::string& field) {
  std::string t;
  for (char c : tok) t += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (t == "yes" || t == "true" || t == "1") return true;
  if (t == "no" || t == "false" || t == "0") return false;
  fail_at(line, field + ": expected yes/no, got '" + tok + "'");
}

inline std::string fmt_full(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string fmt_3(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

}  // namespace detail

/// Parses the case format above into a validated system.
inline PowerSystem parse_case(const std::string& text, const ParseOptions& opt = {},
                              ParseLog* log = nullptr) {
  PowerSystem sys;
  sys.name = "case";
  enum class Section { None, Params, Buses, Generators, Branches, Skipped };
  Section sec = Section::None;
  bool saw_sigma = false;

  auto warn = [&](int line, const std::string& msg) {
    if (opt.strict) detail::fail_at(line, msg);
    if (log) log->warnings.push_back("line " + std::to_string(line) + ": " + msg);
  };

  std::istringstream is(text);
  std::string raw;
  int line = 0;
  while (std::getline(is, raw)) {
    ++line;
    std::string s = detail::trim(detail::strip_comment(raw));
    if (s.empty()) continue;

    if (s.front() == '[') {
      if (s.back() != ']') detail::fail_at(line, "unterminated section header");
      std::string name = detail::trim(s.substr(1, s.size() - 2));
      if (name == "params") sec = Section::Params;
      else if (name == "buses") sec = Section::Buses;
      else if (name == "generators") sec = Section::Generators;
      else if (name == "branches") sec = Section::Branches;
      else {
        warn(line, "unknown section '" + name + "'");
        sec = Section::Skipped;
      }
      continue;
    }

    switch (sec) {
      case Section::None:
        detail::fail_at(line, "content before the first section header");
      case Section::Skipped:
        break;
      case Section::Params: {
        auto eq = s.find('=');
        if (eq == std::string::npos) detail::fail_at(line, "expected 'key = value'");
        std::string key = detail::trim(s.substr(0, eq));
        std::string val = detail::trim(s.substr(eq + 1));
        if (key == "sigma") {
          sys.sigma = detail::parse_number(val, line, "sigma");
          saw_sigma = true;
        } else if (key == "name") {
          sys.name = val;
        } else {
          warn(line, "unknown parameter '" + key + "'");
        }
        break;
      }
      case Section::Buses: {
        auto t = detail::split_ws(s);
        if (t.size() < 2) detail::fail_at(line, "bus row needs: id demand");
        if (t.size() > 2) warn(line, "bus row has surplus columns");
        Bus b;
        b.id = detail::parse_int(t[0], line, "bus id");
        b.demand = detail::parse_number(t[1], line, "bus demand");
        sys.buses.push_back(b);
        break;
      }
      case Section::Generators: {
        auto t = detail::split_ws(s);
        if (t.size() < 6)
          detail::fail_at(line, "generator row needs: id bus pmax invest_cost marginal_cost existing");
        if (t.size() > 6) warn(line, "generator row has surplus columns");
        Generator g;
        g.id = detail::parse_int(t[0], line, "generator id");
        g.bus = detail::parse_int(t[1], line, "generator bus");
        g.pmax = detail::parse_number(t[2], line, "generator pmax");
        g.invest_cost = detail::parse_number(t[3], line, "generator invest_cost");
        g.marginal_cost = detail::parse_number(t[4], line, "generator marginal_cost");
        g.existing = detail::parse_flag(t[5], line, "generator existing");
        sys.generators.push_back(g);
        break;
      }
      case Section::Branches: {
        auto t = detail::split_ws(s);
        if (t.size() < 7)
          detail::fail_at(line,
                          "branch row needs: id from to susceptance capacity invest_cost existing");
        if (t.size() > 7) warn(line, "branch row has surplus columns");
        TransmissionElement e;
        e.id = detail::parse_int(t[0], line, "branch id");
        e.from_bus = detail::parse_int(t[1], line, "branch from");
        e.to_bus = detail::parse_int(t[2], line, "branch to");
        e.susceptance = detail::parse_number(t[3], line, "branch susceptance");
        e.capacity = detail::parse_number(t[4], line, "branch capacity");
        e.invest_cost = detail::parse_number(t[5], line, "branch invest_cost");
        e.existing = detail::parse_flag(t[6], line, "branch existing");
        sys.branches.push_back(e);
        break;
      }
    }
  }

  if (!saw_sigma && log)
    log->warnings.push_back("params.sigma missing; defaulting to 1");

  auto defects = validate_system(sys);
  if (!defects.empty())
    throw std::runtime_error("invalid system: " + defects.front().to_string());
  return sys;
}

inline std::string serialize_case(const PowerSystem& sys) {
  std::string out;
  out += "[params]\n";
  if (!sys.name.empty()) out += "name = " + sys.name + "\n";
  out += "sigma = " + detail::fmt_full(sys.sigma) + "\n";
  out += "\n[buses]\n# id demand\n";
  for (const auto& b : sys.buses)
    out += std::to_string(b.id) + " " + detail::fmt_full(b.demand) + "\n";
  out += "\n[generators]\n# id bus pmax invest_cost marginal_cost existing\n";
  for (const auto& g : sys.generators)
    out += std::to_string(g.id) + " " + std::to_string(g.bus) + " " + detail::fmt_full(g.pmax) +
           " " + detail::fmt_full(g.invest_cost) + " " + detail::fmt_full(g.marginal_cost) + " " +
           (g.existing ? "yes" : "no") + "\n";
  out += "\n[branches]\n# id from to susceptance capacity invest_cost existing\n";
  for (const auto& e : sys.branches)
    out += std::to_string(e.id) + " " + std::to_string(e.from_bus) + " " +
           std::to_string(e.to_bus) + " " + detail::fmt_full(e.susceptance) + " " +
           detail::fmt_full(e.capacity) + " " + detail::fmt_full(e.invest_cost) + " " +
           (e.existing ? "yes" : "no") + "\n";
  return out;
}

// ---- plan files ----

inline constexpr int kPlanFormatVersion = 1;

inline std::string write_plan(const ExpansionPlan& plan, const std::string& case_name = "") {
  std::string out;
  out += "[plan]\nversion = " + std::to_string(kPlanFormatVersion) + "\n";
  if (!case_name.empty()) out += "case = " + case_name + "\n";
  out += "objective = " + detail::fmt_full(plan.objective) + "\n";
  out += "\n[builds]\n# type id built\n";
  for (const auto& [id, v] : plan.build_generators)
    out += "g " + std::to_string(id) + " " + std::to_string(v ? 1 : 0) + "\n";
  for (const auto& [id, v] : plan.build_branches)
    out += "e " + std::to_string(id) + " " + std::to_string(v ? 1 : 0) + "\n";
  out += "\n[dispatch]\n# kind id value (p generation, f flow, a angle)\n";
  for (const auto& [id, v] : plan.dispatch0.generation)
    out += "p " + std::to_string(id) + " " + detail::fmt_full(v) + "\n";
  for (const auto& [id, v] : plan.dispatch0.flow)
    out += "f " + std::to_string(id) + " " + detail::fmt_full(v) + "\n";
  for (const auto& [id, v] : plan.dispatch0.angle)
    out += "a " + std::to_string(id) + " " + detail::fmt_full(v) + "\n";
  return out;
}

inline ExpansionPlan read_plan(const std::string& text, std::string* case_name = nullptr) {
  ExpansionPlan plan;
  enum class Section { None, Plan, Builds, Dispatch };
  Section sec = Section::None;
  bool saw_version = false;

  std::istringstream is(text);
  std::string raw;
  int line = 0;
  while (std::getline(is, raw)) {
    ++line;
    std::string s = detail::trim(detail::strip_comment(raw));
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') detail::fail_at(line, "unterminated section header");
      std::string name = detail::trim(s.substr(1, s.size() - 2));
      if (name == "plan") sec = Section::Plan;
      else if (name == "builds") sec = Section::Builds;
      else if (name == "dispatch") sec = Section::Dispatch;
      else detail::fail_at(line, "unknown section '" + name + "' in plan file");
      continue;
    }
    switch (sec) {
      case Section::None:
        detail::fail_at(line, "content before the first section header");
      case Section::Plan: {
        auto eq = s.find('=');
        if (eq == std::string::npos) detail::fail_at(line, "expected 'key = value'");
        std::string key = detail::trim(s.substr(0, eq));
        std::string val = detail::trim(s.substr(eq + 1));
        if (key == "version") {
          int v = detail::parse_int(val, line, "version");
          if (v != kPlanFormatVersion)
            detail::fail_at(line, "unsupported plan format version " + std::to_string(v) +
                                      " (expected " + std::to_string(kPlanFormatVersion) + ")");
          saw_version = true;
        } else if (key == "objective") {
          plan.objective = detail::parse_number(val, line, "objective");
        } else if (key == "case") {
          if (case_name) *case_name = val;
        } else {
          detail::fail_at(line, "unknown plan key '" + key + "'");
        }
        break;
      }
      case Section::Builds: {
        auto t = detail::split_ws(s);
        if (t.size() != 3) detail::fail_at(line, "build row needs: type id built");
        int id = detail::parse_int(t[1], line, "element id");
        int v = detail::parse_int(t[2], line, "built flag");
        if (v != 0 && v != 1) detail::fail_at(line, "built flag must be 0 or 1");
        if (t[0] == "g") plan.build_generators[id] = v;
        else if (t[0] == "e") plan.build_branches[id] = v;
        else detail::fail_at(line, "element type must be g or e, got '" + t[0] + "'");
        break;
      }
      case Section::Dispatch: {
        auto t = detail::split_ws(s);
        if (t.size() != 3) detail::fail_at(line, "dispatch row needs: kind id value");
        int id = detail::parse_int(t[1], line, "element id");
        double v = detail::parse_number(t[2], line, "value");
        if (t[0] == "p") plan.dispatch0.generation[id] = v;
        else if (t[0] == "f") plan.dispatch0.flow[id] = v;
        else if (t[0] == "a") plan.dispatch0.angle[id] = v;
        else detail::fail_at(line, "dispatch kind must be p, f or a, got '" + t[0] + "'");
        break;
      }
    }
  }
  if (!saw_version) throw std::runtime_error("plan file lacks a version field");
  return plan;
}

// ---- report table ----

/// One table line per planning run. Missing values print as "x", matching
/// the did-not-finish convention of benchmark tables.
struct ReportRow {
  std::string instance;
  std::uint64_t m = 0;
  int k = 0;
  std::optional<double> epsilon;
  std::string algorithm;
  std::optional<double> runtime_s;
  std::optional<std::int64_t> iterations;
  std::optional<std::int64_t> cuts;
  std::optional<double> rmp_s;
  std::optional<double> psip_s;
  std::optional<double> dsp_s;
  std::optional<double> objective;
  std::string status;
};

inline std::string write_report(const std::vector<ReportRow>& rows) {
  std::string out =
      "instance,m,k,epsilon,algorithm,runtime_s,iterations,cuts,rmp_s,psip_s,dsp_s,objective,"
      "status\n";
  auto real_cell = [](const std::optional<double>& v) {
    return v ? detail::fmt_3(*v) : std::string("x");
  };
  auto int_cell = [](const std::optional<std::int64_t>& v) {
    return v ? std::to_string(*v) : std::string("x");
  };
  for (const auto& r : rows) {
    out += r.instance + "," + std::to_string(r.m) + "," + std::to_string(r.k) + "," +
           real_cell(r.epsilon) + "," + r.algorithm + "," + real_cell(r.runtime_s) + "," +
           int_cell(r.iterations) + "," + int_cell(r.cuts) + "," + real_cell(r.rmp_s) + "," +
           real_cell(r.psip_s) + "," + real_cell(r.dsp_s) + "," + real_cell(r.objective) + "," +
           r.status + "\n";
  }
  return out;
}

/// Folds a planning result into a report line. Phases an algorithm does not
/// have, and results a run did not reach, are left absent.
inline ReportRow make_report_row(const std::string& instance, const SurvivabilityPolicy& policy,
                                 const PlanReport& rep) {
  ReportRow row;
  row.instance = instance;
  row.m = rep.states;
  row.k = policy.k;
  if (policy.k >= 1) row.epsilon = policy.epsilon(policy.k);
  if (rep.algorithm == "extensive") row.algorithm = "ef";
  else if (rep.algorithm == "benders") row.algorithm = "bd";
  else if (rep.algorithm == "cutting-plane") row.algorithm = "cpa";
  else row.algorithm = rep.algorithm;
  row.status = to_string(rep.outcome);

  bool finished = rep.outcome == PlanOutcome::Optimal || rep.outcome == PlanOutcome::Infeasible;
  if (!finished) return row;  // did not finish: every result cell reads "x"

  row.runtime_s = rep.runtime_s;
  row.iterations = rep.iterations;
  row.rmp_s = rep.master_s;
  if (rep.algorithm != "extensive") {
    row.cuts = rep.cuts;
    row.dsp_s = rep.subproblem_s;
  }
  if (rep.algorithm == "cutting-plane") row.psip_s = rep.separation_s;
  if (rep.outcome == PlanOutcome::Optimal) row.objective = rep.objective;
  return row;
}

// ---- exchange-format converter ----

struct CdfOptions {
  double default_rating = 9999.0;   // used when a branch card carries rating 0
  bool drop_idle_generators = true; // scheduled output 0 means no capacity here
  double marginal_cost = 1.0;
  std::string case_name = "converted";
};

/// Converts the classic fixed-column bus/branch exchange format. Demand is
/// the active load, generation capacity is the scheduled active output, and
/// branch susceptance is base MVA over reactance. Everything converts as
/// existing; candidates come from augment_with_duplicates.
inline PowerSystem parse_ieee_cdf(const std::string& text, const CdfOptions& opt = {},
                                  ParseLog* log = nullptr) {
  auto field = [](const std::string& card, std::size_t from, std::size_t to) {
    if (from >= card.size()) return std::string();
    return detail::trim(card.substr(from, std::min(to, card.size()) - from));
  };
  auto warn = [&](const std::string& msg) {
    if (log) log->warnings.push_back(msg);
  };

  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  if (!std::getline(is, line)) throw std::runtime_error("empty exchange file");
  ++lineno;
  std::string base_str = field(line, 31, 37);
  double base_mva = 100.0;
  if (!base_str.empty()) {
    try {
      base_mva = std::stod(base_str);
    } catch (...) {
      throw std::runtime_error("title card: cannot read the MVA base from '" + base_str + "'");
    }
  } else {
    warn("title card lacks an MVA base; assuming 100");
  }
  if (base_mva <= 0.0) throw std::runtime_error("title card: nonpositive MVA base");

  PowerSystem sys;
  sys.name = opt.case_name;
  sys.sigma = 1.0;

  enum class Mode { Idle, Buses, Branches } mode = Mode::Idle;
  int branch_id = 0;
  int dropped = 0;
  while (std::getline(is, line)) {
    ++lineno;
    std::string t = detail::trim(line);
    if (t.empty()) continue;
    if (t.rfind("BUS DATA", 0) == 0) {
      mode = Mode::Buses;
      continue;
    }
    if (t.rfind("BRANCH DATA", 0) == 0) {
      mode = Mode::Branches;
      continue;
    }
    if (t.rfind("-999", 0) == 0 || t.rfind("-99", 0) == 0) {
      mode = Mode::Idle;
      continue;
    }
    if (t.rfind("END", 0) == 0) break;
    if (mode == Mode::Idle) continue;

    if (mode == Mode::Buses) {
      // names may contain blanks, so the card is sliced by column
      Bus b;
      b.id = detail::parse_int(field(line, 0, 4), lineno, "bus number");
      b.demand = detail::parse_number(field(line, 40, 49).empty() ? "0" : field(line, 40, 49),
                                      lineno, "bus load");
      double gen = 0.0;
      std::string g = field(line, 59, 67);
      if (!g.empty()) gen = detail::parse_number(g, lineno, "bus generation");
      sys.buses.push_back(b);
      if (gen > 1e-9) {
        Generator unit;
        unit.id = b.id;  // one aggregated unit per bus in this format
        unit.bus = b.id;
        unit.pmax = gen;
        unit.invest_cost = 0.0;
        unit.marginal_cost = opt.marginal_cost;
        unit.existing = true;
        sys.generators.push_back(unit);
      } else if (!g.empty() && opt.drop_idle_generators) {
        ++dropped;
      }
    } else {
      auto tok = detail::split_ws(t);
      if (tok.size() < 10) detail::fail_at(lineno, "branch card has too few fields");
      TransmissionElement e;
      e.id = ++branch_id;
      e.from_bus = detail::parse_int(tok[0], lineno, "branch from bus");
      e.to_bus = detail::parse_int(tok[1], lineno, "branch to bus");
      double x = detail::parse_number(tok[7], lineno, "branch reactance");
      if (x <= 0.0) detail::fail_at(lineno, "branch reactance must be positive");
      e.susceptance = base_mva / x;
      double rating = detail::parse_number(tok[9], lineno, "branch rating");
      if (rating <= 0.0) {
        warn("line " + std::to_string(lineno) + ": branch " + std::to_string(e.id) +
             " has no rating; using the default of " + detail::fmt_full(opt.default_rating));
        rating = opt.default_rating;
      }
      e.capacity = rating;
      e.invest_cost = 0.0;
      e.existing = true;
      sys.branches.push_back(e);
    }
  }
  if (dropped > 0)
    warn(std::to_string(dropped) + " zero-output units dropped (voltage support only)");

  auto defects = validate_system(sys);
  if (!defects.empty())
    throw std::runtime_error("converted system is invalid: " + defects.front().to_string());
  return sys;
}

/// Derives a candidate twin for every existing element. Investment costs
/// scale with size: factor times capacity for circuits, factor times rated
/// output for units. New ids are the old ids plus a round power-of-ten
/// offset per element kind.
inline PowerSystem augment_with_duplicates(const PowerSystem& sys, double gen_cost_factor,
                                           double branch_cost_factor) {
  if (gen_cost_factor < 0.0 || branch_cost_factor < 0.0)
    throw std::invalid_argument("augment_with_duplicates: cost factors must be nonnegative");
  auto offset_for = [](int max_id) {
    int off = 10;
    while (off <= max_id) off *= 10;
    return off;
  };
  PowerSystem out = sys;
  int gmax = 0, emax = 0;
  for (const auto& g : sys.generators) gmax = std::max(gmax, g.id);
  for (const auto& e : sys.branches) emax = std::max(emax, e.id);
  const int goff = offset_for(gmax), eoff = offset_for(emax);

  for (const auto& g : sys.generators) {
    if (!g.existing) continue;
    Generator twin = g;
    twin.id = g.id + goff;
    twin.existing = false;
    twin.invest_cost = gen_cost_factor * g.pmax;
    out.generators.push_back(twin);
  }
  for (const auto& e : sys.branches) {
    if (!e.existing) continue;
    TransmissionElement twin = e;
    twin.id = e.id + eoff;
    twin.existing = false;
    twin.invest_cost = branch_cost_factor * e.capacity;
    out.branches.push_back(twin);
  }
  auto defects = validate_system(out);
  if (!defects.empty())
    throw std::logic_error("augment_with_duplicates: result invalid: " +
                           defects.front().to_string());
  return out;
}

// ---- file helpers ----

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace nke
