// Command-line front end: runs a planning study, audits a plan against the
// survivability requirement, counts contingency states, converts the classic
// exchange format, and derives candidate duplicates.
//
// Exit codes: 0 success (plan: proven optimal; separate: compliant),
//             1 usage or input error,
//             2 planning found the instance infeasible,
//             3 planning stopped before certainty (time/iteration/state limit),
//             4 the audited plan violates the requirement.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "nke/io.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitInfeasible = 2;
constexpr int kExitLimit = 3;
constexpr int kExitViolated = 4;

struct PolicyFlags {
  int k = 1;
  double eps = 0.0;
  std::string schedule;  // "1=0,2=0.05" overrides --eps per cardinality
};

void add_policy_flags(CLI::App* cmd, PolicyFlags& pf) {
  cmd->add_option("--k", pf.k, "contingency budget (max simultaneous failures)")->required();
  auto* eps = cmd->add_option("--eps", pf.eps,
                              "shed allowance as a fraction of total demand for failures of 2 or "
                              "more elements (single failures allow none)");
  auto* sched = cmd->add_option("--eps-schedule", pf.schedule,
                                "per-cardinality allowances, e.g. 1=0,2=0.05 (overrides --eps)");
  eps->excludes(sched);
}

nke::SurvivabilityPolicy make_policy(const PolicyFlags& pf) {
  if (pf.schedule.empty()) return nke::SurvivabilityPolicy::uniform(pf.k, pf.eps);
  nke::SurvivabilityPolicy pol;
  pol.k = pf.k;
  pol.allow_nonzero_eps1 = true;  // explicit schedules may relax the single-failure rule
  std::string rest = pf.schedule;
  while (!rest.empty()) {
    auto comma = rest.find(',');
    std::string item = rest.substr(0, comma);
    rest = comma == std::string::npos ? "" : rest.substr(comma + 1);
    auto eq = item.find('=');
    if (eq == std::string::npos)
      throw CLI::ValidationError("--eps-schedule", "expected j=value, got '" + item + "'");
    try {
      pol.epsilon_schedule[std::stoi(item.substr(0, eq))] = std::stod(item.substr(eq + 1));
    } catch (const std::exception&) {
      throw CLI::ValidationError("--eps-schedule", "cannot parse '" + item + "'");
    }
  }
  return pol;
}

nke::PowerSystem load_case(const std::string& path, bool lenient) {
  nke::ParseLog log;
  auto sys = nke::parse_case(nke::read_text_file(path), {.strict = !lenient}, &log);
  for (const auto& w : log.warnings) std::cerr << "warning: " << path << ": " << w << "\n";
  return sys;
}

void require_valid_policy(const nke::SurvivabilityPolicy& pol) {
  auto defects = pol.validate();
  if (!defects.empty())
    throw CLI::ValidationError("policy", defects.front().to_string());
}

int run_plan(const std::string& case_path, const std::string& algo, const PolicyFlags& pf,
             double gap, double time_limit, int threads, bool lenient,
             const std::string& out_path, const std::string& report_path) {
  auto sys = load_case(case_path, lenient);
  auto pol = make_policy(pf);
  require_valid_policy(pol);

  nke::PlannerConfig cfg;
  cfg.mip_gap = gap;
  cfg.time_limit_s = time_limit;
  cfg.threads = threads;

  nke::PlanReport rep;
  if (algo == "ef") rep = nke::solve_extensive(sys, pol, cfg);
  else if (algo == "bd") rep = nke::run_benders(sys, pol, cfg);
  else rep = nke::run_cutting_planes(sys, pol, cfg);

  std::cout << "instance:   " << sys.name << "\n"
            << "algorithm:  " << algo << "\n"
            << "status:     " << nke::to_string(rep.outcome) << "\n";
  if (!rep.note.empty()) std::cout << "note:       " << rep.note << "\n";
  if (rep.outcome == nke::PlanOutcome::Optimal) {
    std::cout << "objective:  " << rep.objective << "\n"
              << "investment: " << rep.investment << "\n"
              << "operating:  " << rep.operating << "\n";
    std::string builds;
    for (std::size_t i = 0; i < sys.generators.size(); ++i)
      if (!sys.generators[i].existing && rep.plan.gen_build[i])
        builds += " g" + std::to_string(sys.generators[i].id);
    for (std::size_t i = 0; i < sys.branches.size(); ++i)
      if (!sys.branches[i].existing && rep.plan.branch_build[i])
        builds += " e" + std::to_string(sys.branches[i].id);
    std::cout << "builds:    " << (builds.empty() ? " none" : builds) << "\n";
    if (!out_path.empty())
      nke::write_text_file(out_path, nke::write_plan(nke::to_expansion_plan(sys, rep), sys.name));
  }
  std::cout << "iterations: " << rep.iterations << "\n"
            << "cuts:       " << rep.cuts << "\n"
            << "runtime_s:  " << rep.runtime_s << "\n";

  if (!report_path.empty()) {
    // report rows identify the input file, not the embedded case title, so
    // batch runs over many files stay unambiguous even when titles repeat
    std::string label = std::filesystem::path(case_path).stem().string();
    nke::write_text_file(report_path, nke::write_report({nke::make_report_row(label, pol, rep)}));
  }

  switch (rep.outcome) {
    case nke::PlanOutcome::Optimal: return kExitOk;
    case nke::PlanOutcome::Infeasible: return kExitInfeasible;
    default: return kExitLimit;
  }
}

int run_separate(const std::string& case_path, const std::string& plan_path,
                 const PolicyFlags& pf, int threads, bool lenient) {
  auto sys = load_case(case_path, lenient);
  auto pol = make_policy(pf);
  require_valid_policy(pol);
  auto plan = nke::read_plan(nke::read_text_file(plan_path));
  auto x = nke::PlanVector::from_plan(sys, plan);

  nke::PlannerConfig cfg;
  cfg.threads = threads;
  auto audit = nke::verify_compliance(sys, x, pol, cfg);

  std::cout << "states checked: " << audit.states_checked << "\n"
            << "worst state:    " << audit.worst_state.to_string() << "\n"
            << "worst shed:     " << audit.worst_shed << "\n"
            << "allowance:      " << audit.worst_allowance << "\n"
            << "verdict:        " << (audit.compliant ? "compliant" : "violated") << "\n";
  if (!audit.compliant) {
    std::cout << "violations:     " << audit.violations.size() << "\n";
    for (std::size_t i = 0; i < audit.violations.size() && i < 10; ++i) {
      const auto& v = audit.violations[i];
      std::cout << "  " << v.state.to_string() << " sheds " << v.shed << " > " << v.allowance
                << "\n";
    }
  }
  return audit.compliant ? kExitOk : kExitViolated;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"minimum-cost grid expansion planning under a survivability requirement"};
  app.require_subcommand(1);

  // plan
  std::string case_path, algo = "cpa", out_path, report_path;
  PolicyFlags pf;
  double gap = 0.001, time_limit = 0.0;
  int threads = 1;
  bool lenient = false;
  auto* plan = app.add_subcommand("plan", "compute a minimum-cost compliant expansion plan");
  plan->add_option("--case", case_path, "case file")->required()->check(CLI::ExistingFile);
  plan->add_option("--algo", algo, "ef (one extensive model), bd (master plus per-state cuts), "
                   "cpa (master plus worst-case search)")
      ->check(CLI::IsMember({"ef", "bd", "cpa"}));
  add_policy_flags(plan, pf);
  plan->add_option("--gap", gap, "relative optimality gap for the master search");
  plan->add_option("--time-limit", time_limit, "wall-clock budget in seconds (0 = none)");
  plan->add_option("--threads", threads, "concurrent dispatch solves");
  plan->add_option("--out", out_path, "write the plan file here");
  plan->add_option("--report", report_path, "write a one-row report table here");
  plan->add_flag("--lenient", lenient, "warn instead of failing on unknown case-file fields");

  // separate
  std::string plan_path;
  PolicyFlags spf;
  auto* sep = app.add_subcommand("separate", "audit a plan file against the requirement");
  sep->add_option("--case", case_path, "case file")->required()->check(CLI::ExistingFile);
  sep->add_option("--plan", plan_path, "plan file to audit")->required()->check(CLI::ExistingFile);
  add_policy_flags(sep, spf);
  sep->add_option("--threads", threads, "concurrent dispatch solves");
  sep->add_flag("--lenient", lenient, "warn instead of failing on unknown case-file fields");

  // enumerate
  int en_n = -1, en_k = 0;
  std::string en_case;
  auto* en = app.add_subcommand("enumerate", "count failure states of up to k elements");
  auto* en_n_opt = en->add_option("--n", en_n, "number of elements");
  auto* en_case_opt =
      en->add_option("--case", en_case, "take n from this case file")->check(CLI::ExistingFile);
  en->add_option("--k", en_k, "contingency budget")->required();
  en_n_opt->excludes(en_case_opt);

  // convert
  std::string cdf_path, conv_out, conv_name = "converted";
  double default_rating = 9999.0, marginal_cost = 1.0;
  auto* conv = app.add_subcommand("convert", "convert classic exchange-format data to a case file");
  conv->add_option("--cdf", cdf_path, "exchange-format input")->required()->check(CLI::ExistingFile);
  conv->add_option("--out", conv_out, "case file to write")->required();
  conv->add_option("--name", conv_name, "case name to embed");
  conv->add_option("--default-rating", default_rating, "capacity for unrated circuits");
  conv->add_option("--marginal-cost", marginal_cost, "operating cost per megawatt");

  // augment
  std::string aug_out;
  double gen_factor = 0.5, branch_factor = 0.5;
  auto* aug = app.add_subcommand("augment", "add a candidate duplicate of every existing element");
  aug->add_option("--case", case_path, "case file")->required()->check(CLI::ExistingFile);
  aug->add_option("--out", aug_out, "case file to write")->required();
  aug->add_option("--gen-factor", gen_factor, "candidate unit cost as a multiple of rated output");
  aug->add_option("--branch-factor", branch_factor,
                  "candidate circuit cost as a multiple of capacity");
  aug->add_flag("--lenient", lenient, "warn instead of failing on unknown case-file fields");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // help requests exit 0; every other parse problem is a usage error
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (plan->parsed())
      return run_plan(case_path, algo, pf, gap, time_limit, threads, lenient, out_path,
                      report_path);
    if (sep->parsed()) return run_separate(case_path, plan_path, spf, threads, lenient);
    if (en->parsed()) {
      std::size_t n = 0;
      if (!en_case.empty()) n = load_case(en_case, lenient).element_count();
      else if (en_n >= 0) n = static_cast<std::size_t>(en_n);
      else throw CLI::ValidationError("enumerate", "provide --n or --case");
      std::cout << nke::count_states(n, en_k) << "\n";
      return kExitOk;
    }
    if (conv->parsed()) {
      nke::ParseLog log;
      nke::CdfOptions opt;
      opt.default_rating = default_rating;
      opt.marginal_cost = marginal_cost;
      opt.case_name = conv_name;
      auto sys = nke::parse_ieee_cdf(nke::read_text_file(cdf_path), opt, &log);
      for (const auto& w : log.warnings) std::cerr << "warning: " << w << "\n";
      nke::write_text_file(conv_out, nke::serialize_case(sys));
      std::cout << "wrote " << conv_out << ": " << sys.buses.size() << " buses, "
                << sys.generators.size() << " generators, " << sys.branches.size()
                << " branches\n";
      return kExitOk;
    }
    if (aug->parsed()) {
      auto sys = load_case(case_path, lenient);
      auto out = nke::augment_with_duplicates(sys, gen_factor, branch_factor);
      nke::write_text_file(aug_out, nke::serialize_case(out));
      std::cout << "wrote " << aug_out << ": " << out.element_count() << " elements ("
                << sys.element_count() << " existing)\n";
      return kExitOk;
    }
  } catch (const CLI::Error& e) {
    app.exit(e);
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
