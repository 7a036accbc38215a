#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "nke/io.hpp"

using namespace nke;
using Catch::Matchers::ContainsSubstring;

namespace {

struct CliRun {
  int exit_code = -1;
  std::string output;  // stdout and stderr interleaved
};

CliRun run_cli(const std::string& args) {
  std::string cmd = std::string(NKE_CLI_BIN) + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  CliRun r;
  char buf[4096];
  std::size_t got;
  while ((got = fread(buf, 1, sizeof buf, pipe)) > 0) r.output.append(buf, got);
  int rc = pclose(pipe);
  r.exit_code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  return r;
}

std::filesystem::path scratch_dir() {
  auto dir = std::filesystem::temp_directory_path() / "nke_cli_test";
  std::filesystem::create_directories(dir);
  return dir;
}

std::string data(const char* name) { return std::string(NKE_DATA_DIR) + "/" + name; }

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// report lines with the wall-clock columns blanked, so reruns can be
// compared byte for byte on everything that must be reproducible
std::string strip_runtime_columns(const std::string& csv) {
  std::stringstream in(csv), out;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    // runtime_s, rmp_s, psip_s, dsp_s
    for (std::size_t i : {5u, 8u, 9u, 10u})
      if (i < cells.size()) cells[i] = "-";
    for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << cells[i];
    out << "\n";
  }
  return out.str();
}

}  // namespace

TEST_CASE("plan solves the two-bus case and writes artifacts", "[cli]") {
  auto plan_path = scratch_dir() / "t2_k1.plan";
  auto report_path = scratch_dir() / "t2_k1.csv";
  auto r = run_cli("plan --case " + data("t2.case") + " --algo cpa --k 1 --out " +
                   plan_path.string() + " --report " + report_path.string());
  INFO(r.output);
  CHECK(r.exit_code == 0);
  CHECK_THAT(r.output, ContainsSubstring("status:     optimal"));
  CHECK_THAT(r.output, ContainsSubstring("objective:  110"));
  CHECK_THAT(r.output, ContainsSubstring("e2"));
  CHECK_THAT(r.output, ContainsSubstring("g2"));

  auto plan = read_plan(slurp(plan_path));
  CHECK(plan.builds_generator(2));
  CHECK(plan.builds_branch(2));

  auto report = slurp(report_path);
  CHECK_THAT(report, ContainsSubstring(
                         "instance,m,k,epsilon,algorithm,runtime_s,iterations,cuts,rmp_s,psip_s,"
                         "dsp_s,objective,status"));
  CHECK_THAT(report, ContainsSubstring("t2,4,1,0.000,cpa,"));
  CHECK_THAT(report, ContainsSubstring(",110.000,optimal"));
}

TEST_CASE("plan agrees across algorithms on the shipped cases", "[cli]") {
  for (const char* algo : {"ef", "bd", "cpa"}) {
    auto r = run_cli("plan --case " + data("t2.case") + " --algo " + algo + " --k 1");
    INFO(algo << ": " << r.output);
    CHECK(r.exit_code == 0);
    CHECK_THAT(r.output, ContainsSubstring("objective:  110"));
  }
}

TEST_CASE("plan reports infeasible instances with exit code 2", "[cli]") {
  auto r = run_cli("plan --case " + data("t2.case") +
                   " --algo ef --k 2 --eps-schedule 1=0,2=0.05");
  INFO(r.output);
  CHECK(r.exit_code == 2);
  CHECK_THAT(r.output, ContainsSubstring("status:     infeasible"));
}

TEST_CASE("plan handles the nominal-only budget", "[cli]") {
  auto r = run_cli("plan --case " + data("t2.case") + " --algo bd --k 0");
  INFO(r.output);
  CHECK(r.exit_code == 0);
  CHECK_THAT(r.output, ContainsSubstring("objective:  80"));
}

TEST_CASE("usage errors exit with code 1", "[cli]") {
  CHECK(run_cli("plan --case " + data("t2.case") + " --algo ef").exit_code == 1);  // no --k
  CHECK(run_cli("plan --case " + data("t2.case") + " --algo ef --k 1 --eps 0.1 "
                "--eps-schedule 1=0")
            .exit_code == 1);  // mutually exclusive
  CHECK(run_cli("plan --case " + data("t2.case") + " --algo nope --k 1").exit_code == 1);
  CHECK(run_cli("frobnicate").exit_code == 1);
  CHECK(run_cli("plan --case /no/such/file.case --algo ef --k 1").exit_code == 1);
  CHECK(run_cli("--help").exit_code == 0);
}

TEST_CASE("separate audits a written plan", "[cli]") {
  auto plan_path = scratch_dir() / "t2_audit.plan";
  REQUIRE(run_cli("plan --case " + data("t2.case") + " --algo ef --k 1 --out " +
                  plan_path.string())
              .exit_code == 0);

  auto ok = run_cli("separate --case " + data("t2.case") + " --plan " + plan_path.string() +
                    " --k 1");
  INFO(ok.output);
  CHECK(ok.exit_code == 0);
  CHECK_THAT(ok.output, ContainsSubstring("verdict:        compliant"));

  auto bad = run_cli("separate --case " + data("t2.case") + " --plan " + plan_path.string() +
                     " --k 2 --eps 0.05");
  INFO(bad.output);
  CHECK(bad.exit_code == 4);
  CHECK_THAT(bad.output, ContainsSubstring("verdict:        violated"));
  CHECK_THAT(bad.output, ContainsSubstring("g1+g2"));

  auto trivial = run_cli("separate --case " + data("t2.case") + " --plan " + plan_path.string() +
                         " --k 0");
  CHECK(trivial.exit_code == 0);
  CHECK_THAT(trivial.output, ContainsSubstring("compliant"));
}

TEST_CASE("enumerate prints failure-state counts", "[cli]") {
  auto r = run_cli("enumerate --n 152 --k 2");
  CHECK(r.exit_code == 0);
  CHECK_THAT(r.output, ContainsSubstring("11628"));
  CHECK_THAT(run_cli("enumerate --n 110 --k 1").output, ContainsSubstring("110"));
  CHECK_THAT(run_cli("enumerate --n 5 --k 0").output, ContainsSubstring("0"));
  CHECK_THAT(run_cli("enumerate --case " + data("t2.case") + " --k 1").output,
             ContainsSubstring("4"));
  CHECK(run_cli("enumerate --k 1").exit_code == 1);  // needs --n or --case
}

TEST_CASE("convert and augment build a study case from interchange data", "[cli]") {
  auto case_path = scratch_dir() / "ieee30.case";
  auto aug_path = scratch_dir() / "ieee30aug.case";

  auto conv = run_cli("convert --cdf " + data("ieee30.cdf") + " --out " + case_path.string() +
                      " --name ieee30");
  INFO(conv.output);
  CHECK(conv.exit_code == 0);
  CHECK_THAT(conv.output, ContainsSubstring("30 buses"));

  auto aug = run_cli("augment --case " + case_path.string() + " --out " + aug_path.string() +
                     " --gen-factor 0.5 --branch-factor 0.5");
  INFO(aug.output);
  CHECK(aug.exit_code == 0);
  CHECK_THAT(aug.output, ContainsSubstring("86 elements"));

  auto sys = parse_case(read_text_file(aug_path.string()));
  CHECK(sys.element_count() == 86);
  CHECK(count_states(sys.element_count(), 2) == BigCount(3741));
}

TEST_CASE("identical invocations produce identical reports outside runtime columns", "[cli]") {
  auto ra = scratch_dir() / "rep_a.csv";
  auto rb = scratch_dir() / "rep_b.csv";
  std::string invocation = "plan --case " + data("t3cand.case") + " --algo bd --k 1 --report ";
  REQUIRE(run_cli(invocation + ra.string()).exit_code == 0);
  REQUIRE(run_cli(invocation + rb.string()).exit_code == 0);
  CHECK(strip_runtime_columns(slurp(ra)) == strip_runtime_columns(slurp(rb)));
  CHECK(slurp(ra) != "");
}

TEST_CASE("time limits surface as exit code 3 with a dnf report row", "[cli]") {
  auto case_path = scratch_dir() / "ieee30.case";
  auto aug_path = scratch_dir() / "ieee30aug_tl.case";
  REQUIRE(run_cli("convert --cdf " + data("ieee30.cdf") + " --out " + case_path.string())
              .exit_code == 0);
  REQUIRE(run_cli("augment --case " + case_path.string() + " --out " + aug_path.string())
              .exit_code == 0);

  auto report_path = scratch_dir() / "tl.csv";
  auto r = run_cli("plan --case " + aug_path.string() +
                   " --algo cpa --k 2 --eps 0.05 --time-limit 0.3 --report " +
                   report_path.string());
  INFO(r.output);
  CHECK(r.exit_code == 3);
  auto report = slurp(report_path);
  CHECK_THAT(report, ContainsSubstring(",x,x,x,x,x,x,x,time-limit"));
}
