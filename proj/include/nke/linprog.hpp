#pragma once

// Generic constraint-matrix problem descriptions consumed by the solving
// engine. Rows are stored sparse; variables carry finite or infinite bounds.

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace nke {

constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Sense { Min, Max };
enum class Rel { Le, Eq, Ge };

struct LinearProgram {
  struct Var {
    double lo = 0.0;
    double hi = kInf;
    double obj = 0.0;
    std::string name;
  };
  struct Row {
    std::vector<std::pair<int, double>> terms;  // (variable index, coefficient)
    Rel rel = Rel::Le;
    double rhs = 0.0;
    std::string name;
  };

  Sense sense = Sense::Min;
  std::vector<Var> vars;
  std::vector<Row> rows;

  int add_var(double lo, double hi, double obj, std::string name = {}) {
    if (lo > hi) throw std::invalid_argument("add_var: lower bound exceeds upper (" + name + ")");
    vars.push_back({lo, hi, obj, std::move(name)});
    return static_cast<int>(vars.size()) - 1;
  }

  int add_row(std::vector<std::pair<int, double>> terms, Rel rel, double rhs,
              std::string name = {}) {
    for (const auto& [v, coef] : terms) {
      if (v < 0 || v >= static_cast<int>(vars.size()))
        throw std::invalid_argument("add_row: coefficient references undeclared variable");
      (void)coef;
    }
    rows.push_back({std::move(terms), rel, rhs, std::move(name)});
    return static_cast<int>(rows.size()) - 1;
  }

  std::size_t num_vars() const { return vars.size(); }
  std::size_t num_rows() const { return rows.size(); }

  void validate() const {
    for (const auto& v : vars)
      if (v.lo > v.hi) throw std::invalid_argument("LinearProgram: variable bounds cross (" + v.name + ")");
    for (const auto& r : rows)
      for (const auto& [v, coef] : r.terms) {
        if (v < 0 || v >= static_cast<int>(vars.size()))
          throw std::invalid_argument("LinearProgram: row references undeclared variable");
        if (!std::isfinite(coef))
          throw std::invalid_argument("LinearProgram: non-finite coefficient in row " + r.name);
      }
  }
};

struct MixedIntegerProgram {
  LinearProgram lp;
  std::vector<int> binaries;  // variable indices restricted to {0,1}

  void mark_binary(int var) {
    if (var < 0 || var >= static_cast<int>(lp.vars.size()))
      throw std::invalid_argument("mark_binary: undeclared variable");
    auto& v = lp.vars[var];
    if (v.lo < 0.0 || v.hi > 1.0)
      throw std::invalid_argument("mark_binary: binary variable bounds must lie within [0,1]");
    binaries.push_back(var);
  }

  void validate() const {
    lp.validate();
    for (int b : binaries) {
      if (b < 0 || b >= static_cast<int>(lp.vars.size()))
        throw std::invalid_argument("MixedIntegerProgram: binary index out of range");
      if (lp.vars[b].lo < 0.0 || lp.vars[b].hi > 1.0)
        throw std::invalid_argument("MixedIntegerProgram: binary bounds escaped [0,1]");
    }
  }
};

enum class SolveStatus {
  Optimal,
  Infeasible,
  Unbounded,
  IterationLimit,
  NodeLimit,
  TimeLimit,
  NumericalFailure,
};

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::Unbounded: return "unbounded";
    case SolveStatus::IterationLimit: return "iteration_limit";
    case SolveStatus::NodeLimit: return "node_limit";
    case SolveStatus::TimeLimit: return "time_limit";
    case SolveStatus::NumericalFailure: return "numerical_failure";
  }
  return "?";
}

struct LpSolution {
  SolveStatus status = SolveStatus::NumericalFailure;
  double objective = 0.0;
  std::vector<double> x;              // primal value per variable
  std::vector<double> duals;          // dual value per row
  std::vector<double> reduced_costs;  // per variable (multiplier of its active bound)
  std::int64_t iterations = 0;
};

struct MipSolution {
  SolveStatus status = SolveStatus::NumericalFailure;
  bool has_incumbent = false;
  double objective = 0.0;
  double best_bound = 0.0;
  double gap = 0.0;  // proven relative gap when an incumbent exists
  std::vector<double> x;
  std::int64_t nodes = 0;
};

}  // namespace nke
