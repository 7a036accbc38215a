#pragma once

// Shared desk-scale systems used across the test suite.
//
// two_bus: one load bus fed over a single corridor, with one candidate
//   generator and one candidate parallel circuit. Small enough to reason
//   about every contingency by hand.
// three_bus: a triangle with a single generation bus; the corridor capacities
//   make exactly one line failure survivable without expansion.
// three_bus_candidates: the triangle plus a candidate duplicate of every
//   element at build cost 5.

#include "nke/model.hpp"

namespace nke::testing {

inline PowerSystem two_bus() {
  PowerSystem sys;
  sys.name = "two-bus";
  sys.buses = {{1, 0.0}, {2, 80.0}};
  sys.generators = {
      {1, 1, 100.0, 0.0, 1.0, true},
      {2, 1, 100.0, 20.0, 2.0, false},
  };
  sys.branches = {
      {1, 1, 2, 10.0, 100.0, 0.0, true},
      {2, 1, 2, 10.0, 100.0, 10.0, false},
  };
  sys.sigma = 1.0;
  return sys;
}

inline PowerSystem three_bus() {
  PowerSystem sys;
  sys.name = "three-bus";
  sys.buses = {{1, 0.0}, {2, 60.0}, {3, 40.0}};
  sys.generators = {{1, 1, 120.0, 0.0, 1.0, true}};
  sys.branches = {
      {1, 1, 2, 10.0, 80.0, 0.0, true},
      {2, 1, 3, 10.0, 50.0, 0.0, true},
      {3, 2, 3, 10.0, 30.0, 0.0, true},
  };
  sys.sigma = 1.0;
  return sys;
}

inline PowerSystem three_bus_candidates() {
  PowerSystem sys = three_bus();
  sys.name = "three-bus-candidates";
  for (const auto& g : std::vector<Generator>(sys.generators)) {
    Generator c = g;
    c.id = g.id + 10;
    c.existing = false;
    c.invest_cost = 5.0;
    sys.generators.push_back(c);
  }
  for (const auto& e : std::vector<TransmissionElement>(sys.branches)) {
    TransmissionElement c = e;
    c.id = e.id + 10;
    c.existing = false;
    c.invest_cost = 5.0;
    sys.branches.push_back(c);
  }
  return sys;
}

}  // namespace nke::testing
