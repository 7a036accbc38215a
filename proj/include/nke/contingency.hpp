#pragma once

// Contingency state space: exact counting, lazy enumeration in a fixed
// deterministic order, and application of a contingency to a planned system.

#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

#include "nke/model.hpp"

namespace nke {

using BigCount = boost::multiprecision::cpp_int;

struct StateSpace {
  std::size_t n_failable = 0;  // |G| + |E|
  int k = 0;
};

/// Number of nonempty contingency states with at most k failures among n
/// elements: sum_{j=1..k} C(n, j). Exact for any n, k (big integer).
inline BigCount count_states(std::size_t n, int k) {
  if (k < 0 || static_cast<std::size_t>(k) > n)
    throw std::invalid_argument("count_states: require 0 <= k <= n, got n=" + std::to_string(n) +
                                " k=" + std::to_string(k));
  BigCount total = 0;
  BigCount binom = 1;  // C(n, 0)
  for (int j = 1; j <= k; ++j) {
    binom *= static_cast<std::uint64_t>(n - j + 1);
    binom /= static_cast<std::uint64_t>(j);
    total += binom;
  }
  return total;
}

/// count_states narrowed to a native integer; reports overflow instead of wrapping.
inline std::uint64_t count_states_checked(std::size_t n, int k) {
  BigCount c = count_states(n, k);
  if (c > std::numeric_limits<std::uint64_t>::max())
    throw std::overflow_error("count_states: " + c.str() + " exceeds native integer range");
  return c.convert_to<std::uint64_t>();
}

/// Lazily yields every nonempty failure set of cardinality <= k exactly once.
/// Order is deterministic: cardinality-major, then lexicographic over the
/// element sequence [generators by id asc, branches by id asc]. Memory is O(k).
class ContingencyEnumerator {
 public:
  ContingencyEnumerator(const PowerSystem& sys, int k)
      : k_(k) {
    if (k < 0) throw std::invalid_argument("ContingencyEnumerator: k must be >= 0");
    std::vector<int> gids, bids;
    for (const auto& g : sys.generators) gids.push_back(g.id);
    for (const auto& e : sys.branches) bids.push_back(e.id);
    std::sort(gids.begin(), gids.end());
    std::sort(bids.begin(), bids.end());
    for (int id : gids) elements_.push_back({true, id});
    for (int id : bids) elements_.push_back({false, id});
    if (k_ > static_cast<int>(elements_.size())) k_ = static_cast<int>(elements_.size());
    cardinality_ = 0;
  }

  std::optional<Contingency> next() {
    if (!advance()) return std::nullopt;
    Contingency c;
    for (int idx : picks_) {
      const auto& [is_gen, id] = elements_[idx];
      (is_gen ? c.failed_generators : c.failed_branches).push_back(id);
    }
    return c;
  }

 private:
  bool advance() {
    const int n = static_cast<int>(elements_.size());
    if (cardinality_ == 0) {
      if (k_ < 1) return false;
      cardinality_ = 1;
      picks_ = {0};
      return n >= 1;
    }
    // next lexicographic combination of the current cardinality
    int j = cardinality_ - 1;
    while (j >= 0 && picks_[j] == n - cardinality_ + j) --j;
    if (j >= 0) {
      ++picks_[j];
      for (int i = j + 1; i < cardinality_; ++i) picks_[i] = picks_[i - 1] + 1;
      return true;
    }
    // move to the next cardinality class
    if (cardinality_ >= k_ || cardinality_ >= n) return false;
    ++cardinality_;
    picks_.resize(cardinality_);
    for (int i = 0; i < cardinality_; ++i) picks_[i] = i;
    return true;
  }

  int k_;
  int cardinality_;
  std::vector<std::pair<bool, int>> elements_;  // (is_generator, id), fixed order
  std::vector<int> picks_;                      // indices into elements_, ascending
};

/// Eager counterpart of the enumerator, for small state spaces.
inline std::vector<Contingency> all_states(const PowerSystem& sys, int k) {
  std::vector<Contingency> out;
  ContingencyEnumerator en(sys, k);
  while (auto c = en.next()) out.push_back(std::move(*c));
  return out;
}

/// Effective availability of every element under a plan and a contingency:
/// a = x * (1 - d). An element is usable iff it is built and not failed.
struct EffectiveNetwork {
  std::map<int, int> gen_available;
  std::map<int, int> branch_available;
};

inline EffectiveNetwork apply_contingency(const PowerSystem& sys, const PlanVector& x,
                                          const Contingency& c) {
  for (int id : c.failed_generators)
    if (sys.generator_index(id) < 0)
      throw std::invalid_argument("apply_contingency: unknown generator id " + std::to_string(id));
  for (int id : c.failed_branches)
    if (sys.branch_index(id) < 0)
      throw std::invalid_argument("apply_contingency: unknown branch id " + std::to_string(id));

  EffectiveNetwork net;
  for (std::size_t i = 0; i < sys.generators.size(); ++i) {
    const auto& g = sys.generators[i];
    net.gen_available[g.id] = x.gen_build[i] * (c.fails_generator(g.id) ? 0 : 1);
  }
  for (std::size_t i = 0; i < sys.branches.size(); ++i) {
    const auto& e = sys.branches[i];
    net.branch_available[e.id] = x.branch_build[i] * (c.fails_branch(e.id) ? 0 : 1);
  }
  return net;
}

inline EffectiveNetwork apply_contingency(const PowerSystem& sys, const ExpansionPlan& plan,
                                          const Contingency& c) {
  return apply_contingency(sys, PlanVector::from_plan(sys, plan), c);
}

}  // namespace nke
