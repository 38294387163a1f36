#pragma once

#include "pomap/model.hpp"
#include "pomap/treesolve.hpp"

#include <cstdint>
#include <vector>

namespace pomap {

template <class Scalar>
struct BruteForceResult {
   Scalar min_value;
   std::vector<Assignment> optima;   // lexicographically sorted
};

inline constexpr std::uint64_t default_state_cap = std::uint64_t(1) << 25;

// Exhaustive minimisation over all extensions of `fixed` (-1 = free) in reflected
// Gray-code order with incremental objective updates. Exact for Rational; for
// double, optima are the states within 1e-12·(1+|min|) of the minimum. The state
// space is split by the label of the last free node across `workers` threads.
template <class Scalar>
BruteForceResult<Scalar> brute_force(const Graph& graph, const CostTables<Scalar>& costs, const PartialAssignment& fixed,
                                     std::uint64_t cap_states = default_state_cap, std::size_t workers = 1);

BruteForceResult<double> brute_force_map(const MrfModel& model, std::uint64_t cap_states = default_state_cap,
                                         std::size_t workers = 1);
BruteForceResult<double> brute_force_restricted(const MrfModel& model, const PartialAssignment& fixed,
                                                std::uint64_t cap_states = default_state_cap, std::size_t workers = 1);

// Exact optimum and complete optimum set under the rational view of the model:
// a floating Gray-code sweep collects candidates inside a 1e-9 window, which are
// then compared exactly.
BruteForceResult<Rational> exact_brute_force_map(const MrfModel& model, std::uint64_t cap_states = default_state_cap,
                                                 std::size_t workers = 1);
BruteForceResult<Rational> exact_brute_force_restricted(const MrfModel& model, const PartialAssignment& fixed,
                                                        std::uint64_t cap_states = default_state_cap,
                                                        std::size_t workers = 1);

} // namespace pomap
