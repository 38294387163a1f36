#pragma once

#include "pomap/decomp.hpp"
#include "pomap/dualdec.hpp"
#include "pomap/lpsolve.hpp"
#include "pomap/oracle.hpp"

#include <nlohmann/json.hpp>

#include <string>
#include <vector>

namespace pomap {

enum class CheckResult { pass, fail, not_applicable };

const char* to_string(CheckResult r);

// Exact dual optimum for a decomposition, derived from the LP solution. When μ*
// is the unique LP optimum the dual is strictly complementary to it: every column
// outside the support of μ* keeps a positive reduced cost, so the optimal tree
// assignments are exactly those supported on μ*. `margin` is the smallest such
// reduced cost (0 when μ* is not unique).
struct CertifiedDual {
   DualVariables<Rational> u;
   Rational value;    // g(u), equal to the LP optimum
   Rational margin;
};

CertifiedDual certified_dual(const Decomposition& d, const LpSolution& sol);

// Per tree, per local node: labels attained by some optimal tree assignment.
using TreeLabelSets = std::vector<std::vector<std::vector<Label>>>;

template <class Scalar>
TreeLabelSets tree_label_sets(const Decomposition& d, const DualVariables<Scalar>& u, const Scalar& tol);

struct UnambiguousSet {
   std::vector<int> unambiguous;
   std::vector<int> disagreement;
   PartialAssignment labels;   // the common label on 𝓐, -1 on 𝓓
};

// i is unambiguous iff every tree containing i has the same single optimal label there.
UnambiguousSet unambiguous_set(const Decomposition& d, const TreeLabelSets& sets);

template <class Scalar>
UnambiguousSet unambiguous_set(const Decomposition& d, const DualVariables<Scalar>& u, const Scalar& tol)
{
   return unambiguous_set(d, tree_label_sets(d, u, tol));
}

struct Theorem1Result {
   CheckResult result = CheckResult::not_applicable;
   std::vector<std::size_t> failing_trees;
   // Per tree: optimum with μ* fixed on every integral node and every edge entry
   // where μ* is zero (local labels), when that optimum matches the tree optimum.
   std::vector<Assignment> witnesses;
   std::vector<char> has_witness;
};

// Fixing μ* on the integral nodes of each tree must not raise its optimum.
template <class Scalar>
Theorem1Result verify_theorem1(const Decomposition& d, const DualVariables<Scalar>& u, const LpSolution& sol, const Scalar& tol);

struct Theorem2Result {
   CheckResult result = CheckResult::not_applicable;
   std::vector<std::pair<std::size_t, int>> violations;   // (tree, model node)
};

// Needs a unique LP optimum; then every tree's optimal label set at an integral
// node is the single μ* label.
Theorem2Result verify_theorem2(const Decomposition& d, const TreeLabelSets& sets, const LpSolution& sol);

// Needs a unique LP optimum and a binary model; then 𝓐 = 𝓘.
CheckResult verify_theorem3(const Decomposition& d, const UnambiguousSet& a, const LpSolution& sol);

struct ComplementResult {
   bool feasible = false;
   bool optimal = false;
   bool average_ok = false;
   Assignment labels;      // μ̂ as a local labelling (valid when feasible)
   ExactMarginals mu_hat;  // over the tree's local graph
   std::string detail;

   bool ok() const { return feasible && optimal && average_ok; }
};

// Mirror image of the witness `mu_bar` through μ* on tree j: μ̂ copies μ* where it
// is integral and equals 1 - μ̄ elsewhere. Checks that μ̂ is a labelling of the tree,
// that it is optimal for θʲ + uʲ, and that ½(μ̄ + μ̂) = μ* on nodes and edges.
template <class Scalar>
ComplementResult complement_assignment(const Decomposition& d, std::size_t j, const DualVariables<Scalar>& u,
                                       const LpSolution& sol, const Assignment& mu_bar, const Scalar& tol);

struct StrongPersistencyResult {
   CheckResult result = CheckResult::not_applicable;
   std::size_t optima = 0;
   std::vector<std::size_t> violating;   // indices into the optimum list
};

// Every optimum must carry the μ*-label on every node of `integral`.
StrongPersistencyResult strong_persistency_check(const std::vector<Assignment>& optima, const ExactMarginals& mu,
                                                 const std::vector<int>& integral);

// Enumerates all exact MAP optima; not-applicable for non-binary models or when
// the state count exceeds `cap`.
StrongPersistencyResult strong_persistency_check(const MrfModel& model, const LpSolution& sol,
                                                 std::uint64_t cap = default_state_cap, std::size_t workers = 1);

// Dual-optimality gate for a subgradient result: usable iff |best_dual - LP*| ≤ tol.
bool dual_converged(const DualState<double>& state, const LpSolution& sol, double tol = 1e-9);

struct PersistencyOptions {
   bool oracle = false;
   std::uint64_t oracle_cap = default_state_cap;
   std::size_t workers = 1;
};

struct PersistencyReport {
   std::vector<int> integral;
   std::vector<int> fractional;
   std::vector<int> unambiguous;
   std::vector<int> disagreement;
   std::string dual_source;   // "lp-certificate", "subgradient" or "none"
   std::optional<Rational> dual_value;
   std::optional<Rational> dual_margin;
   CheckResult theorem1 = CheckResult::not_applicable;
   CheckResult theorem2 = CheckResult::not_applicable;
   CheckResult theorem3 = CheckResult::not_applicable;
   CheckResult lemma_c1 = CheckResult::not_applicable;
   CheckResult strong_persistency = CheckResult::not_applicable;
   Theorem1Result theorem1_detail;
   Theorem2Result theorem2_detail;
   std::vector<ComplementResult> complements;   // per tree with a witness
   StrongPersistencyResult strong_detail;

   // No applicable check failed.
   bool all_pass() const;
};

// Runs every check with the certified LP dual.
PersistencyReport analyze_persistency(const MrfModel& model, const Decomposition& d, const LpSolution& sol,
                                      const PersistencyOptions& options = {});

// Runs the checks with the subgradient dual when it passes the 1e-9 gate; the
// tree checks are reported not-applicable otherwise.
PersistencyReport analyze_persistency(const MrfModel& model, const Decomposition& d, const LpSolution& sol,
                                      const DualState<double>& state, const PersistencyOptions& options = {});

nlohmann::json report_to_json(const Decomposition& d, const PersistencyReport& report);

} // namespace pomap
