#pragma once

#include "pomap/model.hpp"
#include "pomap/simplex.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <vector>

namespace pomap {

// Variable and row numbering of the local polytope LP in standard form.
//   columns: μ_i(s) at i·L + s, then μ_e(s,t) at n·L + (e·L + s)·L + t
//   rows:    Σ_s μ_i(s) = 1 at i, then per edge e = (i,j):
//            Σ_t μ_e(s,t) - μ_i(s) = 0 at n + 2eL + s,
//            Σ_s μ_e(s,t) - μ_j(t) = 0 at n + 2eL + L + t
struct LocalPolytopeIndex {
   std::size_t num_nodes;
   std::size_t num_edges;
   std::size_t num_labels;

   std::size_t node_var(std::size_t i, std::size_t s) const { return i * num_labels + s; }
   std::size_t edge_var(std::size_t e, std::size_t s, std::size_t t) const
   {
      return num_nodes * num_labels + (e * num_labels + s) * num_labels + t;
   }
   std::size_t num_vars() const { return num_nodes * num_labels + num_edges * num_labels * num_labels; }
   std::size_t norm_row(std::size_t i) const { return i; }
   std::size_t row_to_first(std::size_t e, std::size_t s) const { return num_nodes + 2 * e * num_labels + s; }
   std::size_t row_to_second(std::size_t e, std::size_t t) const { return num_nodes + 2 * e * num_labels + num_labels + t; }
   std::size_t num_rows() const { return num_nodes + 2 * num_edges * num_labels; }
};

StandardFormLp local_polytope_lp(const Graph& graph, const CostTables<Rational>& costs);

struct LpSolution {
   ExactMarginals mu_star;
   Rational optimum;
   bool is_vertex = false;
   std::optional<bool> is_unique;
   std::vector<int> integral_set;
   std::vector<int> fractional_set;
   // Optimal basis certificate: row duals (numbering of LocalPolytopeIndex) and reduced costs.
   std::vector<Rational> duals;
   std::vector<Rational> reduced_costs;
   std::size_t pivots = 0;
};

struct LpOptions {
   bool check_uniqueness = true;
};

// Exact optimal vertex of min ⟨θ, μ⟩ over the local consistency polytope.
LpSolution solve_lp(const Graph& graph, const CostTables<Rational>& costs, const LpOptions& options = {});
LpSolution solve_lp(const MrfModel& model, const LpOptions& options = {});

// True iff the optimal face is the single point sol.mu_star: maximises the sum of
// all zero coordinates of μ* over the optimal face (columns with positive reduced
// cost removed) with a fresh LP.
bool check_uniqueness(const Graph& graph, const CostTables<Rational>& costs, const LpSolution& sol);
bool check_uniqueness(const MrfModel& model, const LpSolution& sol);

struct IntegralPartition {
   std::vector<int> integral;
   std::vector<int> fractional;
};

// i is integral iff every μ_i(s) is exactly 0 or 1.
IntegralPartition partition_integral(const ExactMarginals& mu);

enum class EdgeCase { integral, a_diag, a_antidiag, b_col0, b_col1, c_row0, c_row1 };

const char* to_string(EdgeCase c);

// Matches a binary edge marginal against the integral case and the six
// half-integral tables; throws no_match otherwise.
EdgeCase classify_edge_marginal(const ExactMarginals& mu, std::size_t edge);

// Every node and edge entry in {0, 1/2, 1}.
bool is_half_integral(const ExactMarginals& mu);

nlohmann::json solution_to_json(const LpSolution& sol);

} // namespace pomap
