#include "pomap/lpsolve.hpp"

namespace pomap {

StandardFormLp local_polytope_lp(const Graph& graph, const CostTables<Rational>& costs)
{
   graph.validate();
   const LocalPolytopeIndex idx{graph.num_nodes, graph.edges.size(), costs.num_labels};
   if (costs.unary.size() != graph.num_nodes * idx.num_labels ||
       costs.pairwise.size() != graph.edges.size() * idx.num_labels * idx.num_labels)
      throw Error(ErrorCode::dimension_mismatch, "cost tables do not match graph");
   const std::size_t L = idx.num_labels;
   StandardFormLp lp;
   lp.num_rows = idx.num_rows();
   lp.rhs.assign(lp.num_rows, Rational(0));
   for (std::size_t i = 0; i < graph.num_nodes; ++i) lp.rhs[idx.norm_row(i)] = 1;

   // Edge rows in which each node label appears with coefficient -1.
   std::vector<std::vector<std::size_t>> node_rows(graph.num_nodes * L);
   for (std::size_t e = 0; e < graph.edges.size(); ++e)
      for (std::size_t s = 0; s < L; ++s) {
         node_rows[graph.edges[e].i * L + s].push_back(idx.row_to_first(e, s));
         node_rows[graph.edges[e].j * L + s].push_back(idx.row_to_second(e, s));
      }
   for (std::size_t i = 0; i < graph.num_nodes; ++i)
      for (std::size_t s = 0; s < L; ++s) {
         std::vector<StandardFormLp::Entry> col{{idx.norm_row(i), Rational(1)}};
         for (std::size_t r : node_rows[i * L + s]) col.push_back({r, Rational(-1)});
         lp.add_column(costs.node(i, static_cast<Label>(s)), std::move(col));
      }
   for (std::size_t e = 0; e < graph.edges.size(); ++e)
      for (std::size_t s = 0; s < L; ++s)
         for (std::size_t t = 0; t < L; ++t)
            lp.add_column(costs.edge(e, static_cast<Label>(s), static_cast<Label>(t)),
                          {{idx.row_to_first(e, s), Rational(1)}, {idx.row_to_second(e, t), Rational(1)}});
   return lp;
}

namespace {

ExactMarginals marginals_from(const LocalPolytopeIndex& idx, const std::vector<Rational>& x)
{
   ExactMarginals mu(idx.num_nodes, idx.num_edges, idx.num_labels);
   for (std::size_t i = 0; i < idx.num_nodes; ++i)
      for (std::size_t s = 0; s < idx.num_labels; ++s) mu.node(i, static_cast<Label>(s)) = x[idx.node_var(i, s)];
   for (std::size_t e = 0; e < idx.num_edges; ++e)
      for (std::size_t s = 0; s < idx.num_labels; ++s)
         for (std::size_t t = 0; t < idx.num_labels; ++t)
            mu.edge(e, static_cast<Label>(s), static_cast<Label>(t)) = x[idx.edge_var(e, s, t)];
   return mu;
}

} // namespace

LpSolution solve_lp(const Graph& graph, const CostTables<Rational>& costs, const LpOptions& options)
{
   const LocalPolytopeIndex idx{graph.num_nodes, graph.edges.size(), costs.num_labels};
   const StandardFormLp lp = local_polytope_lp(graph, costs);
   ExactSimplex simplex(lp);
   const LpStatus status = simplex.solve();
   // The local polytope is a non-empty polytope, so anything else is a solver bug.
   if (status != LpStatus::optimal) throw Error(ErrorCode::internal, "local polytope LP not solved to optimality");
   LpSolution sol;
   sol.mu_star = marginals_from(idx, simplex.solution());
   sol.optimum = simplex.objective();
   sol.is_vertex = true;
   sol.duals = simplex.duals();
   sol.reduced_costs = simplex.reduced_costs();
   auto part = partition_integral(sol.mu_star);
   sol.integral_set = std::move(part.integral);
   sol.fractional_set = std::move(part.fractional);
   if (options.check_uniqueness) {
      const auto& x = simplex.solution();
      std::vector<Rational> probe(idx.num_vars());
      std::vector<char> allowed(idx.num_vars(), 0);
      for (std::size_t j = 0; j < idx.num_vars(); ++j) {
         allowed[j] = sgn(sol.reduced_costs[j]) == 0;
         if (allowed[j] && sgn(x[j]) == 0) probe[j] = -1;
      }
      if (simplex.reoptimize(probe, allowed) != LpStatus::optimal)
         throw Error(ErrorCode::internal, "uniqueness probe failed");
      sol.is_unique = sgn(simplex.objective()) == 0;
   }
   sol.pivots = simplex.pivots();
   return sol;
}

LpSolution solve_lp(const MrfModel& model, const LpOptions& options)
{
   return solve_lp(model.graph(), model.costs_as<Rational>(), options);
}

bool check_uniqueness(const Graph& graph, const CostTables<Rational>& costs, const LpSolution& sol)
{
   const LocalPolytopeIndex idx{graph.num_nodes, graph.edges.size(), costs.num_labels};
   const StandardFormLp full = local_polytope_lp(graph, costs);
   if (sol.reduced_costs.size() != full.num_columns()) throw Error(ErrorCode::dimension_mismatch, "solution does not match LP");
   std::vector<Rational> x_star(idx.num_vars());
   for (std::size_t i = 0; i < idx.num_nodes; ++i)
      for (std::size_t s = 0; s < idx.num_labels; ++s) x_star[idx.node_var(i, s)] = sol.mu_star.node(i, static_cast<Label>(s));
   for (std::size_t e = 0; e < idx.num_edges; ++e)
      for (std::size_t s = 0; s < idx.num_labels; ++s)
         for (std::size_t t = 0; t < idx.num_labels; ++t)
            x_star[idx.edge_var(e, s, t)] = sol.mu_star.edge(e, static_cast<Label>(s), static_cast<Label>(t));
   StandardFormLp face;
   face.num_rows = full.num_rows;
   face.rhs = full.rhs;
   for (std::size_t j = 0; j < full.num_columns(); ++j) {
      if (sgn(sol.reduced_costs[j]) != 0) continue;
      face.add_column(sgn(x_star[j]) == 0 ? Rational(-1) : Rational(0), full.columns[j]);
   }
   ExactSimplex simplex(face);
   if (simplex.solve() != LpStatus::optimal) throw Error(ErrorCode::internal, "optimal face LP not solved");
   return sgn(simplex.objective()) == 0;
}

bool check_uniqueness(const MrfModel& model, const LpSolution& sol)
{
   return check_uniqueness(model.graph(), model.costs_as<Rational>(), sol);
}

IntegralPartition partition_integral(const ExactMarginals& mu)
{
   IntegralPartition part;
   for (std::size_t i = 0; i < mu.num_nodes(); ++i) {
      bool integral = true;
      for (std::size_t s = 0; s < mu.num_labels; ++s) {
         const Rational& v = mu.node(i, static_cast<Label>(s));
         if (v != 0 && v != 1) integral = false;
      }
      (integral ? part.integral : part.fractional).push_back(static_cast<int>(i));
   }
   return part;
}

const char* to_string(EdgeCase c)
{
   switch (c) {
      case EdgeCase::integral: return "INTEGRAL";
      case EdgeCase::a_diag: return "A-diag";
      case EdgeCase::a_antidiag: return "A-antidiag";
      case EdgeCase::b_col0: return "B-col0";
      case EdgeCase::b_col1: return "B-col1";
      case EdgeCase::c_row0: return "C-row0";
      case EdgeCase::c_row1: return "C-row1";
   }
   return "unknown";
}

EdgeCase classify_edge_marginal(const ExactMarginals& mu, std::size_t edge)
{
   if (mu.num_labels != 2) throw Error(ErrorCode::invalid_argument, "edge marginal taxonomy applies to binary models");
   if (edge >= mu.num_edges()) throw Error(ErrorCode::invalid_argument, "edge index out of range");
   const Rational half(1, 2);
   const Rational t[4] = {mu.edge(edge, 0, 0), mu.edge(edge, 0, 1), mu.edge(edge, 1, 0), mu.edge(edge, 1, 1)};
   auto is = [&](int a, int b, int c, int d) {
      // Pattern entries: 0 → 0, 1 → 1/2, 2 → 1.
      const int p[4] = {a, b, c, d};
      for (int k = 0; k < 4; ++k) {
         const Rational want = p[k] == 0 ? Rational(0) : (p[k] == 1 ? half : Rational(1));
         if (t[k] != want) return false;
      }
      return true;
   };
   if (is(2, 0, 0, 0) || is(0, 2, 0, 0) || is(0, 0, 2, 0) || is(0, 0, 0, 2)) return EdgeCase::integral;
   if (is(1, 0, 0, 1)) return EdgeCase::a_diag;
   if (is(0, 1, 1, 0)) return EdgeCase::a_antidiag;
   if (is(1, 0, 1, 0)) return EdgeCase::b_col0;
   if (is(0, 1, 0, 1)) return EdgeCase::b_col1;
   if (is(1, 1, 0, 0)) return EdgeCase::c_row0;
   if (is(0, 0, 1, 1)) return EdgeCase::c_row1;
   throw Error(ErrorCode::no_match, "NO_MATCH: edge " + std::to_string(edge) + " marginal [[" + to_string(t[0]) + "," +
                                        to_string(t[1]) + "],[" + to_string(t[2]) + "," + to_string(t[3]) + "]]");
}

bool is_half_integral(const ExactMarginals& mu)
{
   const Rational half(1, 2);
   auto ok = [&](const Rational& v) { return v == 0 || v == 1 || v == half; };
   for (const auto& v : mu.nodes)
      if (!ok(v)) return false;
   for (const auto& v : mu.edges)
      if (!ok(v)) return false;
   return true;
}

nlohmann::json solution_to_json(const LpSolution& sol)
{
   nlohmann::json doc;
   doc["optimum"] = to_string(sol.optimum);
   doc["optimum_approx"] = to_double(sol.optimum);
   doc["is_vertex"] = sol.is_vertex;
   doc["is_unique"] = sol.is_unique ? nlohmann::json(*sol.is_unique) : nlohmann::json(nullptr);
   doc["integral_set"] = sol.integral_set;
   doc["fractional_set"] = sol.fractional_set;
   doc["mu_star"] = marginals_to_json(sol.mu_star);
   return doc;
}

} // namespace pomap
