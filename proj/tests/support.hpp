#pragma once

#include "pomap/decomp.hpp"
#include "pomap/dualdec.hpp"
#include "pomap/experiment.hpp"
#include "pomap/lpsolve.hpp"
#include "pomap/model.hpp"
#include "pomap/oracle.hpp"
#include "pomap/persist.hpp"
#include "pomap/simplex.hpp"
#include "pomap/treesolve.hpp"

#include <random>
#include <vector>

namespace support {

using namespace pomap;

inline double weight(std::mt19937_64& rng, double lo = -1.0, double hi = 1.0)
{
   return quantize_weight(std::uniform_real_distribution<double>(lo, hi)(rng));
}

inline std::vector<double> table(std::mt19937_64& rng, std::size_t size, double lo = -1.0, double hi = 1.0)
{
   std::vector<double> t(size);
   for (auto& v : t) v = weight(rng, lo, hi);
   return t;
}

inline void random_unaries(std::mt19937_64& rng, MrfModel& m)
{
   for (std::size_t i = 0; i < m.num_nodes(); ++i) m.set_unary(i, table(rng, m.num_labels()));
}

// Node k > 0 hangs off a uniformly chosen earlier node; endpoints are passed in
// random order so the transposition path gets exercised.
inline MrfModel random_tree(std::mt19937_64& rng, std::size_t n, std::size_t L, bool unaries = true)
{
   MrfModel m(n, L);
   if (unaries) random_unaries(rng, m);
   for (std::size_t k = 1; k < n; ++k) {
      const int parent = static_cast<int>(std::uniform_int_distribution<std::size_t>(0, k - 1)(rng));
      const int child = static_cast<int>(k);
      if (rng() & 1)
         m.add_edge(parent, child, table(rng, L * L));
      else
         m.add_edge(child, parent, table(rng, L * L));
   }
   return m;
}

// Right neighbour, then down neighbour, per node (same edge order as the generator).
inline MrfModel random_grid(std::mt19937_64& rng, std::size_t rows, std::size_t cols, std::size_t L, bool unaries = true)
{
   MrfModel m(rows * cols, L);
   if (unaries) random_unaries(rng, m);
   for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) {
         const int v = static_cast<int>(r * cols + c);
         if (c + 1 < cols) m.add_edge(v, v + 1, table(rng, L * L));
         if (r + 1 < rows) m.add_edge(v, v + static_cast<int>(cols), table(rng, L * L));
      }
   return m;
}

inline MrfModel random_graph(std::mt19937_64& rng, std::size_t n, std::size_t L, double density)
{
   MrfModel m(n, L);
   random_unaries(rng, m);
   std::bernoulli_distribution keep(density);
   for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = a + 1; b < n; ++b)
         if (keep(rng)) m.add_edge(static_cast<int>(a), static_cast<int>(b), table(rng, L * L));
   return m;
}

inline Assignment random_assignment(std::mt19937_64& rng, std::size_t n, std::size_t L)
{
   Assignment a(n);
   for (auto& x : a) x = static_cast<Label>(std::uniform_int_distribution<std::size_t>(0, L - 1)(rng));
   return a;
}

// Odometer over all L^n assignments.
inline bool next_assignment(Assignment& a, std::size_t L)
{
   for (auto& x : a) {
      if (static_cast<std::size_t>(++x) < L) return true;
      x = 0;
   }
   return false;
}

// LP optimality proof written out from the constraint formulas: μ is exactly
// feasible, the duals leave every reduced cost non-negative, complementary
// slackness holds, and the primal value equals Σ α_i.
inline bool lp_certificate_holds(const MrfModel& m, const LpSolution& sol)
{
   const auto costs = m.costs_as<Rational>();
   const std::size_t n = m.num_nodes(), L = m.num_labels();
   const LocalPolytopeIndex idx{n, m.num_edges(), L};
   if (!validate_marginals(m.graph(), sol.mu_star, MarginalMode::relaxed, 0.0).valid()) return false;
   if (sol.duals.size() != idx.num_rows()) return false;
   const auto& y = sol.duals;
   Rational dual_value(0), primal_value(0);
   for (std::size_t i = 0; i < n; ++i) dual_value += y[idx.norm_row(i)];
   for (std::size_t i = 0; i < n; ++i)
      for (std::size_t s = 0; s < L; ++s) {
         Rational d = costs.node(i, static_cast<Label>(s)) - y[idx.norm_row(i)];
         for (std::size_t e = 0; e < m.num_edges(); ++e) {
            if (m.edges()[e].i == static_cast<int>(i)) d += y[idx.row_to_first(e, s)];
            if (m.edges()[e].j == static_cast<int>(i)) d += y[idx.row_to_second(e, s)];
         }
         const Rational& x = sol.mu_star.node(i, static_cast<Label>(s));
         if (d < 0 || (x != 0 && d != 0)) return false;
         primal_value += costs.node(i, static_cast<Label>(s)) * x;
      }
   for (std::size_t e = 0; e < m.num_edges(); ++e)
      for (std::size_t s = 0; s < L; ++s)
         for (std::size_t t = 0; t < L; ++t) {
            const Label ls = static_cast<Label>(s), lt = static_cast<Label>(t);
            const Rational d = costs.edge(e, ls, lt) - y[idx.row_to_first(e, s)] - y[idx.row_to_second(e, t)];
            const Rational& x = sol.mu_star.edge(e, ls, lt);
            if (d < 0 || (x != 0 && d != 0)) return false;
            primal_value += costs.edge(e, ls, lt) * x;
         }
   return primal_value == dual_value && primal_value == sol.optimum;
}

// Uniqueness by brute probing: every coordinate is maximised and minimised over
// L_G ∩ {θᵀμ = optimum} with a fresh LP; unique iff all ranges collapse onto μ*.
inline bool unique_by_probing(const MrfModel& m, const LpSolution& sol)
{
   const auto costs = m.costs_as<Rational>();
   StandardFormLp base = local_polytope_lp(m.graph(), costs);
   const std::size_t rows = base.num_rows;
   base.num_rows += 1;
   base.rhs.push_back(sol.optimum);
   for (std::size_t k = 0; k < base.columns.size(); ++k)
      if (base.cost[k] != 0) base.columns[k].push_back({rows, base.cost[k]});
   const LocalPolytopeIndex idx{m.num_nodes(), m.num_edges(), m.num_labels()};
   std::vector<Rational> target(idx.num_vars());
   for (std::size_t i = 0; i < m.num_nodes(); ++i)
      for (std::size_t s = 0; s < m.num_labels(); ++s) target[idx.node_var(i, s)] = sol.mu_star.node(i, static_cast<Label>(s));
   for (std::size_t e = 0; e < m.num_edges(); ++e)
      for (std::size_t s = 0; s < m.num_labels(); ++s)
         for (std::size_t t = 0; t < m.num_labels(); ++t)
            target[idx.edge_var(e, s, t)] = sol.mu_star.edge(e, static_cast<Label>(s), static_cast<Label>(t));
   for (std::size_t k = 0; k < idx.num_vars(); ++k)
      for (int sign : {1, -1}) {
         StandardFormLp probe = base;
         std::fill(probe.cost.begin(), probe.cost.end(), Rational(0));
         probe.cost[k] = sign;
         ExactSimplex simplex(probe);
         if (simplex.solve() != LpStatus::optimal) return false;
         if (simplex.objective() != sign * target[k]) return false;
      }
   return true;
}

inline ExperimentConfig protocol_config(std::uint64_t seed, std::size_t rows = 5, std::size_t cols = 5)
{
   ExperimentConfig cfg;
   cfg.rows = rows;
   cfg.cols = cols;
   cfg.seed = seed;
   return cfg;
}

} // namespace support
