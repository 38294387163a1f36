#pragma once

#include "pomap/model.hpp"

#include <algorithm>
#include <cstdint>
#include <limits>
#include <optional>
#include <queue>
#include <utility>
#include <vector>

namespace pomap {

// Inference problem on a forest. Node k of the subproblem is model node nodes[k];
// `graph` and `costs` use local indices.
template <class Scalar>
struct SubProblem {
   std::vector<int> nodes;
   std::vector<std::size_t> model_edges;
   Graph graph;
   CostTables<Scalar> costs;

   std::size_t num_labels() const { return costs.num_labels; }
   std::size_t size() const { return graph.num_nodes; }
};

// Rooted traversal of a forest: each component is rooted at its smallest node
// and listed in BFS order, components by increasing root.
struct ForestLayout {
   struct Child {
      int node;
      std::size_t edge;
   };
   std::vector<int> order;
   std::vector<int> parent;            // -1 for roots
   std::vector<std::size_t> parent_edge;
   std::vector<std::vector<Child>> children;
   std::vector<int> roots;
};

ForestLayout layout_forest(const Graph& graph);

template <class Scalar>
struct TreeOptimum {
   Scalar value;
   Assignment labels;
};

// Restriction of the feasible labels; empty vectors mean "everything allowed".
struct LabelMask {
   std::vector<char> node_allowed;   // (i, s)
   std::vector<char> edge_allowed;   // (e, s, t)

   bool node_ok(std::size_t i, Label s, std::size_t L) const { return node_allowed.empty() || node_allowed[i * L + s]; }
   bool edge_ok(std::size_t e, Label s, Label t, std::size_t L) const
   {
      return edge_allowed.empty() || edge_allowed[(e * L + s) * L + t];
   }
};

// Partial assignment: -1 marks a free node.
using PartialAssignment = std::vector<Label>;

template <class Scalar>
struct OptimaList {
   std::vector<Assignment> assignments;
   bool truncated = false;
};

namespace detail {

template <class Scalar>
Scalar oriented_cost(const SubProblem<Scalar>& p, std::size_t e, int from, Label s_from, Label s_to)
{
   const Edge& edge = p.graph.edges[e];
   return edge.i == from ? p.costs.edge(e, s_from, s_to) : p.costs.edge(e, s_to, s_from);
}

inline bool oriented_ok(const LabelMask& mask, const Graph& g, std::size_t e, int from, Label s_from, Label s_to, std::size_t L)
{
   const Edge& edge = g.edges[e];
   return edge.i == from ? mask.edge_ok(e, s_from, s_to, L) : mask.edge_ok(e, s_to, s_from, L);
}

// Upward min-sum pass. belief[c][s] = θ_c(s) + Σ_children up_k(s), and up[c][s_parent]
// is the minimum over the subtree of c given the parent label. `ok` tracks feasibility
// under the mask.
template <class Scalar>
struct UpwardPass {
   std::vector<std::vector<Scalar>> belief;
   std::vector<std::vector<char>> belief_ok;
   std::vector<std::vector<Scalar>> up;
   std::vector<std::vector<char>> up_ok;
};

template <class Scalar>
UpwardPass<Scalar> upward(const SubProblem<Scalar>& p, const ForestLayout& layout, const LabelMask& mask)
{
   const std::size_t n = p.size();
   const std::size_t L = p.num_labels();
   UpwardPass<Scalar> pass;
   pass.belief.assign(n, std::vector<Scalar>(L, Scalar(0)));
   pass.belief_ok.assign(n, std::vector<char>(L, 0));
   pass.up.assign(n, std::vector<Scalar>(L, Scalar(0)));
   pass.up_ok.assign(n, std::vector<char>(L, 0));
   for (auto it = layout.order.rbegin(); it != layout.order.rend(); ++it) {
      const int c = *it;
      for (std::size_t s = 0; s < L; ++s) {
         const Label ls = static_cast<Label>(s);
         bool ok = mask.node_ok(c, ls, L);
         Scalar b = p.costs.node(c, ls);
         for (const auto& child : layout.children[c]) {
            ok = ok && pass.up_ok[child.node][s];
            if (!ok) break;
            b += pass.up[child.node][s];
         }
         pass.belief_ok[c][s] = ok;
         if (ok) pass.belief[c][s] = b;
      }
      const int par = layout.parent[c];
      if (par < 0) continue;
      const std::size_t e = layout.parent_edge[c];
      for (std::size_t sp = 0; sp < L; ++sp) {
         bool found = false;
         Scalar best(0);
         for (std::size_t sc = 0; sc < L; ++sc) {
            if (!pass.belief_ok[c][sc]) continue;
            if (!oriented_ok(mask, p.graph, e, par, static_cast<Label>(sp), static_cast<Label>(sc), L)) continue;
            Scalar v = pass.belief[c][sc] + oriented_cost(p, e, par, static_cast<Label>(sp), static_cast<Label>(sc));
            if (!found || v < best) {
               best = v;
               found = true;
            }
         }
         pass.up_ok[c][sp] = found;
         if (found) pass.up[c][sp] = best;
      }
   }
   return pass;
}

template <class Scalar>
std::optional<TreeOptimum<Scalar>> masked_map(const SubProblem<Scalar>& p, const ForestLayout& layout, const LabelMask& mask)
{
   const std::size_t L = p.num_labels();
   const auto pass = upward(p, layout, mask);
   TreeOptimum<Scalar> result{Scalar(0), Assignment(p.size(), 0)};
   for (const int r : layout.roots) {
      int arg = -1;
      for (std::size_t s = 0; s < L; ++s)
         if (pass.belief_ok[r][s] && (arg < 0 || pass.belief[r][s] < pass.belief[r][arg])) arg = static_cast<int>(s);
      if (arg < 0) return std::nullopt;
      result.labels[r] = arg;
      result.value += pass.belief[r][arg];
   }
   for (const int c : layout.order) {
      const int par = layout.parent[c];
      if (par < 0) continue;
      const std::size_t e = layout.parent_edge[c];
      const Label sp = result.labels[par];
      int arg = -1;
      Scalar best(0);
      for (std::size_t sc = 0; sc < L; ++sc) {
         if (!pass.belief_ok[c][sc] || !oriented_ok(mask, p.graph, e, par, sp, static_cast<Label>(sc), L)) continue;
         Scalar v = pass.belief[c][sc] + oriented_cost(p, e, par, sp, static_cast<Label>(sc));
         if (arg < 0 || v < best) {
            best = v;
            arg = static_cast<int>(sc);
         }
      }
      if (arg < 0) return std::nullopt;
      result.labels[c] = arg;
   }
   return result;
}

} // namespace detail

// Exact minimum and minimiser by min-sum dynamic programming; ties go to the
// lowest label at every choice.
template <class Scalar>
TreeOptimum<Scalar> map_on_tree(const SubProblem<Scalar>& p, const ForestLayout& layout)
{
   auto result = detail::masked_map(p, layout, LabelMask{});
   if (!result) throw Error(ErrorCode::internal, "unconstrained tree problem infeasible");
   return *std::move(result);
}

template <class Scalar>
TreeOptimum<Scalar> map_on_tree(const SubProblem<Scalar>& p)
{
   return map_on_tree(p, layout_forest(p.graph));
}

// Minimum over assignments allowed by `mask`; nullopt when nothing is allowed.
template <class Scalar>
std::optional<TreeOptimum<Scalar>> masked_map(const SubProblem<Scalar>& p, const LabelMask& mask)
{
   return detail::masked_map(p, layout_forest(p.graph), mask);
}

template <class Scalar>
LabelMask fixing_mask(const SubProblem<Scalar>& p, const PartialAssignment& fixed)
{
   const std::size_t L = p.num_labels();
   if (fixed.size() != p.size()) throw Error(ErrorCode::dimension_mismatch, "partial assignment size does not match subproblem");
   LabelMask mask;
   mask.node_allowed.assign(p.size() * L, 1);
   for (std::size_t i = 0; i < fixed.size(); ++i) {
      if (fixed[i] < 0) continue;
      if (static_cast<std::size_t>(fixed[i]) >= L) throw Error(ErrorCode::invalid_argument, "fixed label out of range");
      for (std::size_t s = 0; s < L; ++s) mask.node_allowed[i * L + s] = static_cast<Label>(s) == fixed[i];
   }
   return mask;
}

// Exact minimum over assignments extending `fixed`.
template <class Scalar>
TreeOptimum<Scalar> constrained_map(const SubProblem<Scalar>& p, const PartialAssignment& fixed)
{
   auto result = masked_map(p, fixing_mask(p, fixed));
   if (!result) throw Error(ErrorCode::internal, "node fixings on a forest are always feasible");
   return *std::move(result);
}

// mm(i, s): minimum objective over all assignments with x_i = s (other forest
// components included at their optimum).
template <class Scalar>
std::vector<std::vector<Scalar>> max_marginals(const SubProblem<Scalar>& p, const ForestLayout& layout)
{
   const std::size_t n = p.size();
   const std::size_t L = p.num_labels();
   const auto pass = detail::upward(p, layout, LabelMask{});
   std::vector<std::vector<Scalar>> down(n, std::vector<Scalar>(L, Scalar(0)));
   for (const int par : layout.order) {
      const auto& kids = layout.children[par];
      for (std::size_t k = 0; k < kids.size(); ++k) {
         // Belief at the parent excluding the message from this child.
         std::vector<Scalar> excl(L);
         for (std::size_t s = 0; s < L; ++s) {
            Scalar b = p.costs.node(par, static_cast<Label>(s)) + down[par][s];
            for (std::size_t o = 0; o < kids.size(); ++o)
               if (o != k) b += pass.up[kids[o].node][s];
            excl[s] = b;
         }
         const int c = kids[k].node;
         for (std::size_t sc = 0; sc < L; ++sc) {
            Scalar best(0);
            for (std::size_t sp = 0; sp < L; ++sp) {
               Scalar v = excl[sp] + detail::oriented_cost(p, kids[k].edge, par, static_cast<Label>(sp), static_cast<Label>(sc));
               if (sp == 0 || v < best) best = v;
            }
            down[c][sc] = best;
         }
      }
   }
   // Component minima, so every node's table accounts for the whole forest.
   std::vector<int> component(n, -1);
   std::vector<Scalar> comp_min;
   for (const int r : layout.roots) {
      Scalar m = pass.belief[r][0];
      for (std::size_t s = 1; s < L; ++s)
         if (pass.belief[r][s] < m) m = pass.belief[r][s];
      comp_min.push_back(m);
   }
   Scalar total_min(0);
   for (const auto& m : comp_min) total_min += m;
   for (const int c : layout.order) component[c] = layout.parent[c] < 0 ? static_cast<int>(std::find(layout.roots.begin(), layout.roots.end(), c) - layout.roots.begin()) : component[layout.parent[c]];
   std::vector<std::vector<Scalar>> mm(n, std::vector<Scalar>(L));
   for (std::size_t i = 0; i < n; ++i) {
      const Scalar others = total_min - comp_min[component[i]];
      for (std::size_t s = 0; s < L; ++s) mm[i][s] = pass.belief[i][s] + down[i][s] + others;
   }
   return mm;
}

template <class Scalar>
std::vector<std::vector<Scalar>> max_marginals(const SubProblem<Scalar>& p)
{
   return max_marginals(p, layout_forest(p.graph));
}

// Labels attained by at least one assignment within `tol` of the optimum. Never empty.
template <class Scalar>
std::vector<std::vector<Label>> optimal_label_sets(const SubProblem<Scalar>& p, const ForestLayout& layout, const Scalar& tol)
{
   const auto mm = max_marginals(p, layout);
   std::vector<std::vector<Label>> sets(p.size());
   for (std::size_t i = 0; i < p.size(); ++i) {
      Scalar best = mm[i][0];
      for (const auto& v : mm[i])
         if (v < best) best = v;
      for (std::size_t s = 0; s < mm[i].size(); ++s)
         if (mm[i][s] <= best + tol) sets[i].push_back(static_cast<Label>(s));
   }
   return sets;
}

template <class Scalar>
std::vector<std::vector<Label>> optimal_label_sets(const SubProblem<Scalar>& p, const Scalar& tol)
{
   return optimal_label_sets(p, layout_forest(p.graph), tol);
}

template <class Scalar>
std::vector<std::vector<Label>> optimal_label_sets(const SubProblem<Scalar>& p)
{
   const auto layout = layout_forest(p.graph);
   const auto opt = map_on_tree(p, layout);
   return optimal_label_sets(p, layout, ScalarTraits<Scalar>::default_tolerance(opt.value));
}

// All assignments with objective ≤ optimum + tol, in root-to-leaf lexicographic
// order (layout order, labels ascending). Stops after `cap` and sets `truncated`
// if more exist.
template <class Scalar>
OptimaList<Scalar> enumerate_optima(const SubProblem<Scalar>& p, const ForestLayout& layout, const Scalar& tol, std::size_t cap)
{
   if (cap == 0) throw Error(ErrorCode::invalid_argument, "enumeration cap must be positive");
   const std::size_t L = p.num_labels();
   const auto pass = detail::upward(p, layout, LabelMask{});
   OptimaList<Scalar> out;
   Assignment current(p.size(), 0);
   const auto& order = layout.order;

   auto slack_of = [&](int c, Label s) -> Scalar {
      const int par = layout.parent[c];
      if (par < 0) {
         Scalar m = pass.belief[c][0];
         for (std::size_t r = 1; r < L; ++r)
            if (pass.belief[c][r] < m) m = pass.belief[c][r];
         return pass.belief[c][s] - m;
      }
      const Label sp = current[par];
      return pass.belief[c][s] + detail::oriented_cost(p, layout.parent_edge[c], par, sp, s) - pass.up[c][sp];
   };

   // Iterative DFS: stack of (position in order, next label to try, slack used before this position).
   std::vector<std::size_t> next_label(order.size() + 1, 0);
   std::vector<Scalar> used(order.size() + 1, Scalar(0));
   std::size_t depth = 0;
   if (order.empty()) {
      out.assignments.push_back(current);
      return out;
   }
   while (true) {
      if (depth == order.size()) {
         if (out.assignments.size() == cap) {
            out.truncated = true;
            return out;
         }
         out.assignments.push_back(current);
         --depth;
         continue;
      }
      const int c = order[depth];
      bool advanced = false;
      while (next_label[depth] < L) {
         const Label s = static_cast<Label>(next_label[depth]++);
         current[c] = s;
         Scalar total = used[depth] + slack_of(c, s);
         if (total <= tol) {
            used[depth + 1] = total;
            next_label[depth + 1] = 0;
            ++depth;
            advanced = true;
            break;
         }
      }
      if (advanced) continue;
      next_label[depth] = 0;
      if (depth == 0) break;
      --depth;
   }
   return out;
}

template <class Scalar>
OptimaList<Scalar> enumerate_optima(const SubProblem<Scalar>& p, const Scalar& tol, std::size_t cap = 1'000'000)
{
   return enumerate_optima(p, layout_forest(p.graph), tol, cap);
}

// The whole model as one subproblem; only meaningful for forest-structured models.
template <class Scalar>
SubProblem<Scalar> whole_model(const MrfModel& model)
{
   SubProblem<Scalar> p;
   p.nodes.resize(model.num_nodes());
   for (std::size_t i = 0; i < model.num_nodes(); ++i) p.nodes[i] = static_cast<int>(i);
   p.model_edges.resize(model.num_edges());
   for (std::size_t e = 0; e < model.num_edges(); ++e) p.model_edges[e] = e;
   p.graph = model.graph();
   p.costs = model.costs_as<Scalar>();
   return p;
}

} // namespace pomap
