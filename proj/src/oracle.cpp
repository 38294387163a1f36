#include "pomap/oracle.hpp"
#include "pomap/parallel.hpp"

#include <algorithm>
#include <cmath>

namespace pomap {

namespace {

struct Incidence {
   std::size_t edge;
   int other;
   bool first;   // this node is the edge's smaller endpoint
};

std::vector<std::vector<Incidence>> incidence_lists(const Graph& graph)
{
   std::vector<std::vector<Incidence>> inc(graph.num_nodes);
   for (std::size_t e = 0; e < graph.edges.size(); ++e) {
      inc[graph.edges[e].i].push_back({e, graph.edges[e].j, true});
      inc[graph.edges[e].j].push_back({e, graph.edges[e].i, false});
   }
   return inc;
}

template <class Scalar>
Scalar local_cost(const CostTables<Scalar>& costs, const std::vector<Incidence>& inc, int v, Label s, const Assignment& x)
{
   Scalar total = costs.node(v, s);
   for (const auto& in : inc) total += in.first ? costs.edge(in.edge, s, x[in.other]) : costs.edge(in.edge, x[in.other], s);
   return total;
}

// Candidates within `window` of the running minimum. With a zero window this keeps
// exactly the optima.
template <class Scalar>
struct Collector {
   Scalar window;
   bool have = false;
   Scalar best{};
   std::vector<std::pair<Scalar, Assignment>> kept{};

   void offer(const Scalar& value, const Assignment& x)
   {
      if (!have || value < best) {
         best = value;
         have = true;
         std::erase_if(kept, [&](const auto& p) { return p.first > best + window; });
      }
      if (value <= best + window) kept.emplace_back(value, x);
   }
};

// Gray-code sweep over `free_nodes`, everything else taken from `base`.
template <class Scalar>
void sweep(const Graph& graph, const CostTables<Scalar>& costs, const std::vector<std::vector<Incidence>>& inc,
           Assignment base, const std::vector<int>& free_nodes, Collector<Scalar>& out)
{
   const std::size_t L = costs.num_labels;
   const std::size_t n = free_nodes.size();
   for (int v : free_nodes) base[v] = 0;
   Scalar value = evaluate(graph, costs, base);
   // Loopless reflected Gray code (mixed radix, all radices L).
   std::vector<int> digit(n, 0), direction(n, 1);
   std::vector<std::size_t> focus(n + 1);
   for (std::size_t j = 0; j <= n; ++j) focus[j] = j;
   while (true) {
      out.offer(value, base);
      const std::size_t j = focus[0];
      focus[0] = 0;
      if (j == n) break;
      const int v = free_nodes[j];
      const Label old_label = base[v];
      const Label new_label = old_label + direction[j];
      value -= local_cost(costs, inc[v], v, old_label, base);
      base[v] = new_label;
      value += local_cost(costs, inc[v], v, new_label, base);
      digit[j] = new_label;
      if (digit[j] == 0 || digit[j] == static_cast<int>(L) - 1) {
         direction[j] = -direction[j];
         focus[j] = focus[j + 1];
         focus[j + 1] = j + 1;
      }
   }
}

template <class Scalar>
std::vector<std::pair<Scalar, Assignment>> collect(const Graph& graph, const CostTables<Scalar>& costs,
                                                    const PartialAssignment& fixed, std::uint64_t cap_states,
                                                    std::size_t workers, const Scalar& window)
{
   graph.validate();
   const std::size_t L = costs.num_labels;
   if (fixed.size() != graph.num_nodes) throw Error(ErrorCode::dimension_mismatch, "fixing does not match graph");
   std::vector<int> free_nodes;
   Assignment base(graph.num_nodes, 0);
   for (std::size_t i = 0; i < fixed.size(); ++i) {
      if (fixed[i] < 0)
         free_nodes.push_back(static_cast<int>(i));
      else if (static_cast<std::size_t>(fixed[i]) >= L)
         throw Error(ErrorCode::invalid_argument, "fixed label out of range");
      else
         base[i] = fixed[i];
   }
   long double states = 1;
   for (std::size_t k = 0; k < free_nodes.size(); ++k) states *= static_cast<long double>(L);
   if (states > static_cast<long double>(cap_states))
      throw Error(ErrorCode::cap_exceeded, "state space exceeds oracle cap of " + std::to_string(cap_states));
   const auto inc = incidence_lists(graph);

   // Partition on the last free node's label; each part is swept independently.
   std::size_t parts = free_nodes.empty() ? 1 : L;
   std::vector<Collector<Scalar>> results(parts, Collector<Scalar>{window});
   parallel_for(parts, workers, [&](std::size_t k) {
      Assignment start = base;
      std::vector<int> nodes = free_nodes;
      if (!nodes.empty()) {
         start[nodes.back()] = static_cast<Label>(k);
         nodes.pop_back();
      }
      sweep(graph, costs, inc, std::move(start), nodes, results[k]);
   });
   Collector<Scalar> merged{window};
   for (auto& r : results)
      for (auto& [v, x] : r.kept) merged.offer(v, x);
   return std::move(merged.kept);
}

template <class Scalar>
BruteForceResult<Scalar> finish(std::vector<std::pair<Scalar, Assignment>> kept, const Scalar& tol)
{
   BruteForceResult<Scalar> result;
   result.min_value = kept.front().first;
   for (const auto& [v, x] : kept)
      if (v < result.min_value) result.min_value = v;
   for (auto& [v, x] : kept)
      if (v <= result.min_value + tol) result.optima.push_back(std::move(x));
   std::sort(result.optima.begin(), result.optima.end());
   return result;
}

} // namespace

template <class Scalar>
BruteForceResult<Scalar> brute_force(const Graph& graph, const CostTables<Scalar>& costs, const PartialAssignment& fixed,
                                     std::uint64_t cap_states, std::size_t workers)
{
   if constexpr (ScalarTraits<Scalar>::exact) {
      return finish(collect(graph, costs, fixed, cap_states, workers, Scalar(0)), Scalar(0));
   } else {
      double scale = 0.0;
      for (double v : costs.unary) scale = std::max(scale, std::abs(v));
      for (double v : costs.pairwise) scale = std::max(scale, std::abs(v));
      scale *= static_cast<double>(graph.num_nodes + graph.edges.size());
      auto kept = collect(graph, costs, fixed, cap_states, workers, 1e-9 * (1.0 + scale));
      // Incremental sums drift; re-evaluate the survivors from scratch.
      for (auto& [v, x] : kept) v = evaluate(graph, costs, x);
      double best = kept.front().first;
      for (const auto& [v, x] : kept) best = std::min(best, v);
      return finish(std::move(kept), 1e-12 * (1.0 + std::abs(best)));
   }
}

template BruteForceResult<double> brute_force(const Graph&, const CostTables<double>&, const PartialAssignment&,
                                              std::uint64_t, std::size_t);
template BruteForceResult<Rational> brute_force(const Graph&, const CostTables<Rational>&, const PartialAssignment&,
                                                std::uint64_t, std::size_t);

BruteForceResult<double> brute_force_map(const MrfModel& model, std::uint64_t cap_states, std::size_t workers)
{
   return brute_force(model.graph(), model.costs(), PartialAssignment(model.num_nodes(), -1), cap_states, workers);
}

BruteForceResult<double> brute_force_restricted(const MrfModel& model, const PartialAssignment& fixed,
                                                std::uint64_t cap_states, std::size_t workers)
{
   return brute_force(model.graph(), model.costs(), fixed, cap_states, workers);
}

BruteForceResult<Rational> exact_brute_force_restricted(const MrfModel& model, const PartialAssignment& fixed,
                                                        std::uint64_t cap_states, std::size_t workers)
{
   double scale = 0.0;
   for (double v : model.costs().unary) scale = std::max(scale, std::abs(v));
   for (double v : model.costs().pairwise) scale = std::max(scale, std::abs(v));
   scale *= static_cast<double>(model.num_nodes() + model.num_edges());
   auto kept = collect(model.graph(), model.costs(), fixed, cap_states, workers, 1e-9 * (1.0 + scale));
   const auto exact_costs = model.costs_as<Rational>();
   std::vector<std::pair<Rational, Assignment>> exact;
   exact.reserve(kept.size());
   for (auto& [v, x] : kept) {
      Rational value = evaluate(model.graph(), exact_costs, x);
      exact.emplace_back(std::move(value), std::move(x));
   }
   return finish(std::move(exact), Rational(0));
}

BruteForceResult<Rational> exact_brute_force_map(const MrfModel& model, std::uint64_t cap_states, std::size_t workers)
{
   return exact_brute_force_restricted(model, PartialAssignment(model.num_nodes(), -1), cap_states, workers);
}

} // namespace pomap
