#pragma once

#include "pomap/error.hpp"
#include "pomap/rational.hpp"

#include <nlohmann/json.hpp>

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace pomap {

using Label = int;
// One label per node of the graph it refers to.
using Assignment = std::vector<Label>;

// Undirected edge stored with i < j.
struct Edge {
   int i = 0;
   int j = 0;
   friend bool operator==(const Edge&, const Edge&) = default;
};

struct Graph {
   std::size_t num_nodes = 0;
   std::vector<Edge> edges;

   std::size_t num_edges() const { return edges.size(); }
   std::optional<std::size_t> find_edge(int a, int b) const;
   std::vector<std::size_t> degrees() const;
   // Throws invalid_model on self-loops, duplicates, out-of-range or unordered endpoints.
   void validate() const;
};

// Unary table θ_i(s) and pairwise table θ_ij(s,t) over some graph. Pairwise entries
// are indexed as (edge, s_i, s_j) with the edge's smaller endpoint first.
template <class Scalar>
struct CostTables {
   std::size_t num_labels = 0;
   std::vector<Scalar> unary;
   std::vector<Scalar> pairwise;

   CostTables() = default;
   CostTables(std::size_t nodes, std::size_t edges, std::size_t labels)
      : num_labels(labels), unary(nodes * labels, Scalar(0)), pairwise(edges * labels * labels, Scalar(0)) {}

   Scalar& node(std::size_t i, Label s) { return unary[i * num_labels + s]; }
   const Scalar& node(std::size_t i, Label s) const { return unary[i * num_labels + s]; }
   Scalar& edge(std::size_t e, Label s, Label t) { return pairwise[(e * num_labels + s) * num_labels + t]; }
   const Scalar& edge(std::size_t e, Label s, Label t) const { return pairwise[(e * num_labels + s) * num_labels + t]; }
};

// Objective of an assignment: Σ_i θ_i(x_i) + Σ_ij θ_ij(x_i, x_j).
template <class Scalar>
Scalar evaluate(const Graph& graph, const CostTables<Scalar>& costs, std::span<const Label> labels)
{
   if (labels.size() != graph.num_nodes)
      throw Error(ErrorCode::dimension_mismatch, "assignment has " + std::to_string(labels.size()) +
                                                    " labels, graph has " + std::to_string(graph.num_nodes) + " nodes");
   Scalar total(0);
   for (std::size_t i = 0; i < graph.num_nodes; ++i) {
      if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= costs.num_labels)
         throw Error(ErrorCode::invalid_argument, "label out of range at node " + std::to_string(i));
      total += costs.node(i, labels[i]);
   }
   for (std::size_t e = 0; e < graph.edges.size(); ++e)
      total += costs.edge(e, labels[graph.edges[e].i], labels[graph.edges[e].j]);
   return total;
}

// Pairwise MRF with a single label set S shared by all nodes.
class MrfModel {
public:
   MrfModel() = default;
   MrfModel(std::size_t num_nodes, std::size_t num_labels);

   std::size_t num_nodes() const { return graph_.num_nodes; }
   std::size_t num_labels() const { return costs_.num_labels; }
   std::size_t num_edges() const { return graph_.edges.size(); }
   const Graph& graph() const { return graph_; }
   const std::vector<Edge>& edges() const { return graph_.edges; }
   const CostTables<double>& costs() const { return costs_; }

   double unary(std::size_t i, Label s) const { return costs_.node(i, s); }
   double pairwise(std::size_t e, Label s, Label t) const { return costs_.edge(e, s, t); }
   // θ_ab(s_a, s_b) for either orientation of an existing edge.
   double pairwise_between(int a, int b, Label sa, Label sb) const;

   void set_unary(std::size_t i, std::span<const double> table);
   // Adds edge {a, b}; `table` is row-major in (s_a, s_b) and is transposed when a > b.
   std::size_t add_edge(int a, int b, std::span<const double> table);

   // Costs converted to `Scalar`; the exact view maps each double to its shortest decimal.
   template <class Scalar>
   CostTables<Scalar> costs_as() const;

   void validate() const;

private:
   Graph graph_;
   CostTables<double> costs_;
};

template <>
CostTables<double> MrfModel::costs_as<double>() const;
template <>
CostTables<Rational> MrfModel::costs_as<Rational>() const;

double energy(const MrfModel& model, std::span<const Label> labels);
Rational exact_energy(const MrfModel& model, std::span<const Label> labels);

// Overcomplete representation: node block (i, s) then edge block (e, s, t).
template <class Scalar>
struct BasicMarginals {
   std::size_t num_labels = 0;
   std::vector<Scalar> nodes;
   std::vector<Scalar> edges;

   BasicMarginals() = default;
   BasicMarginals(std::size_t num_nodes, std::size_t num_edges, std::size_t labels)
      : num_labels(labels), nodes(num_nodes * labels, Scalar(0)), edges(num_edges * labels * labels, Scalar(0)) {}

   std::size_t num_nodes() const { return num_labels ? nodes.size() / num_labels : 0; }
   std::size_t num_edges() const { return num_labels ? edges.size() / (num_labels * num_labels) : 0; }
   Scalar& node(std::size_t i, Label s) { return nodes[i * num_labels + s]; }
   const Scalar& node(std::size_t i, Label s) const { return nodes[i * num_labels + s]; }
   Scalar& edge(std::size_t e, Label s, Label t) { return edges[(e * num_labels + s) * num_labels + t]; }
   const Scalar& edge(std::size_t e, Label s, Label t) const { return edges[(e * num_labels + s) * num_labels + t]; }
};

using Marginals = BasicMarginals<double>;
using ExactMarginals = BasicMarginals<Rational>;

template <class Scalar>
BasicMarginals<Scalar> to_overcomplete(const Graph& graph, std::size_t num_labels, std::span<const Label> labels)
{
   if (labels.size() != graph.num_nodes) throw Error(ErrorCode::dimension_mismatch, "assignment size does not match graph");
   BasicMarginals<Scalar> m(graph.num_nodes, graph.edges.size(), num_labels);
   for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= num_labels)
         throw Error(ErrorCode::invalid_argument, "label out of range at node " + std::to_string(i));
      m.node(i, labels[i]) = Scalar(1);
   }
   for (std::size_t e = 0; e < graph.edges.size(); ++e) m.edge(e, labels[graph.edges[e].i], labels[graph.edges[e].j]) = Scalar(1);
   return m;
}

Marginals to_overcomplete(const MrfModel& model, std::span<const Label> labels);

// ⟨θ, μ⟩.
template <class Scalar>
Scalar inner_product(const CostTables<Scalar>& costs, const BasicMarginals<Scalar>& m)
{
   if (costs.unary.size() != m.nodes.size() || costs.pairwise.size() != m.edges.size())
      throw Error(ErrorCode::dimension_mismatch, "cost and marginal dimensions differ");
   Scalar total(0);
   for (std::size_t k = 0; k < m.nodes.size(); ++k) total += costs.unary[k] * m.nodes[k];
   for (std::size_t k = 0; k < m.edges.size(); ++k) total += costs.pairwise[k] * m.edges[k];
   return total;
}

enum class MarginalMode { integral, relaxed };

struct Violation {
   enum class Kind { normalization, marginalization, range, integrality };
   Kind kind;
   std::string location;
   double magnitude = 0.0;
};

const char* to_string(Violation::Kind kind);

struct ValidityReport {
   std::vector<Violation> violations;
   bool valid() const { return violations.empty(); }
};

// Checks normalization, both marginalization directions, non-negativity (and ≤ 1),
// and 0/1 integrality in integral mode. Every violated constraint is reported.
template <class Scalar>
ValidityReport validate_marginals(const Graph& graph, const BasicMarginals<Scalar>& m, MarginalMode mode, double tol)
{
   if (m.num_nodes() != graph.num_nodes || m.num_edges() != graph.edges.size())
      throw Error(ErrorCode::dimension_mismatch, "marginals do not match graph");
   ValidityReport report;
   const std::size_t L = m.num_labels;
   auto excess = [&](const Scalar& v) { return std::abs(to_double(v)); };
   auto add = [&](Violation::Kind kind, std::string where, double magnitude) {
      report.violations.push_back({kind, std::move(where), magnitude});
   };
   auto check_entry = [&](const Scalar& v, const std::string& where) {
      if (v < Scalar(0) && excess(v) > tol) add(Violation::Kind::range, where, excess(v));
      if (v > Scalar(1) && to_double(v) - 1.0 > tol) add(Violation::Kind::range, where, to_double(v) - 1.0);
      if (mode == MarginalMode::integral) {
         const double d = std::min(std::abs(to_double(v)), std::abs(to_double(v) - 1.0));
         const bool exact_int = v == Scalar(0) || v == Scalar(1);
         if (!exact_int && d > tol) add(Violation::Kind::integrality, where, d);
      }
   };
   for (std::size_t i = 0; i < graph.num_nodes; ++i) {
      Scalar sum(0);
      for (std::size_t s = 0; s < L; ++s) {
         sum += m.node(i, s);
         check_entry(m.node(i, s), "node " + std::to_string(i) + " label " + std::to_string(s));
      }
      const Scalar gap = sum - Scalar(1);
      if (gap != Scalar(0) && excess(gap) > tol) add(Violation::Kind::normalization, "node " + std::to_string(i), excess(gap));
   }
   for (std::size_t e = 0; e < graph.edges.size(); ++e) {
      const auto [i, j] = graph.edges[e];
      const std::string name = "edge " + std::to_string(e) + " (" + std::to_string(i) + "," + std::to_string(j) + ")";
      for (std::size_t s = 0; s < L; ++s)
         for (std::size_t t = 0; t < L; ++t)
            check_entry(m.edge(e, s, t), name + " labels " + std::to_string(s) + "," + std::to_string(t));
      for (std::size_t s = 0; s < L; ++s) {
         Scalar row(0);
         for (std::size_t t = 0; t < L; ++t) row += m.edge(e, s, t);
         const Scalar gap = row - m.node(i, s);
         if (gap != Scalar(0) && excess(gap) > tol)
            add(Violation::Kind::marginalization, name + " row " + std::to_string(s) + " vs node " + std::to_string(i), excess(gap));
      }
      for (std::size_t t = 0; t < L; ++t) {
         Scalar col(0);
         for (std::size_t s = 0; s < L; ++s) col += m.edge(e, s, t);
         const Scalar gap = col - m.node(j, t);
         if (gap != Scalar(0) && excess(gap) > tol)
            add(Violation::Kind::marginalization, name + " column " + std::to_string(t) + " vs node " + std::to_string(j), excess(gap));
      }
   }
   return report;
}

template <class Scalar>
ValidityReport validate_marginals(const MrfModel& model, const BasicMarginals<Scalar>& m, MarginalMode mode, double tol)
{
   return validate_marginals(model.graph(), m, mode, tol);
}

// Native JSON format: {num_nodes, num_labels, unary: [[...]], edges: [[i,j]], pairwise: [[[...]]]}.
nlohmann::json model_to_json(const MrfModel& model);
MrfModel model_from_json(const nlohmann::json& doc);
MrfModel load_model(const std::string& path, bool uai_energies = false);
void save_model(const MrfModel& model, const std::string& path);

// UAI "MARKOV" reader for unary and pairwise factors. The tables are taken as
// energies; without `tables_are_energies` the file is rejected since no
// probability-to-energy conversion is performed.
MrfModel read_uai(std::istream& in, bool tables_are_energies);

nlohmann::json marginals_to_json(const ExactMarginals& m);
nlohmann::json marginals_to_json(const Marginals& m);

} // namespace pomap
