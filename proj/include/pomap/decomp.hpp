#pragma once

#include "pomap/model.hpp"
#include "pomap/treesolve.hpp"

#include <nlohmann/json.hpp>

#include <string>
#include <vector>

namespace pomap {

// A forest subgraph in model indices. Edge endpoints must be listed in `nodes`.
struct Subgraph {
   std::vector<int> nodes;
   std::vector<std::size_t> edges;
};

// Membership of a model node in one subproblem.
struct NodeSlot {
   std::size_t subproblem;
   int local;
};

// Split of a model into forest subproblems whose objectives sum to the model
// objective. Shared unaries and pairwise tables are divided equally among the
// subproblems containing them, exactly in the rational copy.
class Decomposition {
public:
   std::size_t size() const { return subgraphs_.size(); }
   std::size_t num_labels() const { return num_labels_; }
   std::size_t num_nodes() const { return node_cover_.size(); }
   const std::vector<Subgraph>& subgraphs() const { return subgraphs_; }
   const std::vector<std::size_t>& node_cover_count() const { return node_cover_; }
   const std::vector<std::size_t>& edge_cover_count() const { return edge_cover_; }
   const std::vector<NodeSlot>& slots(std::size_t node) const { return slots_[node]; }
   const ForestLayout& layout(std::size_t j) const { return layouts_[j]; }
   const Graph& model_graph() const { return model_graph_; }

   // θʲ in the requested arithmetic.
   template <class Scalar>
   const SubProblem<Scalar>& subproblem(std::size_t j) const;

   template <class Scalar>
   const CostTables<Scalar>& model_costs() const;

   // Σ_j ⟨θʲ, x|_j⟩ evaluated exactly.
   Rational split_objective(std::span<const Label> labels) const;

   // Local assignment of subproblem j mapped from a global one.
   Assignment restrict(std::size_t j, std::span<const Label> global) const;

   friend Decomposition split_potentials(const MrfModel& model, std::vector<Subgraph> subgraphs);

private:
   std::size_t num_labels_ = 0;
   Graph model_graph_;
   CostTables<double> model_costs_;
   CostTables<Rational> model_costs_exact_;
   std::vector<Subgraph> subgraphs_;
   std::vector<std::size_t> node_cover_;
   std::vector<std::size_t> edge_cover_;
   std::vector<std::vector<NodeSlot>> slots_;
   std::vector<ForestLayout> layouts_;
   std::vector<SubProblem<double>> floating_;
   std::vector<SubProblem<Rational>> exact_;
};

template <>
const SubProblem<double>& Decomposition::subproblem<double>(std::size_t j) const;
template <>
const SubProblem<Rational>& Decomposition::subproblem<Rational>(std::size_t j) const;
template <>
const CostTables<double>& Decomposition::model_costs<double>() const;
template <>
const CostTables<Rational>& Decomposition::model_costs<Rational>() const;

// Divides θ_i by the number of subgraphs containing i and θ_ij by the number
// containing (i,j). Throws coverage_violation listing uncovered nodes/edges and
// cyclic_graph when a subgraph is not a forest.
Decomposition split_potentials(const MrfModel& model, std::vector<Subgraph> subgraphs);

// Vertical edges form the first forest, horizontal edges the second; both span
// all nodes. Node r·cols + c sits at row r, column c.
Decomposition grid_forests(const MrfModel& model, std::size_t rows, std::size_t cols);

// One subproblem per edge plus a singleton for every isolated node.
Decomposition edge_decomposition(const MrfModel& model);

// {"subgraphs": [{"nodes": [...], "edges": [[i,j], ...]}, ...]}; "nodes" defaults to the edge endpoints.
std::vector<Subgraph> subgraphs_from_json(const MrfModel& model, const nlohmann::json& doc);
nlohmann::json subgraphs_to_json(const MrfModel& model, const Decomposition& d);

} // namespace pomap
