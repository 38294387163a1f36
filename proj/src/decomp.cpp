#include "pomap/decomp.hpp"

#include <algorithm>
#include <map>

namespace pomap {

template <>
const SubProblem<double>& Decomposition::subproblem<double>(std::size_t j) const
{
   return floating_.at(j);
}

template <>
const SubProblem<Rational>& Decomposition::subproblem<Rational>(std::size_t j) const
{
   return exact_.at(j);
}

template <>
const CostTables<double>& Decomposition::model_costs<double>() const
{
   return model_costs_;
}

template <>
const CostTables<Rational>& Decomposition::model_costs<Rational>() const
{
   return model_costs_exact_;
}

Assignment Decomposition::restrict(std::size_t j, std::span<const Label> global) const
{
   if (global.size() != num_nodes()) throw Error(ErrorCode::dimension_mismatch, "assignment does not match model");
   Assignment local;
   local.reserve(subgraphs_[j].nodes.size());
   for (int v : subgraphs_[j].nodes) local.push_back(global[v]);
   return local;
}

Rational Decomposition::split_objective(std::span<const Label> labels) const
{
   Rational total(0);
   for (std::size_t j = 0; j < size(); ++j) {
      const auto local = restrict(j, labels);
      total += evaluate(exact_[j].graph, exact_[j].costs, local);
   }
   return total;
}

Decomposition split_potentials(const MrfModel& model, std::vector<Subgraph> subgraphs)
{
   model.validate();
   const std::size_t n = model.num_nodes();
   const std::size_t L = model.num_labels();
   Decomposition d;
   d.num_labels_ = L;
   d.model_graph_ = model.graph();
   d.model_costs_ = model.costs();
   d.model_costs_exact_ = model.costs_as<Rational>();
   d.node_cover_.assign(n, 0);
   d.edge_cover_.assign(model.num_edges(), 0);
   d.slots_.assign(n, {});

   std::vector<std::map<int, int>> local_index(subgraphs.size());
   for (std::size_t j = 0; j < subgraphs.size(); ++j) {
      auto& sg = subgraphs[j];
      std::sort(sg.nodes.begin(), sg.nodes.end());
      if (std::adjacent_find(sg.nodes.begin(), sg.nodes.end()) != sg.nodes.end())
         throw Error(ErrorCode::invalid_argument, "subgraph " + std::to_string(j) + " lists a node twice");
      std::sort(sg.edges.begin(), sg.edges.end());
      if (std::adjacent_find(sg.edges.begin(), sg.edges.end()) != sg.edges.end())
         throw Error(ErrorCode::invalid_argument, "subgraph " + std::to_string(j) + " lists an edge twice");
      for (std::size_t k = 0; k < sg.nodes.size(); ++k) {
         const int v = sg.nodes[k];
         if (v < 0 || static_cast<std::size_t>(v) >= n)
            throw Error(ErrorCode::invalid_argument, "subgraph node " + std::to_string(v) + " out of range");
         local_index[j][v] = static_cast<int>(k);
         ++d.node_cover_[v];
         d.slots_[v].push_back({j, static_cast<int>(k)});
      }
      for (std::size_t e : sg.edges) {
         if (e >= model.num_edges()) throw Error(ErrorCode::invalid_argument, "subgraph edge index out of range");
         const Edge& edge = model.edges()[e];
         if (!local_index[j].count(edge.i) || !local_index[j].count(edge.j))
            throw Error(ErrorCode::invalid_argument,
                        "subgraph " + std::to_string(j) + " has an edge whose endpoint is not in its node set");
         ++d.edge_cover_[e];
      }
   }
   std::string uncovered;
   for (std::size_t i = 0; i < n; ++i)
      if (d.node_cover_[i] == 0) uncovered += " node " + std::to_string(i);
   for (std::size_t e = 0; e < model.num_edges(); ++e)
      if (d.edge_cover_[e] == 0)
         uncovered += " edge (" + std::to_string(model.edges()[e].i) + "," + std::to_string(model.edges()[e].j) + ")";
   if (!uncovered.empty()) throw Error(ErrorCode::coverage_violation, "decomposition does not cover:" + uncovered);

   for (std::size_t j = 0; j < subgraphs.size(); ++j) {
      const auto& sg = subgraphs[j];
      SubProblem<Rational> exact;
      SubProblem<double> floating;
      exact.nodes = sg.nodes;
      exact.model_edges = sg.edges;
      exact.graph.num_nodes = sg.nodes.size();
      for (std::size_t e : sg.edges) {
         const Edge& edge = model.edges()[e];
         exact.graph.edges.push_back({local_index[j][edge.i], local_index[j][edge.j]});
      }
      exact.costs = CostTables<Rational>(sg.nodes.size(), sg.edges.size(), L);
      for (std::size_t k = 0; k < sg.nodes.size(); ++k) {
         const int v = sg.nodes[k];
         for (std::size_t s = 0; s < L; ++s)
            exact.costs.node(k, static_cast<Label>(s)) =
               d.model_costs_exact_.node(v, static_cast<Label>(s)) / Rational(static_cast<long>(d.node_cover_[v]));
      }
      for (std::size_t k = 0; k < sg.edges.size(); ++k) {
         const std::size_t e = sg.edges[k];
         for (std::size_t s = 0; s < L; ++s)
            for (std::size_t t = 0; t < L; ++t)
               exact.costs.edge(k, static_cast<Label>(s), static_cast<Label>(t)) =
                  d.model_costs_exact_.edge(e, static_cast<Label>(s), static_cast<Label>(t)) /
                  Rational(static_cast<long>(d.edge_cover_[e]));
      }
      floating.nodes = exact.nodes;
      floating.model_edges = exact.model_edges;
      floating.graph = exact.graph;
      floating.costs = CostTables<double>(sg.nodes.size(), sg.edges.size(), L);
      for (std::size_t k = 0; k < sg.nodes.size(); ++k)
         for (std::size_t s = 0; s < L; ++s)
            floating.costs.node(k, static_cast<Label>(s)) =
               model.unary(sg.nodes[k], static_cast<Label>(s)) / static_cast<double>(d.node_cover_[sg.nodes[k]]);
      for (std::size_t k = 0; k < sg.edges.size(); ++k)
         for (std::size_t s = 0; s < L; ++s)
            for (std::size_t t = 0; t < L; ++t)
               floating.costs.edge(k, static_cast<Label>(s), static_cast<Label>(t)) =
                  model.pairwise(sg.edges[k], static_cast<Label>(s), static_cast<Label>(t)) /
                  static_cast<double>(d.edge_cover_[sg.edges[k]]);
      try {
         d.layouts_.push_back(layout_forest(exact.graph));
      } catch (const Error& ex) {
         throw Error(ex.code(), "subgraph " + std::to_string(j) + ": " + ex.what());
      }
      d.exact_.push_back(std::move(exact));
      d.floating_.push_back(std::move(floating));
   }
   d.subgraphs_ = std::move(subgraphs);
   return d;
}

Decomposition grid_forests(const MrfModel& model, std::size_t rows, std::size_t cols)
{
   if (rows == 0 || cols == 0 || rows * cols != model.num_nodes())
      throw Error(ErrorCode::not_a_grid, "model does not have rows x cols nodes");
   const std::size_t expected = rows * (cols - 1) + cols * (rows - 1);
   if (model.num_edges() != expected) throw Error(ErrorCode::not_a_grid, "model edge count does not match a 4-neighbour grid");
   Subgraph vertical, horizontal;
   for (std::size_t v = 0; v < model.num_nodes(); ++v) {
      vertical.nodes.push_back(static_cast<int>(v));
      horizontal.nodes.push_back(static_cast<int>(v));
   }
   for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) {
         const int v = static_cast<int>(r * cols + c);
         if (r + 1 < rows) {
            const auto e = model.graph().find_edge(v, v + static_cast<int>(cols));
            if (!e) throw Error(ErrorCode::not_a_grid, "missing vertical edge at node " + std::to_string(v));
            vertical.edges.push_back(*e);
         }
         if (c + 1 < cols) {
            const auto e = model.graph().find_edge(v, v + 1);
            if (!e) throw Error(ErrorCode::not_a_grid, "missing horizontal edge at node " + std::to_string(v));
            horizontal.edges.push_back(*e);
         }
      }
   return split_potentials(model, {std::move(vertical), std::move(horizontal)});
}

Decomposition edge_decomposition(const MrfModel& model)
{
   std::vector<Subgraph> parts;
   const auto deg = model.graph().degrees();
   for (std::size_t e = 0; e < model.num_edges(); ++e)
      parts.push_back({{model.edges()[e].i, model.edges()[e].j}, {e}});
   for (std::size_t v = 0; v < model.num_nodes(); ++v)
      if (deg[v] == 0) parts.push_back({{static_cast<int>(v)}, {}});
   return split_potentials(model, std::move(parts));
}

std::vector<Subgraph> subgraphs_from_json(const MrfModel& model, const nlohmann::json& doc)
{
   try {
      std::vector<Subgraph> parts;
      for (const auto& entry : doc.at("subgraphs")) {
         Subgraph sg;
         for (const auto& pair : entry.at("edges")) {
            const auto ends = pair.get<std::vector<int>>();
            if (ends.size() != 2) throw Error(ErrorCode::parse_error, "subgraph edge must have two endpoints");
            const auto e = model.graph().find_edge(ends[0], ends[1]);
            if (!e)
               throw Error(ErrorCode::invalid_argument,
                           "subgraph edge (" + std::to_string(ends[0]) + "," + std::to_string(ends[1]) + ") not in model");
            sg.edges.push_back(*e);
         }
         if (entry.contains("nodes")) {
            sg.nodes = entry.at("nodes").get<std::vector<int>>();
         } else {
            for (std::size_t e : sg.edges) {
               sg.nodes.push_back(model.edges()[e].i);
               sg.nodes.push_back(model.edges()[e].j);
            }
            std::sort(sg.nodes.begin(), sg.nodes.end());
            sg.nodes.erase(std::unique(sg.nodes.begin(), sg.nodes.end()), sg.nodes.end());
         }
         parts.push_back(std::move(sg));
      }
      return parts;
   } catch (const nlohmann::json::exception& ex) {
      throw Error(ErrorCode::parse_error, std::string("malformed decomposition JSON: ") + ex.what());
   }
}

nlohmann::json subgraphs_to_json(const MrfModel& model, const Decomposition& d)
{
   auto list = nlohmann::json::array();
   for (const auto& sg : d.subgraphs()) {
      nlohmann::json entry;
      entry["nodes"] = sg.nodes;
      auto edges = nlohmann::json::array();
      for (std::size_t e : sg.edges) edges.push_back({model.edges()[e].i, model.edges()[e].j});
      entry["edges"] = std::move(edges);
      list.push_back(std::move(entry));
   }
   return nlohmann::json{{"subgraphs", std::move(list)}};
}

} // namespace pomap
