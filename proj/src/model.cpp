#include "pomap/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace pomap {

std::optional<std::size_t> Graph::find_edge(int a, int b) const
{
   const Edge key{std::min(a, b), std::max(a, b)};
   for (std::size_t e = 0; e < edges.size(); ++e)
      if (edges[e] == key) return e;
   return std::nullopt;
}

std::vector<std::size_t> Graph::degrees() const
{
   std::vector<std::size_t> deg(num_nodes, 0);
   for (const auto& e : edges) {
      ++deg[e.i];
      ++deg[e.j];
   }
   return deg;
}

void Graph::validate() const
{
   std::vector<std::pair<int, int>> seen;
   seen.reserve(edges.size());
   for (const auto& e : edges) {
      if (e.i < 0 || e.j < 0 || static_cast<std::size_t>(e.i) >= num_nodes || static_cast<std::size_t>(e.j) >= num_nodes)
         throw Error(ErrorCode::invalid_model, "edge (" + std::to_string(e.i) + "," + std::to_string(e.j) + ") out of range");
      if (e.i == e.j) throw Error(ErrorCode::invalid_model, "self-loop at node " + std::to_string(e.i));
      if (e.i > e.j) throw Error(ErrorCode::invalid_model, "edge endpoints not ordered");
      seen.emplace_back(e.i, e.j);
   }
   std::sort(seen.begin(), seen.end());
   if (std::adjacent_find(seen.begin(), seen.end()) != seen.end())
      throw Error(ErrorCode::invalid_model, "duplicate edge");
}

MrfModel::MrfModel(std::size_t num_nodes, std::size_t num_labels)
{
   if (num_labels < 2) throw Error(ErrorCode::invalid_model, "a model needs at least two labels");
   graph_.num_nodes = num_nodes;
   costs_ = CostTables<double>(num_nodes, 0, num_labels);
}

double MrfModel::pairwise_between(int a, int b, Label sa, Label sb) const
{
   const auto e = graph_.find_edge(a, b);
   if (!e) throw Error(ErrorCode::invalid_argument, "no edge between " + std::to_string(a) + " and " + std::to_string(b));
   return a < b ? costs_.edge(*e, sa, sb) : costs_.edge(*e, sb, sa);
}

void MrfModel::set_unary(std::size_t i, std::span<const double> table)
{
   if (i >= num_nodes()) throw Error(ErrorCode::invalid_model, "unary for missing node " + std::to_string(i));
   if (table.size() != num_labels())
      throw Error(ErrorCode::dimension_mismatch, "unary table of node " + std::to_string(i) + " has wrong size");
   for (std::size_t s = 0; s < table.size(); ++s) {
      if (!std::isfinite(table[s])) throw Error(ErrorCode::invalid_model, "non-finite unary at node " + std::to_string(i));
      costs_.node(i, static_cast<Label>(s)) = table[s];
   }
}

std::size_t MrfModel::add_edge(int a, int b, std::span<const double> table)
{
   const std::size_t L = num_labels();
   if (a == b) throw Error(ErrorCode::invalid_model, "self-loop at node " + std::to_string(a));
   if (a < 0 || b < 0 || static_cast<std::size_t>(a) >= num_nodes() || static_cast<std::size_t>(b) >= num_nodes())
      throw Error(ErrorCode::invalid_model, "edge (" + std::to_string(a) + "," + std::to_string(b) + ") out of range");
   if (graph_.find_edge(a, b))
      throw Error(ErrorCode::invalid_model, "duplicate edge (" + std::to_string(a) + "," + std::to_string(b) + ")");
   if (table.size() != L * L) throw Error(ErrorCode::dimension_mismatch, "pairwise table must have |S|^2 entries");
   for (double v : table)
      if (!std::isfinite(v)) throw Error(ErrorCode::invalid_model, "non-finite pairwise energy");
   const bool flip = a > b;
   graph_.edges.push_back({std::min(a, b), std::max(a, b)});
   costs_.pairwise.resize(costs_.pairwise.size() + L * L);
   const std::size_t e = graph_.edges.size() - 1;
   for (std::size_t s = 0; s < L; ++s)
      for (std::size_t t = 0; t < L; ++t)
         costs_.edge(e, static_cast<Label>(s), static_cast<Label>(t)) = flip ? table[t * L + s] : table[s * L + t];
   return e;
}

template <>
CostTables<double> MrfModel::costs_as<double>() const
{
   return costs_;
}

template <>
CostTables<Rational> MrfModel::costs_as<Rational>() const
{
   CostTables<Rational> exact;
   exact.num_labels = costs_.num_labels;
   exact.unary.reserve(costs_.unary.size());
   exact.pairwise.reserve(costs_.pairwise.size());
   for (double v : costs_.unary) exact.unary.push_back(decimal_rational(v));
   for (double v : costs_.pairwise) exact.pairwise.push_back(decimal_rational(v));
   return exact;
}

void MrfModel::validate() const
{
   if (num_labels() < 2) throw Error(ErrorCode::invalid_model, "a model needs at least two labels");
   graph_.validate();
   if (costs_.unary.size() != num_nodes() * num_labels() || costs_.pairwise.size() != num_edges() * num_labels() * num_labels())
      throw Error(ErrorCode::invalid_model, "potential tables incomplete");
   for (double v : costs_.unary)
      if (!std::isfinite(v)) throw Error(ErrorCode::invalid_model, "non-finite unary energy");
   for (double v : costs_.pairwise)
      if (!std::isfinite(v)) throw Error(ErrorCode::invalid_model, "non-finite pairwise energy");
}

double energy(const MrfModel& model, std::span<const Label> labels)
{
   return evaluate(model.graph(), model.costs(), labels);
}

Rational exact_energy(const MrfModel& model, std::span<const Label> labels)
{
   if (labels.size() != model.num_nodes()) throw Error(ErrorCode::dimension_mismatch, "assignment size does not match model");
   Rational total(0);
   for (std::size_t i = 0; i < model.num_nodes(); ++i) total += decimal_rational(model.unary(i, labels[i]));
   for (std::size_t e = 0; e < model.num_edges(); ++e) {
      const auto [a, b] = model.edges()[e];
      total += decimal_rational(model.pairwise(e, labels[a], labels[b]));
   }
   return total;
}

Marginals to_overcomplete(const MrfModel& model, std::span<const Label> labels)
{
   return to_overcomplete<double>(model.graph(), model.num_labels(), labels);
}

const char* to_string(Violation::Kind kind)
{
   switch (kind) {
      case Violation::Kind::normalization: return "normalization";
      case Violation::Kind::marginalization: return "marginalization";
      case Violation::Kind::range: return "range";
      case Violation::Kind::integrality: return "integrality";
   }
   return "unknown";
}

nlohmann::json model_to_json(const MrfModel& model)
{
   const std::size_t L = model.num_labels();
   nlohmann::json doc;
   doc["num_nodes"] = model.num_nodes();
   doc["num_labels"] = L;
   auto unary = nlohmann::json::array();
   for (std::size_t i = 0; i < model.num_nodes(); ++i) {
      auto row = nlohmann::json::array();
      for (std::size_t s = 0; s < L; ++s) row.push_back(model.unary(i, static_cast<Label>(s)));
      unary.push_back(std::move(row));
   }
   doc["unary"] = std::move(unary);
   auto edges = nlohmann::json::array();
   auto pairwise = nlohmann::json::array();
   for (std::size_t e = 0; e < model.num_edges(); ++e) {
      edges.push_back({model.edges()[e].i, model.edges()[e].j});
      auto table = nlohmann::json::array();
      for (std::size_t s = 0; s < L; ++s) {
         auto row = nlohmann::json::array();
         for (std::size_t t = 0; t < L; ++t) row.push_back(model.pairwise(e, static_cast<Label>(s), static_cast<Label>(t)));
         table.push_back(std::move(row));
      }
      pairwise.push_back(std::move(table));
   }
   doc["edges"] = std::move(edges);
   doc["pairwise"] = std::move(pairwise);
   return doc;
}

MrfModel model_from_json(const nlohmann::json& doc)
{
   try {
      const auto n = doc.at("num_nodes").get<std::size_t>();
      const auto L = doc.at("num_labels").get<std::size_t>();
      MrfModel model(n, L);
      if (doc.contains("unary")) {
         const auto& unary = doc.at("unary");
         if (unary.size() != n) throw Error(ErrorCode::dimension_mismatch, "unary must list one table per node");
         for (std::size_t i = 0; i < n; ++i) model.set_unary(i, unary[i].get<std::vector<double>>());
      }
      const auto& edges = doc.at("edges");
      const auto& pairwise = doc.at("pairwise");
      if (edges.size() != pairwise.size()) throw Error(ErrorCode::dimension_mismatch, "edges and pairwise differ in length");
      for (std::size_t e = 0; e < edges.size(); ++e) {
         const auto ends = edges[e].get<std::vector<int>>();
         if (ends.size() != 2) throw Error(ErrorCode::invalid_model, "edge must have two endpoints");
         const auto rows = pairwise[e].get<std::vector<std::vector<double>>>();
         if (rows.size() != L) throw Error(ErrorCode::dimension_mismatch, "pairwise table must be |S| x |S|");
         std::vector<double> flat;
         for (const auto& row : rows) {
            if (row.size() != L) throw Error(ErrorCode::dimension_mismatch, "pairwise table must be |S| x |S|");
            flat.insert(flat.end(), row.begin(), row.end());
         }
         model.add_edge(ends[0], ends[1], flat);
      }
      model.validate();
      return model;
   } catch (const nlohmann::json::exception& ex) {
      throw Error(ErrorCode::parse_error, std::string("malformed model JSON: ") + ex.what());
   }
}

namespace {

bool ends_with(const std::string& s, const std::string& suffix)
{
   return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

} // namespace

MrfModel load_model(const std::string& path, bool uai_energies)
{
   std::ifstream in(path);
   if (!in) throw Error(ErrorCode::io_error, "cannot open " + path);
   if (ends_with(path, ".uai")) return read_uai(in, uai_energies);
   try {
      return model_from_json(nlohmann::json::parse(in));
   } catch (const nlohmann::json::parse_error& ex) {
      throw Error(ErrorCode::parse_error, path + ": " + ex.what());
   }
}

void save_model(const MrfModel& model, const std::string& path)
{
   std::ofstream out(path);
   if (!out) throw Error(ErrorCode::io_error, "cannot write " + path);
   out << model_to_json(model).dump(1) << '\n';
}

MrfModel read_uai(std::istream& in, bool tables_are_energies)
{
   if (!tables_are_energies)
      throw Error(ErrorCode::invalid_argument,
                  "UAI tables hold probabilities; pass --uai-energies to read them as energies (no -log conversion is done)");
   std::string kind;
   if (!(in >> kind) || kind != "MARKOV") throw Error(ErrorCode::parse_error, "expected MARKOV header");
   std::size_t n = 0;
   if (!(in >> n)) throw Error(ErrorCode::parse_error, "missing variable count");
   std::vector<std::size_t> card(n);
   for (auto& c : card)
      if (!(in >> c)) throw Error(ErrorCode::parse_error, "missing cardinality");
   if (n == 0) throw Error(ErrorCode::parse_error, "empty model");
   const std::size_t L = card.front();
   if (std::any_of(card.begin(), card.end(), [L](std::size_t c) { return c != L; }))
      throw Error(ErrorCode::invalid_model, "all variables must share one label set");
   std::size_t num_factors = 0;
   if (!(in >> num_factors)) throw Error(ErrorCode::parse_error, "missing factor count");
   std::vector<std::vector<int>> scopes(num_factors);
   for (auto& scope : scopes) {
      std::size_t arity = 0;
      if (!(in >> arity)) throw Error(ErrorCode::parse_error, "missing factor arity");
      if (arity < 1 || arity > 2) throw Error(ErrorCode::invalid_model, "only unary and pairwise factors are supported");
      scope.resize(arity);
      for (auto& v : scope) {
         if (!(in >> v)) throw Error(ErrorCode::parse_error, "missing factor scope");
         if (v < 0 || static_cast<std::size_t>(v) >= n) throw Error(ErrorCode::invalid_model, "factor scope out of range");
      }
   }
   std::vector<double> unary(n * L, 0.0);
   std::vector<std::pair<Edge, std::vector<double>>> pairs;
   for (const auto& scope : scopes) {
      std::size_t entries = 0;
      if (!(in >> entries)) throw Error(ErrorCode::parse_error, "missing table size");
      const std::size_t expected = scope.size() == 1 ? L : L * L;
      if (entries != expected) throw Error(ErrorCode::parse_error, "table size does not match scope");
      std::vector<double> table(entries);
      for (auto& v : table)
         if (!(in >> v)) throw Error(ErrorCode::parse_error, "truncated factor table");
      if (scope.size() == 1) {
         for (std::size_t s = 0; s < L; ++s) unary[scope[0] * L + s] += table[s];
         continue;
      }
      int a = scope[0], b = scope[1];
      if (a == b) throw Error(ErrorCode::invalid_model, "pairwise factor on a single variable");
      // UAI tables vary the last scope variable fastest.
      if (a > b) {
         std::vector<double> t(L * L);
         for (std::size_t s = 0; s < L; ++s)
            for (std::size_t r = 0; r < L; ++r) t[r * L + s] = table[s * L + r];
         table.swap(t);
         std::swap(a, b);
      }
      auto it = std::find_if(pairs.begin(), pairs.end(), [&](const auto& p) { return p.first == Edge{a, b}; });
      if (it == pairs.end())
         pairs.push_back({Edge{a, b}, table});
      else
         for (std::size_t k = 0; k < table.size(); ++k) it->second[k] += table[k];
   }
   MrfModel model(n, L);
   for (std::size_t i = 0; i < n; ++i) model.set_unary(i, std::span<const double>(unary.data() + i * L, L));
   for (const auto& [edge, table] : pairs) model.add_edge(edge.i, edge.j, table);
   return model;
}

nlohmann::json marginals_to_json(const ExactMarginals& m)
{
   nlohmann::json doc;
   auto nodes = nlohmann::json::array();
   for (std::size_t i = 0; i < m.num_nodes(); ++i) {
      auto row = nlohmann::json::array();
      for (std::size_t s = 0; s < m.num_labels; ++s) row.push_back(to_string(m.node(i, static_cast<Label>(s))));
      nodes.push_back(std::move(row));
   }
   auto edges = nlohmann::json::array();
   for (std::size_t e = 0; e < m.num_edges(); ++e) {
      auto table = nlohmann::json::array();
      for (std::size_t s = 0; s < m.num_labels; ++s) {
         auto row = nlohmann::json::array();
         for (std::size_t t = 0; t < m.num_labels; ++t)
            row.push_back(to_string(m.edge(e, static_cast<Label>(s), static_cast<Label>(t))));
         table.push_back(std::move(row));
      }
      edges.push_back(std::move(table));
   }
   doc["nodes"] = std::move(nodes);
   doc["edges"] = std::move(edges);
   return doc;
}

nlohmann::json marginals_to_json(const Marginals& m)
{
   nlohmann::json doc;
   auto nodes = nlohmann::json::array();
   for (std::size_t i = 0; i < m.num_nodes(); ++i) {
      auto row = nlohmann::json::array();
      for (std::size_t s = 0; s < m.num_labels; ++s) row.push_back(m.node(i, static_cast<Label>(s)));
      nodes.push_back(std::move(row));
   }
   auto edges = nlohmann::json::array();
   for (std::size_t e = 0; e < m.num_edges(); ++e) {
      auto table = nlohmann::json::array();
      for (std::size_t s = 0; s < m.num_labels; ++s) {
         auto row = nlohmann::json::array();
         for (std::size_t t = 0; t < m.num_labels; ++t) row.push_back(m.edge(e, static_cast<Label>(s), static_cast<Label>(t)));
         table.push_back(std::move(row));
      }
      edges.push_back(std::move(table));
   }
   doc["nodes"] = std::move(nodes);
   doc["edges"] = std::move(edges);
   return doc;
}

} // namespace pomap
