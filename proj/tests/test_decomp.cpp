#include "support.hpp"

#include <doctest.h>

using namespace pomap;

namespace {

// Σ_j ⟨θʲ, a|_j⟩ computed from the subproblem tables.
template <class Scalar>
Scalar split_sum(const Decomposition& d, const Assignment& a)
{
   Scalar total(0);
   for (std::size_t j = 0; j < d.size(); ++j) {
      const auto& p = d.subproblem<Scalar>(j);
      total += evaluate(p.graph, p.costs, d.restrict(j, a));
   }
   return total;
}

void check_additivity_exhaustive(const MrfModel& m, const Decomposition& d)
{
   Assignment a(m.num_nodes(), 0);
   do {
      const Rational want = exact_energy(m, a);
      REQUIRE(split_sum<Rational>(d, a) == want);
      REQUIRE(d.split_objective(a) == want);
      REQUIRE(split_sum<double>(d, a) == doctest::Approx(to_double(want)).epsilon(1e-12));
   } while (support::next_assignment(a, m.num_labels()));
}

} // namespace

TEST_SUITE("decomp")
{
   TEST_CASE("5x5 grid forests")
   {
      std::mt19937_64 rng(1);
      const auto m = support::random_grid(rng, 5, 5, 2);
      const auto d = grid_forests(m, 5, 5);
      REQUIRE(d.size() == 2);
      CHECK(d.subgraphs()[0].nodes.size() == 25);
      CHECK(d.subgraphs()[1].nodes.size() == 25);
      REQUIRE(d.subgraphs()[0].edges.size() == 20);
      REQUIRE(d.subgraphs()[1].edges.size() == 20);
      for (std::size_t e : d.subgraphs()[0].edges) CHECK(m.edges()[e].j - m.edges()[e].i == 5);
      for (std::size_t e : d.subgraphs()[1].edges) CHECK(m.edges()[e].j - m.edges()[e].i == 1);
      for (std::size_t c : d.node_cover_count()) CHECK(c == 2);
      for (std::size_t c : d.edge_cover_count()) CHECK(c == 1);
      // unaries are halved, edge tables are kept whole
      const auto& p = d.subproblem<Rational>(0);
      CHECK(p.costs.node(7, 1) == m.costs_as<Rational>().node(7, 1) / 2);
   }

   TEST_CASE("1x2 grid: the vertical forest has no edges")
   {
      MrfModel m(2, 2);
      m.add_edge(0, 1, std::vector<double>{1, 2, 3, 4});
      const auto d = grid_forests(m, 1, 2);
      REQUIRE(d.size() == 2);
      CHECK(d.subgraphs()[0].edges.empty());
      CHECK(d.subgraphs()[0].nodes.size() == 2);
      CHECK(d.subgraphs()[1].edges.size() == 1);
   }

   TEST_CASE("grid additivity on all 3x3 assignments")
   {
      std::mt19937_64 rng(2);
      const auto m = support::random_grid(rng, 3, 3, 2);
      check_additivity_exhaustive(m, grid_forests(m, 3, 3));
   }

   TEST_CASE("non-grid models are rejected")
   {
      std::mt19937_64 rng(3);
      const auto m = support::random_grid(rng, 3, 3, 2);
      try {
         grid_forests(m, 3, 4);
         FAIL("expected an error");
      } catch (const Error& e) {
         CHECK(e.code() == ErrorCode::not_a_grid);
      }
      MrfModel extra(4, 2);
      extra.add_edge(0, 1, std::vector<double>{0, 0, 0, 0});
      extra.add_edge(0, 3, std::vector<double>{0, 0, 0, 0});
      CHECK_THROWS_AS(grid_forests(extra, 2, 2), Error);
   }

   TEST_CASE("edge decomposition of a triangle halves every unary")
   {
      MrfModel m(3, 2);
      for (int i = 0; i < 3; ++i) m.set_unary(i, std::vector<double>{0.5, -1});
      m.add_edge(0, 1, std::vector<double>{1, 0, 0, 1});
      m.add_edge(1, 2, std::vector<double>{1, 0, 0, 1});
      m.add_edge(0, 2, std::vector<double>{1, 0, 0, 1});
      const auto d = edge_decomposition(m);
      REQUIRE(d.size() == 3);
      for (std::size_t j = 0; j < 3; ++j) {
         const auto& p = d.subproblem<Rational>(j);
         CHECK(p.costs.node(0, 0) == Rational(1, 4));
         CHECK(p.costs.node(1, 1) == Rational(-1, 2));
         CHECK(p.costs.edge(0, 0, 0) == 1);
      }
      check_additivity_exhaustive(m, d);
   }

   TEST_CASE("edge decomposition of a single edge is the model itself")
   {
      MrfModel m(2, 3);
      std::mt19937_64 rng(4);
      support::random_unaries(rng, m);
      m.add_edge(0, 1, support::table(rng, 9));
      const auto d = edge_decomposition(m);
      REQUIRE(d.size() == 1);
      const auto whole = whole_model<Rational>(m);
      CHECK(d.subproblem<Rational>(0).costs.unary == whole.costs.unary);
      CHECK(d.subproblem<Rational>(0).costs.pairwise == whole.costs.pairwise);
   }

   TEST_CASE("edge decomposition: isolated nodes and sampled additivity")
   {
      std::mt19937_64 rng(5);
      auto m = support::random_graph(rng, 12, 3, 0.3);
      MrfModel with_isolated(13, 3);
      for (std::size_t i = 0; i < 12; ++i) {
         std::vector<double> t(3);
         for (std::size_t s = 0; s < 3; ++s) t[s] = m.unary(i, static_cast<Label>(s));
         with_isolated.set_unary(i, t);
      }
      with_isolated.set_unary(12, std::vector<double>{1, 2, 3});
      for (std::size_t e = 0; e < m.num_edges(); ++e) {
         std::vector<double> t(9);
         for (int k = 0; k < 9; ++k) t[k] = m.pairwise(e, k / 3, k % 3);
         with_isolated.add_edge(m.edges()[e].i, m.edges()[e].j, t);
      }
      const auto d = edge_decomposition(with_isolated);
      CHECK(d.size() >= with_isolated.num_edges() + 1);
      CHECK(d.node_cover_count()[12] == 1);
      for (int rep = 0; rep < 1000; ++rep) {
         const auto a = support::random_assignment(rng, 13, 3);
         REQUIRE(split_sum<Rational>(d, a) == exact_energy(with_isolated, a));
      }
   }

   TEST_CASE("explicit splits")
   {
      std::mt19937_64 rng(6);
      const auto tree = support::random_tree(rng, 7, 2);
      Subgraph all;
      for (int i = 0; i < 7; ++i) all.nodes.push_back(i);
      for (std::size_t e = 0; e < tree.num_edges(); ++e) all.edges.push_back(e);
      const auto d = split_potentials(tree, {all});
      CHECK(d.subproblem<Rational>(0).costs.unary == tree.costs_as<Rational>().unary);

      MrfModel two(2, 2);
      two.set_unary(0, std::vector<double>{0.4, -0.2});
      two.add_edge(0, 1, std::vector<double>{0, 0, 0, 0});
      const auto d2 = split_potentials(two, {Subgraph{{0, 1}, {0}}, Subgraph{{0}, {}}});
      CHECK(d2.subproblem<Rational>(0).costs.node(0, 0) == Rational(1, 5));
      CHECK(d2.subproblem<Rational>(1).costs.node(0, 1) == Rational(-1, 10));
      CHECK(d2.subproblem<double>(1).costs.node(0, 0) == doctest::Approx(0.2));
   }

   TEST_CASE("spanning-forest split of a 4x4 grid is additive on all assignments")
   {
      std::mt19937_64 rng(7);
      const auto m = support::random_grid(rng, 4, 4, 2);
      // comb: all vertical edges plus the top row; the rest of the horizontal edges
      Subgraph comb, rest;
      for (int i = 0; i < 16; ++i) {
         comb.nodes.push_back(i);
         rest.nodes.push_back(i);
      }
      for (std::size_t e = 0; e < m.num_edges(); ++e) {
         const auto [i, j] = m.edges()[e];
         if (j - i == 4 || i < 4)
            comb.edges.push_back(e);
         else
            rest.edges.push_back(e);
      }
      // the top row goes into both subgraphs, so its tables are halved
      for (std::size_t e = 0; e < m.num_edges(); ++e)
         if (m.edges()[e].j < 4) rest.edges.push_back(e);
      const auto d = split_potentials(m, {comb, rest});
      CHECK(d.edge_cover_count()[m.graph().find_edge(0, 1).value()] == 2);
      check_additivity_exhaustive(m, d);
   }

   TEST_CASE("bad subgraph lists")
   {
      std::mt19937_64 rng(8);
      const auto m = support::random_grid(rng, 2, 2, 2);
      try {
         split_potentials(m, {Subgraph{{0, 1}, {m.graph().find_edge(0, 1).value()}}});
         FAIL("expected an error");
      } catch (const Error& e) {
         CHECK(e.code() == ErrorCode::coverage_violation);
         const std::string what = e.what();
         CHECK(what.find("node 2") != std::string::npos);
         CHECK(what.find("edge (0,2)") != std::string::npos);
      }
      Subgraph cycle{{0, 1, 2, 3}, {0, 1, 2, 3}};
      try {
         split_potentials(m, {cycle});
         FAIL("expected an error");
      } catch (const Error& e) {
         CHECK(e.code() == ErrorCode::cyclic_graph);
      }
      CHECK_THROWS_AS(split_potentials(m, {Subgraph{{0}, {0}}, Subgraph{{0, 1, 2, 3}, {1, 2, 3}}}), Error);
   }

   TEST_CASE("subgraph JSON")
   {
      std::mt19937_64 rng(9);
      const auto m = support::random_grid(rng, 2, 3, 2);
      const auto d = grid_forests(m, 2, 3);
      const auto doc = subgraphs_to_json(m, d);
      const auto back = split_potentials(m, subgraphs_from_json(m, doc));
      REQUIRE(back.size() == d.size());
      for (std::size_t j = 0; j < d.size(); ++j) {
         CHECK(back.subgraphs()[j].nodes == d.subgraphs()[j].nodes);
         CHECK(back.subgraphs()[j].edges == d.subgraphs()[j].edges);
      }
      const auto implicit = subgraphs_from_json(m, nlohmann::json::parse(R"({"subgraphs": [{"edges": [[1, 0], [1, 4]]}]})"));
      CHECK(implicit[0].nodes == std::vector<int>{0, 1, 4});
      CHECK_THROWS_AS(subgraphs_from_json(m, nlohmann::json::parse(R"({"subgraphs": [{"edges": [[0, 5]]}]})")), Error);
      CHECK_THROWS_AS(subgraphs_from_json(m, nlohmann::json::parse(R"({"parts": []})")), Error);
   }
}
