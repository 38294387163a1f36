#include "support.hpp"

#include <doctest.h>

#include <algorithm>
#include <set>

using namespace pomap;

namespace {

template <class Scalar>
SubProblem<Scalar> single_edge(double t00, double t01, double t10, double t11)
{
   MrfModel m(2, 2);
   m.add_edge(0, 1, std::vector<double>{t00, t01, t10, t11});
   return whole_model<Scalar>(m);
}

} // namespace

TEST_SUITE("treesolve")
{
   TEST_CASE("single edge optimum and tie-break")
   {
      const auto untied = single_edge<double>(0, 0, 0, -1);
      const auto u = map_on_tree(untied);
      CHECK(u.value == -1.0);
      CHECK(u.labels == Assignment{1, 1});

      const auto tied = single_edge<Rational>(-1, 0, 0, -1);
      const auto t = map_on_tree(tied);
      CHECK(t.value == -1);
      CHECK(t.labels == Assignment{0, 0});
   }

   TEST_CASE("cycles are rejected")
   {
      MrfModel m(3, 2);
      m.add_edge(0, 1, std::vector<double>{0, 0, 0, 0});
      m.add_edge(1, 2, std::vector<double>{0, 0, 0, 0});
      m.add_edge(0, 2, std::vector<double>{0, 0, 0, 0});
      const auto p = whole_model<double>(m);
      try {
         map_on_tree(p);
         FAIL("expected an error");
      } catch (const Error& e) {
         CHECK(e.code() == ErrorCode::cyclic_graph);
      }
      CHECK_THROWS_AS(max_marginals(p), Error);
   }

   TEST_CASE("max-marginals, label sets and enumeration on the small examples")
   {
      MrfModel node(1, 2);
      node.set_unary(0, std::vector<double>{0, -1});
      const auto mm_node = max_marginals(whole_model<Rational>(node));
      CHECK(mm_node[0] == std::vector<Rational>{0, -1});

      const auto tied = single_edge<Rational>(-1, 0, 0, -1);
      const auto mm = max_marginals(tied);
      for (int i = 0; i < 2; ++i) CHECK(mm[i] == std::vector<Rational>{-1, -1});
      const auto sets = optimal_label_sets(tied, Rational(0));
      CHECK(sets[0] == std::vector<Label>{0, 1});
      CHECK(sets[1] == std::vector<Label>{0, 1});
      const auto all = enumerate_optima(tied, Rational(0));
      CHECK(all.assignments == std::vector<Assignment>{{0, 0}, {1, 1}});
      CHECK_FALSE(all.truncated);

      const auto untied = single_edge<Rational>(0, 0, 0, -1);
      const auto su = optimal_label_sets(untied, Rational(0));
      CHECK(su[0] == std::vector<Label>{1});
      CHECK(su[1] == std::vector<Label>{1});
      CHECK(enumerate_optima(untied, Rational(0)).assignments == std::vector<Assignment>{{1, 1}});
   }

   TEST_CASE("enumeration cap")
   {
      const auto tied = single_edge<Rational>(-1, 0, 0, -1);
      CHECK_THROWS_AS(enumerate_optima(tied, Rational(0), 0), Error);
      const auto one = enumerate_optima(tied, Rational(0), 1);
      CHECK(one.assignments.size() == 1);
      CHECK(one.truncated);
   }

   TEST_CASE("constrained optimum on the tied edge")
   {
      const auto tied = single_edge<Rational>(-1, 0, 0, -1);
      const auto free = constrained_map(tied, PartialAssignment{-1, -1});
      CHECK(free.value == map_on_tree(tied).value);
      const auto fixed = constrained_map(tied, PartialAssignment{1, -1});
      CHECK(fixed.value == -1);
      CHECK(fixed.labels == Assignment{1, 1});
      CHECK_THROWS_AS(constrained_map(tied, PartialAssignment{2, -1}), Error);
      CHECK_THROWS_AS(constrained_map(tied, PartialAssignment{0}), Error);
   }

   TEST_CASE("12-node trees with three labels against the oracle")
   {
      std::mt19937_64 rng(21);
      for (int rep = 0; rep < 4; ++rep) {
         const auto m = support::random_tree(rng, 12, 3);
         const auto bf = exact_brute_force_map(m);
         const auto p = whole_model<Rational>(m);
         const auto opt = map_on_tree(p);
         CHECK(opt.value == bf.min_value);
         CHECK(exact_energy(m, opt.labels) == bf.min_value);
         const auto pd = whole_model<double>(m);
         CHECK(map_on_tree(pd).value == doctest::Approx(to_double(bf.min_value)).epsilon(1e-12));
      }
   }

   TEST_CASE("max-marginals, label sets and optima match exhaustive enumeration")
   {
      std::mt19937_64 rng(8);
      for (int rep = 0; rep < 6; ++rep) {
         const std::size_t L = rep % 2 ? 3 : 2;
         // Coarse weights make ties, so optimum sets have several members.
         MrfModel m(8, L);
         for (std::size_t i = 0; i < 8; ++i) {
            std::vector<double> t(L);
            for (auto& v : t) v = static_cast<double>(rng() % 3) - 1.0;
            m.set_unary(i, t);
         }
         for (int k = 1; k < 8; ++k) {
            std::vector<double> t(L * L);
            for (auto& v : t) v = static_cast<double>(rng() % 3) - 1.0;
            m.add_edge(static_cast<int>(rng() % k), k, t);
         }
         const auto p = whole_model<Rational>(m);
         const auto mm = max_marginals(p);
         const auto bf = exact_brute_force_map(m);
         for (std::size_t i = 0; i < 8; ++i)
            for (std::size_t s = 0; s < L; ++s) {
               PartialAssignment fix(8, -1);
               fix[i] = static_cast<Label>(s);
               CHECK(mm[i][s] == exact_brute_force_restricted(m, fix).min_value);
            }
         const auto sets = optimal_label_sets(p, Rational(0));
         for (std::size_t i = 0; i < 8; ++i) {
            std::set<Label> seen;
            for (const auto& a : bf.optima) seen.insert(a[i]);
            CHECK(std::vector<Label>(seen.begin(), seen.end()) == sets[i]);
         }
         auto listed = enumerate_optima(p, Rational(0));
         CHECK_FALSE(listed.truncated);
         std::sort(listed.assignments.begin(), listed.assignments.end());
         CHECK(listed.assignments == bf.optima);
      }
   }

   TEST_CASE("random fixings on trees agree with the restricted oracle")
   {
      std::mt19937_64 rng(13);
      for (int rep = 0; rep < 20; ++rep) {
         const auto m = support::random_tree(rng, 9, 2 + rep % 2);
         const auto p = whole_model<Rational>(m);
         PartialAssignment fix(9, -1);
         for (auto& f : fix)
            if (rng() % 3 == 0) f = static_cast<Label>(rng() % m.num_labels());
         const auto c = constrained_map(p, fix);
         const auto bf = exact_brute_force_restricted(m, fix);
         CHECK(c.value == bf.min_value);
         CHECK(c.value >= map_on_tree(p).value);
         for (std::size_t i = 0; i < 9; ++i)
            if (fix[i] >= 0) CHECK(c.labels[i] == fix[i]);
      }
   }

   TEST_CASE("constrained optimum equals the optimum iff the fixing lies in some optimum")
   {
      const auto tied = single_edge<Rational>(-1, 0, 0, -1);
      const auto untied = single_edge<Rational>(0, 0, 0, -1);
      CHECK(constrained_map(tied, PartialAssignment{0, -1}).value == -1);
      CHECK(constrained_map(untied, PartialAssignment{0, -1}).value > map_on_tree(untied).value);
   }

   TEST_CASE("forests: components are solved independently and summed")
   {
      MrfModel m(5, 2);
      m.add_edge(0, 1, std::vector<double>{0, 0, 0, -1});
      m.add_edge(3, 4, std::vector<double>{-2, 0, 0, 0});
      m.set_unary(2, std::vector<double>{0.5, 0.25});
      const auto p = whole_model<Rational>(m);
      const auto opt = map_on_tree(p);
      CHECK(opt.value == Rational(-11, 4));
      CHECK(opt.labels == Assignment{1, 1, 1, 0, 0});
      const auto mm = max_marginals(p);
      CHECK(mm[2][0] == Rational(-5, 2));
      CHECK(mm[0][0] == Rational(-7, 4));
   }

   TEST_CASE("tree DP equals the exact LP over the tree's local polytope")
   {
      std::mt19937_64 rng(4);
      for (int rep = 0; rep < 10; ++rep) {
         const auto m = support::random_tree(rng, 10, 2 + rep % 2);
         const auto sol = solve_lp(m);
         CHECK(sol.fractional_set.empty());
         CHECK(sol.optimum == map_on_tree(whole_model<Rational>(m)).value);
      }
   }
}
