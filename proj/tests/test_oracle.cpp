#include "support.hpp"

#include <doctest.h>

using namespace pomap;

TEST_SUITE("oracle")
{
   TEST_CASE("single node and tied edge")
   {
      MrfModel one(1, 2);
      one.set_unary(0, std::vector<double>{0, -1});
      const auto r = brute_force_map(one);
      CHECK(r.min_value == -1.0);
      CHECK(r.optima == std::vector<Assignment>{{1}});

      MrfModel tied(2, 2);
      tied.add_edge(0, 1, std::vector<double>{-1, 0, 0, -1});
      const auto t = exact_brute_force_map(tied);
      CHECK(t.min_value == -1);
      CHECK(t.optima == std::vector<Assignment>{{0, 0}, {1, 1}});
      CHECK(brute_force_map(tied).optima.size() == 2);
   }

   TEST_CASE("naive enumeration agrees with the Gray-code sweep")
   {
      std::mt19937_64 rng(2);
      for (int rep = 0; rep < 8; ++rep) {
         const auto m = support::random_graph(rng, 7, 2 + rep % 2, 0.4);
         Rational best;
         std::vector<Assignment> optima;
         Assignment a(7, 0);
         bool first = true;
         do {
            const Rational e = exact_energy(m, a);
            if (first || e < best) {
               best = e;
               optima.clear();
               first = false;
            }
            if (e == best) optima.push_back(a);
         } while (support::next_assignment(a, m.num_labels()));
         std::sort(optima.begin(), optima.end());
         const auto r = exact_brute_force_map(m);
         CHECK(r.min_value == best);
         CHECK(r.optima == optima);
         CHECK(brute_force_map(m).min_value == doctest::Approx(to_double(best)).epsilon(1e-12));
      }
   }

   TEST_CASE("restricted enumeration")
   {
      std::mt19937_64 rng(9);
      const auto m = support::random_grid(rng, 3, 3, 2);
      const auto a = support::random_assignment(rng, 9, 2);
      const auto all_fixed = exact_brute_force_restricted(m, PartialAssignment(a.begin(), a.end()));
      CHECK(all_fixed.min_value == exact_energy(m, a));
      CHECK(all_fixed.optima == std::vector<Assignment>{a});
      const auto none = exact_brute_force_restricted(m, PartialAssignment(9, -1));
      CHECK(none.min_value == exact_brute_force_map(m).min_value);
      CHECK_THROWS_AS(brute_force_restricted(m, PartialAssignment(8, -1)), Error);
   }

   TEST_CASE("tree model value equals the tree DP")
   {
      std::mt19937_64 rng(17);
      const auto m = support::random_tree(rng, 11, 3);
      CHECK(exact_brute_force_map(m).min_value == map_on_tree(whole_model<Rational>(m)).value);
   }

   TEST_CASE("state cap")
   {
      MrfModel m(20, 2);
      try {
         brute_force_map(m, 1000);
         FAIL("expected an error");
      } catch (const Error& e) {
         CHECK(e.code() == ErrorCode::cap_exceeded);
      }
   }

   TEST_CASE("worker count does not change the result")
   {
      std::mt19937_64 rng(23);
      const auto m = support::random_grid(rng, 3, 4, 2);
      const auto serial = exact_brute_force_map(m, default_state_cap, 1);
      const auto parallel = exact_brute_force_map(m, default_state_cap, 4);
      CHECK(serial.min_value == parallel.min_value);
      CHECK(serial.optima == parallel.optima);
   }

   TEST_CASE("oracle minimum equals the LP optimum iff the LP solution is integral")
   {
      std::mt19937_64 rng(31);
      int tight = 0, loose = 0;
      for (int rep = 0; rep < 40; ++rep) {
         const auto m = support::random_grid(rng, 3, 3, 3, false);
         const auto sol = solve_lp(m);
         const auto bf = exact_brute_force_map(m);
         CHECK((bf.min_value == sol.optimum) == sol.fractional_set.empty());
         CHECK(sol.optimum <= bf.min_value);
         (sol.fractional_set.empty() ? tight : loose)++;
      }
      CHECK(tight > 0);
      CHECK(loose > 0);
   }
}
