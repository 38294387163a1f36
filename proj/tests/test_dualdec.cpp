#include "support.hpp"

#include <doctest.h>

#include <sstream>

using namespace pomap;

namespace {

// Random point of the feasible dual set: random blocks, then the per-node mean removed.
DualVariables<double> random_feasible(std::mt19937_64& rng, const Decomposition& d, double scale)
{
   auto u = zero_duals<double>(d);
   std::uniform_real_distribution<double> draw(-scale, scale);
   for (auto& block : u.u)
      for (auto& v : block) v = draw(rng);
   const std::size_t L = d.num_labels();
   for (std::size_t i = 0; i < d.num_nodes(); ++i)
      for (std::size_t s = 0; s < L; ++s) {
         double mean = 0;
         for (const auto& slot : d.slots(i)) mean += u.u[slot.subproblem][slot.local * L + s];
         mean /= static_cast<double>(d.slots(i).size());
         for (const auto& slot : d.slots(i)) u.u[slot.subproblem][slot.local * L + s] -= mean;
      }
   return u;
}

MrfModel fractional_instance(std::uint64_t seed, std::size_t side = 5) { return generate_ising(support::protocol_config(seed, side, side)).model; }

} // namespace

TEST_SUITE("dualdec")
{
   TEST_CASE("zero duals on a single tree give the MAP value")
   {
      std::mt19937_64 rng(1);
      const auto m = support::random_tree(rng, 10, 3);
      Subgraph all;
      for (int i = 0; i < 10; ++i) all.nodes.push_back(i);
      for (std::size_t e = 0; e < m.num_edges(); ++e) all.edges.push_back(e);
      const auto d = split_potentials(m, {all});
      CHECK(dual_value(d, zero_duals<Rational>(d)).value == exact_brute_force_map(m).min_value);
   }

   TEST_CASE("zero duals on an edge decomposition sum the edge minima")
   {
      MrfModel m(3, 2);
      m.add_edge(0, 1, std::vector<double>{-1, 0, 0, -1});
      m.add_edge(1, 2, std::vector<double>{0, -2, -2, 0});
      const auto d = edge_decomposition(m);
      CHECK(dual_value(d, zero_duals<Rational>(d)).value == -3);
   }

   TEST_CASE("weak duality over random feasible duals")
   {
      std::mt19937_64 rng(2);
      const auto m = support::random_grid(rng, 4, 4, 2, false);
      const auto lp = solve_lp(m);
      const auto d = grid_forests(m, 4, 4);
      const double bound = to_double(lp.optimum) + 1e-9;
      double best = -1e300;
      for (int rep = 0; rep < 10000; ++rep) {
         const auto u = random_feasible(rng, d, rep % 2 ? 0.1 : 1.0);
         REQUIRE(feasibility_residual(d, u) < 1e-12);
         best = std::max(best, dual_value(d, u).value);
      }
      CHECK(best <= bound);
   }

   TEST_CASE("subgradient step: agreement leaves u unchanged")
   {
      std::mt19937_64 rng(3);
      const auto m = support::random_grid(rng, 3, 3, 2);
      const auto d = grid_forests(m, 3, 3);
      auto u = zero_duals<Rational>(d);
      const Assignment x = support::random_assignment(rng, 9, 2);
      const std::vector<Assignment> mins{d.restrict(0, x), d.restrict(1, x)};
      CHECK(subgradient_step(d, u, mins, Rational(1)) == 0);
      CHECK(u.u == zero_duals<Rational>(d).u);
      CHECK(check_agreement(d, mins).agree);
      CHECK_THROWS_AS(subgradient_step(d, u, mins, Rational(0)), Error);
   }

   TEST_CASE("subgradient step: one disagreeing binary node moves by half a step")
   {
      MrfModel m(3, 2);
      m.add_edge(0, 1, std::vector<double>{0, 0, 0, 0});
      m.add_edge(1, 2, std::vector<double>{0, 0, 0, 0});
      const auto d = edge_decomposition(m);   // node 1 is shared
      auto u = zero_duals<Rational>(d);
      const std::vector<Assignment> mins{{0, 0}, {1, 0}};
      const auto ag = check_agreement(d, mins);
      CHECK_FALSE(ag.agree);
      CHECK(ag.disagreement_nodes == std::vector<int>{1});
      const Rational step(3, 7);
      subgradient_step(d, u, mins, step);
      // tree 0 chose label 0 at node 1 (local 1), tree 1 chose label 1 (local 0)
      CHECK(u.u[0] == std::vector<Rational>{0, 0, step / 2, -step / 2});
      CHECK(u.u[1] == std::vector<Rational>{-step / 2, step / 2, 0, 0});
   }

   TEST_CASE("1000 random rational steps stay exactly feasible")
   {
      std::mt19937_64 rng(4);
      const auto m = support::random_grid(rng, 3, 3, 3);
      const auto d = grid_forests(m, 3, 3);
      auto u = zero_duals<Rational>(d);
      for (int rep = 0; rep < 1000; ++rep) {
         std::vector<Assignment> mins;
         for (std::size_t j = 0; j < d.size(); ++j) mins.push_back(support::random_assignment(rng, d.subgraphs()[j].nodes.size(), 3));
         subgradient_step(d, u, mins, Rational(1, 1 + rep % 7));
      }
      CHECK(feasibility_residual(d, u) == 0);
   }

   TEST_CASE("agreement on identical assignments")
   {
      MrfModel m(4, 2);
      m.add_edge(0, 1, std::vector<double>{0, 0, 0, 0});
      m.add_edge(1, 2, std::vector<double>{0, 0, 0, 0});
      m.add_edge(2, 3, std::vector<double>{0, 0, 0, 0});
      const auto d = split_potentials(m, {Subgraph{{0, 1, 2, 3}, {0, 1}}, Subgraph{{0, 1, 2, 3}, {2}}});
      CHECK(check_agreement(d, {{0, 1, 1, 0}, {0, 1, 1, 0}}).agree);
      const auto ag = check_agreement(d, {{0, 1, 1, 0}, {0, 1, 1, 1}});
      CHECK(ag.disagreement_nodes == std::vector<int>{3});
   }

   TEST_CASE("primal heuristic picks the cheapest completion")
   {
      MrfModel m(2, 2);
      m.set_unary(0, std::vector<double>{3.0, 2.5});
      m.set_unary(1, std::vector<double>{0.0, 0.0});
      const auto d = split_potentials(m, {Subgraph{{0, 1}, {}}, Subgraph{{0, 1}, {}}});
      const auto best = primal_heuristic<double>(d, {{0, 0}, {1, 0}});
      CHECK(best.energy == 2.5);
      CHECK(best.labels == Assignment{1, 0});
      CHECK(best.source == 1);

      const auto single = primal_heuristic<double>(split_potentials(m, {Subgraph{{0, 1}, {}}}), {{0, 1}});
      CHECK(single.labels == Assignment{0, 1});
   }

   TEST_CASE("primal heuristic completes partial covers by majority, ties to label 0")
   {
      MrfModel m(3, 2);
      m.add_edge(0, 1, std::vector<double>{0, 0, 0, 0});
      m.add_edge(1, 2, std::vector<double>{0, 0, 0, 0});
      const auto d = edge_decomposition(m);
      // node 1 gets one vote per label; node 0 and 2 have one tree each
      CHECK(complete_assignment(d, {{1, 1}, {0, 1}}, 0) == Assignment{1, 1, 1});
      CHECK(complete_assignment(d, {{1, 1}, {0, 1}}, 1) == Assignment{1, 0, 1});
      MrfModel wide(4, 3);
      wide.add_edge(0, 1, std::vector<double>(9, 0.0));
      wide.add_edge(0, 2, std::vector<double>(9, 0.0));
      wide.add_edge(0, 3, std::vector<double>(9, 0.0));
      const auto star = edge_decomposition(wide);
      // node 0 votes: 2, 1, 2 → 2
      CHECK(complete_assignment(star, {{2, 0}, {1, 0}, {2, 0}}, 1)[0] == 1);
      CHECK(complete_assignment(star, {{2, 0}, {1, 0}, {2, 0}}, 0)[0] == 2);
      CHECK(complete_assignment(star, {{2, 0}, {1, 0}, {1, 1}}, 0)[3] == 1);
   }

   TEST_CASE("tree-structured models reach agreement at the MAP value")
   {
      std::mt19937_64 rng(5);
      for (int rep = 0; rep < 5; ++rep) {
         const auto m = support::random_tree(rng, 8, 2 + rep % 2);
         const auto d = edge_decomposition(m);
         DualSolverConfig cfg;
         cfg.max_iters = 5000;
         const auto st = solve_dual<double>(d, cfg);
         const double map = to_double(exact_brute_force_map(m).min_value);
         CHECK(st.agreement);
         CHECK(st.stop_reason == "agreement");
         CHECK(st.best_primal == doctest::Approx(map).epsilon(1e-12));
         CHECK(st.best_dual == doctest::Approx(map).epsilon(1e-9));
      }
   }

   TEST_CASE("fractional 5x5 instances keep disagreeing and approach the LP value")
   {
      for (std::uint64_t seed : {1, 2, 3}) {
         const auto m = fractional_instance(seed);
         const auto lp = solve_lp(m, LpOptions{.check_uniqueness = false});
         const auto d = grid_forests(m, 5, 5);
         DualSolverConfig cfg;
         cfg.max_iters = 5000;
         const auto st = solve_dual<double>(d, cfg);
         const double lp_value = to_double(lp.optimum);
         CHECK(st.stop_reason == "max_iters");
         CHECK_FALSE(st.agreement);
         CHECK(st.best_primal - st.best_dual > 0);
         CHECK(st.history.back().disagreements > 0);
         CHECK(lp_value - st.best_dual <= 1e-3 * (1 + std::abs(lp_value)));
         double last = -1e300;
         for (const auto& r : st.history) {
            CHECK(r.dual <= lp_value + 1e-9);
            CHECK(r.best_dual >= last);
            CHECK(r.best_dual <= r.best_primal);
            last = r.best_dual;
         }
         CHECK(feasibility_residual(d, st.u) < 1e-12);
      }
   }

   TEST_CASE("agreement certifies the assignment")
   {
      for (std::uint64_t seed = 0; seed < 5; ++seed) {
         auto cfg = support::protocol_config(seed, 4, 4);
         cfg.rejection = RejectionMode::any;
         cfg.potential = PotentialKind::submodular;
         const auto m = generate_ising(cfg).model;
         const auto d = grid_forests(m, 4, 4);
         const auto st = solve_dual<double>(d, DualSolverConfig{});
         REQUIRE(st.agreement);
         CHECK(energy(m, st.best_assignment) == doctest::Approx(st.best_dual).epsilon(1e-9));
         CHECK(exact_energy(m, st.best_assignment) == exact_brute_force_map(m).min_value);
      }
   }

   TEST_CASE("step rules")
   {
      const auto m = fractional_instance(4);
      const auto lp = solve_lp(m, LpOptions{.check_uniqueness = false});
      const auto d = grid_forests(m, 5, 5);
      const double lp_value = to_double(lp.optimum);
      for (auto kind : {StepRule::Kind::constant, StepRule::Kind::diminishing, StepRule::Kind::polyak}) {
         DualSolverConfig cfg;
         cfg.max_iters = 2000;
         cfg.step.kind = kind;
         cfg.step.constant = 0.01;
         const auto st = solve_dual<double>(d, cfg);
         CHECK(st.best_dual <= lp_value + 1e-9);
         CHECK(st.best_dual > st.history.front().dual);
         CHECK(st.history.front().step > 0);
      }
      DualSolverConfig stagnate;
      stagnate.max_iters = 100000;
      stagnate.step.kind = StepRule::Kind::constant;
      stagnate.step.constant = 1e-7;
      stagnate.stagnation_window = 50;
      stagnate.stagnation_epsilon = 1e-3;
      CHECK(solve_dual<double>(d, stagnate).stop_reason == "stagnation");
   }

   TEST_CASE("rational mode runs the same iteration exactly")
   {
      const auto m = fractional_instance(5, 3);
      const auto d = grid_forests(m, 3, 3);
      DualSolverConfig cfg;
      cfg.max_iters = 30;
      const auto exact = solve_dual<Rational>(d, cfg);
      CHECK(feasibility_residual(d, exact.u) == 0);
      CHECK(exact.best_dual <= solve_lp(m).optimum);
      const auto approx = solve_dual<double>(d, cfg);
      CHECK(approx.best_dual == doctest::Approx(to_double(exact.best_dual)).epsilon(1e-9));
   }

   TEST_CASE("invalid configurations")
   {
      DualSolverConfig cfg;
      cfg.step.kind = StepRule::Kind::constant;
      cfg.step.constant = 0;
      CHECK_THROWS_AS(cfg.validate(), Error);
      cfg.step.kind = StepRule::Kind::polyak;
      cfg.step.polyak_scale = 3;
      CHECK_THROWS_AS(cfg.validate(), Error);
      cfg = DualSolverConfig{};
      cfg.step.b = 0;
      CHECK_THROWS_AS(cfg.validate(), Error);
      cfg = DualSolverConfig{};
      cfg.gap_tolerance = -1;
      CHECK_THROWS_AS(cfg.validate(), Error);
      CHECK_THROWS_AS(step_kind_from_string("newton"), Error);
   }

   TEST_CASE("serial and parallel runs are bitwise identical")
   {
      const auto m = fractional_instance(6);
      const auto d = edge_decomposition(m);
      DualSolverConfig cfg;
      cfg.max_iters = 300;
      const auto serial = solve_dual<double>(d, cfg);
      cfg.workers = 4;
      const auto parallel = solve_dual<double>(d, cfg);
      CHECK(serial.u.u == parallel.u.u);
      CHECK(serial.best_dual == parallel.best_dual);
      std::ostringstream a, b;
      write_history_csv(a, serial.history);
      write_history_csv(b, parallel.history);
      CHECK(a.str() == b.str());
      CHECK(a.str().rfind("iter,dual,best_dual,primal,best_primal,step,disagreements\n", 0) == 0);
   }
}
