#pragma once

#include "pomap/decomp.hpp"
#include "pomap/parallel.hpp"
#include "pomap/treesolve.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace pomap {

// u[j][k·L + s] = uʲ_i(s) for the k-th node i of subproblem j. Edge coordinates
// of the dual are implicitly zero.
template <class Scalar>
struct DualVariables {
   std::vector<std::vector<Scalar>> u;
};

template <class Scalar>
DualVariables<Scalar> zero_duals(const Decomposition& d)
{
   DualVariables<Scalar> duals;
   for (std::size_t j = 0; j < d.size(); ++j) duals.u.emplace_back(d.subgraphs()[j].nodes.size() * d.num_labels(), Scalar(0));
   return duals;
}

// max over (i, s) of |Σ_j uʲ_i(s)|; zero iff u lies in the feasible dual set.
template <class Scalar>
Scalar feasibility_residual(const Decomposition& d, const DualVariables<Scalar>& duals)
{
   Scalar worst(0);
   const std::size_t L = d.num_labels();
   for (std::size_t i = 0; i < d.num_nodes(); ++i)
      for (std::size_t s = 0; s < L; ++s) {
         Scalar sum(0);
         for (const auto& slot : d.slots(i)) sum += duals.u[slot.subproblem][slot.local * L + s];
         if (sum < Scalar(0)) sum = -sum;
         if (sum > worst) worst = sum;
      }
   return worst;
}

// θʲ + uʲ.
template <class Scalar>
SubProblem<Scalar> reparametrized(const Decomposition& d, std::size_t j, const DualVariables<Scalar>& duals)
{
   SubProblem<Scalar> p = d.subproblem<Scalar>(j);
   const auto& u = duals.u.at(j);
   if (u.size() != p.costs.unary.size()) throw Error(ErrorCode::dimension_mismatch, "dual block does not match subproblem");
   for (std::size_t k = 0; k < u.size(); ++k) p.costs.unary[k] += u[k];
   return p;
}

template <class Scalar>
struct DualEvaluation {
   Scalar value;
   std::vector<Scalar> tree_values;
   std::vector<Assignment> minimisers;   // local to each subproblem
};

// g(u) = Σ_j min over subproblem j of ⟨θʲ + uʲ, μʲ⟩. Subproblems are solved
// independently; the sum is taken in subproblem order.
template <class Scalar>
DualEvaluation<Scalar> dual_value(const Decomposition& d, const DualVariables<Scalar>& duals, std::size_t workers = 1)
{
   DualEvaluation<Scalar> eval;
   eval.tree_values.assign(d.size(), Scalar(0));
   eval.minimisers.assign(d.size(), {});
   parallel_for(d.size(), workers, [&](std::size_t j) {
      const auto p = reparametrized(d, j, duals);
      auto opt = map_on_tree(p, d.layout(j));
      eval.tree_values[j] = opt.value;
      eval.minimisers[j] = std::move(opt.labels);
   });
   eval.value = Scalar(0);
   for (const auto& v : eval.tree_values) eval.value += v;
   return eval;
}

struct Agreement {
   bool agree = true;
   std::vector<int> disagreement_nodes;
};

// Nodes whose label differs between at least two subproblems containing them.
Agreement check_agreement(const Decomposition& d, const std::vector<Assignment>& minimisers);

// Global assignment from subproblem j's minimiser; nodes outside subproblem j take
// the per-node majority label across subproblems (ties to the lowest label).
Assignment complete_assignment(const Decomposition& d, const std::vector<Assignment>& minimisers, std::size_t j);

template <class Scalar>
struct PrimalCandidate {
   Scalar energy;
   Assignment labels;
   std::size_t source = 0;
};

// Best model energy among the completed minimisers (first one wins ties).
template <class Scalar>
PrimalCandidate<Scalar> primal_heuristic(const Decomposition& d, const std::vector<Assignment>& minimisers)
{
   if (minimisers.size() != d.size()) throw Error(ErrorCode::dimension_mismatch, "one minimiser per subproblem expected");
   PrimalCandidate<Scalar> best;
   for (std::size_t j = 0; j < d.size(); ++j) {
      Assignment x = complete_assignment(d, minimisers, j);
      Scalar value = evaluate(d.model_graph(), d.model_costs<Scalar>(), x);
      if (j == 0 || value < best.energy) best = {std::move(value), std::move(x), j};
   }
   return best;
}

// Projected subgradient ascent step: uʲ_i(s) += step · (μ̄ʲ_i(s) - ν̄_i(s)), with ν̄
// the average indicator over the subproblems containing i. The increments sum to
// zero at every node, so u stays feasible. Returns the squared subgradient norm.
template <class Scalar>
Scalar subgradient_step(const Decomposition& d, DualVariables<Scalar>& duals, const std::vector<Assignment>& minimisers,
                        const Scalar& step)
{
   if (!(step > Scalar(0))) throw Error(ErrorCode::invalid_argument, "step must be positive");
   const std::size_t L = d.num_labels();
   Scalar norm(0);
   std::vector<Scalar> avg(L);
   for (std::size_t i = 0; i < d.num_nodes(); ++i) {
      const auto& slots = d.slots(i);
      if (slots.size() < 2) continue;
      std::fill(avg.begin(), avg.end(), Scalar(0));
      for (const auto& slot : slots) avg[minimisers[slot.subproblem][slot.local]] += Scalar(1);
      const Scalar count(static_cast<long>(slots.size()));
      for (auto& a : avg) a /= count;
      for (const auto& slot : slots) {
         const Label chosen = minimisers[slot.subproblem][slot.local];
         for (std::size_t s = 0; s < L; ++s) {
            const Scalar g = (static_cast<Label>(s) == chosen ? Scalar(1) : Scalar(0)) - avg[s];
            if (g == Scalar(0)) continue;
            duals.u[slot.subproblem][slot.local * L + s] += step * g;
            norm += g * g;
         }
      }
   }
   return norm;
}

template <class Scalar>
void subgradient_step(const Decomposition& d, DualVariables<Scalar>& duals, const Scalar& step, std::size_t workers = 1)
{
   const auto eval = dual_value(d, duals, workers);
   subgradient_step(d, duals, eval.minimisers, step);
}

struct StepRule {
   enum class Kind { constant, diminishing, polyak };
   Kind kind = Kind::diminishing;
   double constant = 0.1;
   // a / (b + t); a <= 0 means "use the gap at the first iteration".
   double a = 0.0;
   double b = 10.0;
   // Polyak: scale · (best_primal - g) / |subgradient|².
   double polyak_scale = 1.0;
};

struct DualSolverConfig {
   std::size_t max_iters = 1000;
   StepRule step;
   double gap_tolerance = 1e-9;
   // Stop when best_dual has not improved by more than stagnation_epsilon for this
   // many iterations; zero disables the test.
   std::size_t stagnation_window = 0;
   double stagnation_epsilon = 1e-12;
   std::size_t workers = 1;

   void validate() const;
};

const char* to_string(StepRule::Kind kind);
StepRule::Kind step_kind_from_string(const std::string& name);

struct IterationRecord {
   std::size_t iter;
   double dual;
   double best_dual;
   double primal;
   double best_primal;
   double step;
   std::size_t disagreements;
};

template <class Scalar>
struct DualState {
   DualVariables<Scalar> u;
   DualVariables<Scalar> best_u;
   std::size_t iteration = 0;
   Scalar best_dual;
   Scalar best_primal;
   Assignment best_assignment;
   std::vector<Assignment> minimisers;   // at the final iterate
   bool agreement = false;
   std::string stop_reason;
   std::vector<IterationRecord> history;
};

// Subgradient ascent on g over the feasible dual set, starting from u = 0 and
// keeping the running best dual value and best primal assignment.
template <class Scalar>
DualState<Scalar> solve_dual(const Decomposition& d, const DualSolverConfig& cfg)
{
   cfg.validate();
   using T = ScalarTraits<Scalar>;
   DualState<Scalar> state;
   state.u = zero_duals<Scalar>(d);
   Scalar a(0);
   Scalar best_before(0);
   std::size_t since_improvement = 0;
   for (std::size_t t = 0;; ++t) {
      const auto eval = dual_value(d, state.u, cfg.workers);
      const auto primal = primal_heuristic<Scalar>(d, eval.minimisers);
      const auto agreement = check_agreement(d, eval.minimisers);
      if (t == 0 || eval.value > state.best_dual) {
         state.best_dual = eval.value;
         state.best_u = state.u;
      }
      if (t == 0 || primal.energy < state.best_primal) {
         state.best_primal = primal.energy;
         state.best_assignment = primal.labels;
      }
      state.iteration = t;
      state.minimisers = eval.minimisers;
      IterationRecord rec{t,
                          to_double(eval.value),
                          to_double(state.best_dual),
                          to_double(primal.energy),
                          to_double(state.best_primal),
                          0.0,
                          agreement.disagreement_nodes.size()};
      auto finish = [&](const char* reason) {
         state.stop_reason = reason;
         state.history.push_back(rec);
         return state;
      };
      if (agreement.agree) {
         state.agreement = true;
         return finish("agreement");
      }
      if (to_double(Scalar(state.best_primal - state.best_dual)) <= cfg.gap_tolerance) return finish("gap");
      if (cfg.stagnation_window > 0) {
         if (t == 0 || to_double(Scalar(state.best_dual - best_before)) > cfg.stagnation_epsilon) {
            best_before = state.best_dual;
            since_improvement = 0;
         } else if (++since_improvement >= cfg.stagnation_window) {
            return finish("stagnation");
         }
      }
      if (t >= cfg.max_iters) return finish("max_iters");

      Scalar step(0);
      switch (cfg.step.kind) {
         case StepRule::Kind::constant:
            step = T::from_double(cfg.step.constant);
            break;
         case StepRule::Kind::diminishing: {
            if (t == 0) {
               a = cfg.step.a > 0 ? T::from_double(cfg.step.a) : Scalar(state.best_primal - eval.value);
               if (!(a > Scalar(0))) a = Scalar(1);
            }
            step = a / (T::from_double(cfg.step.b) + Scalar(static_cast<long>(t)));
            break;
         }
         case StepRule::Kind::polyak: {
            // Squared norm of μ̄ - ν̄ without touching u.
            DualVariables<Scalar> probe = zero_duals<Scalar>(d);
            const Scalar norm = subgradient_step(d, probe, eval.minimisers, Scalar(1));
            if (norm == Scalar(0)) return finish("zero_subgradient");
            step = T::from_double(cfg.step.polyak_scale) * (state.best_primal - eval.value) / norm;
            if (!(step > Scalar(0))) return finish("gap");
            break;
         }
      }
      rec.step = to_double(step);
      state.history.push_back(rec);
      subgradient_step(d, state.u, eval.minimisers, step);
   }
}

// CSV with header iter,dual,best_dual,primal,best_primal,step,disagreements.
void write_history_csv(std::ostream& out, const std::vector<IterationRecord>& history);

} // namespace pomap
