#include "pomap/persist.hpp"

#include <algorithm>
#include <cmath>

namespace pomap {

const char* to_string(CheckResult r)
{
   switch (r) {
      case CheckResult::pass: return "pass";
      case CheckResult::fail: return "fail";
      case CheckResult::not_applicable: return "not-applicable";
   }
   return "unknown";
}

namespace {

// tol · (1 + |reference|); zero stays zero so exact checks stay exact.
template <class Scalar>
Scalar scaled(const Scalar& tol, const Scalar& reference)
{
   if (tol == Scalar(0)) return Scalar(0);
   const Scalar mag = reference < Scalar(0) ? Scalar(-reference) : reference;
   return Scalar(tol * (Scalar(1) + mag));
}

std::vector<char> membership(std::size_t n, const std::vector<int>& set)
{
   std::vector<char> in(n, 0);
   for (int i : set) in.at(i) = 1;
   return in;
}

// The label carried by an integral node.
Label integral_label(const ExactMarginals& mu, std::size_t i)
{
   for (std::size_t s = 0; s < mu.num_labels; ++s)
      if (mu.node(i, static_cast<Label>(s)) == 1) return static_cast<Label>(s);
   return -1;
}

} // namespace

CertifiedDual certified_dual(const Decomposition& d, const LpSolution& sol)
{
   const Graph& graph = d.model_graph();
   const std::size_t L = d.num_labels();
   const LocalPolytopeIndex idx{graph.num_nodes, graph.edges.size(), L};
   const ExactMarginals& mu = sol.mu_star;
   if (mu.num_nodes() != idx.num_nodes || mu.num_edges() != idx.num_edges || mu.num_labels != L)
      throw Error(ErrorCode::dimension_mismatch, "LP solution does not match the decomposed model");
   const StandardFormLp lp = local_polytope_lp(graph, d.model_costs<Rational>());
   const std::size_t n_cols = lp.num_columns();

   std::vector<char> support(n_cols, 0);
   for (std::size_t i = 0; i < idx.num_nodes; ++i)
      for (std::size_t s = 0; s < L; ++s) support[idx.node_var(i, s)] = sgn(mu.node(i, static_cast<Label>(s))) > 0;
   for (std::size_t e = 0; e < idx.num_edges; ++e)
      for (std::size_t s = 0; s < L; ++s)
         for (std::size_t t = 0; t < L; ++t)
            support[idx.edge_var(e, s, t)] = sgn(mu.edge(e, static_cast<Label>(s), static_cast<Label>(t))) > 0;

   // Lowering the cost of every column outside the support by ε keeps μ* optimal
   // for small enough ε exactly when μ* is the unique optimum; the duals of the
   // perturbed problem then have reduced cost ≥ ε off the support. ε is halved
   // until μ* survives. Otherwise (or when μ* is not unique) the plain optimal
   // basis duals are used.
   ExactSimplex simplex(lp);
   if (simplex.solve() != LpStatus::optimal || simplex.objective() != sol.optimum)
      throw Error(ErrorCode::internal, "LP re-solve does not reproduce the optimum");
   std::vector<Rational> y = simplex.duals();
   if (sol.is_unique.value_or(true)) {
      const std::vector<char> allowed(n_cols, 1);
      Rational eps(1);
      for (int attempt = 0; attempt < 40; ++attempt, eps /= 2) {
         std::vector<Rational> cost = lp.cost;
         for (std::size_t k = 0; k < n_cols; ++k)
            if (!support[k]) cost[k] -= eps;
         if (simplex.reoptimize(cost, allowed) != LpStatus::optimal)
            throw Error(ErrorCode::internal, "perturbed LP has no optimum");
         if (simplex.objective() == sol.optimum) {
            y = simplex.duals();
            break;
         }
      }
   }
   std::vector<Rational> reduced = lp.cost;
   for (std::size_t k = 0; k < n_cols; ++k)
      for (const auto& entry : lp.columns[k]) reduced[k] -= entry.value * y[entry.row];
   std::optional<Rational> margin;
   for (std::size_t k = 0; k < n_cols; ++k) {
      if (support[k] ? reduced[k] != 0 : reduced[k] < 0)
         throw Error(ErrorCode::internal, "dual is not complementary to the LP solution");
      if (!support[k] && (!margin || reduced[k] < *margin)) margin = reduced[k];
   }

   // λ_{e→i}(s): dual of the marginalisation row of edge e towards endpoint i.
   // S_i(s) = Σ_{e∋i} λ_{e→i}(s) is split evenly over the trees holding i, and each
   // tree takes back the shares of its own edges.
   const auto& node_count = d.node_cover_count();
   const auto& edge_count = d.edge_cover_count();
   std::vector<Rational> incident(idx.num_nodes * L, Rational(0));
   for (std::size_t e = 0; e < idx.num_edges; ++e)
      for (std::size_t s = 0; s < L; ++s) {
         incident[graph.edges[e].i * L + s] += y[idx.row_to_first(e, s)];
         incident[graph.edges[e].j * L + s] += y[idx.row_to_second(e, s)];
      }

   CertifiedDual result;
   result.u = zero_duals<Rational>(d);
   for (std::size_t j = 0; j < d.size(); ++j) {
      const Subgraph& sg = d.subgraphs()[j];
      auto& block = result.u.u[j];
      std::vector<int> local(idx.num_nodes, -1);
      for (std::size_t k = 0; k < sg.nodes.size(); ++k) {
         const int i = sg.nodes[k];
         local[i] = static_cast<int>(k);
         const Rational c(static_cast<long>(node_count[i]));
         for (std::size_t s = 0; s < L; ++s) block[k * L + s] = incident[i * L + s] / c;
      }
      for (std::size_t e : sg.edges) {
         const Rational c(static_cast<long>(edge_count[e]));
         for (std::size_t s = 0; s < L; ++s) {
            block[local[graph.edges[e].i] * L + s] -= y[idx.row_to_first(e, s)] / c;
            block[local[graph.edges[e].j] * L + s] -= y[idx.row_to_second(e, s)] / c;
         }
      }
   }
   result.value = dual_value(d, result.u).value;
   result.margin = margin.value_or(Rational(0));
   if (result.value != sol.optimum)
      throw Error(ErrorCode::internal,
                  "dual certificate " + to_string(result.value) + " differs from LP optimum " + to_string(sol.optimum));
   return result;
}

template <class Scalar>
TreeLabelSets tree_label_sets(const Decomposition& d, const DualVariables<Scalar>& u, const Scalar& tol)
{
   TreeLabelSets sets(d.size());
   for (std::size_t j = 0; j < d.size(); ++j) {
      const auto p = reparametrized(d, j, u);
      const auto opt = map_on_tree(p, d.layout(j));
      sets[j] = optimal_label_sets(p, d.layout(j), scaled(tol, opt.value));
   }
   return sets;
}

UnambiguousSet unambiguous_set(const Decomposition& d, const TreeLabelSets& sets)
{
   if (sets.size() != d.size()) throw Error(ErrorCode::dimension_mismatch, "one label-set list per subproblem expected");
   UnambiguousSet result;
   result.labels.assign(d.num_nodes(), -1);
   for (std::size_t i = 0; i < d.num_nodes(); ++i) {
      Label common = -1;
      bool ok = true;
      for (const auto& slot : d.slots(i)) {
         const auto& s = sets[slot.subproblem].at(slot.local);
         if (s.size() != 1 || (common >= 0 && s[0] != common)) {
            ok = false;
            break;
         }
         common = s[0];
      }
      if (ok && common >= 0) {
         result.unambiguous.push_back(static_cast<int>(i));
         result.labels[i] = common;
      } else {
         result.disagreement.push_back(static_cast<int>(i));
      }
   }
   return result;
}

template <class Scalar>
Theorem1Result verify_theorem1(const Decomposition& d, const DualVariables<Scalar>& u, const LpSolution& sol, const Scalar& tol)
{
   const std::size_t L = d.num_labels();
   const ExactMarginals& mu = sol.mu_star;
   const auto integral = membership(d.num_nodes(), sol.integral_set);
   Theorem1Result result;
   result.witnesses.resize(d.size());
   result.has_witness.assign(d.size(), 0);
   for (std::size_t j = 0; j < d.size(); ++j) {
      const auto p = reparametrized(d, j, u);
      const auto& layout = d.layout(j);
      const Scalar best = map_on_tree(p, layout).value;
      const Scalar slack = scaled(tol, best);

      LabelMask fixed;
      fixed.node_allowed.assign(p.size() * L, 1);
      LabelMask support;
      support.node_allowed.assign(p.size() * L, 1);
      support.edge_allowed.assign(p.graph.edges.size() * L * L, 1);
      for (std::size_t k = 0; k < p.size(); ++k) {
         const int i = p.nodes[k];
         for (std::size_t s = 0; s < L; ++s) {
            const bool positive = sgn(mu.node(i, static_cast<Label>(s))) > 0;
            if (integral[i]) fixed.node_allowed[k * L + s] = positive;
            support.node_allowed[k * L + s] = positive;
         }
      }
      for (std::size_t q = 0; q < p.graph.edges.size(); ++q) {
         const std::size_t e = p.model_edges[q];
         for (std::size_t s = 0; s < L; ++s)
            for (std::size_t t = 0; t < L; ++t)
               support.edge_allowed[(q * L + s) * L + t] = sgn(mu.edge(e, static_cast<Label>(s), static_cast<Label>(t))) > 0;
      }

      const auto constrained = detail::masked_map(p, layout, fixed);
      if (!constrained || constrained->value > best + slack) result.failing_trees.push_back(j);
      const auto witness = detail::masked_map(p, layout, support);
      if (witness && !(witness->value > best + slack)) {
         result.witnesses[j] = witness->labels;
         result.has_witness[j] = 1;
      }
   }
   result.result = result.failing_trees.empty() ? CheckResult::pass : CheckResult::fail;
   return result;
}

Theorem2Result verify_theorem2(const Decomposition& d, const TreeLabelSets& sets, const LpSolution& sol)
{
   Theorem2Result result;
   if (!sol.is_unique.value_or(false)) return result;
   for (int i : sol.integral_set) {
      const Label x = integral_label(sol.mu_star, i);
      for (const auto& slot : d.slots(i)) {
         const auto& s = sets.at(slot.subproblem).at(slot.local);
         if (s.size() != 1 || s[0] != x) result.violations.emplace_back(slot.subproblem, i);
      }
   }
   std::sort(result.violations.begin(), result.violations.end());
   result.result = result.violations.empty() ? CheckResult::pass : CheckResult::fail;
   return result;
}

CheckResult verify_theorem3(const Decomposition& d, const UnambiguousSet& a, const LpSolution& sol)
{
   if (!sol.is_unique.value_or(false) || d.num_labels() != 2) return CheckResult::not_applicable;
   return a.unambiguous == sol.integral_set ? CheckResult::pass : CheckResult::fail;
}

template <class Scalar>
ComplementResult complement_assignment(const Decomposition& d, std::size_t j, const DualVariables<Scalar>& u,
                                       const LpSolution& sol, const Assignment& mu_bar, const Scalar& tol)
{
   const std::size_t L = d.num_labels();
   const ExactMarginals& mu = sol.mu_star;
   const auto& p = d.subproblem<Rational>(j);
   ComplementResult result;
   if (L != 2) {
      result.detail = "complement construction needs binary labels";
      return result;
   }
   if (mu_bar.size() != p.size()) throw Error(ErrorCode::dimension_mismatch, "witness does not match subproblem");
   const auto integral = membership(d.num_nodes(), sol.integral_set);
   const auto bar = to_overcomplete<Rational>(p.graph, L, mu_bar);
   const Rational half(1, 2);

   result.mu_hat = ExactMarginals(p.size(), p.graph.edges.size(), L);
   bool defined = true;
   for (std::size_t k = 0; k < p.size(); ++k) {
      const int i = p.nodes[k];
      for (Label s = 0; s < 2; ++s)
         result.mu_hat.node(k, s) = integral[i] ? mu.node(i, s) : Rational(1 - bar.node(k, s));
   }
   for (std::size_t q = 0; q < p.graph.edges.size(); ++q) {
      const std::size_t e = p.model_edges[q];
      for (Label s = 0; s < 2; ++s)
         for (Label t = 0; t < 2; ++t) {
            const Rational& v = mu.edge(e, s, t);
            if (v == 0 || v == 1) {
               result.mu_hat.edge(q, s, t) = v;
            } else if (v == half) {
               result.mu_hat.edge(q, s, t) = 1 - bar.edge(q, s, t);
            } else {
               defined = false;
               result.detail = "edge " + std::to_string(e) + " has entry " + to_string(v);
            }
         }
   }
   if (!defined) return result;

   const auto validity = validate_marginals(p.graph, result.mu_hat, MarginalMode::integral, 0.0);
   result.feasible = validity.valid();
   if (!result.feasible) {
      const auto& v = validity.violations.front();
      result.detail = std::string(to_string(v.kind)) + " violated at " + v.location;
   }

   result.average_ok = true;
   for (std::size_t k = 0; k < p.size() && result.average_ok; ++k)
      for (Label s = 0; s < 2; ++s)
         if ((bar.node(k, s) + result.mu_hat.node(k, s)) * half != mu.node(p.nodes[k], s)) result.average_ok = false;
   for (std::size_t q = 0; q < p.graph.edges.size() && result.average_ok; ++q)
      for (Label s = 0; s < 2; ++s)
         for (Label t = 0; t < 2; ++t)
            if ((bar.edge(q, s, t) + result.mu_hat.edge(q, s, t)) * half != mu.edge(p.model_edges[q], s, t))
               result.average_ok = false;
   if (!result.average_ok && result.detail.empty()) result.detail = "average differs from the LP solution";

   if (result.feasible) {
      result.labels.assign(p.size(), 0);
      for (std::size_t k = 0; k < p.size(); ++k) result.labels[k] = result.mu_hat.node(k, 1) == 1 ? 1 : 0;
      const auto rp = reparametrized(d, j, u);
      const Scalar best = map_on_tree(rp, d.layout(j)).value;
      const Scalar value = evaluate(rp.graph, rp.costs, result.labels);
      result.optimal = !(value > best + scaled(tol, best));
      if (!result.optimal && result.detail.empty()) result.detail = "complement is not a tree minimiser";
   }
   return result;
}

StrongPersistencyResult strong_persistency_check(const std::vector<Assignment>& optima, const ExactMarginals& mu,
                                                 const std::vector<int>& integral)
{
   StrongPersistencyResult result;
   result.optima = optima.size();
   for (std::size_t k = 0; k < optima.size(); ++k) {
      for (int i : integral) {
         if (mu.node(i, optima[k].at(i)) != 1) {
            result.violating.push_back(k);
            break;
         }
      }
   }
   result.result = result.violating.empty() ? CheckResult::pass : CheckResult::fail;
   return result;
}

StrongPersistencyResult strong_persistency_check(const MrfModel& model, const LpSolution& sol, std::uint64_t cap,
                                                 std::size_t workers)
{
   if (model.num_labels() != 2) return {};
   BruteForceResult<Rational> oracle;
   try {
      oracle = exact_brute_force_map(model, cap, workers);
   } catch (const Error& e) {
      if (e.code() == ErrorCode::cap_exceeded) return {};
      throw;
   }
   return strong_persistency_check(oracle.optima, sol.mu_star, sol.integral_set);
}

bool dual_converged(const DualState<double>& state, const LpSolution& sol, double tol)
{
   return std::abs(state.best_dual - to_double(sol.optimum)) <= tol;
}

bool PersistencyReport::all_pass() const
{
   for (CheckResult r : {theorem1, theorem2, theorem3, lemma_c1, strong_persistency})
      if (r == CheckResult::fail) return false;
   return true;
}

namespace {

template <class Scalar>
void run_tree_checks(PersistencyReport& report, const Decomposition& d, const LpSolution& sol, const DualVariables<Scalar>& u,
                     const Scalar& tol)
{
   const auto sets = tree_label_sets(d, u, tol);
   const auto a = unambiguous_set(d, sets);
   report.unambiguous = a.unambiguous;
   report.disagreement = a.disagreement;
   report.theorem1_detail = verify_theorem1(d, u, sol, tol);
   report.theorem1 = report.theorem1_detail.result;
   report.theorem2_detail = verify_theorem2(d, sets, sol);
   report.theorem2 = report.theorem2_detail.result;
   report.theorem3 = verify_theorem3(d, a, sol);
   if (d.num_labels() != 2) return;
   report.lemma_c1 = CheckResult::pass;
   for (std::size_t j = 0; j < d.size(); ++j) {
      if (!report.theorem1_detail.has_witness[j]) {
         report.lemma_c1 = CheckResult::fail;
         ComplementResult missing;
         missing.detail = "no minimiser agrees with the integral entries of the LP solution";
         report.complements.push_back(std::move(missing));
         continue;
      }
      report.complements.push_back(complement_assignment(d, j, u, sol, report.theorem1_detail.witnesses[j], tol));
      if (!report.complements.back().ok()) report.lemma_c1 = CheckResult::fail;
   }
}

PersistencyReport base_report(const MrfModel& model, const LpSolution& sol, const PersistencyOptions& options)
{
   PersistencyReport report;
   report.integral = sol.integral_set;
   report.fractional = sol.fractional_set;
   if (options.oracle) {
      report.strong_detail = strong_persistency_check(model, sol, options.oracle_cap, options.workers);
      report.strong_persistency = report.strong_detail.result;
   }
   return report;
}

} // namespace

PersistencyReport analyze_persistency(const MrfModel& model, const Decomposition& d, const LpSolution& sol,
                                      const PersistencyOptions& options)
{
   PersistencyReport report = base_report(model, sol, options);
   const auto cert = certified_dual(d, sol);
   report.dual_source = "lp-certificate";
   report.dual_value = cert.value;
   report.dual_margin = cert.margin;
   run_tree_checks(report, d, sol, cert.u, Rational(0));
   return report;
}

PersistencyReport analyze_persistency(const MrfModel& model, const Decomposition& d, const LpSolution& sol,
                                      const DualState<double>& state, const PersistencyOptions& options)
{
   PersistencyReport report = base_report(model, sol, options);
   const double tol = 1e-9;
   if (!dual_converged(state, sol, tol)) {
      report.dual_source = "none";
      const auto a = unambiguous_set(d, state.best_u, tol);
      report.unambiguous = a.unambiguous;
      report.disagreement = a.disagreement;
      return report;
   }
   report.dual_source = "subgradient";
   report.dual_value = decimal_rational(state.best_dual);
   run_tree_checks(report, d, sol, state.best_u, tol);
   return report;
}

nlohmann::json report_to_json(const Decomposition& d, const PersistencyReport& report)
{
   using nlohmann::json;
   json doc;
   doc["integral_set"] = report.integral;
   doc["fractional_set"] = report.fractional;
   doc["unambiguous_set"] = report.unambiguous;
   doc["disagreement_set"] = report.disagreement;
   doc["dual_source"] = report.dual_source;
   doc["dual_value"] = report.dual_value ? json(to_string(*report.dual_value)) : json(nullptr);
   doc["dual_margin"] = report.dual_margin ? json(to_string(*report.dual_margin)) : json(nullptr);
   doc["checks"] = {{"theorem1", to_string(report.theorem1)},
                    {"theorem2", to_string(report.theorem2)},
                    {"theorem3", to_string(report.theorem3)},
                    {"lemma_c1", to_string(report.lemma_c1)},
                    {"strong_persistency", to_string(report.strong_persistency)}};

   json witnesses = json::array();
   const auto& t1 = report.theorem1_detail;
   for (std::size_t j = 0; j < t1.witnesses.size(); ++j) {
      if (!t1.has_witness[j]) continue;
      witnesses.push_back({{"tree", j}, {"nodes", d.subgraphs()[j].nodes}, {"labels", t1.witnesses[j]}});
   }
   json t2 = json::array();
   for (const auto& [tree, node] : report.theorem2_detail.violations) t2.push_back({{"tree", tree}, {"node", node}});
   json c1 = json::array();
   for (std::size_t j = 0; j < report.complements.size(); ++j) {
      const auto& c = report.complements[j];
      json entry = {{"tree", j}, {"feasible", c.feasible}, {"optimal", c.optimal}, {"average", c.average_ok}};
      if (c.feasible) entry["labels"] = c.labels;
      if (!c.detail.empty()) entry["detail"] = c.detail;
      c1.push_back(std::move(entry));
   }
   doc["witnesses"] = {{"theorem1", {{"failing_trees", t1.failing_trees}, {"minimisers", witnesses}}},
                       {"theorem2", {{"violations", t2}}},
                       {"lemma_c1", c1},
                       {"strong_persistency",
                        {{"optima", report.strong_detail.optima}, {"violating", report.strong_detail.violating}}}};
   return doc;
}

template TreeLabelSets tree_label_sets(const Decomposition&, const DualVariables<double>&, const double&);
template TreeLabelSets tree_label_sets(const Decomposition&, const DualVariables<Rational>&, const Rational&);
template Theorem1Result verify_theorem1(const Decomposition&, const DualVariables<double>&, const LpSolution&, const double&);
template Theorem1Result verify_theorem1(const Decomposition&, const DualVariables<Rational>&, const LpSolution&,
                                        const Rational&);
template ComplementResult complement_assignment(const Decomposition&, std::size_t, const DualVariables<double>&,
                                                const LpSolution&, const Assignment&, const double&);
template ComplementResult complement_assignment(const Decomposition&, std::size_t, const DualVariables<Rational>&,
                                                const LpSolution&, const Assignment&, const Rational&);

} // namespace pomap
