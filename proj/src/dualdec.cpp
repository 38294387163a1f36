#include "pomap/dualdec.hpp"

#include <algorithm>
#include <iomanip>
#include <ostream>

namespace pomap {

Agreement check_agreement(const Decomposition& d, const std::vector<Assignment>& minimisers)
{
   if (minimisers.size() != d.size()) throw Error(ErrorCode::dimension_mismatch, "one minimiser per subproblem expected");
   Agreement result;
   for (std::size_t i = 0; i < d.num_nodes(); ++i) {
      const auto& slots = d.slots(i);
      for (std::size_t k = 1; k < slots.size(); ++k) {
         if (minimisers[slots[k].subproblem][slots[k].local] != minimisers[slots[0].subproblem][slots[0].local]) {
            result.disagreement_nodes.push_back(static_cast<int>(i));
            break;
         }
      }
   }
   result.agree = result.disagreement_nodes.empty();
   return result;
}

Assignment complete_assignment(const Decomposition& d, const std::vector<Assignment>& minimisers, std::size_t j)
{
   const std::size_t L = d.num_labels();
   Assignment x(d.num_nodes(), 0);
   std::vector<std::size_t> votes(L);
   for (std::size_t i = 0; i < d.num_nodes(); ++i) {
      std::fill(votes.begin(), votes.end(), 0);
      for (const auto& slot : d.slots(i)) ++votes[minimisers[slot.subproblem][slot.local]];
      x[i] = static_cast<Label>(std::max_element(votes.begin(), votes.end()) - votes.begin());
   }
   const auto& nodes = d.subgraphs().at(j).nodes;
   for (std::size_t k = 0; k < nodes.size(); ++k) x[nodes[k]] = minimisers[j][k];
   return x;
}

void DualSolverConfig::validate() const
{
   if (step.kind == StepRule::Kind::constant && !(step.constant > 0))
      throw Error(ErrorCode::invalid_argument, "constant step must be positive");
   if (step.kind == StepRule::Kind::diminishing && !(step.b > 0))
      throw Error(ErrorCode::invalid_argument, "diminishing step needs b > 0");
   if (step.kind == StepRule::Kind::polyak && !(step.polyak_scale > 0 && step.polyak_scale <= 2))
      throw Error(ErrorCode::invalid_argument, "Polyak scale must lie in (0, 2]");
   if (gap_tolerance < 0) throw Error(ErrorCode::invalid_argument, "gap tolerance must be non-negative");
}

const char* to_string(StepRule::Kind kind)
{
   switch (kind) {
      case StepRule::Kind::constant: return "constant";
      case StepRule::Kind::diminishing: return "diminishing";
      case StepRule::Kind::polyak: return "polyak";
   }
   return "unknown";
}

StepRule::Kind step_kind_from_string(const std::string& name)
{
   if (name == "constant") return StepRule::Kind::constant;
   if (name == "diminishing") return StepRule::Kind::diminishing;
   if (name == "polyak") return StepRule::Kind::polyak;
   throw Error(ErrorCode::invalid_argument, "unknown step rule '" + name + "'");
}

void write_history_csv(std::ostream& out, const std::vector<IterationRecord>& history)
{
   out << "iter,dual,best_dual,primal,best_primal,step,disagreements\n";
   out << std::setprecision(17);
   for (const auto& r : history)
      out << r.iter << ',' << r.dual << ',' << r.best_dual << ',' << r.primal << ',' << r.best_primal << ',' << r.step << ','
          << r.disagreements << '\n';
}

} // namespace pomap
