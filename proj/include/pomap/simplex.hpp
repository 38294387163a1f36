#pragma once

#include "pomap/rational.hpp"

#include <cstddef>
#include <vector>

namespace pomap {

// Sparse column-major constraint matrix for min cᵀx, Ax = b, x ≥ 0.
struct StandardFormLp {
   struct Entry {
      std::size_t row;
      Rational value;
   };
   std::size_t num_rows = 0;
   std::vector<std::vector<Entry>> columns;
   std::vector<Rational> rhs;
   std::vector<Rational> cost;

   std::size_t num_columns() const { return columns.size(); }
   std::size_t add_column(Rational c, std::vector<Entry> entries);
};

enum class LpStatus { optimal, infeasible, unbounded };

// Exact two-phase primal simplex on a dense tableau. Entering columns are chosen
// by Dantzig's rule; after a run of degenerate pivots the solver switches to
// Bland's rule (lowest index enters, lowest basic index leaves on ties) until the
// objective moves again, which rules out cycling.
class ExactSimplex {
public:
   explicit ExactSimplex(const StandardFormLp& lp);

   LpStatus solve();

   // Re-optimises a new objective from the current basis; columns with
   // allowed[j] == 0 may not enter. Requires a previous optimal solve.
   LpStatus reoptimize(const std::vector<Rational>& cost, const std::vector<char>& allowed);

   const std::vector<Rational>& solution() const { return x_; }
   // Row duals y with cᵀ - yᵀA = reduced costs (rows in the caller's orientation).
   const std::vector<Rational>& duals() const { return y_; }
   const std::vector<Rational>& reduced_costs() const { return d_; }
   const Rational& objective() const { return objective_; }
   const std::vector<std::size_t>& basis() const { return basis_; }
   std::size_t pivots() const { return pivots_; }

private:
   void pivot(std::size_t row, std::size_t col);
   LpStatus run(std::vector<Rational>& reduced, Rational& value, const std::vector<char>& enter_ok);
   void load_phase2_costs(const std::vector<Rational>& cost);
   void extract(const std::vector<Rational>& cost);

   std::size_t m_ = 0;
   std::size_t n_ = 0;   // structural columns; artificials follow
   std::vector<std::vector<Rational>> tableau_;
   std::vector<Rational> rhs_;
   std::vector<std::size_t> basis_;
   std::vector<int> row_sign_;
   std::vector<Rational> cost_;
   std::vector<Rational> reduced_;
   Rational value_;
   std::vector<Rational> x_, y_, d_;
   Rational objective_;
   std::size_t pivots_ = 0;
   bool solved_ = false;
};

} // namespace pomap
