#include "pomap/simplex.hpp"
#include "pomap/error.hpp"

namespace pomap {

namespace {
constexpr std::size_t degenerate_streak_limit = 30;
}

std::size_t StandardFormLp::add_column(Rational c, std::vector<Entry> entries)
{
   for (const auto& e : entries)
      if (e.row >= num_rows) throw Error(ErrorCode::internal, "column entry outside the constraint rows");
   cost.push_back(std::move(c));
   columns.push_back(std::move(entries));
   return columns.size() - 1;
}

ExactSimplex::ExactSimplex(const StandardFormLp& lp) : m_(lp.num_rows), n_(lp.num_columns())
{
   if (lp.rhs.size() != m_ || lp.cost.size() != n_) throw Error(ErrorCode::internal, "inconsistent LP dimensions");
   tableau_.assign(m_, std::vector<Rational>(n_ + m_));
   rhs_.resize(m_);
   row_sign_.assign(m_, 1);
   for (std::size_t i = 0; i < m_; ++i) {
      if (lp.rhs[i] < 0) row_sign_[i] = -1;
      rhs_[i] = lp.rhs[i] * row_sign_[i];
      tableau_[i][n_ + i] = 1;
   }
   for (std::size_t j = 0; j < n_; ++j)
      for (const auto& e : lp.columns[j]) tableau_[e.row][j] += e.value * row_sign_[e.row];
   basis_.resize(m_);
   for (std::size_t i = 0; i < m_; ++i) basis_[i] = n_ + i;
   cost_ = lp.cost;
}

void ExactSimplex::pivot(std::size_t row, std::size_t col)
{
   ++pivots_;
   auto& prow = tableau_[row];
   const Rational inv = 1 / prow[col];
   std::vector<std::size_t> nz;
   for (std::size_t k = 0; k < prow.size(); ++k) {
      if (sgn(prow[k]) == 0) continue;
      prow[k] *= inv;
      nz.push_back(k);
   }
   rhs_[row] *= inv;
   Rational f;
   for (std::size_t i = 0; i < m_; ++i) {
      if (i == row || sgn(tableau_[i][col]) == 0) continue;
      f = tableau_[i][col];
      auto& r = tableau_[i];
      for (std::size_t k : nz) r[k] -= f * prow[k];
      rhs_[i] -= f * rhs_[row];
   }
   if (sgn(reduced_[col]) != 0) {
      f = reduced_[col];
      for (std::size_t k : nz) reduced_[k] -= f * prow[k];
      value_ += f * rhs_[row];
   }
   basis_[row] = col;
}

// Minimises with `reduced` holding the current reduced-cost row and `value` the
// objective at the current basis; both are updated in place by pivot().
LpStatus ExactSimplex::run(std::vector<Rational>& reduced, Rational& value, const std::vector<char>& enter_ok)
{
   reduced_.swap(reduced);
   value_.swap(value);
   std::size_t degenerate = 0;
   LpStatus status = LpStatus::optimal;
   Rational best_ratio, ratio;
   while (true) {
      const bool bland = degenerate >= degenerate_streak_limit;
      std::size_t enter = reduced_.size();
      for (std::size_t j = 0; j < reduced_.size(); ++j) {
         if (!enter_ok[j] || sgn(reduced_[j]) >= 0) continue;
         if (enter == reduced_.size()) {
            enter = j;
            if (bland) break;
         } else if (reduced_[j] < reduced_[enter]) {
            enter = j;
         }
      }
      if (enter == reduced_.size()) break;
      std::size_t leave = m_;
      for (std::size_t i = 0; i < m_; ++i) {
         if (sgn(tableau_[i][enter]) <= 0) continue;
         ratio = rhs_[i] / tableau_[i][enter];
         if (leave == m_ || ratio < best_ratio || (ratio == best_ratio && basis_[i] < basis_[leave])) {
            leave = i;
            best_ratio = ratio;
         }
      }
      if (leave == m_) {
         status = LpStatus::unbounded;
         break;
      }
      degenerate = sgn(best_ratio) == 0 ? degenerate + 1 : 0;
      pivot(leave, enter);
   }
   reduced_.swap(reduced);
   value_.swap(value);
   return status;
}

LpStatus ExactSimplex::solve()
{
   // Phase 1: minimise the sum of artificials.
   std::vector<Rational> phase1(n_ + m_);
   Rational value1;
   for (std::size_t i = 0; i < m_; ++i) {
      value1 += rhs_[i];
      for (std::size_t j = 0; j < n_; ++j)
         if (sgn(tableau_[i][j]) != 0) phase1[j] -= tableau_[i][j];
   }
   std::vector<char> structural(n_ + m_, 0);
   for (std::size_t j = 0; j < n_; ++j) structural[j] = 1;
   run(phase1, value1, structural);
   Rational infeasibility;
   for (std::size_t i = 0; i < m_; ++i)
      if (basis_[i] >= n_) infeasibility += rhs_[i];
   if (sgn(infeasibility) != 0) return LpStatus::infeasible;
   // Drive zero-level artificials out where a structural pivot exists; rows
   // without one are redundant and keep their artificial at zero.
   for (std::size_t i = 0; i < m_; ++i) {
      if (basis_[i] < n_) continue;
      for (std::size_t j = 0; j < n_; ++j) {
         if (sgn(tableau_[i][j]) != 0) {
            reduced_.assign(n_ + m_, Rational(0));
            pivot(i, j);
            break;
         }
      }
   }
   load_phase2_costs(cost_);
   const LpStatus status = run(reduced_, value_, structural);
   if (status != LpStatus::optimal) return status;
   extract(cost_);
   solved_ = true;
   return LpStatus::optimal;
}

void ExactSimplex::load_phase2_costs(const std::vector<Rational>& cost)
{
   reduced_.assign(n_ + m_, Rational(0));
   for (std::size_t j = 0; j < n_; ++j) reduced_[j] = cost[j];
   value_ = 0;
   for (std::size_t i = 0; i < m_; ++i) {
      const std::size_t b = basis_[i];
      if (b >= n_ || sgn(cost[b]) == 0) continue;
      const Rational& cb = cost[b];
      for (std::size_t k = 0; k < n_ + m_; ++k)
         if (sgn(tableau_[i][k]) != 0) reduced_[k] -= cb * tableau_[i][k];
      value_ += cb * rhs_[i];
   }
}

void ExactSimplex::extract(const std::vector<Rational>& cost)
{
   x_.assign(n_, Rational(0));
   for (std::size_t i = 0; i < m_; ++i)
      if (basis_[i] < n_) x_[basis_[i]] = rhs_[i];
   objective_ = 0;
   for (std::size_t j = 0; j < n_; ++j) objective_ += cost[j] * x_[j];
   d_.assign(reduced_.begin(), reduced_.begin() + static_cast<std::ptrdiff_t>(n_));
   y_.resize(m_);
   for (std::size_t i = 0; i < m_; ++i) y_[i] = -reduced_[n_ + i] * row_sign_[i];
}

LpStatus ExactSimplex::reoptimize(const std::vector<Rational>& cost, const std::vector<char>& allowed)
{
   if (!solved_) throw Error(ErrorCode::internal, "reoptimize needs an optimal basis");
   if (cost.size() != n_ || allowed.size() != n_) throw Error(ErrorCode::internal, "reoptimize dimension mismatch");
   std::vector<char> enter_ok(n_ + m_, 0);
   for (std::size_t j = 0; j < n_; ++j) enter_ok[j] = allowed[j];
   load_phase2_costs(cost);
   const LpStatus status = run(reduced_, value_, enter_ok);
   if (status == LpStatus::optimal) extract(cost);
   return status;
}

} // namespace pomap
