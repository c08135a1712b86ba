#include "simplex.hpp"

#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "lms/error.hpp"

namespace lms::lp {

namespace {

constexpr double kPivotTol = 1e-11;
constexpr double kFeasTol = 1e-9;

class Tableau {
 public:
  // rows x (cols + 1); the last column is the right-hand side
  Tableau(std::size_t rows, std::size_t cols) : t_(rows, cols + 1, 0.0), basis_(rows) {}

  double& at(std::size_t r, std::size_t c) { return t_(r, c); }
  double& rhs(std::size_t r) { return t_(r, t_.cols() - 1); }
  std::size_t rows() const { return t_.rows(); }
  std::size_t cols() const { return t_.cols() - 1; }
  std::vector<std::size_t>& basis() { return basis_; }

  void pivot(std::size_t pr, std::size_t pc) {
    const double inv = 1.0 / t_(pr, pc);
    for (std::size_t c = 0; c < t_.cols(); ++c) t_(pr, c) *= inv;
    for (std::size_t r = 0; r < t_.rows(); ++r) {
      if (r == pr) continue;
      const double f = t_(r, pc);
      if (f == 0.0) continue;
      for (std::size_t c = 0; c < t_.cols(); ++c) t_(r, c) -= f * t_(pr, c);
    }
    basis_[pr] = pc;
  }

  // Minimizes cost over `allowed` columns starting from the current basis.
  // Returns false if unbounded.
  bool optimize(const std::vector<double>& cost, const std::vector<bool>& allowed) {
    const std::size_t max_iter = 50 * (rows() + cols()) + 1000;
    for (std::size_t iter = 0; iter < max_iter; ++iter) {
      // reduced cost d_j = c_j - c_B B^-1 A_j; Bland: first improving column
      std::size_t enter = cols();
      for (std::size_t j = 0; j < cols(); ++j) {
        if (!allowed[j]) continue;
        double d = cost[j];
        for (std::size_t r = 0; r < rows(); ++r) d -= cost[basis_[r]] * t_(r, j);
        if (d < -kPivotTol) {
          enter = j;
          break;
        }
      }
      if (enter == cols()) return true;

      std::size_t leave = rows();
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t r = 0; r < rows(); ++r) {
        const double a = t_(r, enter);
        if (a <= kPivotTol) continue;
        const double ratio = rhs(r) / a;
        if (ratio < best - 1e-14 || (std::abs(ratio - best) <= 1e-14 && basis_[r] < basis_[leave])) {
          best = ratio;
          leave = r;
        }
      }
      if (leave == rows()) return false;
      pivot(leave, enter);
    }
    throw SolverError(fmt::format("simplex did not converge within {} pivots", max_iter));
  }

 private:
  Matrix<double> t_;
  std::vector<std::size_t> basis_;
};

}  // namespace

Result solve_standard_form(const Matrix<double>& a, const std::vector<double>& b,
                           const std::vector<double>& c) {
  const std::size_t m = a.rows();
  const std::size_t n = a.cols();
  if (b.size() != m || c.size() != n)
    throw SolverError(fmt::format("LP dimension mismatch: A is {}x{}, b has {}, c has {}", m, n,
                                  b.size(), c.size()));

  // columns: n structural, then m artificials
  Tableau tab(m, n + m);
  for (std::size_t r = 0; r < m; ++r) {
    const double sign = b[r] < 0.0 ? -1.0 : 1.0;
    for (std::size_t j = 0; j < n; ++j) tab.at(r, j) = sign * a(r, j);
    tab.at(r, n + r) = 1.0;
    tab.rhs(r) = sign * b[r];
    tab.basis()[r] = n + r;
  }

  std::vector<double> phase1(n + m, 0.0);
  for (std::size_t r = 0; r < m; ++r) phase1[n + r] = 1.0;
  std::vector<bool> allowed(n + m, true);
  tab.optimize(phase1, allowed);

  Result out;
  for (std::size_t r = 0; r < m; ++r)
    if (tab.basis()[r] >= n) out.infeasibility += tab.rhs(r);
  if (out.infeasibility > kFeasTol) {
    out.status = Status::infeasible;
    return out;
  }

  // drive zero-level artificials out of the basis where possible
  for (std::size_t r = 0; r < m; ++r) {
    if (tab.basis()[r] < n) continue;
    for (std::size_t j = 0; j < n; ++j) {
      if (std::abs(tab.at(r, j)) > kPivotTol) {
        tab.pivot(r, j);
        break;
      }
    }
  }

  std::vector<double> phase2(n + m, 0.0);
  for (std::size_t j = 0; j < n; ++j) phase2[j] = c[j];
  for (std::size_t j = n; j < n + m; ++j) allowed[j] = false;
  const bool bounded = tab.optimize(phase2, allowed);

  out.x.assign(n, 0.0);
  for (std::size_t r = 0; r < m; ++r)
    if (tab.basis()[r] < n) out.x[tab.basis()[r]] = std::max(0.0, tab.rhs(r));
  out.objective = 0.0;
  for (std::size_t j = 0; j < n; ++j) out.objective += c[j] * out.x[j];
  out.status = bounded ? Status::optimal : Status::unbounded;
  return out;
}

}  // namespace lms::lp
