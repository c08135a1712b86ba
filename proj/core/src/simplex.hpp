#pragma once

#include <cstddef>
#include <vector>

#include "lms/matrix.hpp"

namespace lms::lp {

enum class Status { optimal, infeasible, unbounded };

struct Result {
  Status status = Status::infeasible;
  std::vector<double> x;
  double objective = 0.0;
  /// Phase-one objective: sum of artificial variables at its minimum.
  double infeasibility = 0.0;
};

/// minimize c.x subject to A x = b, x >= 0, by a dense two-phase tableau
/// simplex with Bland's rule. Rows with negative b are negated internally.
/// Throws SolverError if pivoting stalls.
Result solve_standard_form(const Matrix<double>& a, const std::vector<double>& b,
                           const std::vector<double>& c);

}  // namespace lms::lp
