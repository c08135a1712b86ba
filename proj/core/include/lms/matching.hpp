#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "lms/allocation.hpp"
#include "lms/matrix.hpp"

namespace lms {

/// Edge weights between L groups (rows) and N PRBs (columns).
using WeightMatrix = Matrix<double>;

/// Partial injective map from groups to 0-based PRB indices.
struct Matching {
  std::vector<std::optional<std::size_t>> assignment;
  double total_weight = 0.0;

  std::size_t cardinality() const noexcept;
};

/// Maximum-weight bipartite matching between groups and PRBs.
///
/// Among weight-optimal matchings the result has maximum cardinality
/// (min(L, N)), and among those the lexicographically smallest allocation
/// vector. Runs a shortest-augmenting-path assignment (Hungarian) on the
/// rectangular matrix in O(min(L,N)^2 max(L,N)); tie resolution re-solves
/// reduced problems only for rows with more than one tight edge.
///
/// Throws InputError for an empty, negative or non-finite matrix.
Matching max_weight_matching(const WeightMatrix& w);

AllocationVector matching_to_allocation(const Matching& m);

}  // namespace lms
