#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace lms {

/// PRB assignment for one sub-frame: `prb[i]` is the 1-based PRB given to
/// group i, or 0 when group i is not scheduled.
struct AllocationVector {
  std::vector<std::size_t> prb;

  std::size_t size() const noexcept { return prb.size(); }
  std::size_t operator[](std::size_t group) const { return prb[group]; }
  bool scheduled(std::size_t group) const { return prb[group] != 0; }
  /// 0-based PRB index of a scheduled group.
  std::size_t prb_index(std::size_t group) const { return prb[group] - 1; }
  std::size_t cardinality() const noexcept;

  /// At most one PRB per group, no PRB shared, every entry in 0..num_prbs.
  bool feasible(std::size_t num_prbs) const noexcept;

  friend bool operator==(const AllocationVector&, const AllocationVector&) = default;
  friend auto operator<=>(const AllocationVector&, const AllocationVector&) = default;
};

using ServiceVector = std::vector<std::uint8_t>;

/// Number of feasible allocation vectors for L groups and N PRBs:
/// sum over m of C(L,m) C(N,m) m!. Saturates at SIZE_MAX.
std::size_t count_allocations(std::size_t num_groups, std::size_t num_prbs);

/// Every feasible allocation vector in lexicographic order. Throws SizeError
/// when the count exceeds `cap`.
std::vector<AllocationVector> enumerate_allocations(std::size_t num_groups, std::size_t num_prbs,
                                                    std::size_t cap = 1'000'000);

}  // namespace lms
