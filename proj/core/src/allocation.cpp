#include "lms/allocation.hpp"

#include <algorithm>
#include <limits>

#include <fmt/format.h>

#include "lms/error.hpp"

namespace lms {

namespace {

constexpr std::size_t kSaturated = std::numeric_limits<std::size_t>::max();

std::size_t mul_sat(std::size_t a, std::size_t b) {
  if (a != 0 && b > kSaturated / a) return kSaturated;
  return a * b;
}

std::size_t add_sat(std::size_t a, std::size_t b) { return a > kSaturated - b ? kSaturated : a + b; }

void enumerate(std::size_t group, std::size_t num_prbs, std::vector<bool>& used,
               AllocationVector& current, std::vector<AllocationVector>& out) {
  if (group == current.prb.size()) {
    out.push_back(current);
    return;
  }
  current.prb[group] = 0;
  enumerate(group + 1, num_prbs, used, current, out);
  for (std::size_t j = 1; j <= num_prbs; ++j) {
    if (used[j]) continue;
    used[j] = true;
    current.prb[group] = j;
    enumerate(group + 1, num_prbs, used, current, out);
    used[j] = false;
  }
  current.prb[group] = 0;
}

}  // namespace

std::size_t AllocationVector::cardinality() const noexcept {
  return static_cast<std::size_t>(std::count_if(prb.begin(), prb.end(), [](auto p) { return p != 0; }));
}

bool AllocationVector::feasible(std::size_t num_prbs) const noexcept {
  std::vector<bool> seen(num_prbs + 1, false);
  for (std::size_t p : prb) {
    if (p == 0) continue;
    if (p > num_prbs || seen[p]) return false;
    seen[p] = true;
  }
  return true;
}

std::size_t count_allocations(std::size_t num_groups, std::size_t num_prbs) {
  // term(m) = C(L,m) * N!/(N-m)!, built incrementally
  std::size_t total = 1;
  std::size_t binom = 1;    // C(L, m)
  std::size_t falling = 1;  // N (N-1) ... (N-m+1)
  for (std::size_t m = 1; m <= std::min(num_groups, num_prbs); ++m) {
    binom = mul_sat(binom, num_groups - m + 1) == kSaturated ? kSaturated
                                                             : binom * (num_groups - m + 1) / m;
    falling = mul_sat(falling, num_prbs - m + 1);
    total = add_sat(total, mul_sat(binom, falling));
  }
  return total;
}

std::vector<AllocationVector> enumerate_allocations(std::size_t num_groups, std::size_t num_prbs,
                                                    std::size_t cap) {
  const std::size_t count = count_allocations(num_groups, num_prbs);
  if (count > cap)
    throw SizeError(fmt::format("{} groups on {} PRBs give {} allocations, above the cap of {}",
                                num_groups, num_prbs, count, cap));
  std::vector<AllocationVector> out;
  out.reserve(count);
  AllocationVector current{std::vector<std::size_t>(num_groups, 0)};
  std::vector<bool> used(num_prbs + 1, false);
  enumerate(0, num_prbs, used, current, out);
  return out;
}

}  // namespace lms
