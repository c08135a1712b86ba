#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "lms/allocation.hpp"
#include "lms/rng.hpp"
#include "lms/scenario.hpp"

namespace lms {

/// Token queue lengths and priority counters at the start of sub-frame `t`.
struct QueueState {
  std::vector<std::int64_t> q;
  std::vector<int> c;
  std::uint64_t t = 0;

  static QueueState initial(std::size_t num_ues);
  std::size_t size() const noexcept { return q.size(); }

  friend bool operator==(const QueueState&, const QueueState&) = default;
};

/// One independent Bernoulli(lambda_k) token per UE.
std::vector<std::uint8_t> draw_arrivals(const ArrivalRates& rates, Rng& rng);

/// c_k = 0 if UE k was served in the previous sub-frame, else min(c_k + 1, kappa).
std::vector<int> update_priority(std::span<const int> c_prev, std::span<const std::uint8_t> served,
                                 int kappa);

/// D_k = 1 iff UE k is served and has a token after this sub-frame's arrival.
std::vector<std::uint8_t> departures(const QueueState& state, std::span<const std::uint8_t> arrivals,
                                     std::span<const std::uint8_t> served);

/// Advances one sub-frame: Q' = max(Q + A - mu, 0), counters per
/// update_priority, t + 1. Arrivals land before service.
QueueState apply_service(const QueueState& state, std::span<const std::uint8_t> arrivals,
                         std::span<const std::uint8_t> served, int kappa);

}  // namespace lms
