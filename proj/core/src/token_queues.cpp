#include "lms/token_queues.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "lms/error.hpp"

namespace lms {

namespace {

void require_size(std::size_t expected, std::size_t got, const char* what) {
  if (expected != got)
    throw InputError(fmt::format("{}: expected {} entries, got {}", what, expected, got));
}

}  // namespace

QueueState QueueState::initial(std::size_t num_ues) {
  return QueueState{std::vector<std::int64_t>(num_ues, 0), std::vector<int>(num_ues, 0), 0};
}

std::vector<std::uint8_t> draw_arrivals(const ArrivalRates& rates, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<std::uint8_t> out(rates.size());
  for (std::size_t k = 0; k < rates.size(); ++k) out[k] = unit(rng) < rates[k] ? 1 : 0;
  return out;
}

std::vector<int> update_priority(std::span<const int> c_prev, std::span<const std::uint8_t> served,
                                 int kappa) {
  if (kappa < 1) throw InputError("priority cap kappa must be at least 1");
  require_size(c_prev.size(), served.size(), "service vector");
  std::vector<int> out(c_prev.size());
  for (std::size_t k = 0; k < c_prev.size(); ++k)
    out[k] = served[k] ? 0 : std::min(c_prev[k] + 1, kappa);
  return out;
}

std::vector<std::uint8_t> departures(const QueueState& state, std::span<const std::uint8_t> arrivals,
                                     std::span<const std::uint8_t> served) {
  require_size(state.size(), arrivals.size(), "arrival vector");
  require_size(state.size(), served.size(), "service vector");
  std::vector<std::uint8_t> out(state.size());
  for (std::size_t k = 0; k < state.size(); ++k)
    out[k] = served[k] && (state.q[k] + arrivals[k] > 0) ? 1 : 0;
  return out;
}

QueueState apply_service(const QueueState& state, std::span<const std::uint8_t> arrivals,
                         std::span<const std::uint8_t> served, int kappa) {
  require_size(state.size(), arrivals.size(), "arrival vector");
  require_size(state.size(), served.size(), "service vector");
  QueueState next;
  next.q.resize(state.size());
  for (std::size_t k = 0; k < state.size(); ++k)
    next.q[k] = std::max<std::int64_t>(state.q[k] + arrivals[k] - served[k], 0);
  next.c = update_priority(state.c, served, kappa);
  next.t = state.t + 1;
  return next;
}

}  // namespace lms
