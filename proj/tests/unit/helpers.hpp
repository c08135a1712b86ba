#pragma once

#include <cstdint>
#include <vector>

#include "lms/channel.hpp"
#include "lms/scenario.hpp"
#include "lms/token_queues.hpp"

namespace lms::test {

/// Scenario with positions at the origin, seed 1.
inline Scenario make_scenario(std::size_t num_prbs, std::vector<std::size_t> group_of,
                              std::vector<double> stream_rates, std::vector<double> tolerance) {
  const std::size_t m = group_of.size();
  return Scenario(num_prbs, std::move(group_of), std::move(stream_rates), std::move(tolerance),
                  std::vector<Position>(m), 1);
}

/// Realization whose rate matrix is given row by row.
inline ChannelRealization rates_of(std::vector<std::vector<double>> rows) {
  Matrix<double> r(rows.size(), rows.empty() ? 0 : rows.front().size());
  for (std::size_t k = 0; k < rows.size(); ++k)
    for (std::size_t j = 0; j < rows[k].size(); ++j) r(k, j) = rows[k][j];
  return ChannelRealization{std::move(r), Matrix<int>(), std::nullopt};
}

inline QueueState queues(std::vector<std::int64_t> q, std::vector<int> c = {}) {
  QueueState s = QueueState::initial(q.size());
  s.q = std::move(q);
  if (!c.empty()) s.c = std::move(c);
  return s;
}

}  // namespace lms::test
