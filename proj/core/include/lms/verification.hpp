#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "lms/channel.hpp"
#include "lms/policies.hpp"
#include "lms/rng.hpp"
#include "lms/scenario.hpp"
#include "lms/token_queues.hpp"

namespace lms {

/// One sub-frame's decision problem: scenario, queues and channel.
struct Instance {
  Scenario scenario;
  QueueState state;
  ChannelRealization channel;
};

/// Random instance with exactly L groups, N PRBs and M >= L UEs. Rates and
/// stream rates are drawn from the default CQI table so that decodability is
/// mixed; queues are uniform in 0..max_queue and counters in 0..kappa.
Instance random_instance(std::size_t num_groups, std::size_t num_prbs, std::size_t num_ues,
                         std::int64_t max_queue, int kappa, Rng& rng);

struct OracleLimits {
  std::size_t max_groups = 3;
  std::size_t max_prbs = 6;
  std::size_t max_ues = 9;
  std::int64_t max_queue = 50;
};

struct OracleMismatch {
  std::size_t instance = 0;
  PolicyKind kind = PolicyKind::mw;
  double matched = 0.0;
  double exhaustive = 0.0;
};

struct OracleReport {
  std::size_t instances = 0;
  std::size_t comparisons = 0;
  std::vector<OracleMismatch> mismatches;

  bool ok() const noexcept { return mismatches.empty(); }
};

/// Compares decide() with brute_force_decide() for MW, MW-priority and EXP-Q
/// on `instances` random instances. MW objectives are integers and must agree
/// exactly; EXP-Q must agree within `expq_rel_tol`.
OracleReport verify_matching(std::size_t instances, const OracleLimits& limits, std::uint64_t seed,
                             double expq_rel_tol = 1e-9);

struct DecideTiming {
  std::size_t num_groups = 0;
  std::size_t num_prbs = 0;
  std::size_t num_ues = 0;
  double decide_us = 0.0;       ///< mean wall time per decide() call
  double brute_force_us = 0.0;  ///< 0 when not measured
  std::size_t allocations = 0;  ///< count enumerated by the brute-force search
};

/// Mean per-call times over `reps` random MW instances. The brute-force
/// search is timed only when `with_brute_force` is set.
DecideTiming time_decide(std::size_t num_groups, std::size_t num_prbs, std::size_t num_ues,
                         std::size_t reps, std::uint64_t seed, bool with_brute_force);

}  // namespace lms
