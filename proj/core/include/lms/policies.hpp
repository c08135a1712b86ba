#pragma once

#include <cstddef>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include "lms/allocation.hpp"
#include "lms/channel.hpp"
#include "lms/matching.hpp"
#include "lms/rng.hpp"
#include "lms/scenario.hpp"
#include "lms/token_queues.hpp"

namespace lms {

enum class PolicyKind {
  mw,           ///< max-weight on token queue lengths
  mw_priority,  ///< max-weight with per-UE priority counters
  expq,         ///< generalized exponential queue-length rule
  randomized,   ///< stationary randomized policy from an LP witness
};

std::string_view to_string(PolicyKind kind);
/// Accepts mw, mwp, expq, randomized (and mw_priority). Throws ParseError.
PolicyKind parse_policy_kind(std::string_view name);

/// Allocation probabilities per channel-state class. `per_state[c]` lists the
/// allocations chosen in state c together with their probabilities.
struct RandomizedTable {
  std::vector<std::vector<std::pair<AllocationVector, double>>> per_state;

  bool empty() const noexcept { return per_state.empty(); }
  void validate(std::size_t num_groups, std::size_t num_prbs) const;

  friend bool operator==(const RandomizedTable&, const RandomizedTable&) = default;
};

struct PolicyParams {
  PolicyKind kind = PolicyKind::mw;

  // MW-priority
  double s = 1.0;
  int kappa = 1;

  // EXP-Q; empty gamma / a mean 1 for every UE
  std::vector<double> gamma;
  std::vector<double> a;
  double beta = 1.0;
  double eta = 0.5;
  /// Divisor of the average weighted queue length; 0 selects the number of UEs.
  std::size_t qbar_divisor = 0;

  // Randomized
  RandomizedTable randomized;
  /// LP slack used to derive `randomized` when the table is not given.
  double randomized_delta = 0.05;

  void validate(std::size_t num_ues) const;
  double gamma_of(std::size_t ue) const { return gamma.empty() ? 1.0 : gamma[ue]; }
  double a_of(std::size_t ue) const { return a.empty() ? 1.0 : a[ue]; }

  friend bool operator==(const PolicyParams&, const PolicyParams&) = default;
};

/// 1 iff UE k decodes its group's stream on PRB j (0-based): R_i <= r_kj.
int service_rate_indicator(std::size_t ue, std::size_t prb, const ChannelRealization& ch,
                           const Scenario& s);

/// sum over k in G_i of Q_k mu_k^j.
double weight_mw(std::size_t group, std::size_t prb, const QueueState& state,
                 const ChannelRealization& ch, const Scenario& s);

/// sum over k in G_i of (Q_k + (c_k + 1) s) mu_k^j.
double weight_mw_priority(std::size_t group, std::size_t prb, const QueueState& state,
                          const ChannelRealization& ch, const Scenario& s,
                          const PolicyParams& params);

/// Average weighted queue length (1/D) sum_k a_k Q_k.
double expq_average_queue(const QueueState& state, const PolicyParams& params);

/// sum over k in G_i of gamma_k mu_k^j exp(a_k Q_k / (beta + Qbar^eta)),
/// unshifted. May overflow for long queues; decide() uses a shifted form.
double weight_expq(std::size_t group, std::size_t prb, const QueueState& state,
                   const ChannelRealization& ch, const Scenario& s, const PolicyParams& params);

/// Per-UE objective coefficients of the deterministic policies, so that the
/// objective of an allocation is sum_k coeff_k mu_k. EXP-Q coefficients are
/// shifted by the largest exponent among UEs that can decode their stream on
/// at least one PRB of `ch` (all UEs when `ch` is null). UEs that cannot be
/// served contribute to no weight, so letting their exponents set the shift
/// would only underflow everybody else's.
std::vector<double> ue_coefficients(const PolicyParams& params, const QueueState& state,
                                    const Scenario& s, const ChannelRealization* ch = nullptr);

/// Group x PRB weight matrix of the active deterministic policy.
WeightMatrix build_weights(const PolicyParams& params, const QueueState& state,
                           const ChannelRealization& ch, const Scenario& s);

ServiceVector serve_from_allocation(const AllocationVector& b, const ChannelRealization& ch,
                                    const Scenario& s);

/// sum_k coeff_k mu_k for allocation `b`, on the same scale as build_weights.
double policy_objective(const PolicyParams& params, const QueueState& state,
                        const ChannelRealization& ch, const Scenario& s, const AllocationVector& b);

/// Allocation for the current sub-frame. Deterministic policies solve a
/// max-weight matching; the randomized policy samples from its table using
/// the realization's state class and `rng`.
AllocationVector decide(const PolicyParams& params, const QueueState& state,
                        const ChannelRealization& ch, const Scenario& s, Rng& rng);

struct BruteForceResult {
  AllocationVector allocation;
  double objective = 0.0;
  std::size_t evaluated = 0;
};

/// Exhaustive argmax over every feasible allocation. Ties are resolved like
/// decide(): larger cardinality first, then the lexicographically smallest
/// vector. Throws SizeError above `cap` allocations and ConfigError for the
/// randomized policy.
BruteForceResult brute_force_decide(const PolicyParams& params, const QueueState& state,
                                    const ChannelRealization& ch, const Scenario& s,
                                    std::size_t cap = 1'000'000);

}  // namespace lms
