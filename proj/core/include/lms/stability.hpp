#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "lms/allocation.hpp"
#include "lms/channel.hpp"
#include "lms/matrix.hpp"
#include "lms/policies.hpp"
#include "lms/rng.hpp"
#include "lms/scenario.hpp"

namespace lms {

/// Explicit finite channel alphabet: each state is an M x N rate matrix drawn
/// i.i.d. per sub-frame with the given probability. Desk-scale only.
struct SmallChannelModel {
  static constexpr std::size_t kMaxStates = 64;

  std::vector<Matrix<double>> states;
  std::vector<double> probabilities;

  std::size_t size() const noexcept { return states.size(); }
  /// Probabilities sum to 1 within 1e-12, at most kMaxStates states, every
  /// state M x N with finite nonnegative rates.
  void validate(std::size_t num_ues, std::size_t num_prbs) const;

  ChannelRealization realization(std::size_t state) const;
  std::size_t sample_state(Rng& rng) const;

  friend bool operator==(const SmallChannelModel&, const SmallChannelModel&) = default;
};

/// Per-UE binary service of allocation `b` under the rate matrix `rates`.
ServiceVector service_vector_of(const AllocationVector& b, const Matrix<double>& rates,
                                const Scenario& s);

/// Witness of the relaxed LP: `weights[c][i]` is the probability of choosing
/// `allocations[i]` in state c.
struct LpSolution {
  bool feasible = false;
  std::vector<AllocationVector> allocations;
  std::vector<std::vector<double>> weights;
  /// Smallest per-UE margin of expected service over lambda under `weights`.
  double achieved_delta = 0.0;
};

/// Feasibility of { sum_C g(C) sum_B w_BC mu_BC >= lambda + delta, w >= 0,
/// sum_B w_BC = 1 for every C }, with a witness when feasible. Throws
/// SizeError if the variable grid exceeds `variable_cap`.
LpSolution lp_delta_feasible(const SmallChannelModel& model, const ArrivalRates& lambda,
                             double delta, const Scenario& s, std::size_t variable_cap = 20'000);

/// Largest delta >= 0 for which the LP is feasible, or nullopt if even
/// delta = 0 is infeasible.
std::optional<double> max_feasible_delta(const SmallChannelModel& model, const ArrivalRates& lambda,
                                         const Scenario& s, std::size_t variable_cap = 20'000);

struct WitnessResiduals {
  double min_weight = 0.0;           ///< most negative w
  double max_row_sum_error = 0.0;    ///< max |sum_B w_BC - 1|
  double max_service_shortfall = 0.0;///< max over k of (lambda_k + delta - service_k), floored at 0

  bool within(double tol) const {
    return min_weight >= -tol && max_row_sum_error <= tol && max_service_shortfall <= tol;
  }
};

/// Recomputes every LP constraint for `sol` from the model directly.
WitnessResiduals check_witness(const SmallChannelModel& model, const ArrivalRates& lambda,
                               double delta, const Scenario& s, const LpSolution& sol);

/// Allocation table for the randomized policy (allocations with weight
/// below 1e-12 dropped, the rest renormalized).
RandomizedTable randomized_table(const LpSolution& sol);

enum class Verdict { stable, unstable, inconclusive };
std::string_view to_string(Verdict v);

/// Queue lengths sampled every `stride` sub-frames: series[k][n] = Q_k[n * stride].
struct QueueTrace {
  std::size_t stride = 1;
  std::vector<std::vector<std::int64_t>> series;

  std::size_t samples() const noexcept { return series.empty() ? 0 : series.front().size(); }
  std::size_t span_subframes() const noexcept { return samples() * stride; }
};

struct StabilityReport {
  Verdict verdict = Verdict::inconclusive;
  double middle_mean_max = 0.0;  ///< mean of max_k Q_k over the middle window
  double last_mean_max = 0.0;    ///< mean of max_k Q_k over the last window
  double max_slope = 0.0;        ///< largest least-squares slope over the last half, tokens/sub-frame
};

inline constexpr double kStableSlope = 1e-4;
inline constexpr double kUnstableSlope = 10 * kStableSlope;
inline constexpr std::size_t kMinTraceSubframes = 10'000;

/// Stable if the last window's mean of max_k Q_k is at most twice the middle
/// window's and every queue's slope over the last half is at most 1e-4;
/// unstable if any slope exceeds 1e-3; inconclusive otherwise. `window` is a
/// fraction of the trace. Throws InputError for traces under 10^4 sub-frames.
StabilityReport empirical_stability(const QueueTrace& trace, double window = 0.1);

}  // namespace lms
