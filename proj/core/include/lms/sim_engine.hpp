#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "lms/channel.hpp"
#include "lms/policies.hpp"
#include "lms/scenario.hpp"
#include "lms/stability.hpp"

namespace lms {

inline constexpr std::uint64_t kSubframesPerSecond = 1000;

enum class TraceDetail { none, per_second, per_subframe };
std::string_view to_string(TraceDetail d);
TraceDetail parse_trace_detail(std::string_view name);

struct RunConfig {
  std::uint64_t horizon_subframes = 100'000;
  std::uint64_t seed = 1;
  PolicyParams policy;
  TraceDetail trace_detail = TraceDetail::none;
  double ema_alpha = 0.05;
  /// Record Q every this many sub-frames into RunMetrics::queue_trace; 0 disables.
  std::size_t queue_sample_stride = 0;

  void validate() const;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

struct RunMetrics {
  std::uint64_t horizon = 0;
  std::vector<std::uint64_t> served_count;
  std::vector<std::uint64_t> unserved_count;
  std::vector<std::uint64_t> decode_loss_count;
  /// Fraction of sub-frames with mu_k = 0, scheduled or not.
  std::vector<double> unserved_fraction;
  /// Fraction of sub-frames in which UE k was scheduled but could not decode.
  std::vector<double> decode_loss_fraction;
  /// per_second_loss[k][s]: unserved fraction of UE k in second s.
  std::vector<std::vector<double>> per_second_loss;
  std::vector<std::vector<double>> ema_loss_series;
  std::vector<std::uint64_t> max_unserved_run;
  /// Standard deviation of per-second loss in percent.
  std::vector<double> per_second_loss_std;
  std::vector<bool> satisfied;
  std::vector<std::int64_t> final_queue_lengths;
  /// Mean over UEs and sub-frames of Q within each second.
  std::vector<double> mean_queue_series;
  QueueTrace queue_trace;
};

/// Per-sub-frame channel generator shared by every policy of a run.
class ChannelSource {
 public:
  /// Link-budget channel; shadowing is drawn once from `seed`.
  static ChannelSource link_budget(const Scenario& s, const LinkBudget& budget,
                                   const CqiTable& table, std::uint64_t seed);
  /// I.i.d. states of an explicit model.
  static ChannelSource small_model(const Scenario& s, const SmallChannelModel& model,
                                   std::uint64_t seed);

  ChannelRealization sample(std::uint64_t t) const;
  const SmallChannelModel* model() const noexcept;

  ChannelSource(const ChannelSource&);
  ChannelSource& operator=(const ChannelSource&);
  ChannelSource(ChannelSource&&) noexcept;
  ChannelSource& operator=(ChannelSource&&) noexcept;
  ~ChannelSource();

 private:
  struct Impl;
  explicit ChannelSource(std::unique_ptr<Impl> impl);
  std::unique_ptr<Impl> impl_;
};

/// Runs every config in `cfgs` in lockstep on one channel and arrival
/// sequence (common random numbers). All configs must share horizon and
/// seed. `traces[i]`, if non-null, receives config i's line records.
std::vector<RunMetrics> run_lockstep(const Scenario& s, const ChannelSource& channel,
                                     std::span<const RunConfig> cfgs,
                                     std::span<std::ostream* const> traces = {});

RunMetrics run(const Scenario& s, const ChannelSource& channel, const RunConfig& cfg,
               std::ostream* trace = nullptr);

RunMetrics run(const Scenario& s, const LinkBudget& budget, const CqiTable& table,
               const RunConfig& cfg, std::ostream* trace = nullptr);

struct Burstiness {
  std::uint64_t max_unserved_run = 0;
  /// Standard deviation of per-second loss percentages.
  double per_second_loss_std = 0.0;
};

/// Longest run of unserved sub-frames and spread of per-second loss for one
/// UE's service history (1 = served).
Burstiness compute_burstiness(std::span<const std::uint8_t> served,
                              std::uint64_t subframes_per_second = kSubframesPerSecond);

/// alpha * sample + (1 - alpha) * prev.
double ema_update(double prev, double sample, double alpha);

/// Population standard deviation.
double stddev(std::span<const double> xs);

/// One row per UE: ue,group,loss_tolerance,unserved_fraction,
/// decode_loss_fraction,satisfied,max_unserved_run,per_second_loss_std,final_queue.
void write_metrics_csv(std::ostream& os, const Scenario& s, const RunMetrics& m);

/// Long form: second,ue,loss,ema_loss.
void write_series_csv(std::ostream& os, const RunMetrics& m);

/// second,mean_queue.
void write_queue_csv(std::ostream& os, const RunMetrics& m);

}  // namespace lms
