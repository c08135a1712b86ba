#include "lms/sim_engine.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <ostream>
#include <variant>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "lms/error.hpp"
#include "lms/token_queues.hpp"

namespace lms {

std::string_view to_string(TraceDetail d) {
  switch (d) {
    case TraceDetail::none: return "none";
    case TraceDetail::per_second: return "per-second";
    case TraceDetail::per_subframe: return "per-subframe";
  }
  return "unknown";
}

TraceDetail parse_trace_detail(std::string_view name) {
  if (name == "none") return TraceDetail::none;
  if (name == "per-second" || name == "per_second") return TraceDetail::per_second;
  if (name == "per-subframe" || name == "per_subframe") return TraceDetail::per_subframe;
  throw ParseError(fmt::format("unknown trace detail '{}' (expected none, per-second or per-subframe)", name));
}

void RunConfig::validate() const {
  if (horizon_subframes < 1) throw ValidationError("run.horizon", "must be at least 1");
  if (!(ema_alpha > 0.0 && ema_alpha < 1.0)) throw ValidationError("run.ema_alpha", "must lie in (0, 1)");
}

// ---------------------------------------------------------------------------
// ChannelSource

namespace {

struct LinkBudgetChannel {
  Scenario scenario;
  LinkBudget budget;
  CqiTable table;
  std::vector<double> shadowing;
  std::uint64_t seed;
};

struct ModelChannel {
  SmallChannelModel model;
  std::uint64_t seed;
};

}  // namespace

struct ChannelSource::Impl {
  std::variant<LinkBudgetChannel, ModelChannel> source;
};

ChannelSource::ChannelSource(std::unique_ptr<Impl> impl) : impl_(std::move(impl)) {}
ChannelSource::ChannelSource(const ChannelSource& o) : impl_(std::make_unique<Impl>(*o.impl_)) {}
ChannelSource& ChannelSource::operator=(const ChannelSource& o) {
  impl_ = std::make_unique<Impl>(*o.impl_);
  return *this;
}
ChannelSource::ChannelSource(ChannelSource&&) noexcept = default;
ChannelSource& ChannelSource::operator=(ChannelSource&&) noexcept = default;
ChannelSource::~ChannelSource() = default;

ChannelSource ChannelSource::link_budget(const Scenario& s, const LinkBudget& budget,
                                         const CqiTable& table, std::uint64_t seed) {
  budget.validate();
  table.validate();
  s.validate_positions(budget.cell_radius_km);
  if (s.num_prbs() > budget.num_prbs)
    throw ValidationError("groups.multicast_prbs",
                          fmt::format("{} multicast PRBs exceed the carrier's {}", s.num_prbs(), budget.num_prbs));
  auto impl = std::make_unique<Impl>();
  impl->source = LinkBudgetChannel{s, budget, table, draw_shadowing(s.num_ues(), budget, seed), seed};
  return ChannelSource(std::move(impl));
}

ChannelSource ChannelSource::small_model(const Scenario& s, const SmallChannelModel& model,
                                         std::uint64_t seed) {
  model.validate(s.num_ues(), s.num_prbs());
  auto impl = std::make_unique<Impl>();
  impl->source = ModelChannel{model, seed};
  return ChannelSource(std::move(impl));
}

ChannelRealization ChannelSource::sample(std::uint64_t t) const {
  if (const auto* lb = std::get_if<LinkBudgetChannel>(&impl_->source))
    return sample_channel(lb->scenario, lb->budget, lb->table, lb->shadowing, lb->seed, t);
  const auto& mc = std::get<ModelChannel>(impl_->source);
  Rng rng = make_rng(mc.seed, Stream::channel_state, t);
  return mc.model.realization(mc.model.sample_state(rng));
}

const SmallChannelModel* ChannelSource::model() const noexcept {
  if (const auto* mc = std::get_if<ModelChannel>(&impl_->source)) return &mc->model;
  return nullptr;
}

// ---------------------------------------------------------------------------
// statistics helpers

double ema_update(double prev, double sample, double alpha) {
  return alpha * sample + (1.0 - alpha) * prev;
}

double stddev(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  return std::sqrt(var / static_cast<double>(xs.size()));
}

Burstiness compute_burstiness(std::span<const std::uint8_t> served,
                              std::uint64_t subframes_per_second) {
  if (served.empty()) throw InputError("service history is empty");
  if (subframes_per_second == 0) throw InputError("bucket length must be positive");
  Burstiness out;
  std::uint64_t run = 0;
  std::vector<double> percent;
  std::uint64_t bucket_unserved = 0, bucket_len = 0;
  for (std::uint8_t x : served) {
    if (x) {
      run = 0;
    } else {
      ++run;
      ++bucket_unserved;
      out.max_unserved_run = std::max(out.max_unserved_run, run);
    }
    if (++bucket_len == subframes_per_second) {
      percent.push_back(100.0 * static_cast<double>(bucket_unserved) / static_cast<double>(bucket_len));
      bucket_unserved = bucket_len = 0;
    }
  }
  if (bucket_len > 0)
    percent.push_back(100.0 * static_cast<double>(bucket_unserved) / static_cast<double>(bucket_len));
  out.per_second_loss_std = stddev(percent);
  return out;
}

// ---------------------------------------------------------------------------
// run loop

namespace {

class Replica {
 public:
  Replica(const Scenario& s, const RunConfig& cfg, std::ostream* trace)
      : s_(s), cfg_(cfg), trace_(trace), state_(QueueState::initial(s.num_ues())) {
    const std::size_t m = s.num_ues();
    metrics_.horizon = cfg.horizon_subframes;
    metrics_.served_count.assign(m, 0);
    metrics_.unserved_count.assign(m, 0);
    metrics_.decode_loss_count.assign(m, 0);
    metrics_.per_second_loss.assign(m, {});
    metrics_.ema_loss_series.assign(m, {});
    metrics_.max_unserved_run.assign(m, 0);
    run_.assign(m, 0);
    bucket_unserved_.assign(m, 0);
    if (cfg.queue_sample_stride > 0) {
      metrics_.queue_trace.stride = cfg.queue_sample_stride;
      metrics_.queue_trace.series.assign(m, {});
    }
  }

  void step(std::uint64_t t, const ChannelRealization& ch, std::span<const std::uint8_t> arrivals) {
    const std::size_t m = s_.num_ues();
    if (cfg_.queue_sample_stride > 0 && t % cfg_.queue_sample_stride == 0)
      for (std::size_t k = 0; k < m; ++k) metrics_.queue_trace.series[k].push_back(state_.q[k]);

    if (cfg_.policy.kind == PolicyKind::randomized) policy_rng_ = make_rng(cfg_.seed, Stream::policy, t);
    const AllocationVector b = decide(cfg_.policy, state_, ch, s_, policy_rng_);
    const ServiceVector mu = serve_from_allocation(b, ch, s_);

    if (trace_ && cfg_.trace_detail == TraceDetail::per_subframe) {
      nlohmann::json rec;
      rec["t"] = t;
      rec["b"] = b.prb;
      rec["a"] = std::vector<int>(arrivals.begin(), arrivals.end());
      rec["mu"] = std::vector<int>(mu.begin(), mu.end());
      rec["q"] = state_.q;
      *trace_ << rec.dump() << '\n';
    }

    for (std::size_t k = 0; k < m; ++k) {
      if (mu[k]) {
        ++metrics_.served_count[k];
        run_[k] = 0;
      } else {
        ++metrics_.unserved_count[k];
        ++bucket_unserved_[k];
        ++run_[k];
        metrics_.max_unserved_run[k] = std::max(metrics_.max_unserved_run[k], run_[k]);
        if (b.scheduled(s_.group_of(k))) ++metrics_.decode_loss_count[k];
      }
      queue_sum_ += static_cast<double>(state_.q[k]);
    }
    ++bucket_len_;

    state_ = apply_service(state_, arrivals, mu, cfg_.policy.kappa);

    if (bucket_len_ == kSubframesPerSecond || t + 1 == cfg_.horizon_subframes) close_bucket();
  }

  RunMetrics finish() {
    const std::size_t m = s_.num_ues();
    const double h = static_cast<double>(cfg_.horizon_subframes);
    metrics_.unserved_fraction.resize(m);
    metrics_.decode_loss_fraction.resize(m);
    metrics_.satisfied.resize(m);
    metrics_.per_second_loss_std.resize(m);
    for (std::size_t k = 0; k < m; ++k) {
      metrics_.unserved_fraction[k] = static_cast<double>(metrics_.unserved_count[k]) / h;
      metrics_.decode_loss_fraction[k] = static_cast<double>(metrics_.decode_loss_count[k]) / h;
      metrics_.satisfied[k] = metrics_.unserved_fraction[k] <= s_.loss_tolerance(k);
      std::vector<double> percent;
      percent.reserve(metrics_.per_second_loss[k].size());
      for (double x : metrics_.per_second_loss[k]) percent.push_back(100.0 * x);
      metrics_.per_second_loss_std[k] = stddev(percent);
    }
    metrics_.final_queue_lengths = state_.q;
    return std::move(metrics_);
  }

 private:
  void close_bucket() {
    const std::size_t m = s_.num_ues();
    const double len = static_cast<double>(bucket_len_);
    std::vector<double> loss(m), ema(m);
    for (std::size_t k = 0; k < m; ++k) {
      loss[k] = static_cast<double>(bucket_unserved_[k]) / len;
      auto& series = metrics_.ema_loss_series[k];
      // the first second seeds the average
      ema[k] = series.empty() ? loss[k] : ema_update(series.back(), loss[k], cfg_.ema_alpha);
      metrics_.per_second_loss[k].push_back(loss[k]);
      series.push_back(ema[k]);
      bucket_unserved_[k] = 0;
    }
    const double mean_q = queue_sum_ / (len * static_cast<double>(m));
    metrics_.mean_queue_series.push_back(mean_q);

    if (trace_ && cfg_.trace_detail == TraceDetail::per_second) {
      nlohmann::json rec;
      rec["second"] = metrics_.mean_queue_series.size() - 1;
      rec["loss"] = loss;
      rec["ema"] = ema;
      rec["mean_q"] = mean_q;
      *trace_ << rec.dump() << '\n';
    }
    bucket_len_ = 0;
    queue_sum_ = 0.0;
  }

  const Scenario& s_;
  RunConfig cfg_;
  std::ostream* trace_;
  QueueState state_;
  RunMetrics metrics_;
  std::vector<std::uint64_t> run_;
  std::vector<std::uint64_t> bucket_unserved_;
  std::uint64_t bucket_len_ = 0;
  double queue_sum_ = 0.0;
  Rng policy_rng_;
};

// Resolves a randomized policy without an explicit table into the LP witness
// of the channel model.
RunConfig prepare(const Scenario& s, const ChannelSource& channel, RunConfig cfg) {
  cfg.validate();
  cfg.policy.validate(s.num_ues());
  if (cfg.policy.kind != PolicyKind::randomized) return cfg;
  const SmallChannelModel* model = channel.model();
  if (!model) throw ConfigError("randomized policy needs a small channel model");
  if (cfg.policy.randomized.empty()) {
    const LpSolution sol = lp_delta_feasible(*model, arrival_rates(s), cfg.policy.randomized_delta, s);
    if (!sol.feasible)
      throw ConfigError(fmt::format("LP is infeasible at delta = {}; no randomized policy exists",
                                    cfg.policy.randomized_delta));
    cfg.policy.randomized = randomized_table(sol);
  }
  cfg.policy.randomized.validate(s.num_groups(), s.num_prbs());
  return cfg;
}

}  // namespace

std::vector<RunMetrics> run_lockstep(const Scenario& s, const ChannelSource& channel,
                                     std::span<const RunConfig> cfgs,
                                     std::span<std::ostream* const> traces) {
  if (cfgs.empty()) return {};
  if (!traces.empty() && traces.size() != cfgs.size())
    throw InputError("one trace sink per config expected");
  const std::uint64_t horizon = cfgs.front().horizon_subframes;
  const std::uint64_t seed = cfgs.front().seed;

  std::vector<RunConfig> prepared;
  std::vector<Replica> replicas;
  prepared.reserve(cfgs.size());
  replicas.reserve(cfgs.size());
  for (std::size_t i = 0; i < cfgs.size(); ++i) {
    if (cfgs[i].horizon_subframes != horizon || cfgs[i].seed != seed)
      throw InputError("lockstep runs must share horizon and seed");
    prepared.push_back(prepare(s, channel, cfgs[i]));
  }
  for (std::size_t i = 0; i < cfgs.size(); ++i)
    replicas.emplace_back(s, prepared[i], traces.empty() ? nullptr : traces[i]);

  const ArrivalRates lambda = arrival_rates(s);
  for (std::uint64_t t = 0; t < horizon; ++t) {
    const ChannelRealization ch = channel.sample(t);
    Rng arrival_rng = make_rng(seed, Stream::arrivals, t);
    const std::vector<std::uint8_t> arrivals = draw_arrivals(lambda, arrival_rng);
    for (auto& r : replicas) r.step(t, ch, arrivals);
  }

  std::vector<RunMetrics> out;
  out.reserve(replicas.size());
  for (auto& r : replicas) out.push_back(r.finish());
  return out;
}

RunMetrics run(const Scenario& s, const ChannelSource& channel, const RunConfig& cfg,
               std::ostream* trace) {
  std::ostream* const sinks[] = {trace};
  return std::move(run_lockstep(s, channel, std::span(&cfg, 1), sinks).front());
}

RunMetrics run(const Scenario& s, const LinkBudget& budget, const CqiTable& table,
               const RunConfig& cfg, std::ostream* trace) {
  return run(s, ChannelSource::link_budget(s, budget, table, cfg.seed), cfg, trace);
}

// ---------------------------------------------------------------------------
// CSV output

void write_metrics_csv(std::ostream& os, const Scenario& s, const RunMetrics& m) {
  os << "ue,group,loss_tolerance,unserved_fraction,decode_loss_fraction,satisfied,max_unserved_run,"
        "per_second_loss_std,final_queue\n";
  for (std::size_t k = 0; k < s.num_ues(); ++k) {
    os << fmt::format("{},{},{},{},{},{},{},{},{}\n", k, s.group_of(k), s.loss_tolerance(k),
                      m.unserved_fraction[k], m.decode_loss_fraction[k], m.satisfied[k] ? 1 : 0,
                      m.max_unserved_run[k], m.per_second_loss_std[k], m.final_queue_lengths[k]);
  }
}

void write_series_csv(std::ostream& os, const RunMetrics& m) {
  os << "second,ue,loss,ema_loss\n";
  const std::size_t seconds = m.mean_queue_series.size();
  for (std::size_t sec = 0; sec < seconds; ++sec)
    for (std::size_t k = 0; k < m.per_second_loss.size(); ++k)
      os << fmt::format("{},{},{},{}\n", sec, k, m.per_second_loss[k][sec], m.ema_loss_series[k][sec]);
}

void write_queue_csv(std::ostream& os, const RunMetrics& m) {
  os << "second,mean_queue\n";
  for (std::size_t sec = 0; sec < m.mean_queue_series.size(); ++sec)
    os << fmt::format("{},{}\n", sec, m.mean_queue_series[sec]);
}

}  // namespace lms
