#include "lms/policies.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "lms/error.hpp"

namespace lms {

std::string_view to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::mw: return "mw";
    case PolicyKind::mw_priority: return "mwp";
    case PolicyKind::expq: return "expq";
    case PolicyKind::randomized: return "randomized";
  }
  return "unknown";
}

PolicyKind parse_policy_kind(std::string_view name) {
  if (name == "mw") return PolicyKind::mw;
  if (name == "mwp" || name == "mw_priority" || name == "mw-priority") return PolicyKind::mw_priority;
  if (name == "expq" || name == "exp-q") return PolicyKind::expq;
  if (name == "randomized") return PolicyKind::randomized;
  throw ParseError(fmt::format("unknown policy '{}' (expected mw, mwp, expq or randomized)", name));
}

void RandomizedTable::validate(std::size_t num_groups, std::size_t num_prbs) const {
  for (std::size_t c = 0; c < per_state.size(); ++c) {
    double total = 0.0;
    for (const auto& [b, p] : per_state[c]) {
      if (b.size() != num_groups || !b.feasible(num_prbs))
        throw ValidationError("policy.randomized", fmt::format("infeasible allocation in state {}", c));
      if (!(p >= 0.0)) throw ValidationError("policy.randomized", "negative probability");
      total += p;
    }
    if (std::abs(total - 1.0) > 1e-9)
      throw ValidationError("policy.randomized",
                            fmt::format("probabilities of state {} sum to {}", c, total));
  }
}

void PolicyParams::validate(std::size_t num_ues) const {
  if (!(s > 0.0) || !std::isfinite(s)) throw ValidationError("policy.s", "must be positive");
  if (kappa < 1) throw ValidationError("policy.kappa", "must be a positive integer");
  if (!gamma.empty() && gamma.size() != num_ues)
    throw ValidationError("policy.gamma", fmt::format("expected 1 or {} values", num_ues));
  if (!a.empty() && a.size() != num_ues)
    throw ValidationError("policy.a", fmt::format("expected 1 or {} values", num_ues));
  for (double g : gamma)
    if (!(g > 0.0) || !std::isfinite(g)) throw ValidationError("policy.gamma", "must be positive");
  for (double x : a)
    if (!(x > 0.0) || !std::isfinite(x)) throw ValidationError("policy.a", "must be positive");
  if (!(beta > 0.0) || !std::isfinite(beta)) throw ValidationError("policy.beta", "must be positive");
  if (!(eta > 0.0 && eta < 1.0)) throw ValidationError("policy.eta", "must lie in (0, 1)");
  if (!(randomized_delta >= 0.0)) throw ValidationError("policy.delta", "must be nonnegative");
}

int service_rate_indicator(std::size_t ue, std::size_t prb, const ChannelRealization& ch,
                           const Scenario& s) {
  return s.stream_rate(s.group_of(ue)) <= ch.rates(ue, prb) ? 1 : 0;
}

double weight_mw(std::size_t group, std::size_t prb, const QueueState& state,
                 const ChannelRealization& ch, const Scenario& s) {
  double w = 0.0;
  for (std::size_t k : s.members(group))
    if (service_rate_indicator(k, prb, ch, s)) w += static_cast<double>(state.q[k]);
  return w;
}

double weight_mw_priority(std::size_t group, std::size_t prb, const QueueState& state,
                          const ChannelRealization& ch, const Scenario& s,
                          const PolicyParams& params) {
  double w = 0.0;
  for (std::size_t k : s.members(group))
    if (service_rate_indicator(k, prb, ch, s))
      w += static_cast<double>(state.q[k]) + (state.c[k] + 1) * params.s;
  return w;
}

double expq_average_queue(const QueueState& state, const PolicyParams& params) {
  const std::size_t divisor = params.qbar_divisor == 0 ? state.size() : params.qbar_divisor;
  double sum = 0.0;
  for (std::size_t k = 0; k < state.size(); ++k) sum += params.a_of(k) * static_cast<double>(state.q[k]);
  return sum / static_cast<double>(divisor);
}

namespace {

std::vector<double> expq_exponents(const QueueState& state, const PolicyParams& params) {
  const double denom = params.beta + std::pow(expq_average_queue(state, params), params.eta);
  std::vector<double> x(state.size());
  for (std::size_t k = 0; k < state.size(); ++k)
    x[k] = params.a_of(k) * static_cast<double>(state.q[k]) / denom;
  return x;
}

}  // namespace

double weight_expq(std::size_t group, std::size_t prb, const QueueState& state,
                   const ChannelRealization& ch, const Scenario& s, const PolicyParams& params) {
  const std::vector<double> x = expq_exponents(state, params);
  double w = 0.0;
  for (std::size_t k : s.members(group))
    if (service_rate_indicator(k, prb, ch, s)) w += params.gamma_of(k) * std::exp(x[k]);
  return w;
}

std::vector<double> ue_coefficients(const PolicyParams& params, const QueueState& state,
                                    const Scenario& s, const ChannelRealization* ch) {
  const std::size_t m = s.num_ues();
  if (state.size() != m)
    throw InputError(fmt::format("queue state has {} entries for {} UEs", state.size(), m));
  std::vector<double> coeff(m);
  switch (params.kind) {
    case PolicyKind::mw:
      for (std::size_t k = 0; k < m; ++k) coeff[k] = static_cast<double>(state.q[k]);
      break;
    case PolicyKind::mw_priority:
      for (std::size_t k = 0; k < m; ++k)
        coeff[k] = static_cast<double>(state.q[k]) + (state.c[k] + 1) * params.s;
      break;
    case PolicyKind::expq: {
      // a shared shift rescales every weight by the same positive factor
      const std::vector<double> x = expq_exponents(state, params);
      std::vector<char> servable(m, 1);
      double shift = -std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < m; ++k) {
        if (ch) {
          const auto row = ch->rates.row(k);
          const double rate = s.stream_rate(s.group_of(k));
          servable[k] = std::any_of(row.begin(), row.end(), [&](double r) { return rate <= r; });
        }
        if (servable[k]) shift = std::max(shift, x[k]);
      }
      // an unservable UE has mu = 0 on every PRB; its coefficient is never used
      for (std::size_t k = 0; k < m; ++k)
        coeff[k] = servable[k] ? params.gamma_of(k) * std::exp(x[k] - shift) : 0.0;
      break;
    }
    case PolicyKind::randomized:
      throw ConfigError("the randomized policy has no weight function");
  }
  return coeff;
}

WeightMatrix build_weights(const PolicyParams& params, const QueueState& state,
                           const ChannelRealization& ch, const Scenario& s) {
  const std::vector<double> coeff = ue_coefficients(params, state, s, &ch);
  const std::size_t n = s.num_prbs();
  WeightMatrix w(s.num_groups(), n, 0.0);
  const double* rates = ch.rates.data().data();
  double* weights = w.data().data();
  // UE order walks the rate matrix contiguously and still sums each group's
  // members in ascending order
  for (std::size_t k = 0; k < s.num_ues(); ++k) {
    const double c = coeff[k];
    if (c == 0.0) continue;
    const std::size_t g = s.group_of(k);
    const double rate = s.stream_rate(g);
    const double* __restrict row = rates + k * n;
    double* __restrict out = weights + g * n;
    // branch-free: decodability is close to a coin flip on faded channels
    for (std::size_t j = 0; j < n; ++j) out[j] += rate <= row[j] ? c : 0.0;
  }
  return w;
}

ServiceVector serve_from_allocation(const AllocationVector& b, const ChannelRealization& ch,
                                    const Scenario& s) {
  ServiceVector mu(s.num_ues(), 0);
  for (std::size_t k = 0; k < s.num_ues(); ++k) {
    const std::size_t g = s.group_of(k);
    if (b.scheduled(g)) mu[k] = static_cast<std::uint8_t>(service_rate_indicator(k, b.prb_index(g), ch, s));
  }
  return mu;
}

double policy_objective(const PolicyParams& params, const QueueState& state,
                        const ChannelRealization& ch, const Scenario& s, const AllocationVector& b) {
  const std::vector<double> coeff = ue_coefficients(params, state, s, &ch);
  const ServiceVector mu = serve_from_allocation(b, ch, s);
  double total = 0.0;
  for (std::size_t k = 0; k < mu.size(); ++k)
    if (mu[k]) total += coeff[k];
  return total;
}

namespace {

void check_dimensions(const ChannelRealization& ch, const Scenario& s) {
  if (ch.num_ues() != s.num_ues() || ch.num_prbs() != s.num_prbs())
    throw InputError(fmt::format("channel is {}x{} but scenario has {} UEs and {} PRBs",
                                 ch.num_ues(), ch.num_prbs(), s.num_ues(), s.num_prbs()));
}

AllocationVector sample_randomized(const PolicyParams& params, const ChannelRealization& ch,
                                   Rng& rng) {
  if (!ch.state)
    throw ConfigError("randomized policy needs a channel with a declared state alphabet");
  const std::size_t c = *ch.state;
  if (c >= params.randomized.per_state.size() || params.randomized.per_state[c].empty())
    throw ConfigError(fmt::format("randomized policy has no allocation table for channel state {}", c));
  const auto& entries = params.randomized.per_state[c];
  std::vector<double> probs;
  probs.reserve(entries.size());
  for (const auto& e : entries) probs.push_back(e.second);
  std::discrete_distribution<std::size_t> pick(probs.begin(), probs.end());
  return entries[pick(rng)].first;
}

}  // namespace

AllocationVector decide(const PolicyParams& params, const QueueState& state,
                        const ChannelRealization& ch, const Scenario& s, Rng& rng) {
  check_dimensions(ch, s);
  if (params.kind == PolicyKind::randomized) return sample_randomized(params, ch, rng);
  return matching_to_allocation(max_weight_matching(build_weights(params, state, ch, s)));
}

BruteForceResult brute_force_decide(const PolicyParams& params, const QueueState& state,
                                    const ChannelRealization& ch, const Scenario& s,
                                    std::size_t cap) {
  check_dimensions(ch, s);
  if (params.kind == PolicyKind::randomized)
    throw ConfigError("brute-force search applies to the deterministic policies only");

  const std::vector<AllocationVector> all = enumerate_allocations(s.num_groups(), s.num_prbs(), cap);
  const std::vector<double> coeff = ue_coefficients(params, state, s, &ch);

  BruteForceResult best;
  std::size_t best_card = 0;
  bool have = false;
  for (const AllocationVector& b : all) {
    const ServiceVector mu = serve_from_allocation(b, ch, s);
    double objective = 0.0;
    for (std::size_t k = 0; k < mu.size(); ++k)
      if (mu[k]) objective += coeff[k];
    const std::size_t card = b.cardinality();
    const double tol = 1e-12 * std::max(1.0, std::abs(best.objective));
    // enumeration is lexicographic, so the first of equals is the smallest
    const bool better = !have || objective > best.objective + tol ||
                        (objective >= best.objective - tol && card > best_card);
    if (better) {
      best.allocation = b;
      best.objective = objective;
      best_card = card;
      have = true;
    }
  }
  best.evaluated = all.size();
  return best;
}

}  // namespace lms
