#include "lms/verification.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "lms/error.hpp"

namespace lms {

Instance random_instance(std::size_t num_groups, std::size_t num_prbs, std::size_t num_ues,
                         std::int64_t max_queue, int kappa, Rng& rng) {
  if (num_groups == 0 || num_prbs == 0 || num_ues < num_groups)
    throw InputError("random_instance needs L >= 1, N >= 1 and M >= L");
  const CqiTable table = CqiTable::defaults();
  std::uniform_int_distribution<int> cqi(0, static_cast<int>(kNumCqi));
  std::uniform_int_distribution<int> stream_cqi(1, static_cast<int>(kNumCqi));

  // every group gets one UE, the rest are spread at random
  std::vector<std::size_t> group_of(num_ues);
  std::uniform_int_distribution<std::size_t> pick(0, num_groups - 1);
  for (std::size_t k = 0; k < num_ues; ++k) group_of[k] = k < num_groups ? k : pick(rng);
  std::shuffle(group_of.begin(), group_of.end(), rng);

  std::vector<double> stream_rates(num_groups);
  for (double& r : stream_rates) r = table.rates_per_prb[stream_cqi(rng)];

  Scenario s(num_prbs, std::move(group_of), std::move(stream_rates),
             std::vector<double>(num_ues, 0.1), std::vector<Position>(num_ues), 0);

  QueueState state = QueueState::initial(num_ues);
  std::uniform_int_distribution<std::int64_t> q(0, max_queue);
  std::uniform_int_distribution<int> c(0, kappa);
  for (std::size_t k = 0; k < num_ues; ++k) {
    state.q[k] = q(rng);
    state.c[k] = c(rng);
  }

  ChannelRealization ch;
  ch.rates = Matrix<double>(num_ues, num_prbs);
  ch.cqi = Matrix<int>(num_ues, num_prbs);
  for (std::size_t k = 0; k < num_ues; ++k)
    for (std::size_t j = 0; j < num_prbs; ++j) {
      ch.cqi(k, j) = cqi(rng);
      ch.rates(k, j) = table.rates_per_prb[ch.cqi(k, j)];
    }
  return {std::move(s), std::move(state), std::move(ch)};
}

OracleReport verify_matching(std::size_t instances, const OracleLimits& limits, std::uint64_t seed,
                             double expq_rel_tol) {
  Rng rng = make_rng(seed, Stream::policy);
  std::uniform_int_distribution<std::size_t> groups(1, limits.max_groups);
  std::uniform_int_distribution<std::size_t> prbs(1, limits.max_prbs);
  std::uniform_int_distribution<int> kappa(1, 3);
  std::uniform_real_distribution<double> unit(0.5, 2.0);

  OracleReport report;
  for (std::size_t n = 0; n < instances; ++n) {
    const std::size_t l = groups(rng);
    const std::size_t m = std::uniform_int_distribution<std::size_t>(l, std::max(l, limits.max_ues))(rng);
    PolicyParams params;
    params.kappa = kappa(rng);
    const Instance inst = random_instance(l, prbs(rng), m, limits.max_queue, params.kappa, rng);
    params.gamma.resize(m);
    params.a.resize(m);
    for (std::size_t k = 0; k < m; ++k) {
      params.gamma[k] = unit(rng);
      params.a[k] = unit(rng);
    }

    for (PolicyKind kind : {PolicyKind::mw, PolicyKind::mw_priority, PolicyKind::expq}) {
      params.kind = kind;
      Rng unused;
      const AllocationVector b = decide(params, inst.state, inst.channel, inst.scenario, unused);
      const double matched = policy_objective(params, inst.state, inst.channel, inst.scenario, b);
      const BruteForceResult brute = brute_force_decide(params, inst.state, inst.channel, inst.scenario);
      const bool agree = kind == PolicyKind::expq
                             ? std::abs(matched - brute.objective) <=
                                   expq_rel_tol * std::max(1.0, std::abs(brute.objective))
                             : matched == brute.objective;
      if (!agree || !b.feasible(inst.scenario.num_prbs()))
        report.mismatches.push_back({n, kind, matched, brute.objective});
      ++report.comparisons;
    }
    ++report.instances;
  }
  return report;
}

DecideTiming time_decide(std::size_t num_groups, std::size_t num_prbs, std::size_t num_ues,
                         std::size_t reps, std::uint64_t seed, bool with_brute_force) {
  using clock = std::chrono::steady_clock;
  // a small pool cycled many times keeps the measurement about the
  // algorithm rather than about cold caches
  constexpr std::size_t kPool = 64;
  Rng rng = make_rng(seed, Stream::policy);
  std::vector<Instance> pool;
  for (std::size_t r = 0; r < std::min(reps, kPool); ++r)
    pool.push_back(random_instance(num_groups, num_prbs, num_ues, 50, 1, rng));

  PolicyParams params;
  DecideTiming out{num_groups, num_prbs, num_ues, 0.0, 0.0, count_allocations(num_groups, num_prbs)};
  std::size_t sink = 0;

  auto time_loop = [&](auto&& call) {
    for (const Instance& inst : pool) sink += call(inst);  // warm-up
    const auto t0 = clock::now();
    for (std::size_t r = 0; r < reps; ++r) sink += call(pool[r % pool.size()]);
    return std::chrono::duration<double, std::micro>(clock::now() - t0).count() / static_cast<double>(reps);
  };
  out.decide_us = time_loop([&](const Instance& inst) {
    return decide(params, inst.state, inst.channel, inst.scenario, rng).cardinality();
  });
  if (with_brute_force)
    out.brute_force_us = time_loop([&](const Instance& inst) {
      return brute_force_decide(params, inst.state, inst.channel, inst.scenario).allocation.cardinality();
    });
  // keep the calls observable
  if (sink == static_cast<std::size_t>(-1)) out.allocations = 0;
  return out;
}

}  // namespace lms
