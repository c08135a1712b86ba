#include <cmath>
#include <sstream>

#include <doctest.h>
#include <json.hpp>

#include "helpers.hpp"
#include "lms/error.hpp"
#include "lms/sim_engine.hpp"

using namespace lms;
using lms::test::make_scenario;
using json = nlohmann::json;

namespace {

SmallChannelModel two_state_model() {
  // UE 0 and UE 3 want PRB 1 in state 0, UE 1 wants PRB 2; state 1 serves all
  SmallChannelModel m;
  Matrix<double> a(4, 3, 0.0), b(4, 3, 1.0);
  a(0, 0) = 1;
  a(1, 1) = 1;
  a(2, 0) = a(2, 1) = a(2, 2) = 1;
  a(3, 0) = 1;
  m.states = {a, b};
  m.probabilities = {0.5, 0.5};
  return m;
}

Scenario four_ue() { return make_scenario(3, {0, 0, 1, 1}, {1.0, 1.0}, {0.35, 0.4, 0.4, 0.5}); }

RunConfig config(PolicyKind kind, std::uint64_t horizon, std::uint64_t seed) {
  RunConfig rc;
  rc.policy.kind = kind;
  rc.horizon_subframes = horizon;
  rc.seed = seed;
  return rc;
}

std::vector<json> lines(const std::string& text) {
  std::vector<json> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(json::parse(line));
  return out;
}

}  // namespace

TEST_SUITE("sim_engine") {
  TEST_CASE("burstiness statistics") {
    const std::vector<std::uint8_t> ones(3000, 1);
    const Burstiness all = compute_burstiness(ones);
    CHECK(all.max_unserved_run == 0);
    CHECK(all.per_second_loss_std == 0.0);

    std::vector<std::uint8_t> alt(2000);
    for (std::size_t i = 0; i < alt.size(); ++i) alt[i] = i % 2;
    CHECK(compute_burstiness(alt).max_unserved_run == 1);
    CHECK(compute_burstiness(alt).per_second_loss_std == doctest::Approx(0.0));

    std::vector<std::uint8_t> gap(5000, 1);
    std::fill(gap.begin() + 1200, gap.begin() + 1237, 0);
    std::fill(gap.begin() + 3000, gap.begin() + 3010, 0);
    const Burstiness b = compute_burstiness(gap);
    CHECK(b.max_unserved_run == 37);
    // per-second losses 0, 3.7, 0, 1.0, 0 percent
    const std::vector<double> pct{0.0, 3.7, 0.0, 1.0, 0.0};
    CHECK(b.per_second_loss_std == doctest::Approx(stddev(pct)));
    CHECK(stddev(pct) == doctest::Approx(std::sqrt((0.94 * 0.94 * 3 + 2.76 * 2.76 + 0.06 * 0.06) / 5)));
    CHECK_THROWS_AS(compute_burstiness(std::vector<std::uint8_t>{}), InputError);
  }

  TEST_CASE("EMA update") {
    CHECK(ema_update(0.0, 0.0, 0.3) == 0.0);
    CHECK(ema_update(0.42, 0.42, 0.3) == doctest::Approx(0.42));
    CHECK(ema_update(0.0, 1.0, 0.1) == doctest::Approx(0.1));
    CHECK(ema_update(0.5, 1.0, 0.2) == doctest::Approx(0.6));
  }

  TEST_CASE("a lone always-decoding UE is never unserved") {
    SmallChannelModel m;
    m.states = {Matrix<double>(1, 1, 1.0)};
    m.probabilities = {1.0};
    const Scenario s = make_scenario(1, {0}, {1.0}, {0.2});
    const RunMetrics r = run(s, ChannelSource::small_model(s, m, 1), config(PolicyKind::mw, 5000, 1));
    CHECK(r.unserved_fraction[0] == 0.0);
    CHECK(r.final_queue_lengths[0] == 0);
    CHECK(r.satisfied[0]);
  }

  TEST_CASE("slack tolerances are always satisfied") {
    const Scenario s = make_scenario(3, {0, 0, 1, 1}, {1.0, 1.0}, {0.999, 0.999, 0.999, 0.999});
    for (auto kind : {PolicyKind::mw, PolicyKind::mw_priority, PolicyKind::expq}) {
      const RunMetrics r = run(s, ChannelSource::small_model(s, two_state_model(), 2), config(kind, 20000, 2));
      for (bool ok : r.satisfied) CHECK(ok);
    }
  }

  TEST_CASE("feasible scenario meets its tolerances") {
    const Scenario s = four_ue();
    const ChannelSource ch = ChannelSource::small_model(s, two_state_model(), 3);
    const std::vector<RunConfig> cfgs{config(PolicyKind::mw, 100'000, 3), config(PolicyKind::mw_priority, 100'000, 3),
                                      config(PolicyKind::randomized, 100'000, 3)};
    const auto ms = run_lockstep(s, ch, cfgs);
    for (const auto& m : ms)
      for (std::size_t k = 0; k < 4; ++k) CHECK(m.unserved_fraction[k] <= s.loss_tolerance(k) + 0.01);
  }

  TEST_CASE("per-sub-frame trace is consistent with the metrics") {
    const Scenario s = four_ue();
    const ChannelSource ch = ChannelSource::small_model(s, two_state_model(), 4);
    RunConfig mw = config(PolicyKind::mw, 3000, 4), mwp = config(PolicyKind::mw_priority, 3000, 4);
    mw.trace_detail = mwp.trace_detail = TraceDetail::per_subframe;
    std::ostringstream t0, t1;
    std::ostream* sinks[] = {&t0, &t1};
    const auto ms = run_lockstep(s, ch, std::vector<RunConfig>{mw, mwp}, sinks);
    const auto a = lines(t0.str()), b = lines(t1.str());
    REQUIRE(a.size() == 3000);
    REQUIRE(b.size() == 3000);

    std::vector<std::uint64_t> unserved(4, 0), run(4, 0), longest(4, 0);
    for (std::size_t t = 0; t < a.size(); ++t) {
      CHECK(a[t]["t"] == t);
      // common random numbers: both policies see the same arrivals
      CHECK(a[t]["a"] == b[t]["a"]);
      const auto q = a[t]["q"].get<std::vector<std::int64_t>>();
      const auto arr = a[t]["a"].get<std::vector<int>>();
      const auto mu = a[t]["mu"].get<std::vector<int>>();
      if (t + 1 < a.size()) {
        const auto next = a[t + 1]["q"].get<std::vector<std::int64_t>>();
        for (std::size_t k = 0; k < 4; ++k) CHECK(next[k] == std::max<std::int64_t>(q[k] + arr[k] - mu[k], 0));
      }
      for (std::size_t k = 0; k < 4; ++k) {
        if (mu[k]) {
          run[k] = 0;
        } else {
          ++unserved[k];
          longest[k] = std::max(longest[k], ++run[k]);
        }
      }
    }
    for (std::size_t k = 0; k < 4; ++k) {
      CHECK(ms[0].unserved_count[k] == unserved[k]);
      CHECK(ms[0].served_count[k] + ms[0].unserved_count[k] == 3000);
      CHECK(ms[0].unserved_fraction[k] == doctest::Approx(unserved[k] / 3000.0));
      CHECK(ms[0].max_unserved_run[k] == longest[k]);
      CHECK(ms[0].per_second_loss[k].size() == 3);
      double mean = 0.0;
      for (double x : ms[0].per_second_loss[k]) mean += x / 3.0;
      CHECK(mean == doctest::Approx(ms[0].unserved_fraction[k]));
    }
  }

  TEST_CASE("per-second trace and EMA") {
    const Scenario s = four_ue();
    RunConfig rc = config(PolicyKind::mw, 4000, 5);
    rc.trace_detail = TraceDetail::per_second;
    rc.ema_alpha = 0.25;
    std::ostringstream out;
    const RunMetrics m = run(s, ChannelSource::small_model(s, two_state_model(), 5), rc, &out);
    const auto recs = lines(out.str());
    REQUIRE(recs.size() == 4);
    for (std::size_t k = 0; k < 4; ++k) {
      double ema = m.per_second_loss[k][0];
      CHECK(m.ema_loss_series[k][0] == doctest::Approx(ema));
      for (std::size_t sec = 1; sec < 4; ++sec) {
        ema = 0.25 * m.per_second_loss[k][sec] + 0.75 * ema;
        CHECK(m.ema_loss_series[k][sec] == doctest::Approx(ema));
      }
      CHECK(recs[3]["ema"][k].get<double>() == doctest::Approx(ema));
    }
    CHECK(m.mean_queue_series.size() == 4);
  }

  TEST_CASE("runs are reproducible and lockstep matches single runs") {
    const Scenario s = four_ue();
    const ChannelSource ch = ChannelSource::small_model(s, two_state_model(), 6);
    RunConfig rc = config(PolicyKind::expq, 5000, 6);
    rc.trace_detail = TraceDetail::per_subframe;
    std::ostringstream x, y;
    const RunMetrics a = run(s, ch, rc, &x);
    const RunMetrics b = run(s, ch, rc, &y);
    CHECK(x.str() == y.str());
    std::ostringstream ca, cb;
    write_metrics_csv(ca, s, a);
    write_metrics_csv(cb, s, b);
    CHECK(ca.str() == cb.str());

    const auto both = run_lockstep(s, ch, std::vector<RunConfig>{config(PolicyKind::mw, 5000, 6), rc});
    CHECK(both[1].unserved_count == a.unserved_count);
    CHECK(both[1].final_queue_lengths == a.final_queue_lengths);
  }

  TEST_CASE("link-budget runs") {
    std::vector<Position> pos{{0.02, 0.0}, {0.0, 0.14}, {-0.1, 0.05}, {0.05, -0.05}};
    const Scenario s(5, {0, 1, 0, 1}, {400.0, 600.0}, {0.1, 0.2, 0.3, 0.4}, pos, 1);
    const LinkBudget lb;
    const CqiTable table = CqiTable::defaults();
    const RunMetrics a = run(s, lb, table, config(PolicyKind::mw_priority, 3000, 8));
    const RunMetrics b = run(s, ChannelSource::link_budget(s, lb, table, 8), config(PolicyKind::mw_priority, 3000, 8));
    CHECK(a.unserved_count == b.unserved_count);
    // the randomized policy needs a declared state alphabet
    CHECK_THROWS_AS(run(s, lb, table, config(PolicyKind::randomized, 100, 8)), ConfigError);
  }

  TEST_CASE("argument checks") {
    const Scenario s = four_ue();
    const ChannelSource ch = ChannelSource::small_model(s, two_state_model(), 1);
    CHECK_THROWS_AS(run_lockstep(s, ch, std::vector<RunConfig>{config(PolicyKind::mw, 100, 1),
                                                               config(PolicyKind::mw, 200, 1)}),
                    InputError);
    RunConfig bad = config(PolicyKind::mw, 100, 1);
    bad.ema_alpha = 1.0;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
    CHECK(parse_trace_detail("per-second") == TraceDetail::per_second);
    CHECK_THROWS_AS(parse_trace_detail("verbose"), ParseError);

    // infeasible LP: no randomized policy to derive
    const Scenario tight = make_scenario(3, {0, 0, 1, 1}, {1.0, 1.0}, {0.0, 0.0, 0.0, 0.0});
    CHECK_THROWS_AS(run(tight, ChannelSource::small_model(tight, two_state_model(), 1),
                        config(PolicyKind::randomized, 100, 1)),
                    ConfigError);
  }

  TEST_CASE("CSV writers") {
    const Scenario s = four_ue();
    const RunMetrics m = run(s, ChannelSource::small_model(s, two_state_model(), 9), config(PolicyKind::mw, 2000, 9));
    std::ostringstream metrics, series, q;
    write_metrics_csv(metrics, s, m);
    write_series_csv(series, m);
    write_queue_csv(q, m);
    auto count = [](const std::string& text) { return std::count(text.begin(), text.end(), '\n'); };
    CHECK(count(metrics.str()) == 5);
    CHECK(metrics.str().rfind("ue,group,loss_tolerance,unserved_fraction", 0) == 0);
    CHECK(count(series.str()) == 1 + 2 * 4);
    CHECK(count(q.str()) == 1 + 2);
  }
}
