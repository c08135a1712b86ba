// Acceptance report: one PASS/FAIL line per criterion.
//
// Without --strict the exit status is 0 whenever every selected criterion
// ran to completion, so a FAIL line is a finding rather than a crash. With
// --strict any FAIL makes the exit status 1. A criterion that throws exits 2
// either way.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "lms/error.hpp"
#include "lms/scenario_io.hpp"
#include "lms/sim_engine.hpp"
#include "lms/stability.hpp"
#include "lms/verification.hpp"

namespace fs = std::filesystem;
using namespace lms;

namespace {

using clock_type = std::chrono::steady_clock;

double seconds_since(clock_type::time_point t0) {
  return std::chrono::duration<double>(clock_type::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Context {
  fs::path scenarios;
  fs::path cli;
  fs::path scratch;
};

double median(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  const std::size_t n = xs.size();
  return n % 2 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

RunConfig run_config(PolicyKind kind, std::uint64_t horizon, std::uint64_t seed) {
  RunConfig rc;
  rc.policy.kind = kind;
  rc.horizon_subframes = horizon;
  rc.seed = seed;
  return rc;
}

double max_excess(const Scenario& s, const RunMetrics& m) {
  double worst = -1.0;
  for (std::size_t k = 0; k < s.num_ues(); ++k)
    worst = std::max(worst, m.unserved_fraction[k] - s.loss_tolerance(k));
  return worst;
}

bool lp_certified(const ScenarioConfig& cfg, double delta) {
  const ArrivalRates lambda = arrival_rates(cfg.scenario);
  const LpSolution sol = lp_delta_feasible(*cfg.small_model, lambda, delta, cfg.scenario);
  return sol.feasible &&
         check_witness(*cfg.small_model, lambda, delta, cfg.scenario, sol).within(1e-9);
}

// ---------------------------------------------------------------------------

Outcome matching_oracle(const Context&) {
  const auto t0 = clock_type::now();
  const OracleReport r = verify_matching(1000, OracleLimits{}, 2024);
  const double secs = seconds_since(t0);
  return {r.ok() && r.instances >= 1000 && secs < 60.0,
          fmt::format("{} instances, {} comparisons, {} mismatches, {:.1f} s (limit 60 s)", r.instances,
                      r.comparisons, r.mismatches.size(), secs)};
}

Outcome threshold_satisfaction(const Context& ctx) {
  const auto t0 = clock_type::now();
  const ScenarioConfig cfg = load_config(ctx.scenarios / "small_feasible.cfg");
  const Scenario& s = cfg.scenario;
  const bool shape = s.num_ues() == 4 && s.num_groups() == 2 && s.num_prbs() == 3 &&
                     cfg.small_model && cfg.small_model->size() == 2;
  const bool certified = shape && lp_certified(cfg, 0.05);

  int good_seeds = 0;
  double worst = -1.0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const std::vector<RunConfig> cfgs{run_config(PolicyKind::mw, 100'000, seed),
                                      run_config(PolicyKind::mw_priority, 100'000, seed)};
    const auto ms = run_lockstep(s, cfg.make_channel(seed), cfgs);
    const double e = std::max(max_excess(s, ms[0]), max_excess(s, ms[1]));
    worst = std::max(worst, e);
    if (e <= 0.01) ++good_seeds;
  }
  const double secs = seconds_since(t0);
  return {certified && good_seeds >= 9 && secs < 120.0,
          fmt::format("LP(0.05) certified: {}; seeds within tolerance+0.01 for MW and MW-priority: {}/10 "
                      "(need 9); worst excess {:+.4f}; {:.1f} s",
                      certified ? "yes" : "no", good_seeds, worst, secs)};
}

Outcome queue_stability(const Context& ctx) {
  const auto t0 = clock_type::now();
  const ScenarioConfig cfg = load_config(ctx.scenarios / "small_feasible.cfg");
  const Scenario& s = cfg.scenario;
  constexpr std::uint64_t kHorizon = 1'000'000;
  constexpr std::uint64_t kSeed = 1;

  auto traced = [](PolicyKind kind) {
    RunConfig rc = run_config(kind, kHorizon, kSeed);
    rc.queue_sample_stride = 10;
    return rc;
  };
  const std::vector<RunConfig> base{traced(PolicyKind::mw), traced(PolicyKind::mw_priority),
                                    traced(PolicyKind::randomized)};
  const auto feasible_runs = run_lockstep(s, cfg.make_channel(kSeed), base);

  const Scenario scaled = scale_arrivals(s, 1.5);
  const bool lp0_infeasible =
      !lp_delta_feasible(*cfg.small_model, arrival_rates(scaled), 0.0, scaled).feasible;
  const std::vector<RunConfig> fixed{traced(PolicyKind::mw), traced(PolicyKind::mw_priority),
                                     traced(PolicyKind::expq)};
  const auto scaled_runs = run_lockstep(scaled, ChannelSource::small_model(scaled, *cfg.small_model, kSeed), fixed);

  bool pass = lp0_infeasible;
  std::string detail = fmt::format("scaled LP(0) infeasible: {};", lp0_infeasible ? "yes" : "no");
  const char* names[] = {"mw", "mwp", "randomized"};
  for (std::size_t i = 0; i < feasible_runs.size(); ++i) {
    const Verdict v = empirical_stability(feasible_runs[i].queue_trace).verdict;
    pass = pass && v == Verdict::stable;
    detail += fmt::format(" {}={}", names[i], to_string(v));
  }
  const char* scaled_names[] = {"mw", "mwp", "expq"};
  detail += "; x1.5:";
  for (std::size_t i = 0; i < scaled_runs.size(); ++i) {
    const Verdict v = empirical_stability(scaled_runs[i].queue_trace).verdict;
    pass = pass && v == Verdict::unstable;
    detail += fmt::format(" {}={}", scaled_names[i], to_string(v));
  }
  const double secs = seconds_since(t0);
  return {pass && secs < 120.0, detail + fmt::format("; {:.1f} s", secs)};
}

Outcome expq_violation(const Context& ctx) {
  const ScenarioConfig cfg = load_config(ctx.scenarios / "expq_stress.cfg");
  const Scenario& s = cfg.scenario;
  const auto tol = s.loss_tolerances();
  const bool heterogeneous = std::adjacent_find(tol.begin(), tol.end(), std::not_equal_to<>()) != tol.end();
  const bool certified = cfg.small_model && lp_certified(cfg, 0.05);

  int hits = 0;
  double worst_expq = -1.0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const std::vector<RunConfig> cfgs{run_config(PolicyKind::mw, 100'000, seed),
                                      run_config(PolicyKind::expq, 100'000, seed)};
    const auto ms = run_lockstep(s, cfg.make_channel(seed), cfgs);
    const double e = max_excess(s, ms[1]);
    worst_expq = std::max(worst_expq, e);
    if (e > 0.02 && max_excess(s, ms[0]) <= 0.0) ++hits;
  }
  return {heterogeneous && certified && hits >= 7,
          fmt::format("heterogeneous tolerances: {}; LP(0.05) certified: {}; seeds with EXP-Q excess > 0.02 "
                      "and MW satisfied: {}/10 (need 7); largest EXP-Q excess {:+.4f}",
                      heterogeneous ? "yes" : "no", certified ? "yes" : "no", hits, worst_expq)};
}

Outcome burstiness(const Context& ctx) {
  const ScenarioConfig cfg = load_config(ctx.scenarios / "table1_scale.cfg");
  const Scenario& s = cfg.scenario;
  const bool shape = s.num_ues() == 30 && s.num_groups() == 3 && s.num_prbs() == 20;
  // the UE with the largest tolerance, lowest index on ties
  const auto tol = s.loss_tolerances();
  const std::size_t ue = static_cast<std::size_t>(std::max_element(tol.begin(), tol.end()) - tol.begin());

  std::vector<double> run[3], spread[3];
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const std::vector<RunConfig> cfgs{run_config(PolicyKind::mw_priority, 100'000, seed),
                                      run_config(PolicyKind::mw, 100'000, seed),
                                      run_config(PolicyKind::expq, 100'000, seed)};
    const auto ms = run_lockstep(s, cfg.make_channel(seed), cfgs);
    for (std::size_t p = 0; p < 3; ++p) {
      run[p].push_back(static_cast<double>(ms[p].max_unserved_run[ue]));
      spread[p].push_back(ms[p].per_second_loss_std[ue]);
    }
  }
  double r[3], d[3];
  for (std::size_t p = 0; p < 3; ++p) {
    r[p] = median(run[p]);
    d[p] = median(spread[p]);
  }
  const bool runs_ordered = r[0] <= r[1] && r[1] <= r[2];
  const bool spread_ordered = d[0] <= d[1] && d[1] <= d[2];
  return {shape && runs_ordered && spread_ordered,
          fmt::format("UE {} (tolerance {}); median max run mwp/mw/expq = {}/{}/{} ({}); median per-second "
                      "loss std % = {:.3f}/{:.3f}/{:.3f} ({})",
                      ue, tol[ue], r[0], r[1], r[2], runs_ordered ? "ordered" : "not ordered", d[0], d[1], d[2],
                      spread_ordered ? "ordered" : "not ordered")};
}

Outcome complexity(const Context&) {
  // best of several repetitions filters scheduler noise out of each mean
  auto best = [](std::size_t l, std::size_t n, std::size_t reps, bool brute) {
    DecideTiming out;
    for (int rep = 0; rep < 5; ++rep) {
      const DecideTiming t = time_decide(l, n, 10 * l, reps, 7 + rep, brute);
      if (rep == 0 || t.decide_us < out.decide_us) out.decide_us = t.decide_us;
      if (rep == 0 || t.brute_force_us < out.brute_force_us) out.brute_force_us = t.brute_force_us;
    }
    return out;
  };
  const DecideTiming a = best(4, 20, 4000, false);
  const DecideTiming b = best(8, 40, 2000, false);
  const DecideTiming c = best(16, 80, 500, false);
  const DecideTiming small = best(3, 8, 2000, true);

  // N L^2 grows 8x per step; "within 4x" accepts ratios in [2, 32]
  const double r1 = b.decide_us / a.decide_us;
  const double r2 = c.decide_us / b.decide_us;
  auto within = [](double ratio) { return ratio >= 8.0 / 4.0 && ratio <= 8.0 * 4.0; };
  const double speedup = small.brute_force_us / small.decide_us;
  const bool fast = a.decide_us < 1000.0;
  const bool scaling = within(r1) && within(r2);
  const bool beats = speedup >= 100.0;
  return {fast && scaling && beats,
          fmt::format("decide (4,20) {:.2f} us (limit 1000); growth x{:.2f}, x{:.2f} (predicted x8, accepted "
                      "[2, 32]); brute force at (3,8) {:.1f} us vs decide {:.2f} us = x{:.1f} (need 100)",
                      a.decide_us, r1, r2, small.brute_force_us, small.decide_us, speedup)};
}

SmallChannelModel random_model(std::size_t m, std::size_t n, std::size_t states, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  SmallChannelModel model;
  double total = 0.0;
  for (std::size_t c = 0; c < states; ++c) {
    Matrix<double> r(m, n);
    const double p = u(rng);
    for (double& x : r.data()) x = u(rng) < p ? 1.0 : 0.0;
    model.states.push_back(std::move(r));
    model.probabilities.push_back(0.1 + u(rng));
    total += model.probabilities.back();
  }
  double head = 0.0;
  for (std::size_t c = 0; c + 1 < states; ++c) head += (model.probabilities[c] /= total);
  model.probabilities.back() = 1.0 - head;
  return model;
}

Outcome lp_soundness(const Context&) {
  Rng rng = make_rng(99, Stream::channel_state);
  std::uniform_int_distribution<std::size_t> pick(0, 1000);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::vector<double> grid{0.0, 0.01, 0.02, 0.05, 0.1, 0.15, 0.2, 0.3, 0.5};

  std::size_t witnesses = 0, bad_witness = 0, non_monotone = 0, feasible_models = 0;
  for (int inst = 0; inst < 50; ++inst) {
    const std::size_t l = 1 + pick(rng) % 3, n = l + pick(rng) % 3, m = l + pick(rng) % 4, states = 1 + pick(rng) % 4;
    std::vector<std::size_t> group(m);
    for (std::size_t k = 0; k < m; ++k) group[k] = k < l ? k : pick(rng) % l;
    std::vector<double> tol(m);
    for (double& t : tol) t = 0.05 + 0.9 * u(rng);
    const Scenario s(n, group, std::vector<double>(l, 1.0), tol, std::vector<Position>(m), 1);
    const SmallChannelModel model = random_model(m, n, states, rng);
    const ArrivalRates lambda = arrival_rates(s);

    bool seen_infeasible = false;
    for (double delta : grid) {
      const LpSolution sol = lp_delta_feasible(model, lambda, delta, s);
      if (sol.feasible) {
        ++witnesses;
        if (!check_witness(model, lambda, delta, s, sol).within(1e-9)) ++bad_witness;
        if (seen_infeasible) ++non_monotone;
      } else {
        seen_infeasible = true;
      }
    }
    // the optimum itself must be feasible and anything beyond it infeasible
    if (const auto dmax = max_feasible_delta(model, lambda, s)) {
      ++feasible_models;
      if (!lp_delta_feasible(model, lambda, std::max(0.0, *dmax - 1e-7), s).feasible) ++non_monotone;
      if (lp_delta_feasible(model, lambda, *dmax + 1e-6, s).feasible) ++non_monotone;
    }
  }
  return {bad_witness == 0 && non_monotone == 0,
          fmt::format("50 models ({} with LP(0) feasible); {} witnesses rechecked, {} above 1e-9; {} monotonicity "
                      "breaks",
                      feasible_models, witnesses, bad_witness, non_monotone)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome determinism(const Context& ctx) {
  const fs::path root = ctx.scratch / "determinism";
  fs::remove_all(root);
  struct Case {
    std::string scenario, policy, horizon;
  };
  const std::vector<Case> cases{{"small_feasible", "mwp", "20000"}, {"table1_scale", "expq", "5000"}};
  const std::vector<std::string> files{"trace.jsonl", "metrics.csv", "series.csv", "queues.csv"};

  std::size_t compared = 0, differing = 0;
  for (const Case& c : cases) {
    const fs::path first = root / "first", second = root / "second";
    const std::string run1 = fmt::format("\"{}\" run --scenario \"{}\" --policy {} --horizon {} --seed 3 "
                                         "--trace per-subframe --out-dir \"{}\" > /dev/null",
                                         ctx.cli.string(), (ctx.scenarios / (c.scenario + ".cfg")).string(), c.policy,
                                         c.horizon, first.string());
    if (std::system(run1.c_str()) != 0) return {false, "first run failed: " + run1};
    const fs::path dir1 = first / fmt::format("{}-{}-s3", c.scenario, c.policy);
    const std::string run2 = fmt::format("\"{}\" run --manifest \"{}\" --out-dir \"{}\" > /dev/null",
                                         ctx.cli.string(), (dir1 / "manifest.json").string(), second.string());
    if (std::system(run2.c_str()) != 0) return {false, "replay failed: " + run2};
    const fs::path dir2 = second / fmt::format("replay-{}-s3", c.policy);
    for (const auto& f : files) {
      ++compared;
      const std::string a = slurp(dir1 / f), b = slurp(dir2 / f);
      if (a.empty() || a != b) ++differing;
    }
    fs::remove_all(first);
    fs::remove_all(second);
  }
  return {differing == 0, fmt::format("{} file pairs compared across {} replayed runs, {} differ or are empty",
                                      compared, cases.size(), differing)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance report"};
  Context ctx;
  std::string scenarios = LMS_SCENARIO_DIR;
  std::string cli;
  std::vector<int> only;
  bool strict = false;
  app.add_option("--scenarios", scenarios, "Directory holding the shipped scenario files");
  app.add_option("--cli", cli, "Path to the lms executable (needed by criterion 8)");
  app.add_option("--only", only, "Run only these criteria")->delimiter(',')->check(CLI::Range(1, 8));
  app.add_flag("--strict", strict, "Exit 1 when any criterion fails");
  CLI11_PARSE(app, argc, argv);

  ctx.scenarios = scenarios;
  ctx.cli = cli;
  ctx.scratch = fs::temp_directory_path() / fmt::format("lms-acceptance-{}", ::getpid());

  const std::vector<std::pair<const char*, Outcome (*)(const Context&)>> criteria{
      {"matching equals exhaustive search", matching_oracle},
      {"MW and MW-priority meet tolerances", threshold_satisfaction},
      {"queue stability verdicts", queue_stability},
      {"EXP-Q violates a tolerance where MW does not", expq_violation},
      {"burstiness ordering MW-priority <= MW <= EXP-Q", burstiness},
      {"decide() cost and scaling", complexity},
      {"LP witness soundness and monotonicity", lp_soundness},
      {"replayed runs are byte-identical", determinism},
  };
  const std::set<int> selected(only.begin(), only.end());

  int failures = 0;
  int errors = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!selected.empty() && !selected.count(id)) continue;
    if (id == 8 && ctx.cli.empty()) {
      std::cout << fmt::format("criterion 8 FAIL  {}: --cli not given", criteria[i].first) << std::endl;
      ++failures;
      continue;
    }
    Outcome o;
    try {
      o = criteria[i].second(ctx);
    } catch (const std::exception& e) {
      o = {false, fmt::format("threw: {}", e.what())};
      ++errors;
    }
    if (!o.pass) ++failures;
    std::cout << fmt::format("criterion {} {}  {}: {}", id, o.pass ? "PASS" : "FAIL", criteria[i].first, o.detail)
              << std::endl;
  }
  fs::remove_all(ctx.scratch);
  if (errors) return 2;
  return strict && failures ? 1 : 0;
}
