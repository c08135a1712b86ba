// lms: command-line front end for the multicast scheduling simulator.

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>
#include <nlohmann/json.hpp>

#include "lms/error.hpp"
#include "lms/matching.hpp"
#include "lms/scenario_io.hpp"
#include "lms/sim_engine.hpp"
#include "lms/stability.hpp"
#include "lms/verification.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;
constexpr int kExitValidation = 3;

struct RunOptions {
  std::string scenario;
  std::string manifest;
  std::string policy;
  std::optional<std::uint64_t> horizon;
  std::optional<std::uint64_t> seed;
  std::vector<std::uint64_t> seeds;
  std::string trace;
  std::string out_dir;
  std::string name;
};

fs::path output_root(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("LMS_OUT_DIR"); env && *env) return env;
  return "runs";
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw lms::Error(fmt::format("cannot write '{}'", path.string()));
  out << text;
}

template <typename Fn>
void write_with(const fs::path& path, Fn&& fn) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw lms::Error(fmt::format("cannot write '{}'", path.string()));
  fn(out);
}

/// Scenario file (or manifest replay) plus command-line overrides.
lms::ScenarioConfig resolve_config(const RunOptions& o) {
  lms::ScenarioConfig cfg;
  if (!o.manifest.empty()) {
    const json m = json::parse(lms::read_text_file(o.manifest), nullptr, false);
    if (m.is_discarded() || !m.contains("config"))
      throw lms::ParseError(fmt::format("{}: not a run manifest", o.manifest));
    cfg = lms::parse_config(m.at("config").get<std::string>());
  } else {
    cfg = lms::load_config(o.scenario);
  }
  if (!o.policy.empty()) cfg.run.policy.kind = lms::parse_policy_kind(o.policy);
  if (o.horizon) cfg.run.horizon_subframes = *o.horizon;
  if (o.seed) cfg.run.seed = *o.seed;
  if (!o.trace.empty()) cfg.run.trace_detail = lms::parse_trace_detail(o.trace);
  cfg.run.validate();
  return cfg;
}

std::string scenario_stem(const RunOptions& o) {
  if (!o.name.empty()) return o.name;
  if (!o.scenario.empty()) return fs::path(o.scenario).stem().string();
  return "replay";
}

json manifest_json(const std::string& command, const lms::ScenarioConfig& cfg, double wall_s) {
  return json{{"tool", "lms"},
              {"version", LMS_VERSION},
              {"compiler", __VERSION__},
              {"command", command},
              {"seed", cfg.run.seed},
              {"policy", std::string(lms::to_string(cfg.run.policy.kind))},
              {"horizon", cfg.run.horizon_subframes},
              {"trace", std::string(lms::to_string(cfg.run.trace_detail))},
              {"started_utc", utc_timestamp()},
              {"wall_time_s", wall_s},
              {"config", lms::serialize_config(cfg)}};
}

void write_run_outputs(const fs::path& dir, const lms::Scenario& s, const lms::RunMetrics& m) {
  write_with(dir / "metrics.csv", [&](std::ostream& os) { lms::write_metrics_csv(os, s, m); });
  write_with(dir / "series.csv", [&](std::ostream& os) { lms::write_series_csv(os, m); });
  write_with(dir / "queues.csv", [&](std::ostream& os) { lms::write_queue_csv(os, m); });
}

/// One replica into its own run directory. Returns the metrics.
lms::RunMetrics run_one(const lms::ScenarioConfig& cfg, const fs::path& dir) {
  fs::create_directories(dir);
  write_file(dir / "config.cfg", lms::serialize_config(cfg));
  const auto start = std::chrono::steady_clock::now();

  std::optional<std::ofstream> trace;
  if (cfg.run.trace_detail != lms::TraceDetail::none) {
    trace.emplace(dir / "trace.jsonl", std::ios::binary);
    if (!*trace) throw lms::Error(fmt::format("cannot write '{}'", (dir / "trace.jsonl").string()));
  }
  const lms::ChannelSource channel = cfg.make_channel(cfg.run.seed);
  const lms::RunMetrics m = lms::run(cfg.scenario, channel, cfg.run, trace ? &*trace : nullptr);
  write_run_outputs(dir, cfg.scenario, m);

  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_file(dir / "manifest.json", manifest_json("run", cfg, wall).dump(2) + "\n");
  return m;
}

std::size_t count_satisfied(const lms::RunMetrics& m) {
  return static_cast<std::size_t>(std::count(m.satisfied.begin(), m.satisfied.end(), true));
}

int cmd_run(const RunOptions& o) {
  const lms::ScenarioConfig base = resolve_config(o);
  const fs::path root = output_root(o.out_dir);
  const std::string stem = scenario_stem(o);
  const std::string policy(lms::to_string(base.run.policy.kind));

  if (o.seeds.empty()) {
    const fs::path dir = root / fmt::format("{}-{}-s{}", stem, policy, base.run.seed);
    const lms::RunMetrics m = run_one(base, dir);
    fmt::print("{}: {}/{} UEs satisfied\n", dir.string(), count_satisfied(m), m.satisfied.size());
    return 0;
  }

  // batch: one replica per seed, each with its own directory and writer
  std::vector<lms::RunMetrics> results(o.seeds.size());
  std::vector<std::exception_ptr> errors(o.seeds.size());
  std::vector<fs::path> dirs(o.seeds.size());
  {
    std::vector<std::jthread> workers;
    for (std::size_t i = 0; i < o.seeds.size(); ++i) {
      lms::ScenarioConfig cfg = base;
      cfg.run.seed = o.seeds[i];
      dirs[i] = root / fmt::format("{}-{}-s{}", stem, policy, o.seeds[i]);
      workers.emplace_back([&, i, cfg = std::move(cfg)] {
        try {
          results[i] = run_one(cfg, dirs[i]);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      });
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  fs::create_directories(root);
  write_with(root / fmt::format("{}-{}-batch.csv", stem, policy), [&](std::ostream& os) {
    os << "seed,run_dir,satisfied,num_ues,max_unserved_fraction\n";
    for (std::size_t i = 0; i < o.seeds.size(); ++i) {
      const auto& m = results[i];
      const double worst = *std::max_element(m.unserved_fraction.begin(), m.unserved_fraction.end());
      os << fmt::format("{},{},{},{},{}\n", o.seeds[i], dirs[i].filename().string(), count_satisfied(m),
                        m.satisfied.size(), worst);
    }
  });
  for (std::size_t i = 0; i < o.seeds.size(); ++i)
    fmt::print("{}: {}/{} UEs satisfied\n", dirs[i].string(), count_satisfied(results[i]),
               results[i].satisfied.size());
  return 0;
}

int cmd_compare(const RunOptions& o) {
  const lms::ScenarioConfig base = resolve_config(o);
  const fs::path dir = output_root(o.out_dir) / fmt::format("{}-compare-s{}", scenario_stem(o), base.run.seed);
  fs::create_directories(dir);
  write_file(dir / "config.cfg", lms::serialize_config(base));
  const auto start = std::chrono::steady_clock::now();

  const std::array kinds{lms::PolicyKind::mw, lms::PolicyKind::mw_priority, lms::PolicyKind::expq};
  std::vector<lms::RunConfig> cfgs;
  std::vector<std::unique_ptr<std::ofstream>> files;
  std::vector<std::ostream*> traces;
  for (lms::PolicyKind kind : kinds) {
    lms::RunConfig rc = base.run;
    rc.policy.kind = kind;
    cfgs.push_back(rc);
    const fs::path sub = dir / std::string(lms::to_string(kind));
    fs::create_directories(sub);
    if (rc.trace_detail != lms::TraceDetail::none) {
      files.push_back(std::make_unique<std::ofstream>(sub / "trace.jsonl", std::ios::binary));
      traces.push_back(files.back().get());
    } else {
      traces.push_back(nullptr);
    }
  }

  const lms::ChannelSource channel = base.make_channel(base.run.seed);
  const std::vector<lms::RunMetrics> ms = lms::run_lockstep(base.scenario, channel, cfgs, traces);
  files.clear();

  for (std::size_t p = 0; p < kinds.size(); ++p)
    write_run_outputs(dir / std::string(lms::to_string(kinds[p])), base.scenario, ms[p]);

  write_with(dir / "compare.csv", [&](std::ostream& os) {
    os << "ue,group,loss_tolerance";
    for (const char* col : {"unserved_fraction", "satisfied", "max_unserved_run", "per_second_loss_std"})
      for (lms::PolicyKind kind : kinds) os << ',' << lms::to_string(kind) << '_' << col;
    os << '\n';
    const lms::Scenario& s = base.scenario;
    for (std::size_t k = 0; k < s.num_ues(); ++k) {
      os << fmt::format("{},{},{}", k, s.group_of(k), s.loss_tolerance(k));
      for (const auto& m : ms) os << fmt::format(",{}", m.unserved_fraction[k]);
      for (const auto& m : ms) os << fmt::format(",{}", m.satisfied[k] ? 1 : 0);
      for (const auto& m : ms) os << fmt::format(",{}", m.max_unserved_run[k]);
      for (const auto& m : ms) os << fmt::format(",{}", m.per_second_loss_std[k]);
      os << '\n';
    }
  });

  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  json manifest = manifest_json("compare", base, wall);
  manifest["policy"] = "mw,mwp,expq";
  write_file(dir / "manifest.json", manifest.dump(2) + "\n");

  for (std::size_t p = 0; p < kinds.size(); ++p)
    fmt::print("{:>5}: {}/{} UEs satisfied\n", lms::to_string(kinds[p]), count_satisfied(ms[p]),
               ms[p].satisfied.size());
  fmt::print("{}\n", dir.string());
  return 0;
}

int cmd_verify_matching(std::size_t instances, const lms::OracleLimits& limits, std::uint64_t seed) {
  const auto start = std::chrono::steady_clock::now();
  const lms::OracleReport r = lms::verify_matching(instances, limits, seed);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  for (const auto& mm : r.mismatches)
    fmt::print("mismatch: instance {} policy {} matched {} exhaustive {}\n", mm.instance,
               lms::to_string(mm.kind), mm.matched, mm.exhaustive);
  fmt::print("{} instances, {} comparisons, {} mismatches, {:.2f} s\n", r.instances, r.comparisons,
             r.mismatches.size(), wall);
  return r.ok() ? 0 : kExitRuntime;
}

std::string allocation_text(const lms::AllocationVector& b) {
  return fmt::format("[{}]", fmt::join(b.prb, ","));
}

int cmd_stability_check(const std::string& scenario, const std::string& model_path,
                        std::optional<double> delta, bool find_max) {
  const lms::ScenarioConfig cfg = lms::load_config(scenario);
  const lms::Scenario& s = cfg.scenario;
  lms::SmallChannelModel model;
  if (!model_path.empty())
    model = lms::load_small_model(model_path, s.num_ues(), s.num_prbs());
  else if (cfg.small_model)
    model = *cfg.small_model;
  else
    throw lms::ConfigError("no [small_model] section in the scenario and no --model given");
  const lms::ArrivalRates lambda = lms::arrival_rates(s);

  if (find_max) {
    const auto best = lms::max_feasible_delta(model, lambda, s);
    if (best)
      fmt::print("max feasible delta: {:.9f}\n", *best);
    else
      fmt::print("infeasible even at delta = 0\n");
    if (!delta) return 0;
  }
  const double d = delta.value_or(cfg.run.policy.randomized_delta);
  const lms::LpSolution sol = lms::lp_delta_feasible(model, lambda, d, s);
  if (!sol.feasible) {
    fmt::print("delta = {}: infeasible\n", d);
    return 0;
  }
  const lms::WitnessResiduals res = lms::check_witness(model, lambda, d, s, sol);
  fmt::print("delta = {}: feasible (achieved margin {:.9f})\n", d, sol.achieved_delta);
  fmt::print("witness residuals: min weight {:.3g}, row sum error {:.3g}, service shortfall {:.3g}\n",
             res.min_weight, res.max_row_sum_error, res.max_service_shortfall);
  const lms::RandomizedTable table = lms::randomized_table(sol);
  for (std::size_t c = 0; c < table.per_state.size(); ++c) {
    fmt::print("state {} (p = {}):\n", c, model.probabilities[c]);
    for (const auto& [b, p] : table.per_state[c]) fmt::print("  {} w = {:.9f}\n", allocation_text(b), p);
  }
  return 0;
}

int cmd_bench(std::size_t l, std::size_t n, std::size_t m, std::size_t reps, std::uint64_t seed, bool brute) {
  const lms::DecideTiming t = lms::time_decide(l, n, m == 0 ? 2 * l : m, reps, seed, brute);
  fmt::print("{:>4} {:>4} {:>4} {:>14} {:>16} {:>12} {:>10}\n", "L", "N", "M", "decide_us", "brute_force_us",
             "allocations", "ratio");
  if (brute)
    fmt::print("{:>4} {:>4} {:>4} {:>14.3f} {:>16.3f} {:>12} {:>10.1f}\n", t.num_groups, t.num_prbs, t.num_ues,
               t.decide_us, t.brute_force_us, t.allocations, t.brute_force_us / t.decide_us);
  else
    fmt::print("{:>4} {:>4} {:>4} {:>14.3f} {:>16} {:>12} {:>10}\n", t.num_groups, t.num_prbs, t.num_ues,
               t.decide_us, "-", t.allocations, "-");
  return 0;
}

int cmd_match(const std::string& path) {
  const lms::WeightMatrix w = lms::parse_weight_matrix(lms::read_text_file(path));
  const lms::Matching m = lms::max_weight_matching(w);
  fmt::print("allocation {}\nweight {}\n", allocation_text(lms::matching_to_allocation(m)), m.total_weight);
  return 0;
}

int cmd_emit_defaults(const std::string& out) {
  const std::string text = lms::serialize_config(lms::default_config());
  if (out.empty() || out == "-")
    std::cout << text;
  else
    write_file(out, text);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Loss-tolerant multicast scheduling simulator"};
  app.set_version_flag("--version", LMS_VERSION);
  app.require_subcommand(1, 1);

  RunOptions ro;
  auto add_run_flags = [&](CLI::App* sub) {
    sub->add_option("--scenario", ro.scenario, "Scenario file")->check(CLI::ExistingFile);
    sub->add_option("--manifest", ro.manifest, "Replay the configuration stored in a run manifest")
        ->check(CLI::ExistingFile);
    sub->add_option("--horizon", ro.horizon, "Sub-frames to simulate");
    sub->add_option("--seed", ro.seed, "Run seed");
    sub->add_option("--trace", ro.trace, "none, per-second or per-subframe");
    sub->add_option("--out-dir", ro.out_dir, "Output root (default $LMS_OUT_DIR or ./runs)");
    sub->add_option("--name", ro.name, "Run directory prefix (default: scenario file name)");
  };

  auto* run = app.add_subcommand("run", "Simulate one policy");
  add_run_flags(run);
  run->add_option("--policy", ro.policy, "mw, mwp, expq or randomized");
  run->add_option("--seeds", ro.seeds, "Comma-separated seeds run as a concurrent batch")->delimiter(',');

  auto* compare = app.add_subcommand("compare", "Run MW, MW-priority and EXP-Q on common random numbers");
  add_run_flags(compare);

  std::size_t instances = 1000;
  lms::OracleLimits limits;
  std::uint64_t vseed = 1;
  auto* verify = app.add_subcommand("verify-matching", "Differential test of matching against exhaustive search");
  verify->add_option("--instances", instances, "Random instances")->capture_default_str();
  verify->add_option("--max-l", limits.max_groups, "Largest group count")->capture_default_str()->check(CLI::Range(1, 8));
  verify->add_option("--max-n", limits.max_prbs, "Largest PRB count")->capture_default_str()->check(CLI::Range(1, 12));
  verify->add_option("--max-m", limits.max_ues, "Largest UE count")->capture_default_str()->check(CLI::Range(1, 64));
  verify->add_option("--max-q", limits.max_queue, "Largest queue length")->capture_default_str();
  verify->add_option("--seed", vseed, "Generator seed")->capture_default_str();

  std::string sc_scenario, sc_model;
  std::optional<double> sc_delta;
  bool sc_max = false;
  auto* stab = app.add_subcommand("stability-check", "LP feasibility of the arrival rates on a small channel model");
  stab->add_option("--scenario", sc_scenario, "Scenario file (groups, UEs, optional [small_model])")
      ->required()
      ->check(CLI::ExistingFile);
  stab->add_option("--model", sc_model, "File whose [small_model] section overrides the scenario's")
      ->check(CLI::ExistingFile);
  stab->add_option("--delta", sc_delta, "Slack delta (default: policy.delta)");
  stab->add_flag("--max-delta", sc_max, "Also report the largest feasible delta");

  std::size_t bl = 3, bn = 8, bm = 0, breps = 200;
  std::uint64_t bseed = 1;
  bool no_brute = false;
  auto* bench = app.add_subcommand("bench", "Time decide() against brute_force_decide()");
  bench->add_option("--l", bl, "Groups")->capture_default_str()->check(CLI::PositiveNumber);
  bench->add_option("--n", bn, "PRBs")->capture_default_str()->check(CLI::PositiveNumber);
  bench->add_option("--m", bm, "UEs (default 2L)");
  bench->add_option("--reps", breps, "Instances timed")->capture_default_str()->check(CLI::PositiveNumber);
  bench->add_option("--seed", bseed, "Generator seed")->capture_default_str();
  bench->add_flag("--no-brute-force", no_brute, "Skip the exhaustive search (large L, N)");

  std::string emit_out;
  auto* emit = app.add_subcommand("emit-defaults", "Write the default scenario configuration");
  emit->add_option("--out", emit_out, "Output file (default stdout)");

  std::string matrix;
  auto* match = app.add_subcommand("match", "Max-weight matching of a group x PRB weight matrix file");
  match->add_option("--matrix", matrix, "Whitespace-separated rows")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    if (*run || *compare) {
      if (ro.scenario.empty() == ro.manifest.empty()) {
        std::cerr << "error: exactly one of --scenario and --manifest is required\n";
        return kExitUsage;
      }
      return *run ? cmd_run(ro) : cmd_compare(ro);
    }
    if (*verify) return cmd_verify_matching(instances, limits, vseed);
    if (*stab) return cmd_stability_check(sc_scenario, sc_model, sc_delta, sc_max);
    if (*bench) {
      if (!no_brute && lms::count_allocations(bl, bn) > 1'000'000) {
        std::cerr << "error: brute-force search would enumerate more than 10^6 allocations; pass --no-brute-force\n";
        return kExitUsage;
      }
      return cmd_bench(bl, bn, bm, breps, bseed, !no_brute);
    }
    if (*emit) return cmd_emit_defaults(emit_out);
    if (*match) return cmd_match(matrix);
  } catch (const lms::ValidationError& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const lms::ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const lms::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}
