#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <doctest.h>
#include <json.hpp>

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

const fs::path kScenarios = LMS_SCENARIO_DIR;

struct Result {
  int code = -1;
  std::string out;
};

// Runs the CLI with `args`, capturing stdout and stderr together.
Result lms(const std::string& args, const std::string& env = "") {
  const fs::path log = fs::temp_directory_path() / "lms-cli-test.log";
  const std::string cmd = env + " \"" LMS_CLI "\" " + args + " > \"" + log.string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  std::ifstream in(log);
  std::stringstream ss;
  ss << in.rdbuf();
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, ss.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct TempDir {
  fs::path path = fs::temp_directory_path() / "lms-cli-test-out";
  TempDir() {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("usage errors exit 2") {
    CHECK(lms("").code == 2);
    CHECK(lms("frobnicate").code == 2);
    CHECK(lms("run --policy mw").code == 2);
    CHECK(lms("bench --l 8 --n 40").code == 2);
    CHECK(lms("--help").code == 0);
  }

  TEST_CASE("run writes a complete run directory") {
    TempDir tmp;
    const Result r = lms("run --scenario \"" + (kScenarios / "small_feasible.cfg").string() +
                         "\" --policy mw --horizon 3000 --seed 7 --trace per-second --out-dir \"" + tmp.path.string() +
                         "\"");
    REQUIRE(r.code == 0);
    const fs::path dir = tmp.path / "small_feasible-mw-s7";
    for (const char* f : {"config.cfg", "metrics.csv", "series.csv", "queues.csv", "trace.jsonl", "manifest.json"})
      CHECK(fs::exists(dir / f));
    const json m = json::parse(slurp(dir / "manifest.json"));
    CHECK(m["seed"] == 7);
    CHECK(m["policy"] == "mw");
    CHECK(m["horizon"] == 3000);
    CHECK(m.contains("version"));
    CHECK(m.contains("wall_time_s"));
    // 4 UEs plus header
    const std::string metrics = slurp(dir / "metrics.csv");
    CHECK(std::count(metrics.begin(), metrics.end(), '\n') == 5);
  }

  TEST_CASE("output root falls back to the environment") {
    TempDir tmp;
    const Result r = lms("run --scenario \"" + (kScenarios / "small_feasible.cfg").string() + "\" --horizon 1000",
                         "LMS_OUT_DIR=\"" + tmp.path.string() + "\"");
    REQUIRE(r.code == 0);
    CHECK(fs::exists(tmp.path / "small_feasible-mw-s1" / "metrics.csv"));
  }

  TEST_CASE("batches and comparisons") {
    TempDir tmp;
    const std::string scen = "\"" + (kScenarios / "small_feasible.cfg").string() + "\"";
    REQUIRE(lms("run --scenario " + scen + " --policy mwp --horizon 2000 --seeds 1,2,3 --out-dir \"" +
                tmp.path.string() + "\"")
                .code == 0);
    for (int s = 1; s <= 3; ++s) CHECK(fs::exists(tmp.path / ("small_feasible-mwp-s" + std::to_string(s))));
    const std::string batch = slurp(tmp.path / "small_feasible-mwp-batch.csv");
    CHECK(std::count(batch.begin(), batch.end(), '\n') == 4);

    REQUIRE(lms("compare --scenario " + scen + " --horizon 2000 --seed 4 --out-dir \"" + tmp.path.string() + "\"")
                .code == 0);
    const fs::path dir = tmp.path / "small_feasible-compare-s4";
    const std::string csv = slurp(dir / "compare.csv");
    CHECK(csv.find("mw_unserved_fraction") != std::string::npos);
    CHECK(csv.find("expq_per_second_loss_std") != std::string::npos);
    for (const char* p : {"mw", "mwp", "expq"}) CHECK(fs::exists(dir / p / "metrics.csv"));
  }

  TEST_CASE("bad input exits 3") {
    TempDir tmp;
    const fs::path bad = tmp.path / "bad.cfg";
    std::ofstream(bad) << "[groups]\nstream_rates = 1\n[ues]\ngroup = 0\nloss_tolerance = 1.0\n";
    const Result r = lms("run --scenario \"" + bad.string() + "\" --out-dir \"" + tmp.path.string() + "\"");
    CHECK(r.code == 3);
    CHECK(r.out.find("loss_tolerance") != std::string::npos);

    std::ofstream(tmp.path / "junk.cfg") << "[groups]\nstream_rates = quick\n";
    CHECK(lms("run --scenario \"" + (tmp.path / "junk.cfg").string() + "\"").code == 3);
    // randomized policy on a link-budget channel
    CHECK(lms("run --scenario \"" + (kScenarios / "table1_scale.cfg").string() +
              "\" --policy randomized --horizon 10 --out-dir \"" + tmp.path.string() + "\"")
              .code == 3);
  }

  TEST_CASE("analysis subcommands") {
    const Result v = lms("verify-matching --instances 200 --max-l 3 --max-n 6 --seed 5");
    CHECK(v.code == 0);
    CHECK(v.out.find("0 mismatches") != std::string::npos);

    const Result st = lms("stability-check --scenario \"" + (kScenarios / "small_feasible.cfg").string() +
                          "\" --max-delta");
    CHECK(st.code == 0);
    CHECK(st.out.find("max feasible delta: 0.125") != std::string::npos);

    const Result b = lms("bench --l 2 --n 4 --reps 20");
    CHECK(b.code == 0);

    TempDir tmp;
    std::ofstream(tmp.path / "w.txt") << "3 1\n2 4\n";
    const Result m = lms("match --matrix \"" + (tmp.path / "w.txt").string() + "\"");
    CHECK(m.code == 0);
    CHECK(m.out.find("allocation [1,2]") != std::string::npos);
    CHECK(m.out.find("weight 7") != std::string::npos);

    const fs::path cfg = tmp.path / "defaults.cfg";
    REQUIRE(lms("emit-defaults --out \"" + cfg.string() + "\"").code == 0);
    CHECK(lms("run --scenario \"" + cfg.string() + "\" --horizon 200 --out-dir \"" + tmp.path.string() + "\"").code ==
          0);
  }
}
