#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "pulsecal/conformal.hpp"
#include "pulsecal/error.hpp"
#include "pulsecal/harness/commands.hpp"
#include "pulsecal/harness/config.hpp"
#include "pulsecal/harness/csv_io.hpp"
#include "pulsecal/harness/experiments.hpp"
#include "pulsecal/harness/manifest.hpp"
#include "pulsecal/rng.hpp"
#include "pulsecal/simgen.hpp"

using namespace pulsecal;
using namespace pulsecal::harness;
namespace fs = std::filesystem;
using Catch::Approx;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("pulsecal-test-" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t line_count(const fs::path& path) {
  std::ifstream in(path);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    n += line.empty() ? 0 : 1;
  }
  return n;
}

const char* kSmallConfig = R"(# tiny run
experiment = small
seed = 17
stable_agents = 4
volatile_agents = 2
length = 400
horizons = 1, 6
curve_horizon = 6
rank_horizon = 6
resamples = 100
samples = 2000
rho_grid = -0.5, 0, 0.5
draws = 40
shift_time = 250
pre_window = 50
final_window = 50
bootstrap_window = 48
)";

int cli(std::vector<std::string> args, std::string* err_text = nullptr) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = run_cli(args, out, err);
  if (err_text != nullptr) {
    *err_text = err.str();
  }
  return code;
}

}  // namespace

TEST_CASE("config: parse, defaults and canonical round trip") {
  const auto c = parse_config(kSmallConfig);
  CHECK(c.experiment == "small");
  CHECK(c.seed == 17u);
  CHECK(c.horizons == std::vector<std::size_t>{1, 6});
  CHECK(c.rho_grid == std::vector<double>{-0.5, 0.0, 0.5});
  CHECK(c.alpha == 0.2);
  CHECK(c.out_dir == "out");
  CHECK(parse_config(format_config(c)) == c);

  RunConfig d;
  CHECK(parse_config(format_config(d)) == d);
  for (const auto& [key, value] : to_key_values(d)) {
    CHECK(key != "seed");
  }
  CHECK(parse_config("  alpha=0.1   # trailing\n\n").alpha == 0.1);
}

TEST_CASE("config: errors") {
  CHECK_THROWS_AS(parse_config("colour = blue"), InvalidInput);
  CHECK_THROWS_AS(parse_config("alpha = lots"), InvalidInput);
  CHECK_THROWS_AS(parse_config("just words"), InvalidInput);
  CHECK_THROWS_AS(parse_config("length = -3"), InvalidInput);
  CHECK_THROWS_AS(load_config("/nonexistent/pulsecal.conf"), IoError);

  RunConfig c;
  CHECK_THROWS_AS(c.validate(), InvalidInput);
  CHECK_THROWS_AS(c.require_seed(), InvalidInput);
  c.seed = 1;
  CHECK_NOTHROW(c.validate());
  auto bad = c;
  bad.alpha = 1.0;
  CHECK_THROWS_AS(bad.validate(), InvalidInput);
  bad = c;
  bad.horizons.clear();
  CHECK_THROWS_AS(bad.validate(), InvalidInput);
  bad = c;
  bad.length = 0;
  CHECK_THROWS_AS(bad.validate(), InvalidInput);
  bad = c;
  bad.stage_sigmas = {0.1};
  CHECK_THROWS_AS(bad.validate(), InvalidInput);
  bad = c;
  bad.rho_grid = {1.5};
  CHECK_THROWS_AS(bad.validate(), InvalidInput);
}

TEST_CASE("csv: split and number formatting") {
  CHECK(split_csv_line("a,,b") == std::vector<std::string>{"a", "", "b"});
  CHECK(split_csv_line("x") == std::vector<std::string>{"x"});
  Rng rng(3);
  for (int i = 0; i < 1000; ++i) {
    const double x = rng.normal() * std::pow(10.0, static_cast<int>(rng.index(12)) - 6);
    REQUIRE(std::stod(format_number(x)) == x);
  }
}

TEST_CASE("csv: dataset round trip") {
  simgen::PopulationSpec spec;
  spec.stable_count = 3;
  spec.volatile_count = 2;
  spec.length = 50;
  spec.seed = 4;
  spec.released_agents = 1;
  spec.release = {20, 0.1, 2.0};
  const auto pop = simgen::gen_population(spec);
  auto factors = simgen::gen_factor_matrix(5, 9, 0.3);
  const auto data = dataset_from_population(pop, factors);
  const auto dir = scratch("dataset");
  write_dataset(dir, data);
  const auto back = read_dataset(dir);

  REQUIRE(back.series.size() == 5);
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(back.series[i].agent_id == data.series[i].agent_id);
    CHECK(back.series[i].scores == data.series[i].scores);
    CHECK(back.series[i].hours == data.series[i].hours);
    CHECK(back.agents[i].true_mean == data.agents[i].true_mean);
    CHECK(back.agents[i].agent_class == data.agents[i].agent_class);
    CHECK(back.sigma_cross(back.agents[i].agent_id) == data.agents[i].sigma_cross);
    for (std::size_t f = 0; f < scorekit::kFactorCount; ++f) {
      CHECK(back.factors[i].factors.effective(f) == data.factors[i].factors.effective(f));
    }
    CHECK(back.factors[i].factors.missing == data.factors[i].factors.missing);
  }
  REQUIRE(back.events.size() == 1);
  CHECK(back.events[0].event_index == 20);
  CHECK(back.platforms.size() == 5);
  CHECK(back.agent("nobody") == nullptr);

  CHECK_THROWS_AS(read_dataset(dir / "missing"), IoError);
  const auto broken = scratch("broken");
  write_text(broken / kSeriesFile, "agent_id,hour,score\na,0,zero\n");
  CHECK_THROWS(read_dataset(broken));
}

TEST_CASE("manifest: checksums and round trip") {
  CHECK(sha256_hex("abc") ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  const auto dir = scratch("manifest");
  write_text(dir / "b.csv", "abc");
  write_text(dir / "a.csv", "");
  CHECK(sha256_file(dir / "b.csv") == sha256_hex("abc"));
  CHECK_THROWS_AS(sha256_file(dir / "nope"), IoError);

  RunManifest m;
  m.command = "calibrate";
  m.config = parse_config(kSmallConfig);
  m.artifacts = digest_directory(dir);
  m.started_utc = utc_timestamp();
  m.elapsed_seconds = 1.5;
  write_manifest(dir, m);
  REQUIRE(m.artifacts.size() == 2);
  CHECK(m.artifacts[0].file == "a.csv");

  const auto back = read_manifest(dir / kManifestFile);
  CHECK(back.command == "calibrate");
  CHECK(back.config == m.config);
  CHECK(back.artifacts.size() == 2);
  CHECK(back.artifacts[1].sha256 == sha256_hex("abc"));
  CHECK(digest_directory(dir).size() == 2);

  const auto j = nlohmann::json::parse(slurp(dir / kManifestFile));
  CHECK(j["version"] == kToolVersion);
  CHECK(j["config"]["seed"] == "17");
}

TEST_CASE("accumulator matches coverage_report") {
  Rng rng(12);
  std::vector<Interval> intervals;
  std::vector<double> actuals;
  std::vector<std::string> groups;
  CoverageAccumulator acc;
  for (int i = 0; i < 500; ++i) {
    const auto iv = make_interval(rng.uniform(), 0.2 * rng.uniform(), 0.8, Method::SplitConformal);
    const double y = rng.uniform();
    const std::string g = "g" + std::to_string(rng.index(4));
    intervals.push_back(iv);
    actuals.push_back(y);
    groups.push_back(g);
    acc.add(g, "m", 0, 0.2, iv, y);
  }
  const auto want = conformal::coverage_report(intervals, actuals, groups);
  const auto got = acc.lines();
  REQUIRE(got.size() == want.size());
  for (std::size_t i = 0; i < got.size(); ++i) {
    CHECK(got[i].group == want[i].group);
    CHECK(got[i].n == want[i].n);
    CHECK(got[i].coverage == Approx(want[i].coverage).margin(1e-12));
    CHECK(got[i].mean_width == Approx(want[i].mean_width).margin(1e-12));
  }
}

TEST_CASE("cli: exit codes") {
  const auto dir = scratch("exit");
  write_text(dir / "ok.conf", kSmallConfig);
  write_text(dir / "zero.conf", std::string(kSmallConfig) + "length = 0\n");
  write_text(dir / "nohorizons.conf", std::string(kSmallConfig) + "horizons =\n");
  write_text(dir / "unknown.conf", std::string(kSmallConfig) + "gravity = 9.8\n");
  std::string noshift = kSmallConfig;
  noshift.replace(noshift.find("shift_time = 250"), 16, "shift_time = 0");
  write_text(dir / "noshift.conf", noshift);
  const auto out = (dir / "out").string();
  const auto conf = (dir / "ok.conf").string();

  std::string err;
  CHECK(cli({"simulate", "--config", (dir / "zero.conf").string(), "--out", out}, &err) ==
        kExitInvalidConfig);
  CHECK_FALSE(err.empty());
  CHECK(cli({"simulate", "--config", (dir / "nohorizons.conf").string(), "--out", out}) ==
        kExitInvalidConfig);
  CHECK(cli({"simulate", "--config", (dir / "unknown.conf").string(), "--out", out}) ==
        kExitInvalidConfig);
  CHECK(cli({"teleport", "--config", conf}) == kExitInvalidConfig);
  CHECK(cli({"simulate"}) == kExitInvalidConfig);
  CHECK(cli({"simulate", "--config", (dir / "absent.conf").string()}) == kExitIo);
  CHECK(cli({"calibrate", "--config", conf, "--out", out, "--data",
             (dir / "no-data").string()}) == kExitIo);
  CHECK(cli({"--help"}) == kExitOk);

  const auto sim = (dir / "sim").string();
  REQUIRE(cli({"simulate", "--config", conf, "--out", sim}) == kExitOk);
  CHECK(fs::exists(fs::path(sim) / kManifestFile));
  CHECK(cli({"shift-study", "--config", (dir / "noshift.conf").string(), "--data", sim, "--out",
             out}) == kExitInvalidConfig);
  CHECK(cli({"sensitivity", "--config", conf, "--out", out}) == kExitInvalidConfig);
  const auto bare = dir / "bare";
  fs::create_directories(bare);
  fs::copy_file(fs::path(sim) / kSeriesFile, bare / kSeriesFile);
  CHECK(cli({"sensitivity", "--config", conf, "--data", bare.string(), "--out", out}) == kExitIo);
}

TEST_CASE("cli: every command is byte-for-byte deterministic") {
  const auto dir = scratch("determinism");
  write_text(dir / "run.conf", kSmallConfig);
  const auto conf = (dir / "run.conf").string();
  const auto sim = dir / "sim";
  REQUIRE(cli({"simulate", "--config", conf, "--out", sim.string()}) == kExitOk);
  const auto sim2 = dir / "sim2";
  REQUIRE(cli({"simulate", "--config", conf, "--out", sim2.string()}) == kExitOk);
  for (const auto& entry : fs::directory_iterator(sim)) {
    if (entry.path().filename() != kManifestFile) {
      CHECK(slurp(entry.path()) == slurp(sim2 / entry.path().filename()));
    }
  }

  for (const auto& command : command_names()) {
    if (command == "simulate") {
      continue;
    }
    const auto a = dir / (command + "-a");
    const auto b = dir / (command + "-b");
    INFO(command);
    REQUIRE(cli({command, "--config", conf, "--data", sim.string(), "--out", a.string()}) ==
            kExitOk);
    REQUIRE(cli({command, "--config", conf, "--data", sim.string(), "--out", b.string()}) ==
            kExitOk);
    const auto digests = digest_directory(a);
    CHECK(digests.size() >= 2);
    CHECK(digests == digest_directory(b));
    const auto manifest = read_manifest(a / kManifestFile);
    CHECK(manifest.command == command);
    CHECK(manifest.artifacts.size() == digests.size());
  }

  // A different seed changes the simulated data.
  const auto other = dir / "other";
  REQUIRE(cli({"simulate", "--config", conf, "--seed", "18", "--out", other.string()}) == kExitOk);
  CHECK(slurp(other / kSeriesFile) != slurp(sim / kSeriesFile));
}

TEST_CASE("rank: fifty agents produce every pair") {
  const auto dir = scratch("rank50");
  write_text(dir / "run.conf", "seed = 5\nlength = 600\n");
  const auto conf = (dir / "run.conf").string();
  REQUIRE(cli({"simulate", "--config", conf, "--out", (dir / "sim").string()}) == kExitOk);
  REQUIRE(cli({"rank", "--config", conf, "--data", (dir / "sim").string(), "--out",
               (dir / "rank").string()}) == kExitOk);
  CHECK(line_count(dir / "rank" / "pairs_per_pair.csv") == 1226);
  CHECK(line_count(dir / "rank" / "pairs_fdr.csv") == 1226);
  const auto board = nlohmann::json::parse(slurp(dir / "rank" / "leaderboard.json"));
  REQUIRE(board.size() == 50);
  CHECK(board[0]["rank"] == 1);
  for (std::size_t i = 1; i < board.size(); ++i) {
    CHECK(board[i - 1]["score"].get<double>() >= board[i]["score"].get<double>());
  }
}
