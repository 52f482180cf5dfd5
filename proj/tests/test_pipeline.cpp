#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "helios/pipeline/config.hpp"
#include "helios/pipeline/manifest.hpp"
#include "helios/pipeline/trials.hpp"

using namespace helios;
using namespace helios::pipeline;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("helios_test_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(HELIOS_CLI_PATH) + " " + args + " >" + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

const char* kTinyArgs =
    "--set general.dataset_multiplier=0.0005 --set eval.trials=6 --set eval.trials_per_unit=3 -q";

}  // namespace

TEST(Config, ParsesIni) {
  std::istringstream in("[general]\nseed = 42\nthreads = 3\n[train]\nlr = 0.001\n[synth]\nblending = false\n");
  const auto cfg = parse_config_ini(in);
  EXPECT_EQ(cfg.seed, 42u);
  EXPECT_EQ(cfg.threads, 3);
  EXPECT_DOUBLE_EQ(cfg.lr, 0.001);
  EXPECT_FALSE(cfg.blending);
}

TEST(Config, RejectsUnknownKeyAndBadValue) {
  std::istringstream unknown("[general]\nsede = 1\n");
  try {
    parse_config_ini(unknown);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kConfig);
  }
  std::istringstream bad("[train]\nlr = fast\n");
  EXPECT_THROW(parse_config_ini(bad), Error);
  std::istringstream invalid("[window]\nstep_ms = 500\n");
  EXPECT_THROW(parse_config_ini(invalid), Error);
}

TEST(Config, IniRoundTrip) {
  PipelineConfig cfg;
  apply_assignment(cfg, "train.epochs=3");
  apply_assignment(cfg, "general.seed=99");
  std::istringstream in(to_ini(cfg));
  const auto back = parse_config_ini(in);
  EXPECT_EQ(to_json(back), to_json(cfg));
  EXPECT_THROW(apply_assignment(cfg, "train.epochs"), Error);
}

TEST(Manifest, HashIgnoresThreadsAndOutputDir) {
  PipelineConfig a, b;
  b.threads = 8;
  b.output_dir = "/elsewhere";
  EXPECT_EQ(config_hash(a), config_hash(b));
  b.seed = a.seed + 1;
  EXPECT_NE(config_hash(a), config_hash(b));
}

TEST(Manifest, BlobHashMatchesGit) {
  EXPECT_EQ(git_blob_hash({}), "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
  const std::string hello = "hello\n";
  EXPECT_EQ(git_blob_hash(std::vector<std::uint8_t>(hello.begin(), hello.end())),
            "ce013625030ba8dba906f756967f9e9ca394464a");
}

TEST(Manifest, WritesSortedEntries) {
  const fs::path root = scratch("manifest");
  write_file_bytes(root / "b.txt", {1, 2});
  write_file_bytes(root / "a.txt", {3});
  Manifest m{"unit", root};
  m.output(root / "b.txt");
  m.output(root / "a.txt");
  m.write(root / "manifest.json", PipelineConfig{});
  const auto j = nlohmann::json::parse(slurp(root / "manifest.json"));
  EXPECT_EQ(j["outputs"][0]["path"], "a.txt");
  EXPECT_EQ(j["outputs"][1]["path"], "b.txt");
  EXPECT_EQ(j["config_hash"], config_hash(PipelineConfig{}));
  fs::remove_all(root);
}

TEST(Trials, UnitLayout) {
  PipelineConfig cfg;
  cfg.trials_per_unit = 6;
  const auto unit = make_trial_unit(cfg, 0, false);
  ASSERT_EQ(unit.trials.size(), 6u);
  int per_group[3] = {0, 0, 0};
  for (std::size_t k = 0; k < unit.trials.size(); ++k) {
    const auto& t = unit.trials[k];
    EXPECT_EQ(t.prompt_time, static_cast<Nanos>(k) * cfg.trial_segment_ms * kNsPerMs + kPromptLeadNs);
    EXPECT_EQ(t.response_deadline - t.prompt_time, cfg.match_window_ms * kNsPerMs);
    ++per_group[static_cast<int>(*eval::prompt_group(t.prompted))];
    EXPECT_EQ(unit.rotations_deg[k], 0.0);
  }
  for (int g : per_group) EXPECT_EQ(g, 2);
  EXPECT_TRUE(unit.events.is_sorted());
  EXPECT_EQ(unit.events.duration, 6 * cfg.trial_segment_ms * kNsPerMs);
  EXPECT_FALSE(unit.events.events.empty());
}

TEST(Trials, RotatedUnitsRotate) {
  PipelineConfig cfg;
  cfg.trials_per_unit = 3;
  const auto unit = make_trial_unit(cfg, 1, true);
  for (double r : unit.rotations_deg) {
    EXPECT_GE(std::abs(r), cfg.rotation_min_deg);
    EXPECT_LE(std::abs(r), cfg.rotation_max_deg);
  }
}

TEST(Trials, JsonRoundTrip) {
  const std::vector<eval::TrialRecord> t{{GestureClass::Pinch, 100, 200}, {GestureClass::SwipeLeft, 300, 400}};
  const auto back = trials_from_json(to_json(t));
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[1].prompted, GestureClass::SwipeLeft);
  EXPECT_EQ(back[1].response_deadline, 400);
}

TEST(Cli, ExitCodes) {
  const fs::path root = scratch("cli");
  EXPECT_EQ(run_cli("evaluate --out " + (root / "out").string(), root / "log1"), 9);
  EXPECT_NE(slurp(root / "log1").find("\"error\""), std::string::npos);
  EXPECT_EQ(run_cli("simulate --bogus", root / "log2"), 12);
  EXPECT_EQ(run_cli("", root / "log3"), 12);
  EXPECT_EQ(run_cli("simulate --set train.nope=1 --out " + root.string(), root / "log4"), 11);
  std::ofstream(root / "bad.ini") << "[general]\nseed = banana\n";
  EXPECT_EQ(run_cli("config -c " + (root / "bad.ini").string(), root / "log5"), 11);
  EXPECT_EQ(run_cli("--help", root / "log6"), 0);
  fs::remove_all(root);
}

TEST(Cli, SimulateIsByteIdentical) {
  const fs::path a = scratch("sim_a"), b = scratch("sim_b");
  ASSERT_EQ(run_cli(std::string("simulate --seed 7 --out ") + a.string() + " " + kTinyArgs, a / "log"), 0);
  ASSERT_EQ(run_cli(std::string("simulate --seed 7 --threads 2 --out ") + b.string() + " " + kTinyArgs, b / "log"), 0);
  int files = 0;
  for (const auto& e : fs::recursive_directory_iterator(a / "simulate")) {
    if (!e.is_regular_file()) continue;
    const fs::path rel = fs::relative(e.path(), a);
    ASSERT_TRUE(fs::exists(b / rel)) << rel;
    EXPECT_EQ(slurp(e.path()), slurp(b / rel)) << rel;
    ++files;
  }
  EXPECT_GT(files, 5);
  fs::remove_all(a);
  fs::remove_all(b);
}
