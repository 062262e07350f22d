#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "smbsde/cli.hpp"

namespace fs = std::filesystem;
using namespace smbsde::cli;

namespace {

const std::string kData = SMBSDE_TEST_DATA;

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome invoke(RunConfig cfg) {
  std::ostringstream out, err;
  const int code = run(cfg, out, err);
  return {code, out.str(), err.str()};
}

RunConfig with(const std::string& command, const std::string& model,
               const std::string& problem = "") {
  RunConfig cfg;
  cfg.command = command;
  cfg.model = model.empty() ? "" : kData + "/models/" + model;
  cfg.problem = problem.empty() ? "" : kData + "/problems/" + problem;
  return cfg;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("smbsde_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

TEST(Cli, ValidateBundledModels) {
  for (const char* m : {"geometric2.json", "deterministic2.json", "semi3.json", "control2.json"}) {
    const auto r = invoke(with("validate", m));
    EXPECT_EQ(r.code, kOk) << m << r.err;
    EXPECT_NE(r.out.find("\"violations\": []"), std::string::npos);
  }
}

TEST(Cli, ValidateReportsViolations) {
  const fs::path dir = scratch("bad");
  std::ofstream(dir / "bad.json") << R"({"schema_version": 1, "n_states": 2, "horizon": 2,
    "pi": [[0.7, 0.7, 0], [1, 0, 0]], "jump": [[0, 1], [1, 0]], "x0": 1})";
  RunConfig cfg;
  cfg.command = "validate";
  cfg.model = (dir / "bad.json").string();
  const auto r = invoke(cfg);
  EXPECT_EQ(r.code, kFailure);
  EXPECT_FALSE(r.err.empty());

  std::ofstream(dir / "syntax.json") << "{\n \"n_states\": 2,,\n}";
  cfg.model = (dir / "syntax.json").string();
  const auto s = invoke(cfg);
  EXPECT_EQ(s.code, kFailure);
  EXPECT_NE(s.err.find("syntax.json:2:"), std::string::npos) << s.err;
}

TEST(Cli, SolveBsdeIndicatorCsv) {
  const auto r = invoke(with("solve-bsde", "geometric2.json", "bsde_indicator.json"));
  ASSERT_EQ(r.code, kOk) << r.err;
  std::istringstream in(r.out);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "time,state,sojourn,flat,y");
  std::getline(in, line);
  // Start in state 1; at every step the chain flips with probability 1/2.
  EXPECT_EQ(line.substr(0, 8), "0,1,1,0,");
  EXPECT_DOUBLE_EQ(std::stod(line.substr(8)), 0.5);
}

TEST(Cli, SolveBsdeRejectsControlGrid) {
  const auto r = invoke(with("solve-bsde", "control2.json", "control_full.json"));
  EXPECT_EQ(r.code, kFailure);
}

TEST(Cli, SimulateNeedsSeedAndIsReproducible) {
  EXPECT_EQ(invoke(with("simulate", "semi3.json")).code, kFailure);
  auto cfg = with("simulate", "semi3.json");
  cfg.seed = 17;
  cfg.mc_paths = 50;
  const fs::path a = scratch("sim_a");
  const fs::path b = scratch("sim_b");
  cfg.out = a.string();
  ASSERT_EQ(invoke(cfg).code, kOk);
  cfg.out = b.string();
  ASSERT_EQ(invoke(cfg).code, kOk);
  for (const char* f : {"simulation.json", "paths.csv"}) {
    EXPECT_FALSE(slurp(a / f).empty());
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  }
}

TEST(Cli, ArtifactsAreByteIdenticalOnRerun) {
  const std::vector<RunConfig> cfgs = {
      with("build-lattice", "semi3.json"),
      with("solve-control", "control2.json", "control_full.json"),
      with("verify-duality", "control2.json"),
  };
  int i = 0;
  for (auto cfg : cfgs) {
    const fs::path a = scratch("rerun_a" + std::to_string(i));
    const fs::path b = scratch("rerun_b" + std::to_string(i));
    ++i;
    cfg.out = a.string();
    ASSERT_EQ(invoke(cfg).code, kOk) << cfg.command;
    cfg.out = b.string();
    ASSERT_EQ(invoke(cfg).code, kOk) << cfg.command;
    int files = 0;
    for (const auto& e : fs::directory_iterator(a)) {
      ++files;
      EXPECT_EQ(slurp(e.path()), slurp(b / e.path().filename())) << e.path();
    }
    EXPECT_GT(files, 0);
  }
}

TEST(Cli, BuildLatticeWritesMatrices) {
  auto cfg = with("build-lattice", "geometric2.json");
  const fs::path dir = scratch("lattice");
  cfg.out = dir.string();
  ASSERT_EQ(invoke(cfg).code, kOk);
  EXPECT_TRUE(fs::exists(dir / "C.csv"));
  EXPECT_TRUE(fs::exists(dir / "lattice.json"));
  EXPECT_TRUE(fs::exists(dir / "cov_1.csv"));
}

TEST(Cli, SolveControlHypothesisGate) {
  const auto ok = invoke(with("solve-control", "control2.json", "control_full.json"));
  EXPECT_EQ(ok.code, kOk) << ok.err;
  EXPECT_EQ(invoke(with("solve-control", "control2.json", "control_g_only.json")).code, kOk);
}

TEST(Cli, VerifyDualityExplicitConventions) {
  for (const char* c : {"auto", "predictable"}) {
    auto cfg = with("verify-duality", "geometric2.json");
    cfg.convention = c;
    const auto r = invoke(cfg);
    EXPECT_EQ(r.code, kOk) << c << r.err;
  }
  // The implicit reading is not exact once beta or g are nonzero.
  auto cfg = with("verify-duality", "geometric2.json");
  cfg.convention = "implicit";
  EXPECT_EQ(invoke(cfg).code, kInvariant);
}

TEST(Cli, VerifyAllBundledData) {
  RunConfig cfg;
  cfg.command = "verify-all";
  cfg.data = kData;
  const auto r = invoke(cfg);
  EXPECT_EQ(r.code, kOk) << r.out << r.err;
  EXPECT_EQ(r.out.find("FAIL"), std::string::npos);
}

TEST(Cli, UnknownCommandAndMissingFlags) {
  RunConfig cfg;
  cfg.command = "frobnicate";
  EXPECT_EQ(invoke(cfg).code, kFailure);
  EXPECT_EQ(invoke(with("solve-bsde", "geometric2.json")).code, kFailure);
  EXPECT_EQ(invoke(with("validate", "missing.json")).code, kFailure);
}

TEST(Cli, MainEntryParsesArguments) {
  const std::string model = kData + "/models/geometric2.json";
  std::vector<std::string> args = {"smbsde", "validate", "--model", model};
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  testing::internal::CaptureStdout();
  EXPECT_EQ(main_entry(static_cast<int>(argv.size()), argv.data()), kOk);
  testing::internal::GetCapturedStdout();

  std::vector<std::string> bad = {"smbsde", "validate", "--convention", "sideways"};
  argv.clear();
  for (auto& a : bad) argv.push_back(a.data());
  testing::internal::CaptureStderr();
  EXPECT_EQ(main_entry(static_cast<int>(argv.size()), argv.data()), kFailure);
  testing::internal::GetCapturedStderr();
}
