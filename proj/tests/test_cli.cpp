#include "cylgeo/cli.hpp"
#include "cylgeo/error.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace cylgeo;

namespace {

namespace fs = std::filesystem;

std::string fresh_dir(const std::string& name) {
  const fs::path dir = fs::path(testing::TempDir()) / ("cylgeo_cli_" + name);
  fs::remove_all(dir);
  return dir.string();
}

std::string slurp(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

struct GammaRow {
  double r, lo, hi;
};

std::vector<GammaRow> read_gamma(const fs::path& path) {
  std::ifstream is(path);
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, "r,gamma_min,gamma_max");
  std::vector<GammaRow> rows;
  while (std::getline(is, line)) {
    GammaRow g{};
    char c1, c2;
    std::istringstream ls(line);
    ls >> g.r >> c1 >> g.lo >> c2 >> g.hi;
    rows.push_back(g);
  }
  return rows;
}

ExperimentConfig small_config(const std::string& out, const char* form_json) {
  auto c = config_from_json(Json{{"perturbation", Json::parse(form_json)},
                                 {"discretization", {{"M", 32}, {"M_q", 64}}},
                                 {"search", {{"starts", 8}}},
                                 {"output", out}});
  return c;
}

}  // namespace

TEST(Cli, ConfigDefaultsMaterialize) {
  const auto c = config_from_json(Json::object());
  EXPECT_EQ(c.n, 2);
  EXPECT_EQ(c.nodes, 256);
  EXPECT_DOUBLE_EQ(c.dedup_tol, 1e-4 * 16.0);
  const auto j = config_to_json(c);
  EXPECT_EQ(j["tolerances"]["dedup_tol"], c.dedup_tol);
  const auto back = config_from_json(j);
  EXPECT_EQ(config_to_json(back).dump(), j.dump());
}

TEST(Cli, ConfigErrorsNameTheField) {
  const auto message = [](const char* text) {
    try {
      config_from_json(Json::parse(text));
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  EXPECT_NE(message(R"({"search": {"starts": 0}})").find("search.starts"), std::string::npos);
  EXPECT_NE(message(R"({"discretization": {"M": 4}})").find("discretization.M"), std::string::npos);
  EXPECT_NE(message(R"({"tolerances": {"grad_tol": -1}})").find("tolerances.grad_tol"), std::string::npos);
  EXPECT_NE(message(R"({"manifold": {"N": 0}})").find("manifold.N"), std::string::npos);
  EXPECT_NE(message(R"({"bogus": 1})").find("bogus"), std::string::npos);
  EXPECT_NE(message(R"({"perturbation": {"builtin": "mystery"}})").find("perturbation"), std::string::npos);
  EXPECT_NE(message(R"({"eps": 0.1, "eps_list": [0.1]})").find("eps"), std::string::npos);
}

TEST(Cli, ZeroFormGivesZeroGamma) {
  const auto c = small_config(fresh_dir("zero"), R"({"builtin": "zero"})");
  const auto result = cmd_gamma_scan(c);
  EXPECT_TRUE(result.summary["gamma_identically_zero"].get<bool>());
  const auto rows = read_gamma(fs::path(c.output) / "gamma.csv");
  ASSERT_FALSE(rows.empty());
  for (const auto& g : rows) {
    EXPECT_EQ(g.lo, 0.0);
    EXPECT_EQ(g.hi, 0.0);
  }
}

TEST(Cli, OddProfileGivesAntisymmetricGamma) {
  for (const char* form : {R"({"builtin": "odd_decay_anisotropic"})",
                           R"({"builtin": "isotropic", "profile": {"kind": "odd_decay"}})"}) {
    const auto c = small_config(fresh_dir("odd"), form);
    cmd_gamma_scan(c);
    const auto rows = read_gamma(fs::path(c.output) / "gamma.csv");
    ASSERT_GE(rows.size(), 3u);
    for (size_t i = 0; i < rows.size(); ++i) {
      const auto& a = rows[i];
      const auto& b = rows[rows.size() - 1 - i];
      EXPECT_NEAR(a.r, -b.r, 1e-12);
      EXPECT_NEAR(a.lo, -b.hi, 1e-10);
      EXPECT_NEAR(a.hi, -b.lo, 1e-10);
    }
  }
}

TEST(Cli, RerunsAreByteIdentical) {
  for (const char* cmd : {"gamma-scan", "find", "verify", "spectrum"}) {
    auto c = small_config(fresh_dir("rerun_a"), R"({"builtin": "odd_decay_anisotropic"})");
    ASSERT_EQ(run_command(cmd, c), 0) << cmd;
    const std::string first = c.output;
    c.output = fresh_dir("rerun_b");
    ASSERT_EQ(run_command(cmd, c), 0) << cmd;
    for (const auto& entry : fs::directory_iterator(first)) {
      const auto name = entry.path().filename();
      if (name == "MANIFEST.json") continue;
      EXPECT_EQ(slurp(entry.path()), slurp(fs::path(c.output) / name)) << cmd << " " << name;
    }
  }
}

TEST(Cli, ThreadCountDoesNotChangeOutput) {
  auto c = small_config(fresh_dir("threads_1"), R"({"builtin": "odd_decay_anisotropic"})");
  ASSERT_EQ(run_command("find", c), 0);
  const std::string first = c.output;
  c.output = fresh_dir("threads_4");
  c.threads = 4;
  ASSERT_EQ(run_command("find", c), 0);
  for (const char* name : {"certificates.json", "orbits.json", "summary.json"}) {
    EXPECT_EQ(slurp(fs::path(first) / name), slurp(fs::path(c.output) / name)) << name;
  }
}

TEST(Cli, FindReportsDegenerateForZeroForm) {
  const auto c = small_config(fresh_dir("find_zero"), R"({"builtin": "zero"})");
  ASSERT_EQ(run_command("find", c), 0);
  const auto summary = Json::parse(slurp(fs::path(c.output) / "summary.json"));
  EXPECT_EQ(summary["status"], "degenerate");
  EXPECT_EQ(summary["count"], 0);
}

TEST(Cli, FailureLeavesPartialManifest) {
  auto c = small_config(fresh_dir("partial"), R"({"builtin": "odd_decay_anisotropic"})");
  c.eps_list = {0.01, 0.2};
  c.eps_is_list = true;
  EXPECT_EQ(run_command("verify", c), 1);
  const auto manifest = Json::parse(slurp(fs::path(c.output) / "MANIFEST.json"));
  EXPECT_FALSE(manifest["complete"].get<bool>());
  EXPECT_TRUE(manifest.contains("error"));
  EXPECT_EQ(manifest["files"], Json::array({"decay.csv"}));
  EXPECT_EQ(manifest["config"]["eps_list"].size(), 2u);
  EXPECT_TRUE(fs::exists(fs::path(c.output) / "decay.csv"));
}

TEST(Cli, ExitCodes) {
  const std::string dir = fresh_dir("exit");
  fs::create_directories(dir);
  const std::string cfg = (fs::path(dir) / "cfg.json").string();
  std::ofstream(cfg) << R"({"search": {"starts": 0}})";
  const auto run = [](std::vector<std::string> args) {
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    return run_cli(static_cast<int>(argv.size()), argv.data());
  };
  EXPECT_EQ(run({"cylgeo", "--config", cfg, "find"}), 2);
  EXPECT_EQ(run({"cylgeo", "nonsense"}), 2);
  EXPECT_EQ(run({"cylgeo"}), 2);

  std::ofstream(cfg) << R"({"perturbation": {"builtin": "zero"}, "discretization": {"M": 16}})";
  const std::string out = (fs::path(dir) / "run").string();
  EXPECT_EQ(run({"cylgeo", "--config", cfg, "--out", out, "--seed", "5", "spectrum"}), 0);
  const auto manifest = Json::parse(slurp(fs::path(out) / "MANIFEST.json"));
  EXPECT_TRUE(manifest["complete"].get<bool>());
  EXPECT_EQ(manifest["config"]["search"]["seed"], 5);
  EXPECT_EQ(manifest["config"]["output"], out);
}
