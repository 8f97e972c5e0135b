#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("dpdopt_cli_") + info->name() + "_" +
                                        std::to_string(::getpid()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write(const std::string& name, const std::string& text) {
    const fs::path p = dir_ / name;
    std::ofstream(p) << text;
    return p;
  }

  Result invoke(const std::string& args, const std::string& env = "") {
    const fs::path out = dir_ / "stdout.txt", err = dir_ / "stderr.txt";
    const std::string cmd = env + " \"" + std::string(DPDOPT_CLI) + "\" " + args + " >\"" +
                            out.string() + "\" 2>\"" + err.string() + "\"";
    const int status = std::system(cmd.c_str());
    Result r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
  }

  static std::string bundled(const std::string& name) {
    return (fs::path(DPDOPT_CONFIG_DIR) / name).string();
  }

  fs::path dir_;
};

std::size_t count_lines(const std::string& s) {
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

}  // namespace

TEST_F(Cli, RunRowCountAndDeterminism) {
  const fs::path a = dir_ / "a", b = dir_ / "b";
  Result r1 = invoke("run --config " + bundled("estimation_paper.json") + " --out " + a.string());
  ASSERT_EQ(r1.code, 0) << r1.err;
  Result r2 = invoke("run --config " + bundled("estimation_paper.json") + " --out " + b.string());
  ASSERT_EQ(r2.code, 0) << r2.err;
  const std::string t1 = slurp(a / "estimation_paper_trace.csv");
  const std::string t2 = slurp(b / "estimation_paper_trace.csv");
  EXPECT_EQ(count_lines(t1), 3000u / 10u + 1u + 1u);  // rows plus header
  EXPECT_EQ(t1, t2);
  EXPECT_EQ(slurp(a / "estimation_paper_summary.json"), slurp(b / "estimation_paper_summary.json"));
  EXPECT_EQ(t1.substr(0, t1.find('\n')), "k,lambda,consensus_error,opt_error_mean,opt_error_max,noise_norm");
  EXPECT_EQ(t1.find(",\n"), std::string::npos);
  EXPECT_EQ(t1.find('\r'), std::string::npos);

  const auto summary = nlohmann::json::parse(slurp(a / "estimation_paper_summary.json"));
  for (const char* key : {"final_state", "final_metrics", "config_fingerprint", "seed"})
    EXPECT_TRUE(summary.contains(key)) << key;
  EXPECT_EQ(summary["seed"].get<std::uint64_t>(), 2024u);
  EXPECT_EQ(summary["final_state"].size(), 5u);
}

TEST_F(Cli, SeedAndRecordEveryOverrides) {
  Result r = invoke("run --config " + bundled("estimation_paper.json") + " --out " +
                    dir_.string() + " --seed 7 --record-every 1000");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(count_lines(slurp(dir_ / "estimation_paper_trace.csv")), 5u);
  const auto summary = nlohmann::json::parse(slurp(dir_ / "estimation_paper_summary.json"));
  EXPECT_EQ(summary["seed"].get<std::uint64_t>(), 7u);
}

TEST_F(Cli, OutputDirectoryFromEnvironment) {
  const fs::path env_dir = dir_ / "from_env";
  Result r = invoke("run --config " + bundled("estimation_paper.json") + " --record-every 1000",
                    "DPDOPT_OUT_DIR=\"" + env_dir.string() + "\"");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(env_dir / "estimation_paper_trace.csv"));
}

TEST_F(Cli, SpectralGapViolationExitsOne) {
  const fs::path cfg = write("bad.json", R"({
    "problem": {"name": "custom_quadratic", "diagonal": [1], "centers": [[0], [1]]},
    "topology": {"matrix": [[1, 0], [0, 1]]},
    "iterations": 10
  })");
  Result r = invoke("run --config " + cfg.string() + " --out " + dir_.string());
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("SpectralGapViolation"), std::string::npos) << r.err;
}

TEST_F(Cli, ConfigErrorsExitOne) {
  const fs::path typo = write("typo.json", R"({"iteratons": 10})");
  Result r = invoke("run --config " + typo.string());
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("/iteratons"), std::string::npos) << r.err;
  const fs::path syntax = write("syntax.json", "{\n  \"iterations\": 10\n  \"seed\": 1\n}\n");
  r = invoke("run --config " + syntax.string());
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("syntax.json:3:"), std::string::npos) << r.err;
  r = invoke("run --config " + (dir_ / "missing.json").string());
  EXPECT_EQ(r.code, 1);
  r = invoke("run");
  EXPECT_EQ(r.code, 1);
}

TEST_F(Cli, DivergenceExitsTwo) {
  const fs::path cfg = write("diverge.json", R"({
    "problem": {"name": "custom_quadratic", "diagonal": [-1000], "centers": [[0]]},
    "topology": {"builtin": "complete"},
    "schedule": {"kind": "constant", "lambda0": 1.0},
    "iterations": 1000,
    "init": {"mode": "explicit", "points": [[1]]}
  })");
  Result r = invoke("run --config " + cfg.string() + " --out " + dir_.string());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("NonFiniteState"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("iteration"), std::string::npos) << r.err;
}

TEST_F(Cli, Table1SingleRunCell) {
  const fs::path cfg = write("sweep.json", R"({
    "base": {"iterations": 300, "init": {"mode": "random_box"}, "seed": 5},
    "variances": [0.1, 0.3],
    "runs_per_cell": 1,
    "output": "sweep.csv"
  })");
  Result r = invoke("table1 --config " + cfg.string() + " --out " + dir_.string() + " --jobs 2");
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string csv = slurp(dir_ / "sweep.csv");
  std::istringstream lines(csv);
  std::string header, row;
  std::getline(lines, header);
  EXPECT_EQ(header, "sigma,mean_final_error,std_final_error,runs");
  int rows = 0;
  while (std::getline(lines, row)) {
    ++rows;
    std::vector<std::string> f;
    std::stringstream ss(row);
    for (std::string x; std::getline(ss, x, ',');) f.push_back(x);
    ASSERT_EQ(f.size(), 4u);
    EXPECT_EQ(f[2], "0");
    EXPECT_EQ(f[3], "1");
  }
  EXPECT_EQ(rows, 2);
  const std::string first = csv;
  r = invoke("table1 --config " + cfg.string() + " --out " + dir_.string() + " --jobs 1");
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(slurp(dir_ / "sweep.csv"), first);
}

TEST_F(Cli, CouplingSchemaAndNoiseFree) {
  Result r = invoke("coupling --config " + bundled("coupling_noise_free.json") + " --out " + dir_.string());
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string text = slurp(dir_ / "coupling_noise_free.json");
  const auto j = nlohmann::json::parse(text);
  EXPECT_EQ(j["escape_count"].get<int>(), 0);
  EXPECT_EQ(j["runs"].size(), j["total_runs"].get<std::size_t>());
  for (const auto& run : j["runs"]) EXPECT_TRUE(run["escape_iteration"].is_null());
  r = invoke("coupling --config " + bundled("coupling_noise_free.json") + " --out " + dir_.string());
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(slurp(dir_ / "coupling_noise_free.json"), text);
}

TEST_F(Cli, CouplingWithNoiseReportsIterations) {
  const fs::path cfg = write("c.json", R"({
    "base": {"noise": {"variance": 0.5}, "iterations": 1500, "init": {"mode": "at_saddle"}, "seed": 3},
    "runs": 4,
    "output": "c_out.json"
  })");
  Result r = invoke("coupling --config " + cfg.string() + " --out " + dir_.string() + " --jobs 2");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(slurp(dir_ / "c_out.json"));
  EXPECT_TRUE(j.contains("escape_count"));
  for (const auto& run : j["runs"]) EXPECT_TRUE(run.contains("escape_iteration"));
}

TEST_F(Cli, NotAStrictSaddleExitsOne) {
  const fs::path cfg = write("c.json", R"({
    "base": {"noise": {"variance": 0.5}, "iterations": 10, "seed": 3},
    "runs": 2,
    "saddle": [1.3477680040, 1.0689563832]
  })");
  Result r = invoke("coupling --config " + cfg.string() + " --out " + dir_.string());
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("NotAStrictSaddle"), std::string::npos) << r.err;
}

TEST_F(Cli, PrivacyReport) {
  Result r = invoke("privacy-report --config " + bundled("privacy_paper.json") + " --out " + dir_.string());
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.err.find("warning"), std::string::npos);
  std::istringstream lines(slurp(dir_ / "privacy_paper.csv"));
  std::string header;
  std::getline(lines, header);
  EXPECT_EQ(header, "k,lambda,eps_sample,eps_gradient,eps_variable,delta,variance");
  std::vector<double> eps_x;
  for (std::string row; std::getline(lines, row);) {
    std::vector<std::string> f;
    std::stringstream ss(row);
    for (std::string x; std::getline(ss, x, ',');) f.push_back(x);
    ASSERT_EQ(f.size(), 7u);
    eps_x.push_back(std::stod(f[4]));
  }
  ASSERT_EQ(eps_x.size(), 3000u);
  EXPECT_GT(eps_x[501], eps_x[500]);

  const fs::path constant = write("p.json", R"({
    "schedule": {"kind": "constant", "lambda0": 0.01}, "noise": {"variance": 0.5},
    "nu": 1, "n_i": 100, "horizon": 20, "output": "p.csv"})");
  r = invoke("privacy-report --config " + constant.string() + " --out " + dir_.string());
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream rows(slurp(dir_ / "p.csv"));
  std::string line, first;
  std::getline(rows, line);
  int n = 0;
  while (std::getline(rows, line)) {
    const std::string tail = line.substr(line.find(','));
    if (first.empty()) first = tail;
    EXPECT_EQ(tail, first);
    ++n;
  }
  EXPECT_EQ(n, 20);

  const fs::path zero = write("z.json", R"({"horizon": 0})");
  r = invoke("privacy-report --config " + zero.string() + " --out " + dir_.string());
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("InvalidConfig"), std::string::npos) << r.err;
}

TEST_F(Cli, Verify) {
  Result r = invoke("verify");
  EXPECT_EQ(r.code, 0) << r.out << r.err;
  EXPECT_EQ(r.out.find("FAIL"), std::string::npos) << r.out;
  const auto min_line = r.out.find("(1.3478, 1.0690)");
  const auto sad_line = r.out.find("(-7.4336, 1.3959)");
  ASSERT_NE(min_line, std::string::npos);
  ASSERT_NE(sad_line, std::string::npos);
  EXPECT_NE(r.out.substr(min_line, r.out.find('\n', min_line) - min_line).find("minimum"), std::string::npos);
  EXPECT_NE(r.out.substr(sad_line, r.out.find('\n', sad_line) - sad_line).find("strict_saddle"),
            std::string::npos);
}
