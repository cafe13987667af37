#include "commands.h"

#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <json.hpp>

#include "config.h"
#include "kvbeam/errors.h"

namespace kvbeam::cli {
namespace {

namespace fs = std::filesystem;

// Short horizons keep the end-to-end runs quick.
constexpr const char* kFast = R"(
[simulation]
T = 2
h = 2e-3
[compare]
T = 4
h = 2e-3
)";

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / ("kvbeam_cli_" + std::string(info->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write_config(const std::string& name, const std::string& text) {
    const fs::path p = dir_ / name;
    std::ofstream(p) << text;
    return p;
  }

  int run(const std::vector<std::string>& args) {
    std::vector<std::string> argv{"kvbeam"};
    argv.insert(argv.end(), args.begin(), args.end());
    return run_cli(argv);
  }

  static std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
  }

  static nlohmann::json json_at(const fs::path& p) { return nlohmann::json::parse(slurp(p)); }

  fs::path dir_;
};

GTEST_TEST(Config, DefaultsDescribeReferenceExperiment) {
  const ExperimentConfig c;
  EXPECT_EQ(c.E, 10.0);
  EXPECT_EQ(c.n_design, 39);
  EXPECT_EQ(c.n_sim, 69);
  EXPECT_EQ(c.q, 10);
  EXPECT_DOUBLE_EQ(c.base_frequency, std::numbers::pi);
  EXPECT_NO_THROW(c.validate());
}

GTEST_TEST(Config, RoundTripIsIdempotent) {
  ExperimentConfig c = parse_config(R"(
[beam]
E = 12.5
b_d = bump 0.5 2 3, bump 1 4 2
[internal_model]
base_frequency = 0.5*pi
q = 3
[signals]
reference = trig
ref_a0 = 1 2
ref_freqs = pi 3pi
ref_cos = 0.1 0.2 ; 0.3 0.4
ref_sin = 0 0 ; 1e-3 -2
dist_a0 = 0 1
dist_freqs =
dist_cos =
dist_sin =
[low_gain]
eps = auto
[simulation]
integrator = exact
)");
  EXPECT_DOUBLE_EQ(c.base_frequency, 0.5 * std::numbers::pi);
  ASSERT_EQ(c.b_d.size(), 2u);
  EXPECT_EQ(c.b_d[1].left, 4);
  ASSERT_EQ(c.ref.freqs.size(), 2u);
  EXPECT_DOUBLE_EQ(c.ref.freqs[1], 3 * std::numbers::pi);
  EXPECT_EQ(c.lg_eps, 0.0);
  EXPECT_EQ(c.integrator, Integrator::kExactHold);
  EXPECT_NO_THROW(c.validate());

  const std::string once = serialize_config(c);
  const ExperimentConfig back = parse_config(once);
  EXPECT_EQ(serialize_config(back), once);
  EXPECT_EQ(back.E, c.E);
  EXPECT_EQ(back.ref.sin[1][1], -2.0);
  EXPECT_EQ(back.dist.a0.size(), 2);
  EXPECT_TRUE(back.dist.freqs.empty());

  const std::string defaults = serialize_config(ExperimentConfig{});
  EXPECT_EQ(serialize_config(parse_config(defaults)), defaults);
}

GTEST_TEST(Config, ErrorsCarryLineNumbers) {
  auto message = [](const std::string& text) {
    try {
      parse_config(text);
    } catch (const ValidationError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  EXPECT_NE(message("[beam]\nE = 1\nbogus = 2\n").find("line 3"), std::string::npos);
  EXPECT_NE(message("[beam]\nE = 1\nE = 2\n").find("duplicate"), std::string::npos);
  EXPECT_NE(message("E = 1\n").find("outside"), std::string::npos);
  EXPECT_NE(message("[beam]\nE = ten\n").find("line 2"), std::string::npos);
  EXPECT_NE(message("[beam\n").find("line 1"), std::string::npos);
  EXPECT_NE(message("[beam]\nb1 = gauss 1 2\n").find("bump"), std::string::npos);
  EXPECT_NE(message("[synthesis]\nR1 = 1 0 0\n").find("4 entries"), std::string::npos);
}

GTEST_TEST(Config, ValidationCatchesInconsistentValues) {
  auto bad = [](const std::string& text) {
    EXPECT_THROW(parse_config(text).validate(), ValidationError) << text;
  };
  bad("[beam]\nd_KV = 0\n");
  bad("[beam]\nxi1 = 1.2\n");
  bad("[beam]\nb1 = bump 1 1 6\n");  // violates clamped boundary conditions
  bad("[galerkin]\nn_design = 3\n");
  bad("[synthesis]\nr = 100\n");
  bad("[synthesis]\nR1 = 1 2 2 1\n");
  bad("[signals]\nref_a0 = 1\n");
  bad("[signals]\nref_freqs = pi\n");
  bad("[simulation]\nh = 0\n");
  bad("[internal_model]\nq = -1\n");
  EXPECT_NO_THROW(parse_config("[beam]\nd_KV = 0\n").validate(true));
}

TEST_F(CliTest, ExitCodes) {
  EXPECT_EQ(run({"--help"}), kExitOk);
  EXPECT_EQ(run({}), kExitValidation);
  EXPECT_EQ(run({"launch"}), kExitValidation);
  EXPECT_EQ(run({"design", "--config", (dir_ / "missing.conf").string()}), kExitIo);
  const fs::path bad = write_config("bad.conf", "[beam]\nE = -1\n");
  EXPECT_EQ(run({"design", "--config", bad.string(), "--out", dir_.string()}), kExitValidation);
  const fs::path unknown = write_config("unknown.conf", "[beam]\nstiffness = 3\n");
  EXPECT_EQ(run({"matrices", "--config", unknown.string()}), kExitValidation);
  // No controller saved yet.
  EXPECT_EQ(run({"simulate", "--out", (dir_ / "empty").string()}), kExitIo);
}

TEST_F(CliTest, DesignReportsReferenceController) {
  const fs::path cfg = write_config("c.conf", kFast);
  ASSERT_EQ(run({"design", "--config", cfg.string(), "--out", dir_.string()}), kExitOk);
  const auto j = json_at(dir_ / "design.json");
  EXPECT_EQ(j["controller_dim"], 46);
  EXPECT_EQ(j["internal_model_dim"], 42);
  EXPECT_GT(j["closed_loop_margin"].get<double>(), 0.5);
  EXPECT_TRUE(j["transmission_zero_check"]["passed"].get<bool>());
  EXPECT_LE(j["residuals"]["observer_care"].get<double>(), 1e-8);
  for (const char* f : {"G1", "G2", "AL", "BL", "Lr", "K1", "K2r"}) {
    EXPECT_TRUE(fs::exists(dir_ / "controller" / (std::string(f) + ".txt"))) << f;
  }
  EXPECT_TRUE(fs::exists(dir_ / "closed_loop_eigs.dat"));
  EXPECT_TRUE(fs::exists(dir_ / "fig_eigs.gp"));
}

TEST_F(CliTest, PureInternalModelDimension) {
  const fs::path cfg = write_config("q0.conf", std::string(kFast) + "[internal_model]\nq = 0\n");
  ASSERT_EQ(run({"design", "--config", cfg.string(), "--out", dir_.string()}), kExitOk);
  EXPECT_EQ(json_at(dir_ / "design.json")["controller_dim"], 2 + 4);
}

TEST_F(CliTest, ColocatedSensorsAbortAtZeroCheck) {
  const fs::path cfg = write_config("co.conf", "[beam]\nxi1 = 0.3\nxi2 = 0.3\n");
  EXPECT_EQ(run({"design", "--config", cfg.string(), "--out", dir_.string()}), kExitNumerical);
  EXPECT_FALSE(fs::exists(dir_ / "controller"));
}

TEST_F(CliTest, ZeroSignalsGiveZeroTrajectory) {
  const fs::path cfg = write_config("zero.conf", std::string(kFast) + R"(
[signals]
reference = trig
dist_freqs =
dist_cos =
dist_sin =
)");
  ASSERT_EQ(run({"design", "--config", cfg.string(), "--out", dir_.string()}), kExitOk);
  ASSERT_EQ(run({"simulate", "--config", cfg.string(), "--out", dir_.string()}), kExitOk);
  std::ifstream is(dir_ / "simulation.csv");
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, "t,y1,y2,yref1,yref2,u1,u2,enorm");
  int rows = 0;
  while (std::getline(is, line)) {
    ++rows;
    EXPECT_EQ(line.substr(line.find(',')), ",0,0,0,0,0,0,0") << line;
  }
  EXPECT_EQ(rows, 1001);
  EXPECT_TRUE(json_at(dir_ / "metrics.json")["regulated"].get<bool>());
}

TEST_F(CliTest, InClassReferenceIsRegulated) {
  const fs::path cfg = write_config("ic.conf", R"(
[signals]
reference = trig
ref_a0 = 0.5 -0.2
ref_freqs = pi 2pi 5pi
ref_cos = 0.3 0.2 ; 0.15 0.2 ; 0.06 0.2
ref_sin = 0.5 -0.4 ; 0.5 -0.2 ; 0.5 -0.08
[simulation]
T = 20
h = 1e-3
record_every = 10
)");
  ASSERT_EQ(run({"design", "--config", cfg.string(), "--out", dir_.string()}), kExitOk);
  ASSERT_EQ(run({"simulate", "--config", cfg.string(), "--out", dir_.string()}), kExitOk);
  const auto j = json_at(dir_ / "metrics.json");
  EXPECT_TRUE(j["regulated"].get<bool>());
  EXPECT_LT(j["terminal_relative"].get<double>(), 1e-3);
  EXPECT_GT(j["decay_rate"].get<double>(), 1.0);
  EXPECT_TRUE(fs::exists(dir_ / "deflection.dat"));
  for (const char* f : {"fig_output.gp", "fig_error.gp", "fig_control.gp", "fig_deflection.gp"}) {
    EXPECT_TRUE(fs::exists(dir_ / f)) << f;
  }
}

TEST_F(CliTest, SimulateRejectsMismatchedController) {
  ASSERT_EQ(run({"design", "--config", write_config("a.conf", kFast).string(), "--out",
                 dir_.string()}),
            kExitOk);
  const fs::path q5 = write_config("q5.conf", std::string(kFast) + "[internal_model]\nq = 5\n");
  EXPECT_EQ(run({"simulate", "--config", q5.string(), "--out", dir_.string()}), kExitValidation);
}

TEST_F(CliTest, OutputsAreDeterministic) {
  const fs::path cfg = write_config("d.conf", kFast);
  for (const char* sub : {"a", "b"}) {
    const std::string out = (dir_ / sub).string();
    ASSERT_EQ(run({"design", "--config", cfg.string(), "--out", out}), kExitOk);
    ASSERT_EQ(run({"simulate", "--config", cfg.string(), "--out", out}), kExitOk);
    ASSERT_EQ(run({"compare", "--config", cfg.string(), "--out", out}), kExitOk);
    ASSERT_EQ(run({"verify", "--config", cfg.string(), "--out", out, "--seed", "7"}), kExitOk);
  }
  int compared = 0;
  for (const auto& entry : fs::recursive_directory_iterator(dir_ / "a")) {
    if (!entry.is_regular_file()) continue;
    const fs::path rel = fs::relative(entry.path(), dir_ / "a");
    EXPECT_EQ(slurp(entry.path()), slurp(dir_ / "b" / rel)) << rel;
    ++compared;
  }
  EXPECT_GE(compared, 20);
}

TEST_F(CliTest, CompareReportsBothControllers) {
  const fs::path cfg = write_config("cmp.conf", std::string(kFast) + "[low_gain]\neps = auto\n");
  ASSERT_EQ(run({"compare", "--config", cfg.string(), "--out", dir_.string()}), kExitOk);
  const auto j = json_at(dir_ / "compare.json");
  EXPECT_EQ(j["reduced_order"]["controller_dim"], 46);
  EXPECT_EQ(j["low_gain"]["controller_dim"], 22);
  const double eps = j["low_gain"]["eps"].get<double>();
  EXPECT_EQ(eps, j["low_gain"]["eps_star"].get<double>());
  EXPECT_GT(j["reduced_order"]["closed_loop_margin"].get<double>(),
            10 * j["low_gain"]["closed_loop_margin"].get<double>());
  EXPECT_LT(j["early_window_u_ratio"].get<double>(), 1.0);
  EXPECT_TRUE(fs::exists(dir_ / "compare_reduced.csv"));
  EXPECT_TRUE(fs::exists(dir_ / "compare_low_gain.csv"));
}

TEST_F(CliTest, VerifyPassesOnDefaults) {
  EXPECT_EQ(run({"verify", "--out", dir_.string(), "--seed", "3"}), kExitOk);
  const auto j = json_at(dir_ / "verify.json");
  EXPECT_EQ(j["failed"], 0);
  bool saw_skip = false;
  for (const auto& c : j["checks"]) saw_skip |= c["status"] == "skipped";
  EXPECT_TRUE(saw_skip);  // no controller directory yet
}

TEST_F(CliTest, VerifySkipsCoercivityWithoutKelvinVoigtDamping) {
  const fs::path cfg = write_config("kv0.conf", "[beam]\nd_KV = 0\n");
  run({"verify", "--config", cfg.string(), "--out", dir_.string()});
  const auto j = json_at(dir_ / "verify.json");
  bool skipped = false;
  for (const auto& c : j["checks"]) {
    if (c["name"] == "coercivity") skipped = c["status"] == "skipped";
  }
  EXPECT_TRUE(skipped);
}

TEST_F(CliTest, VerifyDiagnosesCorruptControllerFile) {
  ASSERT_EQ(run({"design", "--config", write_config("a.conf", kFast).string(), "--out",
                 dir_.string()}),
            kExitOk);
  std::ofstream(dir_ / "controller" / "K1.txt") << "2 42\n1.0 oops\n";
  EXPECT_EQ(run({"verify", "--out", dir_.string()}), kExitIo);
  const auto j = json_at(dir_ / "verify.json");
  std::string detail;
  for (const auto& c : j["checks"]) {
    if (c["name"] == "controller_files") detail = c["detail"];
  }
  EXPECT_NE(detail.find("K1.txt"), std::string::npos) << detail;
  EXPECT_NE(detail.find("oops"), std::string::npos) << detail;
  EXPECT_EQ(run({"simulate", "--out", dir_.string()}), kExitIo);
}

TEST_F(CliTest, MatricesDumpsBothDiscretizations) {
  ASSERT_EQ(run({"matrices", "--out", dir_.string()}), kExitOk);
  std::ifstream a(dir_ / "matrices" / "n69" / "A.txt");
  int rows = 0, cols = 0;
  a >> rows >> cols;
  EXPECT_EQ(rows, 138);
  EXPECT_EQ(cols, 138);
  std::ifstream m(dir_ / "matrices" / "n39" / "M.txt");
  m >> rows >> cols;
  EXPECT_EQ(rows, 39);
  double m00 = 0;
  m >> m00;
  EXPECT_DOUBLE_EQ(m00, 35 * std::numbers::pi / 18);
}

}  // namespace
}  // namespace kvbeam::cli
