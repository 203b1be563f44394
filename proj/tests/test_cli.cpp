#include <sys/wait.h>

#include <array>
#include <cstdlib>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

#include <gtest/gtest.h>

#include "elastic_ds/elastic_chain.hpp"
#include "elastic_ds/io.hpp"

using namespace elastic_ds;
namespace fs = std::filesystem;

namespace {

const std::string kCli = ELASTIC_DS_CLI;
const fs::path kData = ELASTIC_DS_DATA_DIR;

struct Result {
  int status = -1;
  std::string out;
};

Result run(const std::string& args) {
  Result r;
  const std::string cmd = kCli + " " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf;
  std::size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
  const int raw = pclose(pipe);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return r;
}

std::vector<std::vector<double>> csv_rows(const std::string& text) {
  std::vector<std::vector<double>> rows;
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    std::vector<double> row;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(std::move(row));
  }
  return rows;
}

double field_of(const std::string& report, const std::string& key) {
  const std::regex re("\"" + key + "\":([-0-9.eE+]+)");
  std::smatch m;
  if (!std::regex_search(report, m, re)) throw std::runtime_error("no field " + key + " in " + report);
  return std::stod(m[1]);
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("elastic_ds_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  std::string fit_bundled() {
    const auto r = run("fit " + (kData / "s_curve_demo.json").string() + " -o " + path("p.json"));
    EXPECT_EQ(r.status, 0);
    return path("p.json");
  }

  fs::path dir_;
};

Vec v2(double x, double y) {
  Vec v(2);
  v << x, y;
  return v;
}

}  // namespace

TEST_F(Cli, UsageErrorsExitOne) {
  EXPECT_EQ(run("").status, 1);
  EXPECT_EQ(run("no-such-command").status, 1);
  EXPECT_EQ(run("fit").status, 1);
}

TEST_F(Cli, FitBundledDemo) {
  const auto r = run("fit " + (kData / "s_curve_demo.json").string() + " -o " + path("p.json"));
  ASSERT_EQ(r.status, 0);
  EXPECT_NE(r.out.find("\"command\":\"fit\""), std::string::npos);
  const auto file = io::read_policy(path("p.json"));
  EXPECT_LE(file.policy.max_stability_eigenvalue(), -file.policy.margin() + 1e-9);
  EXPECT_EQ(static_cast<double>(file.policy.size()), field_of(r.out, "K"));
  const auto demo_bytes = io::read_text(kData / "s_curve_demo.json");
  EXPECT_EQ(file.provenance.source_hash, io::fnv1a_hex(demo_bytes));
}

TEST_F(Cli, EmptyDemoExitsTwoWithoutOutput) {
  std::ofstream(path("empty.json")).close();
  EXPECT_EQ(run("fit " + path("empty.json") + " -o " + path("p.json")).status, 2);
  EXPECT_FALSE(fs::exists(path("p.json")));
}

TEST_F(Cli, KMaxOne) {
  const auto r = run("--quiet fit " + (kData / "s_curve_demo.json").string() + " --k-max 1 -o " + path("p.json"));
  ASSERT_EQ(r.status, 0);
  EXPECT_TRUE(r.out.empty());
  EXPECT_EQ(io::read_policy(path("p.json")).policy.size(), 1u);
}

TEST_F(Cli, IdentityDescriptorReproducesPolicy) {
  const auto p = fit_bundled();
  ASSERT_EQ(run("frames " + p + " -o " + path("id.json")).status, 0);
  ASSERT_EQ(run("transform " + p + " " + path("id.json") + " -o " + path("t.json")).status, 0);
  const auto a = io::read_policy(p);
  const auto b = io::read_policy(path("t.json"));
  ASSERT_EQ(a.policy.size(), b.policy.size());
  for (std::size_t k = 0; k < a.policy.size(); ++k) {
    EXPECT_LE((a.policy.components()[k].mean - b.policy.components()[k].mean).norm(), 1e-9);
    EXPECT_LE((a.policy.components()[k].covariance - b.policy.components()[k].covariance).norm(), 1e-9);
  }
  for (std::size_t i = 0; i < a.chain.joints.size(); ++i) EXPECT_LE((a.chain.joints[i] - b.chain.joints[i]).norm(), 1e-9);
}

TEST_F(Cli, BothEndsShiftedMeetsThresholds) {
  const auto p = fit_bundled();
  const std::string before = io::read_text(p);
  const auto r = run("transform " + p + " " + (kData / "both_ends_shifted.json").string() + " -o " + path("t.json"));
  ASSERT_EQ(r.status, 0);
  EXPECT_GE(field_of(r.out, "start_cos"), 0.98);
  EXPECT_GE(field_of(r.out, "goal_cos"), 0.99);
  EXPECT_NE(r.out.find("\"converged\":true"), std::string::npos);
  // Inputs are never modified.
  EXPECT_EQ(io::fnv1a_hex(io::read_text(p)), io::fnv1a_hex(before));

  const auto m = run("metrics " + path("t.json"));
  ASSERT_EQ(m.status, 0);
  EXPECT_EQ(field_of(m.out, "goal_cos"), field_of(r.out, "goal_cos"));
}

TEST_F(Cli, RefusesToOverwriteInput) {
  const auto p = fit_bundled();
  const std::string before = io::read_text(p);
  EXPECT_EQ(run("transform " + p + " " + (kData / "both_ends_shifted.json").string() + " -o " + p).status, 2);
  EXPECT_EQ(io::read_text(p), before);
}

TEST_F(Cli, NonOrthonormalDescriptorExitsTwo) {
  const auto p = fit_bundled();
  std::ofstream(path("bad.json")) << R"({"format":"elastic-ds/descriptor","version":1,"dim":2,
    "enter":{"position":[0,0],"rotation":[[1,0.5],[0,1]]},
    "exit":{"position":[1,0],"rotation":[[1,0],[0,1]]}})";
  EXPECT_EQ(run("transform " + p + " " + path("bad.json") + " -o " + path("t.json")).status, 2);
  EXPECT_FALSE(fs::exists(path("t.json")));
}

TEST_F(Cli, RolloutLyapunovDecreases) {
  const auto p = fit_bundled();
  const auto r = run("rollout " + p);
  ASSERT_EQ(r.status, 0);
  const auto rows = csv_rows(r.out);
  ASSERT_GT(rows.size(), 10u);
  const auto policy = io::read_policy(p).policy;
  const double radius = 1e-3;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if ((v2(rows[i][1], rows[i][2]) - policy.attractor()).norm() < radius) break;
    EXPECT_LT(rows[i][5], rows[i - 1][5]) << "row " << i;
  }
}

TEST_F(Cli, FieldArrowsPointAtAttractorOfLinearPolicy) {
  // One component, A = -I: every arrow points straight at the attractor.
  const Vec a = v2(0, 0), b = v2(1, 0.5);
  OrderedGmm g{{GaussianComponent{1.0, 0.5 * (a + b), 0.05 * Mat::Identity(2, 2)}}, {0.5}};
  const auto chain = build_chain(g, a, b);
  LpvDsPolicy policy(chain.gmm.components, {-Mat::Identity(2, 2)}, Mat::Identity(2, 2), b, 0.5);
  io::write_policy(path("lin.json"), io::PolicyFile{policy, chain, ProfileConfig{50, 0.02, true}, {}});

  ASSERT_EQ(run("field " + path("lin.json") + " --nx 6 --ny 5 --lower -1,-1 --upper 2,2 --csv " + path("f.csv") +
                " --svg " + path("f.svg"))
                .status,
            0);
  const auto rows = csv_rows(io::read_text(path("f.csv")));
  ASSERT_EQ(rows.size(), 30u);
  const std::string svg = io::read_text(path("f.svg"));
  const std::regex arrow("data-dx=\"([-0-9.eE+]+)\" data-dy=\"([-0-9.eE+]+)\"");
  std::size_t i = 0;
  for (auto it = std::sregex_iterator(svg.begin(), svg.end(), arrow); it != std::sregex_iterator(); ++it, ++i) {
    ASSERT_LT(i, rows.size());
    const Vec dir = v2(std::stod((*it)[1]), std::stod((*it)[2]));
    const Vec to_goal = (b - v2(rows[i][0], rows[i][1])).normalized();
    EXPECT_NEAR(dir.dot(to_goal), 1.0, 1e-5);
  }
  EXPECT_EQ(i, rows.size());
}

TEST_F(Cli, BenchTable) {
  const auto r = run("bench --points 100,200,400 --repeats 1");
  ASSERT_EQ(r.status, 0);
  const auto rows = csv_rows(r.out);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0][0], 100);
  EXPECT_EQ(rows[2][0], 400);
  EXPECT_EQ(r.out.substr(0, r.out.find('\n')),
            "T_n,K,train_s,transform_ms,profile_ms,estimate_ms,total_ms,start_cos,goal_cos,endpoints_distance");
}

TEST_F(Cli, SplitThenStitchAndSequence) {
  ASSERT_EQ(run("split " + (kData / "s_curve_demo.json").string() + " --prefix " + path("part")).status, 0);
  ASSERT_TRUE(fs::exists(path("part_0.json")));
  ASSERT_TRUE(fs::exists(path("part_1.json")));
  const auto d0 = io::read_demo(path("part_0.json"));
  const auto d1 = io::read_demo(path("part_1.json"));
  EXPECT_EQ(d0.trajectories[0].back(), d1.trajectories[0].front());

  ASSERT_EQ(run("fit " + path("part_0.json") + " -o " + path("p0.json")).status, 0);
  ASSERT_EQ(run("fit " + path("part_1.json") + " -o " + path("p1.json")).status, 0);
  ASSERT_EQ(run("stitch " + path("p0.json") + " " + path("p1.json") + " -o " + path("all.json")).status, 0);
  const auto all = io::read_policy(path("all.json"));
  EXPECT_EQ(all.chain.joints.size(),
            io::read_policy(path("p0.json")).chain.joints.size() + io::read_policy(path("p1.json")).chain.joints.size() - 1);

  const auto seq = run("rollout " + path("p0.json") + " " + path("p1.json"));
  ASSERT_EQ(seq.status, 0);
  const auto rows = csv_rows(seq.out);
  ASSERT_FALSE(rows.empty());
  EXPECT_EQ(rows.front().back(), 0.0);
  EXPECT_EQ(rows.back().back(), 1.0);
}

TEST_F(Cli, ConfigFile) {
  std::ofstream(path("cfg.json")) << R"({"fit": {"k_min": 2, "k_max": 2}})";
  const auto r = run("--config " + path("cfg.json") + " fit " + (kData / "s_curve_demo.json").string() + " -o " +
                     path("p.json"));
  ASSERT_EQ(r.status, 0);
  EXPECT_EQ(field_of(r.out, "K"), 2.0);
  std::ofstream(path("bad.json")) << R"({"scaling": "cubic"})";
  EXPECT_EQ(run("--config " + path("bad.json") + " fit " + (kData / "s_curve_demo.json").string() + " -o " +
                path("q.json"))
                .status,
            2);

  setenv("ELASTIC_DS_CONFIG", path("cfg.json").c_str(), 1);
  const auto e = run("fit " + (kData / "s_curve_demo.json").string() + " -o " + path("e.json"));
  unsetenv("ELASTIC_DS_CONFIG");
  ASSERT_EQ(e.status, 0);
  EXPECT_EQ(field_of(e.out, "K"), 2.0);
}
