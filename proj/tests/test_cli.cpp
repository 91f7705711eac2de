#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"

namespace fs = std::filesystem;

namespace {

struct Outcome {
  int status;
  std::string out;
  std::string err;
};

Outcome run(std::vector<std::string> args) {
  args.insert(args.begin(), "stimemit");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  int status = stimemit::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {status, out.str(), err.str()};
}

std::vector<std::vector<std::string>> rows(const std::string& csv) {
  std::vector<std::vector<std::string>> out;
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);  // metadata
  std::getline(in, line);  // column names
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
    out.push_back(cells);
  }
  return out;
}

std::string first_line(const std::string& s) { return s.substr(0, s.find('\n')); }

std::string second_line(const std::string& s) {
  auto a = s.find('\n') + 1;
  return s.substr(a, s.find('\n', a) - a);
}

fs::path scratch(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / "stimemit_cli_tests";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST(Grid, Parsing) {
  auto g = stimemit::cli::parse_grid("0.05:5:200:log");
  EXPECT_TRUE(g.log);
  EXPECT_EQ(g.count, 200u);
  auto v = g.values();
  EXPECT_EQ(v.front(), 0.05);
  EXPECT_EQ(v.back(), 5.0);
  EXPECT_NEAR(v[1] / v[0], v[2] / v[1], 1e-12);
  EXPECT_THROW(stimemit::cli::parse_grid("0:1:1"), stimemit::cli::UsageError);
  EXPECT_THROW(stimemit::cli::parse_grid("1:0:5"), stimemit::cli::UsageError);
  EXPECT_THROW(stimemit::cli::parse_grid("0:1:5:log"), stimemit::cli::UsageError);
  EXPECT_THROW(stimemit::cli::parse_grid("0:1"), stimemit::cli::UsageError);
  EXPECT_THROW(stimemit::cli::parse_grid("0:x:5"), stimemit::cli::UsageError);
  EXPECT_THROW(stimemit::cli::parse_grid("0:1:2.5"), stimemit::cli::UsageError);
}

TEST(Cli, Fig2ModeMatch) {
  auto r = run({"fig2", "--n-list", "0", "--grid", "0.5:1.5:3"});
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_EQ(first_line(r.out).rfind("# stimemit ", 0), 0u);
  EXPECT_EQ(second_line(r.out), "gamma_tau,n,p_stim_exact,p_stim_sin2");
  auto t = rows(r.out);
  ASSERT_EQ(t.size(), 3u);
  EXPECT_EQ(t[1][0], "1");
  EXPECT_NEAR(std::stod(t[1][2]), 1.0, 1e-8);
}

TEST(Cli, Fig2SinglePhotonPeak) {
  auto r = run({"fig2", "--n-list", "1", "--grid", "0.05:5:200:log"});
  ASSERT_EQ(r.status, 0) << r.err;
  double best_x = 0.0;
  double best = -1.0;
  for (const auto& row : rows(r.out)) {
    if (std::stod(row[2]) > best) {
      best = std::stod(row[2]);
      best_x = std::stod(row[0]);
    }
  }
  EXPECT_NEAR(best_x, 0.353, 0.01);
}

TEST(Cli, Fig2LargeN) {
  auto r = run({"fig2", "--n-list", "144", "--grid", "0.01:0.02:2"});
  ASSERT_EQ(r.status, 0) << r.err;
  auto t = rows(r.out);
  EXPECT_NEAR(std::stod(t[0][2]), std::stod(t[0][3]), 0.02);
}

TEST(Cli, Fig2RowOrderGridMajor) {
  auto r = run({"fig2", "--n-list", "3,1,2", "--grid", "0.1:0.2:2"});
  ASSERT_EQ(r.status, 0) << r.err;
  auto t = rows(r.out);
  ASSERT_EQ(t.size(), 6u);
  EXPECT_EQ(t[0][1], "1");
  EXPECT_EQ(t[1][1], "2");
  EXPECT_EQ(t[2][1], "3");
  EXPECT_EQ(t[3][0], "0.2");
}

TEST(Cli, Fig3Examples) {
  auto r = run({"fig3", "--n-list", "1,4,16,64"});
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_EQ(second_line(r.out), "gamma_t,n,p_stim,p0,sum");
  auto t = rows(r.out);
  ASSERT_EQ(t.size(), 201u * 4u);
  EXPECT_EQ(t[0][0], "0");
  EXPECT_EQ(std::stod(t[0][2]), 0.0);
  EXPECT_NEAR(std::stod(t[0][3]), 1.0, 1e-15);
  for (const auto& row : t) {
    EXPECT_GE(std::stod(row[4]), 0.9) << row[0] << " " << row[1];
    EXPECT_LE(std::stod(row[4]), 1.01);
  }
  EXPECT_EQ(t.back()[0], "0.1");
  const double limit = std::pow(std::sin(std::sqrt(4.0 * 0.01 * 64)), 2);
  EXPECT_NEAR(std::stod(t.back()[2]), limit, 0.05);
}

TEST(Cli, Fig3ShortFormMatchesStatedLimit) {
  auto r = run({"fig3", "--n-list", "16", "--short", "--grid", "0:0.1:11"});
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_NE(first_line(r.out).find("mode=short"), std::string::npos);
  auto last = rows(r.out).back();
  const double s = std::sin(std::sqrt(4.0 * 0.01 * 16));
  EXPECT_NEAR(std::stod(last[2]), s * s, 0.05);
  EXPECT_NEAR(std::stod(last[3]), 1.0 - s * s, 0.05);
}

TEST(Cli, Fig3RequiresNList) {
  auto r = run({"fig3"});
  EXPECT_EQ(r.status, 1);
  EXPECT_NE(r.err.find("--n-list"), std::string::npos);
}

TEST(Cli, Fig4Examples) {
  auto r = run({"fig4", "--grid", "0.01:1:100"});
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_EQ(second_line(r.out), "gamma_tau_prime,projection");
  double best = -1.0;
  double best_x = 0.0;
  for (const auto& row : rows(r.out)) {
    const double x = std::stod(row[0]);
    const double p = std::stod(row[1]);
    if (x <= 0.01) EXPECT_LT(p, 0.1);
    if (p > best) {
      best = p;
      best_x = x;
    }
  }
  EXPECT_NEAR(best_x, 0.41, 0.02);
  auto third = run({"fig4", "--grid", "0.3333333333333333:1:2", "--method", "quadrature"});
  ASSERT_EQ(third.status, 0) << third.err;
  EXPECT_NEAR(std::stod(rows(third.out)[0][1]), 0.96, 1e-3);
}

TEST(Cli, EvalExamples) {
  auto a = run({"eval", "--n", "0", "--pulse", "exp", "--gamma-tau", "1"});
  ASSERT_EQ(a.status, 0) << a.err;
  EXPECT_NE(a.out.find("p_stim=1 "), std::string::npos) << a.out;
  auto b = run({"eval", "--n", "1", "--pulse", "exp", "--gamma-tau", "0.33333"});
  ASSERT_EQ(b.status, 0);
  const auto pos = b.out.find("p_stim=");
  EXPECT_NEAR(std::stod(b.out.substr(pos + 7)), 0.96, 1e-4);
  auto c = run({"eval", "--n", "16", "--tau", "0.01", "--t", "0.05"});
  ASSERT_EQ(c.status, 0);
  EXPECT_NE(c.out.find(" p0="), std::string::npos);
  EXPECT_NE(c.out.find("precision_bits_used="), std::string::npos);
}

TEST(Cli, EvalSquareAndFilePulses) {
  auto sq = run({"eval", "--n", "0", "--pulse", "square", "--tau", "1"});
  ASSERT_EQ(sq.status, 0) << sq.err;
  const double amp = 2.0 * (1.0 - std::exp(-0.5));
  EXPECT_NEAR(std::stod(sq.out.substr(sq.out.find("p_stim=") + 7)), amp * amp, 1e-8);

  auto path = scratch("pulse.txt");
  {
    std::ofstream f(path);
    f << "# time amplitude\n";
    for (int i = 0; i <= 4000; ++i) f << i * 0.005 << " " << 3.0 * std::exp(-i * 0.005 / 2.0) << "\n";
  }
  auto file = run({"eval", "--n", "1", "--pulse", "file", "--pulse-file", path.string()});
  ASSERT_EQ(file.status, 0) << file.err;
  // A tabulated tau = 1 mode.
  const double x = 1.0;
  const double ref = 8.0 * x * (3.0 - x) * (3.0 - x) / ((1.0 + x) * (1.0 + x) * (3.0 + x) * (3.0 + x));
  EXPECT_NEAR(std::stod(file.out.substr(file.out.find("p_stim=") + 7)), ref, 1e-4);
  EXPECT_EQ(run({"eval", "--n", "1", "--pulse", "file"}).status, 1);
  EXPECT_EQ(run({"eval", "--n", "1", "--pulse", "file", "--pulse-file", "/nonexistent/pulse"}).status, 1);
}

TEST(Cli, CoherentExamples) {
  auto decay = run({"coherent", "--alpha", "0", "--duration", "1", "--grid", "0:2:5"});
  ASSERT_EQ(decay.status, 0) << decay.err;
  EXPECT_EQ(second_line(decay.out), "gamma_t,p_e,p_g,overlap_mag");
  for (const auto& row : rows(decay.out)) EXPECT_NEAR(std::stod(row[1]), std::exp(-std::stod(row[0])), 1e-8);

  const double a = (M_PI / 2.0) / 1e-3;
  auto rabi = run({"coherent", "--alpha", stimemit::cli::fmt(a), "--duration", "0.001", "--grid", "0:0.001:11"});
  ASSERT_EQ(rabi.status, 0) << rabi.err;
  for (const auto& row : rows(rabi.out)) {
    const double c = std::cos(a * std::stod(row[0]));
    EXPECT_NEAR(std::stod(row[1]), c * c, 1e-3);
    EXPECT_EQ(row[3], "1");
  }
}

TEST(Cli, OracleReport) {
  auto r = run({"oracle", "--points", "101"});
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_EQ(second_line(r.out), "check,p,gamma_tau,reference,value,rel_error");
  EXPECT_EQ(rows(r.out).size(), 4u + 44u + 1u);
}

TEST(Cli, UsageErrorsExitOne) {
  EXPECT_EQ(run({}).status, 1);
  EXPECT_EQ(run({"bogus"}).status, 1);
  EXPECT_EQ(run({"fig2", "--grid", "1:0:3", "--n-list", "1"}).status, 1);
  EXPECT_EQ(run({"fig2", "--grid", "0:1:3:log", "--n-list", "1"}).status, 1);
  EXPECT_EQ(run({"fig2", "--n-list", "a,b"}).status, 1);
  EXPECT_EQ(run({"fig2", "--n-list", "1", "--pulse", "square"}).status, 1);
  EXPECT_EQ(run({"eval", "--tau", "1"}).status, 1);
  EXPECT_EQ(run({"eval", "--n", "1", "--tau", "-1"}).status, 1);
  EXPECT_EQ(run({"eval", "--n", "20000", "--tau", "1"}).status, 1);
  EXPECT_EQ(run({"eval", "--n", "1", "--tau", "1", "--pulse", "gauss"}).status, 1);
  EXPECT_EQ(run({"fig4", "--method", "simpson"}).status, 1);
  EXPECT_EQ(run({"fig4", "--out", "/nonexistent/dir/out.csv"}).status, 1);
}

TEST(Cli, NumericFailureExitsTwo) {
  auto r = run({"eval", "--n", "3", "--pulse", "square", "--tau", "1", "--max-steps", "2"});
  EXPECT_EQ(r.status, 2);
  EXPECT_NE(r.err.find("numeric failure"), std::string::npos);
  EXPECT_TRUE(r.out.empty());
  EXPECT_EQ(run({"coherent", "--alpha", "40", "--max-steps", "2"}).status, 2);
}

TEST(Cli, WritesFileAndHelp) {
  auto path = scratch("fig4.csv");
  auto r = run({"fig4", "--grid", "0.1:1:4", "--out", path.string()});
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_TRUE(r.out.empty());
  std::ifstream f(path);
  std::string header;
  std::getline(f, header);
  EXPECT_EQ(header.rfind("# stimemit " + std::string(stimemit::kVersion), 0), 0u);
  EXPECT_EQ(run({"--help"}).status, 0);
}

TEST(Cli, OutputIndependentOfThreadCount) {
  const std::vector<std::vector<std::string>> commands{
      {"fig2", "--n-list", "0,1,5,30", "--grid", "0.01:10:25:log"},
      {"fig3", "--n-list", "1,4,16", "--grid", "0:0.1:21"},
      {"fig4", "--grid", "0.05:2:30", "--method", "quadrature"},
      {"oracle", "--points", "61"},
  };
  for (const auto& base : commands) {
    auto one = base;
    one.insert(one.end(), {"--threads", "1"});
    auto many = base;
    many.insert(many.end(), {"--threads", "4"});
    auto a = run(one);
    auto b = run(many);
    ASSERT_EQ(a.status, 0) << a.err;
    EXPECT_EQ(a.out, b.out) << base[0];
  }
}
