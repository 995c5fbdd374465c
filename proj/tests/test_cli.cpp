#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <random>
#include <sstream>

#include "spde/cli.hpp"
#include "spde/matrix_market.hpp"
#include "spde/mesh.hpp"

namespace fs = std::filesystem;
using namespace spde;
using cli::CsvTable;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run spde_run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / ("spde_cli_" + std::string(info->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  std::string write(const std::string& name, const std::string& text) const {
    std::ofstream(path(name)) << text;
    return path(name);
  }

  // 1D data y = 1 + sin(x) + 0.5 c + noise, or Poisson counts.
  std::string write_data(const std::string& name, int n, bool poisson, std::uint64_t seed) const {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 20.0);
    std::normal_distribution<double> g(0.0, 1.0);
    std::ostringstream s;
    s << "x,z,c\n";
    for (int i = 0; i < n; ++i) {
      const double x = u(rng), c = g(rng);
      double z;
      if (poisson) {
        std::poisson_distribution<int> p(std::exp(1.5 + std::sin(0.5 * x)));
        z = p(rng);
      } else {
        z = 1.0 + std::sin(x) + 0.5 * c + 0.3 * g(rng);
      }
      s << cli::format_double(x) << ',' << cli::format_double(z) << ',' << cli::format_double(c) << '\n';
    }
    return write(name, s.str());
  }

  fs::path dir_;
};

nlohmann::json read_json(const std::string& p) {
  std::ifstream in(p);
  return nlohmann::json::parse(in);
}

}  // namespace

TEST(Csv, ParsesHeaderCommentsAndBlankLines) {
  std::istringstream in("# comment\n x , y \n\n1, 2\n# skip\n3.5,-4e-3\n");
  const auto t = cli::read_csv(in);
  ASSERT_EQ(t.header, (std::vector<std::string>{"x", "y"}));
  ASSERT_EQ(t.size(), 2u);
  EXPECT_EQ(t.rows[1][1], -4e-3);
  EXPECT_EQ(t.line_numbers[1], 6);
  EXPECT_EQ(t.column("y")[0], 2.0);
  EXPECT_THROW(t.column("z"), cli::CsvError);
}

TEST(Csv, MalformedRowNamesLineNumber) {
  std::istringstream bad("x,y\n1,2\n3,abc\n");
  try {
    cli::read_csv(bad, "pts.csv");
    FAIL() << "expected CsvError";
  } catch (const cli::CsvError& e) {
    EXPECT_NE(std::string(e.what()).find("pts.csv:3"), std::string::npos) << e.what();
  }
  std::istringstream short_row("x,y\n1\n");
  EXPECT_THROW(cli::read_csv(short_row), cli::CsvError);
  std::istringstream trailing("x\n1.5x\n");
  EXPECT_THROW(cli::read_csv(trailing), cli::CsvError);
  std::istringstream dup("x,x\n1,2\n");
  EXPECT_THROW(cli::read_csv(dup), cli::CsvError);
}

TEST(Csv, FormatDoubleRoundTrips) {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 12345.678901234567}) {
    EXPECT_EQ(std::strtod(cli::format_double(v).c_str(), nullptr), v);
  }
}

TEST_F(CliTest, FourCornerMesh) {
  const auto pts = write("sq.csv", "x,y\n0,0\n1,0\n1,1\n0,1\n");
  const auto r = spde_run({"mesh", "--points", pts, "--out", path("m.txt")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("4 nodes, 2 triangles"), std::string::npos) << r.out;
  const auto m = std::get<mesh::Mesh2D>(mesh::read_mesh(path("m.txt")));
  EXPECT_EQ(m.n_nodes(), 4);
  EXPECT_EQ(m.n_triangles(), 2);
}

TEST_F(CliTest, MarginAddsRingNodes) {
  const auto pts = write("sq.csv", "x,y\n0,0\n1,0\n1,1\n0,1\n0.4,0.6\n");
  ASSERT_EQ(spde_run({"mesh", "--points", pts, "--out", path("a.txt")}).code, 0);
  ASSERT_EQ(spde_run({"mesh", "--points", pts, "--margin", "0.5", "--spacing", "0.25", "--out", path("b.txt")}).code,
            0);
  const auto a = std::get<mesh::Mesh2D>(mesh::read_mesh(path("a.txt")));
  const auto b = std::get<mesh::Mesh2D>(mesh::read_mesh(path("b.txt")));
  EXPECT_GT(b.n_nodes(), a.n_nodes());
}

TEST_F(CliTest, OneDimensionalMeshFromXOnly) {
  const auto pts = write("x.csv", "x\n2\n4\n10\n");
  const auto r = spde_run({"mesh", "--points", pts, "--intervals", "16", "--out", path("m.txt")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto m = std::get<mesh::Mesh1D>(mesh::read_mesh(path("m.txt")));
  EXPECT_LE(m.lo(), 2.0 - 0.2 * 8.0 + 1e-12);
  EXPECT_GE(m.hi(), 10.0 + 0.2 * 8.0 - 1e-12);
}

TEST_F(CliTest, InputErrorsExitOne) {
  const auto bad = write("bad.csv", "x,y\n0,0\n1,zz\n");
  const auto r = spde_run({"mesh", "--points", bad, "--out", path("m.txt")});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find(":3:"), std::string::npos) << r.err;
  EXPECT_EQ(spde_run({"mesh", "--points", path("missing.csv"), "--out", path("m.txt")}).code, 1);
  EXPECT_EQ(spde_run({"frobnicate"}).code, 1);
  EXPECT_EQ(spde_run({"fit", "--data", bad}).code, 1);
  const auto collinear = write("line.csv", "x,y\n0,0\n1,1\n2,2\n");
  EXPECT_EQ(spde_run({"mesh", "--points", collinear, "--out", path("m.txt")}).code, 1);
  EXPECT_EQ(spde_run({"--help"}).code, 0);
}

TEST_F(CliTest, GaussianFitPredictRoundTrip) {
  const auto data = write_data("d.csv", 200, false, 5);
  ASSERT_EQ(spde_run({"mesh", "--points", data, "--out", path("m.txt")}).code, 0);
  const auto fit = spde_run({"fit", "--data", data, "--mesh", path("m.txt"), "--covariates", "c", "--out",
                             path("fit.json")});
  ASSERT_EQ(fit.code, 0) << fit.err;
  const auto j = read_json(path("fit.json"));
  EXPECT_TRUE(j.at("converged").get<bool>());
  EXPECT_EQ(j.at("family"), "gaussian");
  EXPECT_GT(j.at("theta_hat").at("kappa").get<double>(), 0.0);
  EXPECT_NEAR(j.at("fixed_effects").at("c").get<double>(), 0.5, 0.1);
  EXPECT_EQ(j.at("beta_hat").size(), j.at("n_basis").get<std::size_t>() + 2);

  // Predict at the training sites and correlate with the response.
  const auto pr = spde_run({"predict", "--fit", path("fit.json"), "--locations", data, "--out", path("p.csv")});
  ASSERT_EQ(pr.code, 0) << pr.err;
  const auto p = cli::read_csv_file(path("p.csv"));
  EXPECT_EQ(p.header, (std::vector<std::string>{"x", "mean", "se", "response_mean"}));
  const auto d = cli::read_csv_file(data);
  ASSERT_EQ(p.size(), d.size());
  const auto m = p.column("mean"), z = d.column("z"), se = p.column("se");
  double mm = 0, mz = 0;
  for (std::size_t i = 0; i < m.size(); ++i) mm += m[i] / m.size(), mz += z[i] / m.size();
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    sxy += (m[i] - mm) * (z[i] - mz);
    sxx += (m[i] - mm) * (m[i] - mm);
    syy += (z[i] - mz) * (z[i] - mz);
    EXPECT_GT(se[i], 0.0);
  }
  const double corr = sxy / std::sqrt(sxx * syy);
  EXPECT_GT(corr, 0.9) << "correlation(mean, y) = " << corr;
}

TEST_F(CliTest, PoissonSmokeRunConverges) {
  const auto data = write_data("p.csv", 150, true, 9);
  ASSERT_EQ(spde_run({"mesh", "--points", data, "--out", path("m.txt")}).code, 0);
  const auto r = spde_run({"fit", "--data", data, "--mesh", path("m.txt"), "--family", "poisson", "--degree", "2",
                           "--out", path("fit.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = read_json(path("fit.json"));
  EXPECT_TRUE(j.at("converged").get<bool>());
  EXPECT_EQ(j.at("theta_hat").at("sigma2").get<double>(), 1.0);
  const auto pr = spde_run({"predict", "--fit", path("fit.json"), "--locations", data, "--out", path("pr.csv")});
  ASSERT_EQ(pr.code, 0) << pr.err;
  const auto p = cli::read_csv_file(path("pr.csv"));
  const auto mean = p.column("mean"), resp = p.column("response_mean");
  for (std::size_t i = 0; i < mean.size(); ++i) EXPECT_NEAR(resp[i], std::exp(mean[i]), 1e-12 * resp[i]);
}

TEST_F(CliTest, NegativeCountsRejectedForPoisson) {
  const auto data = write_data("d.csv", 50, true, 3);
  ASSERT_EQ(spde_run({"mesh", "--points", data, "--out", path("m.txt")}).code, 0);
  std::string text;
  {
    std::ifstream in(data);
    std::stringstream ss;
    ss << in.rdbuf();
    text = ss.str() + "5,-1,0\n";
  }
  write("neg.csv", text);
  const auto r = spde_run({"fit", "--data", path("neg.csv"), "--mesh", path("m.txt"), "--family", "poisson",
                           "--out", path("fit.json")});
  EXPECT_EQ(r.code, 1);
}

TEST_F(CliTest, SimulateIsDeterministicAndParsesBack) {
  const auto pts = write("x.csv", "x\n0\n10\n");
  ASSERT_EQ(spde_run({"mesh", "--points", pts, "--out", path("m.txt")}).code, 0);
  const auto loc = write("loc.csv", "x\n1\n2.5\n7\n");
  const std::vector<std::string> base{"simulate", "--mesh", path("m.txt"), "--kappa", "1", "--tau", "1", "--n", "4",
                                      "--seed", "17", "--locations", loc};
  auto a = base, b = base;
  a.insert(a.end(), {"--out", path("a.csv"), "--threads", "1"});
  b.insert(b.end(), {"--out", path("b.csv"), "--threads", "3"});
  ASSERT_EQ(spde_run(a).code, 0);
  ASSERT_EQ(spde_run(b).code, 0);
  const auto ta = cli::read_csv_file(path("a.csv"));
  const auto tb = cli::read_csv_file(path("b.csv"));
  EXPECT_EQ(ta.header, (std::vector<std::string>{"sample_id", "x", "value"}));
  EXPECT_EQ(ta.size(), 12u);
  EXPECT_EQ(ta.rows, tb.rows);
  EXPECT_EQ(ta.column("sample_id").back(), 3.0);
}

TEST_F(CliTest, SampleDifferenceSummary) {
  const auto data = write_data("d.csv", 120, false, 21);
  ASSERT_EQ(spde_run({"mesh", "--points", data, "--out", path("m.txt")}).code, 0);
  ASSERT_EQ(spde_run({"fit", "--data", data, "--mesh", path("m.txt"), "--covariates", "c", "--out", path("f.json")})
                .code,
            0);
  const auto loc = write("loc.csv", "x,c\n3,0\n9,0\n");
  const auto r = spde_run({"sample", "--fit", path("f.json"), "--minus", path("f.json"), "--locations", loc, "--n",
                           "400", "--seed", "2", "--summary", "--out", path("s.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto s = cli::read_csv_file(path("s.csv"));
  EXPECT_EQ(s.header, (std::vector<std::string>{"x", "mean", "sd"}));
  // Difference of two independent draws from the same posterior: mean 0.
  const auto mean = s.column("mean"), sd = s.column("sd");
  for (std::size_t i = 0; i < mean.size(); ++i) EXPECT_LT(std::abs(mean[i]), 4.0 * sd[i] / std::sqrt(400.0));

  const auto raw = spde_run({"sample", "--fit", path("f.json"), "--locations", loc, "--n", "5", "--out",
                             path("raw.csv")});
  ASSERT_EQ(raw.code, 0) << raw.err;
  EXPECT_EQ(cli::read_csv_file(path("raw.csv")).size(), 10u);
}

TEST_F(CliTest, SimulateThenFitRecoversTheta) {
  // Field drawn by `simulate`, noise added here, hyperparameters refit.
  std::ostringstream pts;
  pts << "x\n0\n50\n";
  write("ends.csv", pts.str());
  ASSERT_EQ(spde_run({"mesh", "--points", path("ends.csv"), "--intervals", "100", "--out", path("m.txt")}).code, 0);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 50.0);
  std::ostringstream loc;
  loc << "x\n";
  for (int i = 0; i < 500; ++i) loc << cli::format_double(u(rng)) << '\n';
  write("loc.csv", loc.str());
  ASSERT_EQ(spde_run({"simulate", "--mesh", path("m.txt"), "--kappa", "1", "--tau", "1", "--seed", "8",
                      "--locations", path("loc.csv"), "--out", path("sim.csv")})
                .code,
            0);
  const auto sim = cli::read_csv_file(path("sim.csv"));
  std::normal_distribution<double> e(0.0, 0.25);
  std::ostringstream data;
  data << "x,z\n";
  for (const auto& row : sim.rows) data << cli::format_double(row[1]) << ',' << cli::format_double(row[2] + e(rng)) << '\n';
  write("d.csv", data.str());
  ASSERT_EQ(spde_run({"fit", "--data", path("d.csv"), "--mesh", path("m.txt"), "--out", path("f.json")}).code, 0);
  const auto th = read_json(path("f.json")).at("theta_hat");
  EXPECT_LE(std::abs(th.at("log_kappa").get<double>()), 0.5);
  EXPECT_LE(std::abs(th.at("log_tau").get<double>()), 0.5);
}

TEST_F(CliTest, CheckPassesByDefaultAndFailsOnCoarseGrid) {
  const auto ok = spde_run({"check", "--fem", path("fem")});
  EXPECT_EQ(ok.code, 0) << ok.out;
  EXPECT_NE(ok.out.find("all checks passed"), std::string::npos);
  EXPECT_EQ(ok.out.find("FAIL"), std::string::npos) << ok.out;
  const auto g1 = sparse::read_matrix_market_symmetric(path("fem/1d_deg1_G1.mtx"));
  EXPECT_EQ(g1.dim(), 51);
  EXPECT_TRUE(fs::exists(path("fem/1d_deg2_G2_direct.mtx")));
  EXPECT_TRUE(fs::exists(path("fem/2d_deg1_C.mtx")));

  const auto coarse = spde_run({"check", "--grid-step", "0.5"});
  EXPECT_EQ(coarse.code, 1);
  EXPECT_NE(coarse.out.find("FAIL  green convolution"), std::string::npos) << coarse.out;
  EXPECT_NE(coarse.out.find("too coarse"), std::string::npos);
}
