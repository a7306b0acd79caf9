#include "doctest.h"

#include "ccsn/cli.hpp"
#include "json.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "ccsn");
  std::vector<const char*> av;
  for (const auto& a : args) av.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = ccsn::cli::run(static_cast<int>(av.size()), av.data(), out, err);
  return {code, out.str(), err.str()};
}

struct Table {
  std::vector<std::string> meta, columns;
  std::vector<std::vector<double>> rows;

  std::size_t col(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
      if (columns[i] == name) return i;
    FAIL("missing column " << name);
    return 0;
  }
  std::string meta_value(const std::string& prefix) const {
    for (const auto& m : meta)
      if (m.rfind("# " + prefix + " = ", 0) == 0) return m.substr(prefix.size() + 5);
    return "";
  }
};

Table parse(const std::string& s) {
  Table t;
  std::istringstream in(s);
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("#", 0) == 0) {
      t.meta.push_back(line);
      continue;
    }
    std::vector<std::string> f;
    std::stringstream ls(line);
    std::string x;
    while (std::getline(ls, x, ',')) f.push_back(x);
    if (t.columns.empty()) {
      t.columns = f;
      continue;
    }
    std::vector<double> r;
    for (const auto& v : f) r.push_back(std::stod(v));
    t.rows.push_back(r);
  }
  return t;
}

nlohmann::json error_json(const std::string& err) {
  const auto p = err.find("error: ");
  REQUIRE(p != std::string::npos);
  return nlohmann::json::parse(err.substr(p + 7, err.find('\n', p) - p - 7));
}

}  // namespace

TEST_CASE("show-presets lists the reference tables") {
  const auto r = cli({"show-presets"});
  REQUIRE(r.code == 0);
  for (const char* name : {"fig5,", "fig8,", "fig9,", "table5,"}) CHECK(r.out.find(std::string("\n") + name) != std::string::npos);
  CHECK(r.out.find("# version ") != std::string::npos);
}

TEST_CASE("budget columns") {
  const auto r = cli({"single-budget", "--preset", "fig5", "--n", "50"});
  REQUIRE(r.code == 0);
  const auto t = parse(r.out);
  REQUIRE(t.rows.size() == 50);
  for (const auto& row : t.rows) {
    CHECK(row[t.col("sum")] == doctest::Approx(row[t.col("S_QG_scaled")] + row[t.col("S_th_scaled")]).epsilon(1e-10));
    const double k = std::sqrt(1.0 / (row[t.col("f_Hz")] * 1e4));
    CHECK(row[t.col("S_QG_scaled")] == doctest::Approx(k * row[t.col("S_QG")]).epsilon(1e-10));
  }
  // the force-referred SN term is flat
  const auto sn = t.col("S_SN");
  CHECK(t.rows.front()[sn] == doctest::Approx(t.rows.back()[sn]).epsilon(1e-10));
  CHECK(t.rows.front()[sn] < 0);
}

TEST_CASE("correlations coincide without delay") {
  const auto r = cli({"mutual-spectrum", "--preset", "table5", "--tau", "0", "--n-log", "200", "--n-peak", "201"});
  REQUIRE(r.code == 0);
  const auto t = parse(r.out);
  const auto q = t.col("C_QG"), s = t.col("C_SN");
  for (const auto& row : t.rows) CHECK(std::abs(row[q] - row[s]) <= 1e-9 * std::max(row[q], 1e-300));
}

TEST_CASE("header replays to the same output") {
  const std::string path = "ccsn_cli_roundtrip.csv";
  auto a = cli({"single-spectrum", "--preset", "fig8", "--tau", "1", "--set", "T=4.5", "--n-log", "120", "--units",
                "force", "-o", path});
  REQUIRE(a.code == 0);
  std::ifstream f(path);
  std::stringstream first;
  first << f.rdbuf();
  const auto b = cli({"single-spectrum", "--config", path});
  REQUIRE(b.code == 0);
  CHECK(b.out == first.str());
  // a later flag overrides the replayed one
  const auto c = cli({"single-spectrum", "--config", path, "--n-log", "60"});
  CHECK(parse(c.out).meta_value("option n-log") == "60");
  std::remove(path.c_str());
}

TEST_CASE("optics and coupling") {
  const auto r = cli({"single-spectrum", "--n-log", "20", "--set", "P_cav=1e-9", "--set", "finesse=100", "--set",
                      "wavelength=1064e-9"});
  REQUIRE(r.code == 0);
  CHECK(std::stod(parse(r.out).meta_value("param f_Lambda")) == doctest::Approx(0.12719030737).epsilon(1e-9));
  const auto bad = cli({"single-spectrum", "--set", "P_cav=1e-9", "--set", "finesse=100", "--set", "wavelength=1064e-9",
                        "--set", "f_Lambda=0.057"});
  CHECK(bad.code == ccsn::cli::parse_error);
  CHECK(error_json(bad.err)["cell"] == "f_Lambda");
  CHECK(cli({"single-spectrum", "--set", "P_cav=1"}).code == ccsn::cli::parse_error);
}

TEST_CASE("parse errors") {
  auto r = cli({"single-spectrum", "--set", "omega=3"});
  CHECK(r.code == ccsn::cli::parse_error);
  CHECK(error_json(r.err)["cell"] == "omega");
  CHECK(error_json(r.err)["exit"] == 2);
  r = cli({"single-spectrum", "--n-log", "many"});
  CHECK(r.code == ccsn::cli::parse_error);
  CHECK(error_json(r.err)["cell"] == "--n-log");
  CHECK(cli({"single-spectrum", "--preset", "table5"}).code == ccsn::cli::parse_error);
  CHECK(cli({"single-spectrum", "--set", "Q_m=-1"}).code == ccsn::cli::parse_error);
  CHECK(cli({"no-such-command"}).code == ccsn::cli::parse_error);
  CHECK(cli({"mutual-contour", "--lambda", "f_Lambda:1:10"}).code == ccsn::cli::parse_error);
}

TEST_CASE("numerical failure names the cell") {
  const auto r = cli({"single-spectrum", "--set", "f_Lambda=1e200", "--n-log", "20", "--n-window", "3"});
  CHECK(r.code == ccsn::cli::numerical_error);
  const auto j = error_json(r.err);
  CHECK(j["error"] == "numerical");
  CHECK(j["cell"].get<std::string>().find("f_Hz=") != std::string::npos);
}

TEST_CASE("contours") {
  auto r = cli({"single-contour", "--preset", "fig8", "--axis1", "f_m:1e-3:1e-1:3", "--axis2", "Lambda_ratio:1:1e3:3",
                "--taus", "0,1"});
  REQUIRE(r.code == 0);
  auto t = parse(r.out);
  CHECK(t.rows.size() == 18);
  for (const auto& row : t.rows) CHECK(row[3] > 0);
  r = cli({"mutual-contour", "--lambda", "f_Lambda:100:1000:2", "--temperature", "T:1:300:2", "--taus", "0,1"});
  REQUIRE(r.code == 0);
  t = parse(r.out);
  CHECK(t.rows.size() == 8);
}

TEST_CASE("nonstationary trace") {
  const auto r = cli({"nonstationary", "--preset", "fig9", "--n", "101"});
  REQUIRE(r.code == 0);
  const auto t = parse(r.out);
  CHECK(t.rows.size() == 101);
  CHECK(std::stod(t.meta_value("result quantum_oscillation_period_s")) ==
        doctest::Approx(std::stod(t.meta_value("result pi_over_omega_q_s"))).epsilon(0.01));
}

TEST_CASE("thread count from the environment") {
  setenv(ccsn::cli::threads_env, "two", 1);
  CHECK(cli({"show-presets"}).code == ccsn::cli::parse_error);
  setenv(ccsn::cli::threads_env, "1", 1);
  const auto r = cli({"show-presets"});
  CHECK(r.out.find("# threads 1") != std::string::npos);
  unsetenv(ccsn::cli::threads_env);
}

TEST_CASE("mc-validate runs small") {
  const auto r = cli({"mc-validate", "--system", "single", "--trajectories", "2", "--segment", "4096"});
  REQUIRE(r.code == 0);
  const auto t = parse(r.out);
  CHECK(!t.meta_value("result S_fraction_within_3sigma").empty());
  CHECK(t.meta_value("param f_m") == "1");
}
