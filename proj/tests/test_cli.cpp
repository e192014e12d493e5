#include <doctest.h>

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "dpmnorm_cli.hpp"

using namespace dpmnorm;
using namespace dpmnorm::cli;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch_dir() {
  static const fs::path dir = [] {
    const fs::path d = fs::temp_directory_path() / ("dpmnorm_cli_test_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string write_file(const std::string& name, const std::string& content) {
  const fs::path p = scratch_dir() / name;
  std::ofstream(p) << content;
  return p.string();
}

std::string slurp(const std::string& path) {
  std::ifstream f(path);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::vector<std::string> data_lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line))
    if (!line.empty() && line[0] != '#') out.push_back(line);
  return out;
}

}  // namespace

TEST_CASE("alpha grid parsing") {
  const auto g = parse_alpha_grid("2^-6..2^13");
  REQUIRE(g.values.size() == 20);
  CHECK(g.values.front() == doctest::Approx(1.0 / 64));
  CHECK(g.values.back() == doctest::Approx(8192.0));
  CHECK(parse_alpha_grid("2^-1..2^1..0.5").values.size() == 5);
  const auto plain = parse_alpha_grid("0.5..4");
  REQUIRE(plain.values.size() == 4);
  CHECK(plain.values[1] == doctest::Approx(1.0));
  CHECK(parse_alpha_grid("2^3").values.size() == 1);
  CHECK_THROWS_AS(parse_alpha_grid("abc"), InputError);
  CHECK_THROWS_AS(parse_alpha_grid("2^3..2^1"), InputError);
  CHECK_THROWS_AS(parse_alpha_grid("-1..2"), InputError);
  CHECK_THROWS_AS(parse_alpha_grid("2^1..2^3..0"), InputError);
}

TEST_CASE("linear grid and integer lists") {
  const auto g = parse_linear_grid("-1..1..0.5");
  REQUIRE(g.size() == 5);
  CHECK(g(4) == doctest::Approx(1.0));
  CHECK(parse_linear_grid("-4..4..0.01").size() == 801);
  CHECK_THROWS_AS(parse_linear_grid("1..0..0.1"), InputError);
  CHECK_THROWS_AS(parse_linear_grid("0..1"), InputError);
  CHECK(parse_int_list("100,500,2000") == std::vector<int>{100, 500, 2000});
  CHECK_THROWS_AS(parse_int_list("100,x"), InputError);
}

TEST_CASE("CSV parsing") {
  std::istringstream a("# comment\nx1,x2\n1,2\n\n3.5, -4e-1\n# tail\n5,6\n");
  const auto m = parse_data_csv(a);
  REQUIRE(m.rows() == 3);
  REQUIRE(m.cols() == 2);
  CHECK(m(1, 1) == doctest::Approx(-0.4));
  std::istringstream b("1\n2\n3\n");
  CHECK(parse_data_csv(b).rows() == 3);
  std::istringstream ragged("1,2\n3\n");
  CHECK_THROWS_AS(parse_data_csv(ragged), InputError);
  std::istringstream junk("1\nfoo\n");
  CHECK_THROWS_AS(parse_data_csv(junk), InputError);
  std::istringstream empty("# nothing\n");
  CHECK_THROWS_AS(parse_data_csv(empty), InputError);
  CHECK_THROWS_AS(read_data_csv((scratch_dir() / "missing.csv").string()), InputError);
}

TEST_CASE("format_double round trips") {
  for (double v : {0.1, -1.0 / 3, 1e-300, 12345.678}) CHECK(std::stod(format_double(v)) == v);
  CHECK(format_double(0.5) == "0.5");
}

TEST_CASE("exit codes") {
  CHECK(run({}).code == kInputError);
  CHECK(run({"frobnicate"}).code == kInputError);
  CHECK(run({"test", "--data", (scratch_dir() / "missing.csv").string()}).code == kInputError);
  CHECK(run({"test"}).code == kInputError);
  CHECK(run({"simulate", "--dist", "cauchy"}).code == kInputError);
  CHECK(run({"test", "--replicates", "-3", "--data", "x"}).code == kInputError);
  const auto tiny = write_file("tiny.csv", "x1,x2\n1,2\n3,4\n");
  const auto r = run({"test", "--data", tiny, "--replicates", "10"});
  CHECK(r.code == kPreconditionError);
  CHECK(r.err.find("p + 1") != std::string::npos);
  const auto flat = write_file("flat.csv", "1\n1\n1\n1\n");
  CHECK(run({"test", "--data", flat, "--replicates", "10"}).code == kPreconditionError);
  CHECK(run({"--help"}).code == kOk);
  CHECK(run({"--version"}).code == kOk);
}

TEST_CASE("simulate then test") {
  const auto csv = (scratch_dir() / "sim.csv").string();
  REQUIRE(run({"simulate", "--dist", "t3", "--n", "60", "--p", "1", "--seed", "7", "--output", csv}).code == kOk);
  const auto text = slurp(csv);
  CHECK(text.rfind("# dpmnorm ", 0) == 0);
  CHECK(text.find("# command=simulate seed=7") != std::string::npos);
  CHECK(data_lines(text).size() == 61);

  const auto out = (scratch_dir() / "curve.csv").string();
  const auto r = run({"test", "--data", csv, "--alpha-grid", "2^-2..2^2", "--replicates", "200", "--output", out});
  REQUIRE(r.code == kOk);
  const auto lines = data_lines(slurp(out));
  REQUIRE(lines.size() == 6);
  CHECK(lines[0] == "alpha,log10_bf,mc_se,ess");
  const auto summary = nlohmann::json::parse(slurp(out + ".summary.json"));
  CHECK(summary["schema_version"] == 1);
  CHECK(summary["n"] == 60);
  CHECK(summary["min_log10_bf"].get<double>() <= summary["harmonic_mean_log10_bf"].get<double>() + 1e-12);

  const auto js = run({"test", "--data", csv, "--alpha-grid", "2^0", "--replicates", "50", "--format", "json"});
  REQUIRE(js.code == kOk);
  const auto j = nlohmann::json::parse(js.out);
  CHECK(j["curve"].size() == 1);
  CHECK(j["config"]["replicates"] == "50");
}

TEST_CASE("minimal sample gives a flat curve") {
  const auto f = write_file("min.csv", "a,b\n0.1,0.3\n1.2,-0.4\n-0.7,0.9\n");
  const auto r = run({"test", "--data", f, "--alpha-grid", "2^-6..2^13", "--replicates", "2000"});
  REQUIRE(r.code == kOk);
  const auto lines = data_lines(r.out);
  REQUIRE(lines.size() == 21);
  for (std::size_t k = 1; k < lines.size(); ++k) {
    std::istringstream row(lines[k]);
    std::string a, lbf, se;
    std::getline(row, a, ',');
    std::getline(row, lbf, ',');
    std::getline(row, se, ',');
    CHECK(std::abs(std::stod(lbf)) <= std::max(3.0 * std::stod(se), 1e-12));
  }
}

TEST_CASE("outputs do not depend on parallelism") {
  const auto csv = (scratch_dir() / "par.csv").string();
  REQUIRE(run({"simulate", "--n", "40", "--seed", "3", "--output", csv}).code == kOk);
  const auto a = run({"test", "--data", csv, "--alpha-grid", "2^-1..2^1", "--replicates", "100", "--parallelism", "1"});
  const auto b = run({"test", "--data", csv, "--alpha-grid", "2^-1..2^1", "--replicates", "100", "--parallelism", "4"});
  REQUIRE(a.code == kOk);
  CHECK(a.out == b.out);
  const auto s1 = run({"simulate", "--dist", "copula-demo", "--n", "30", "--p", "2", "--seed", "9"});
  const auto s2 = run({"simulate", "--dist", "copula-demo", "--n", "30", "--p", "2", "--seed", "9"});
  CHECK(s1.code == kOk);
  CHECK(s1.out == s2.out);
}

TEST_CASE("draw-prior output") {
  const auto r = run({"draw-prior", "--alpha", "4", "--grid", "-2..2..0.5", "--replicates", "3", "--seed", "2"});
  REQUIRE(r.code == kOk);
  const auto lines = data_lines(r.out);
  REQUIRE(lines.size() == 10);
  CHECK(lines[0] == "x,anchor_density,draw_1,draw_2,draw_3");
  const auto one = run({"draw-prior", "--grid", "0..1..0.5"});
  CHECK(data_lines(one.out)[0] == "x,anchor_density,draw_1");
}

TEST_CASE("power, consistency and bench side files") {
  const auto pw = (scratch_dir() / "power.csv").string();
  REQUIRE(run({"power", "--dist", "uniform", "--n", "12", "--datasets", "3", "--replicates", "20", "--alpha-grid",
               "2^0", "--output", pw})
              .code == kOk);
  CHECK(fs::exists(pw + ".stats.csv"));
  CHECK(fs::exists(pw + ".summary.json"));

  const auto cs = (scratch_dir() / "cons.csv").string();
  REQUIRE(run({"consistency", "--checkpoints", "5,10", "--paths", "2", "--replicates", "20", "--output", cs}).code ==
          kOk);
  CHECK(fs::exists(cs + ".paths.csv"));
  CHECK(run({"consistency", "--checkpoints", "10,5", "--paths", "2"}).code == kPreconditionError);

  const auto bn = (scratch_dir() / "bench.csv").string();
  REQUIRE(run({"bench", "--n", "10", "--runs", "2", "--replicates", "20", "--gibbs-iters", "50", "--output", bn})
              .code == kOk);
  CHECK(fs::exists(bn + ".timing.csv"));
  CHECK(fs::exists(bn + ".summary.json"));
  CHECK(slurp(bn).find("seconds") == std::string::npos);
}
