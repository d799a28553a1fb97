#include "cli.hpp"
#include "doctest.h"
#include "json.hpp"
#include "sketchridge/estimators.hpp"
#include "test_util.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace sketchridge;
using nlohmann::json;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run_cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("sketchridge_cli_" + name)).string();
}

std::string write_temp(const std::string& name, const std::string& text) {
  const std::string path = temp_path(name);
  std::ofstream(path) << text;
  return path;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

// 10 x 2 design with the response in the last column
Dataset toy(std::string& path) {
  std::mt19937_64 rng(4);
  const Matrix x = testutil::random_matrix(rng, 10, 2);
  const Vector y = testutil::random_vector(rng, 10);
  std::ostringstream text;
  text.precision(17);
  text << "x1,x2,y\n";
  for (int i = 0; i < 10; ++i) text << x(i, 0) << "," << x(i, 1) << "," << y(i) << "\n";
  path = write_temp("toy.csv", text.str());
  return Dataset(x, y);
}

std::string larger_input() {
  std::mt19937_64 rng(5);
  const Matrix x = testutil::random_matrix(rng, 300, 6);
  const Vector y = x * Vector::LinSpaced(6, -1.0, 1.0) + testutil::random_vector(rng, 300);
  std::ostringstream text;
  text.precision(17);
  for (int i = 0; i < 300; ++i) {
    for (int j = 0; j < 6; ++j) text << x(i, j) << ",";
    text << y(i) << "\n";
  }
  return write_temp("large.csv", text.str());
}

}  // namespace

TEST_CASE("cli fit: identity sketch reproduces the ridge closed form") {
  std::string path;
  const Dataset data = toy(path);
  const Outcome o = run_cli({"fit", "--input", path, "--identity-sketch", "--lambda-min", "1", "--lambda-max", "1",
                             "--lambda-count", "1", "--methods", "fc,pc,ridge,ols", "--no-timing"});
  REQUIRE(o.code == 0);
  const json j = json::parse(o.out);
  const Vector ridge = fit_ridge(data, 1.0);
  for (const char* m : {"fc", "pc", "ridge"}) {
    const auto beta = j["methods"][m]["beta"].get<std::vector<double>>();
    CHECK(beta[0] == doctest::Approx(ridge(0)).epsilon(1e-10));
    CHECK(beta[1] == doctest::Approx(ridge(1)).epsilon(1e-10));
    CHECK(j["methods"][m]["selected_lambda"] == 1.0);
  }
  CHECK(j["methods"].contains("ols"));
  CHECK(!j.contains("timing_seconds"));
}

TEST_CASE("cli fit / tune / sketch: byte-identical reruns at 1 and 8 threads") {
  const std::string input = larger_input();
  const std::vector<std::vector<std::string>> commands{
      {"fit", "--input", input, "--q", "80", "--seed", "11", "--no-timing", "--emit-coefficients"},
      {"tune", "--input", input, "--q", "80", "--seed", "11", "--format", "csv"},
      {"tune", "--input", input, "--q", "80", "--seed", "11", "--no-timing", "--criterion", "cp", "--sigma2", "1"},
      {"sketch", "--input", input, "--q", "50", "--seed", "3"},
      {"sketch", "--n", "40", "--q", "10", "--seed", "3", "--emit-entries"},
  };
  for (auto args : commands) {
    const Outcome first = run_cli(args);
    REQUIRE(first.code == 0);
    CHECK(run_cli(args).out == first.out);
    args.insert(args.end(), {"--threads", "8"});
    CHECK(run_cli(args).out == first.out);
  }
}

TEST_CASE("cli fit: validation and exit codes") {
  std::string path;
  toy(path);
  const std::string two_cols = write_temp("resp2.csv", "1,2\n3,4\n");
  CHECK(run_cli({"fit", "--input", path, "--response", two_cols, "--q", "5"}).code == 2);
  const std::string bad = write_temp("bad.csv", "a,b\n1,2\n3,x\n");
  const Outcome o = run_cli({"fit", "--input", bad, "--q", "2"});
  CHECK(o.code == 2);
  CHECK(o.err.find(":3") != std::string::npos);
  CHECK(run_cli({"fit", "--input", path}).code == 2);                                 // no --q
  CHECK(run_cli({"fit", "--input", path, "--q", "4", "--criterion", "cp"}).code == 2);  // cp without sigma2
  CHECK(run_cli({"fit", "--input", path, "--q", "4", "--s", "0.5"}).code == 2);
  CHECK(run_cli({"fit", "--input", path, "--q", "4", "--methods", "lasso"}).code == 2);
  CHECK(run_cli({"fit", "--input", path, "--q", "4", "--bogus"}).code == 2);
  CHECK(run_cli({"fit", "--input", temp_path("missing.csv"), "--q", "4"}).code == 2);

  // saturated fit: every GCV value is undefined
  const std::string square = write_temp("square.csv", "1,0,0,1\n0,1,0,2\n0,0,1,3\n");
  CHECK(run_cli({"fit", "--input", square, "--identity-sketch", "--methods", "ridge", "--lambda-min", "1e-20",
                 "--lambda-max", "1e-20", "--lambda-count", "1"})
            .code == 3);
}

TEST_CASE("cli seed fallback from the environment") {
  const std::string input = larger_input();
  const std::vector<std::string> base{"sketch", "--n", "30", "--q", "10"};
  setenv("SKETCHRIDGE_SEED", "99", 1);
  const Outcome env = run_cli(base);
  unsetenv("SKETCHRIDGE_SEED");
  auto explicit_args = base;
  explicit_args.insert(explicit_args.end(), {"--seed", "99"});
  CHECK(env.out == run_cli(explicit_args).out);
  CHECK(env.out != run_cli(base).out);
}

TEST_CASE("cli help and usage") {
  for (const char* sub : {"fit", "tune", "sketch", "simulate", "theory"}) {
    const Outcome o = run_cli({sub, "--help"});
    CHECK(o.code == 0);
    CHECK(o.out.find("--") != std::string::npos);
  }
  CHECK(run_cli({"--help"}).code == 0);
  CHECK(run_cli({}).code == 2);
  CHECK(run_cli({"frobnicate"}).code == 2);
}

TEST_CASE("cli simulate") {
  const std::string cfg = write_temp("sim.json", R"({"n": 60, "p": 4, "q_list": [20], "replications": 2,
    "lambda_grid": [1, 10, 100], "test_n": 20, "beta_scenario": "all_ones"})");
  const std::string prefix = temp_path("simout");
  const Outcome o = run_cli({"simulate", "--config", cfg, "--output", prefix, "--no-timing"});
  REQUIRE(o.code == 0);
  const json report = json::parse(read_file(prefix + ".json"));
  CHECK(report["replications"] == 2);
  CHECK(read_file(prefix + ".csv").rfind("rep,method,q,lambda,metric,value", 0) == 0);
  const std::string first = read_file(prefix + ".json");
  REQUIRE(run_cli({"simulate", "--config", cfg, "--output", prefix, "--no-timing", "--threads", "8"}).code == 0);
  CHECK(read_file(prefix + ".json") == first);

  const std::string bad = write_temp("simbad.json", R"({"beta_scenario": "sparse"})");
  CHECK(run_cli({"simulate", "--config", bad}).code == 2);
}

TEST_CASE("cli theory") {
  const Outcome o = run_cli({"theory", "--preset", "gaussian-sim", "--theta", "0,0.5"});
  REQUIRE(o.code == 0);
  const json j = json::parse(o.out);
  CHECK(j["optimal"]["displayed"]["ridge"]["theta"].get<double>() == doctest::Approx(0.3183).epsilon(1e-3));
  CHECK(j["bayes_theta"].get<double>() == doctest::Approx(1.0 / 3.141592653589793));
  const double ols = 50.0 * 2500.0 / 5000.0;
  for (const auto& row : j["orthogonal"]) {
    if (row["theta"] == 0.0 && row["form"] == "displayed" && row["estimator"] != "pc")
      CHECK(row["mse"].get<double>() == doctest::Approx(ols));
  }

  const Outcome doubled = run_cli({"theory", "--preset", "gaussian-sim", "--theta", "0,0.5", "--q", "2000"});
  const json k = json::parse(doubled.out);
  for (std::size_t r = 0; r < j["orthogonal"].size(); ++r) {
    CHECK(k["orthogonal"][r]["compression_terms"].get<double>() ==
          doctest::Approx(0.5 * j["orthogonal"][r]["compression_terms"].get<double>()).epsilon(1e-12));
  }

  std::mt19937_64 rng(1);
  const Matrix x = testutil::random_matrix(rng, 20, 2);
  std::ostringstream design;
  design.precision(17);
  for (int i = 0; i < 20; ++i) design << x(i, 0) << "," << x(i, 1) << "\n";
  const std::string dpath = write_temp("design.csv", design.str());
  const std::string bpath = write_temp("beta.csv", "1\n-1\n");
  const Outcome general = run_cli({"theory", "--n", "20", "--q", "10", "--sigma2", "1", "--beta", bpath, "--design",
                                   dpath, "--lambda", "1,5"});
  REQUIRE(general.code == 0);
  CHECK(json::parse(general.out)["design"].size() == 6);

  CHECK(run_cli({"theory", "--n", "20"}).code == 2);
  CHECK(run_cli({"theory", "--preset", "nope"}).code == 2);
  CHECK(run_cli({"theory", "--preset", "gaussian-sim", "--theta", "-1"}).code == 2);
}
