#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "chaoscale_cli/config.hpp"
#include "chaoscale_cli/runner.hpp"
#include "json.hpp"

namespace chaoscale::cli {
namespace {

namespace fs = std::filesystem;

std::string read(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "chaoscale_cli_test" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path write_config(const fs::path& dir, const std::string& text) {
  const auto p = dir / "config.yaml";
  std::ofstream(p, std::ios::binary) << text;
  return p;
}

struct Proc {
  int code;
  std::string out;
  std::string err;
};

Proc invoke(const std::string& args, const fs::path& dir) {
  const auto out = dir / "stdout.txt", err = dir / "stderr.txt";
  const std::string cmd = std::string(CHAOSCALE_CLI_PATH) + " " + args + " > " + out.string() +
                          " 2> " + err.string();
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, read(out), read(err)};
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> row;
    std::istringstream cells(line);
    std::string cell;
    while (std::getline(cells, cell, ',')) row.push_back(cell);
    rows.push_back(row);
  }
  return rows;
}

std::string nlohmann_roundtrip(const std::string& text) {
  return nlohmann::ordered_json::parse(text).dump(2) + "\n";
}

const std::string kDynamic = R"(experiment: dynamic-grid
seed: 17
model:
  name: mean_field_ou
  initial: {kind: bernoulli, p: 0.5}
functional: {family: cylinder, f: pow:2}
simulation: {scheme: exact_linear}
grid: {n: [4, 8, 16], reps: 500}
)";

TEST(Config, ParsesRangesAndSections) {
  const auto c = parse_config(R"(experiment: dynamic-grid
seed: 3
model: {name: mean_field_ou, params: {a: 2, sigma: 0.1}, initial: {kind: dirac, x: 0.5}}
functional: {family: product, f: x, g: cos}
grid: {n: {from: 8, to: 64, factor: 2}, reps: 30}
simulation: {scheme: euler, steps: 50}
)");
  EXPECT_EQ(c.n_list, (std::vector<std::size_t>{8, 16, 32, 64}));
  EXPECT_EQ(c.seed, 3u);
  EXPECT_EQ(c.scheme, Scheme::euler_maruyama);
  EXPECT_EQ(c.steps, 50u);
  EXPECT_EQ(c.model->params.at("a"), 2.0);
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(c.build_model().initial.mean(), 0.5);
}

void expect_field_error(const std::string& text, const std::string& field) {
  try {
    parse_config(text).validate();
    FAIL() << "expected a config error for " << field;
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field(), field) << e.what();
  }
}

TEST(Config, ErrorsNameTheField) {
  expect_field_error("experiment: static-bias\nfunctional: {f: pow:2}\nlaw: {kind: bernoulli}\n"
                     "grid: {n: [3, 2]}\n",
                     "grid.n");
  expect_field_error("experiment: static-bias\nlaw: {kind: bernoulli}\ngrid: {n: [1]}\n",
                     "functional");
  expect_field_error("experiment: static-bias\nfunctional: {f: tan}\nlaw: {kind: bernoulli}\n"
                     "grid: {n: [1]}\n",
                     "functional.f");
  expect_field_error("experiment: static-bias\nbogus: 1\n", "bogus");
  expect_field_error("experiment: static-bias\nlaw: {kind: bernoulli, p: 2}\n", "law.p");
  expect_field_error("experiment: cost-plan\ncost: {epsilon: 1.5}\n", "cost.epsilon");
  expect_field_error("experiment: nope\n", "experiment");
  expect_field_error("experiment: dynamic-grid\nmodel: {name: mean_field_ou, params: {sigma: -1}}\n"
                     "functional: {f: x}\ngrid: {n: [2]}\n",
                     "model");
  expect_field_error("experiment: dynamic-grid\nmodel: {name: bounded_kuramoto}\n"
                     "functional: {f: x}\ngrid: {n: [2]}\n",
                     "simulation.scheme");
  expect_field_error("experiment: static-bias\nfunctional: {f: x}\n"
                     "law: {kind: gaussian}\ngrid: {n: [2]}\n",
                     "law");
  expect_field_error("grid: {reps: many}\n", "grid.reps");
}

TEST(Run, CostPlanExample) {
  ExperimentConfig c;
  c.experiment = "cost-plan";
  c.epsilon = 0.1;
  c.k = 1;
  const auto out = run_experiment(c);
  const auto rows = parse_csv(out.csv_files.at(0).second);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"epsilon", "k", "N", "M", "C", "N_single", "C_single"}));
  EXPECT_EQ(rows[1], (std::vector<std::string>{"0.10000000000000001", "1", "10", "10", "1000", "100", "10000"}));
  EXPECT_NE(out.summary_json.find("\"C\": 1000,"), std::string::npos);
  EXPECT_NE(out.summary_json.find("\"C_single\": 10000"), std::string::npos);
}

TEST(Run, StaticBiasEnumerationIsVarianceOverN) {
  const auto out = run_experiment(parse_config(read(fs::path(CHAOSCALE_CONFIG_DIR) / "static_bias.yaml")));
  const auto rows = parse_csv(out.csv_files.at(0).second);
  ASSERT_EQ(rows.size(), 9u);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"N", "bias", "stderr", "reps"}));
  for (std::size_t n = 1; n <= 8; ++n) {
    EXPECT_EQ(std::stoul(rows[n][0]), n);
    EXPECT_NEAR(std::stod(rows[n][1]), 0.25 / n, 1e-15);
    EXPECT_EQ(rows[n][2], "0");
  }
}

TEST(Run, WeightsPrintCombination) {
  ExperimentConfig c;
  c.experiment = "weights";
  c.k = 2;
  EXPECT_EQ(run_experiment(c).table, "(-1, 2)\n");
}

TEST(Run, FitWritesCoefficients) {
  const auto out = run_experiment(parse_config(read(fs::path(CHAOSCALE_CONFIG_DIR) / "fit.yaml")));
  ASSERT_EQ(out.csv_files.size(), 2u);
  const auto rows = parse_csv(out.csv_files[1].second);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"j", "C_j", "stderr"}));
  ASSERT_EQ(rows.size(), 3u);
}

TEST(Summary, EveryKindRoundTrips) {
  std::vector<std::string> configs{
      "static_bias.yaml", "fit.yaml", "cost_plan.yaml",
  };
  std::vector<std::string> summaries;
  for (const auto& name : configs) {
    summaries.push_back(
        run_experiment(parse_config(read(fs::path(CHAOSCALE_CONFIG_DIR) / name))).summary_json);
  }
  auto small = [](std::string text) { return run_experiment(parse_config(text)).summary_json; };
  summaries.push_back(small(kDynamic));
  summaries.push_back(small("experiment: static-constants\nfunctional: {f: pow:2}\n"
                            "law: {kind: gaussian}\nconstants: {orders: [1, 2], samples: 500}\n"));
  summaries.push_back(small("experiment: romberg\nmodel: {name: mean_field_ou}\n"
                            "functional: {f: pow:2}\nromberg: {k: 2, n: [2, 4], reps: 50}\n"));
  summaries.push_back(small("experiment: ensemble-mse\nmodel: {name: mean_field_ou}\n"
                            "functional: {family: linear, f: x}\n"
                            "ensemble: {n: 4, m: [2, 4], k: 2, repetitions: 10}\n"));
  summaries.push_back(small("experiment: weights\nweights: {k: 4}\n"));
  for (const auto& s : summaries) {
    EXPECT_NO_THROW(validate_summary(s)) << s;
    const auto reparsed = nlohmann_roundtrip(s);
    EXPECT_EQ(reparsed, s);
  }
}

TEST(Summary, RejectsInconsistentDocuments) {
  EXPECT_THROW(validate_summary("{"), InvalidArgument);
  EXPECT_THROW(validate_summary(R"({"schema": "chaoscale.other.v1", "experiment": "x", "seed": 0})"),
               InvalidArgument);
  EXPECT_THROW(validate_summary(R"({"schema": "chaoscale.cost_plan.v1", "experiment": "cost-plan",
      "seed": 0, "epsilon": 0.1, "k": 1, "N": 10, "M": 10, "C": 999, "N_single": 100,
      "C_single": 10000})"),
               InvalidArgument);
  EXPECT_THROW(validate_summary(R"({"schema": "chaoscale.weights.v1", "experiment": "weights",
      "seed": 0, "k": 2, "weights": [1, 2]})"),
               InvalidArgument);
}

TEST(Binary, DeterministicOutputs) {
  const auto dir = scratch("determinism");
  const auto cfg = write_config(dir, kDynamic);
  std::vector<std::string> runs{"--threads 1 --out " + (dir / "a").string(),
                                "--threads 1 --out " + (dir / "b").string(),
                                "--threads 4 --out " + (dir / "c").string()};
  for (const auto& r : runs) {
    const auto p = invoke("dynamic-grid --config " + cfg.string() + " " + r, dir);
    ASSERT_EQ(p.code, 0) << p.err;
  }
  for (const char* file : {"grid.csv", "summary.json"}) {
    const auto a = read(dir / "a" / file);
    EXPECT_FALSE(a.empty());
    EXPECT_EQ(a, read(dir / "b" / file)) << file;
    EXPECT_EQ(a, read(dir / "c" / file)) << file;
  }
  const auto seeded = invoke("dynamic-grid --config " + cfg.string() + " --seed 18 --out " +
                                 (dir / "d").string(),
                             dir);
  ASSERT_EQ(seeded.code, 0);
  EXPECT_NE(read(dir / "a" / "grid.csv"), read(dir / "d" / "grid.csv"));
  EXPECT_EQ(invoke("validate-summary " + (dir / "a" / "summary.json").string(), dir).code, 0);
}

TEST(Binary, ThreadsFromEnvironment) {
  const auto dir = scratch("env");
  const auto cfg = write_config(dir, kDynamic);
  const auto p = invoke("dynamic-grid --config " + cfg.string() + " --out " + (dir / "x").string(),
                        dir);
  ASSERT_EQ(p.code, 0);
  const std::string cmd = "CHAOSCALE_THREADS=3 " + std::string(CHAOSCALE_CLI_PATH) +
                          " dynamic-grid --config " + cfg.string() + " --out " +
                          (dir / "z").string() + " > /dev/null";
  ASSERT_EQ(std::system(cmd.c_str()), 0);
  EXPECT_EQ(read(dir / "x" / "grid.csv"), read(dir / "z" / "grid.csv"));
}

TEST(Binary, ExitCodes) {
  const auto dir = scratch("exit");
  const auto bad = write_config(dir, "experiment: static-bias\nfunctional: {f: pow:2}\n"
                                     "law: {kind: bernoulli}\ngrid: {n: [4, 2]}\n");
  const auto p = invoke("static-bias --config " + bad.string(), dir);
  EXPECT_EQ(p.code, 2);
  EXPECT_NE(p.err.find("grid.n"), std::string::npos) << p.err;

  const auto mismatch = invoke("fit --config " + bad.string(), dir);
  EXPECT_EQ(mismatch.code, 2);
  EXPECT_NE(mismatch.err.find("experiment"), std::string::npos);

  std::ofstream(dir / "blowup.yaml") << "experiment: dynamic-grid\n"
                                        "model: {name: mean_field_ou, params: {a: -1e308, c: 0, sigma: 0}}\n"
                                        "functional: {f: x}\nsimulation: {scheme: euler, steps: 2}\n"
                                        "grid: {n: [2], reps: 2}\n";
  const auto b = invoke("dynamic-grid --config " + (dir / "blowup.yaml").string(), dir);
  EXPECT_EQ(b.code, 3) << b.err;
  EXPECT_NE(b.err.find("step"), std::string::npos);

  EXPECT_EQ(invoke("cost-plan --epsilon 2", dir).code, 2);
  EXPECT_EQ(invoke("no-such-command", dir).code, 2);

  std::ofstream(dir / "broken.json") << R"({"schema": "chaoscale.weights.v1"})";
  EXPECT_EQ(invoke("validate-summary " + (dir / "broken.json").string(), dir).code, 2);
}

TEST(Binary, CostPlanAndWeightsFromFlags) {
  const auto dir = scratch("flags");
  const auto p = invoke("cost-plan --epsilon 0.1 --k 1 --out " + dir.string(), dir);
  ASSERT_EQ(p.code, 0);
  EXPECT_NE(p.out.find("C=1000"), std::string::npos) << p.out;
  EXPECT_NE(p.out.find("C=10000"), std::string::npos) << p.out;
  const auto w = invoke("weights --k 2", dir);
  ASSERT_EQ(w.code, 0);
  EXPECT_EQ(w.out, "(-1, 2)\n");
}

}  // namespace
}  // namespace chaoscale::cli
