#include <doctest.h>

#include <sstream>
#include <sys/wait.h>

#include "helpers.hpp"
#include "releff/simulation.hpp"
#include "json.hpp"

using namespace releff;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Runs the CLI with stdout to `out` and stderr discarded; returns the exit code.
int run(const std::string& args, const std::string& out = "/dev/null") {
  const std::string cmd = std::string(RELEFF_CLI) + " " + args + " > " + out + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string tmp(const std::string& name) { return testing::write_temp(name, ""); }

std::string ordinal_csv() {
  Stream s(1);
  const OrdinalDataset d = gen_cdc(400, s);
  std::string text = "y,age\n";
  for (std::size_t i = 0; i < d.n(); ++i)
    text += std::to_string(d.y[i]) + "," + std::to_string(static_cast<int>(d.w(i, 0))) + "\n";
  return testing::write_temp("cli_ordinal.csv", text);
}

std::string survival_csv() {
  Stream s(2);
  std::string text = "y,delta,w\n";
  for (int i = 0; i < 300; ++i) {
    const double w = s.uniform();
    const double t = -std::log(1.0 - s.uniform()) / (0.1 + 0.9 * w);
    const double c = -std::log(1.0 - s.uniform()) / 0.1;
    char row[96];
    std::snprintf(row, sizeof row, "%.6f,%d,%.6f\n", std::min(t, c), t <= c ? 1 : 0, w);
    text += row;
  }
  return testing::write_temp("cli_survival.csv", text);
}

const std::string kOrdinal = " --K 3 --covariate age:continuous";

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("estimate fans out over estimands and kinds") {
    const std::string in = ordinal_csv(), out = tmp("cli_est.json");
    REQUIRE(run("estimate -i " + in + kOrdinal + " --estimand dim,mw,lor --kind fully,working --two-step", out) == 0);
    const auto j = nlohmann::json::parse(read_file(out));
    CHECK(j["results"].size() == 6);
    CHECK(j.contains("version"));
    CHECK(j["config"]["outcome"] == "ordinal");
    for (const auto& r : j["results"]) {
      CHECK(r.contains("confidence_set"));
      CHECK(r.contains("test"));
      CHECK(r["sample_size_reduction"].get<double>() == doctest::Approx(1.0 - r["phi"].get<double>()));
    }
  }

  TEST_CASE("survival estimate requires a censoring spec") {
    const std::string in = survival_csv();
    const std::string base = "estimate -i " + in + " --outcome survival --covariate w:continuous --bin-width 0.2"
                             " --horizon 3 --estimand rd@1,rmst@3";
    CHECK(run(base) == 2);
    const std::string out = tmp("cli_surv.json");
    CHECK(run(base + " --censoring '{\"exp_rate\": 0.1}'", out) == 0);
    CHECK(nlohmann::json::parse(read_file(out))["results"].size() == 2);
  }

  TEST_CASE("data errors exit with 3") {
    const std::string bad = testing::write_temp("cli_bad.csv", "y,age\n1,2\n4,3\n");
    CHECK(run("estimate -i " + bad + kOrdinal) == 3);
    CHECK(run("estimate -i /nonexistent/file.csv" + kOrdinal) == 3);
  }

  TEST_CASE("bootstrap") {
    const std::string in = ordinal_csv();
    const std::string base = "bootstrap -i " + in + kOrdinal + " --estimand dim,mw --B1 4 --B2 20 --N 400 --seed 7";
    CHECK(run(base + " --kind fully") == 2);
    CHECK(run("bootstrap -i " + in + kOrdinal + " --B1 4") == 2);  // missing seed
    const std::string a = tmp("cli_boot_a.json"), b = tmp("cli_boot_b.json");
    REQUIRE(run(base + " --threads 1", a) == 0);
    REQUIRE(run(base + " --threads 3", b) == 0);
    CHECK(read_file(a) == read_file(b));
    CHECK(run("bootstrap -i " + in + kOrdinal + " --estimand lor --B1 2 --B2 10 --N 6 --seed 1") == 4);
  }

  TEST_CASE("simulate") {
    CHECK(run("simulate --dgp cdc --estimand dim --kind fully --n 200 --reps 5") == 2);
    const std::string j1 = tmp("cli_sim1.json"), j2 = tmp("cli_sim2.json");
    const std::string c1 = tmp("cli_sim1.csv"), c2 = tmp("cli_sim2.csv");
    const std::string base = "simulate --dgp cdc --estimand dim,mw --kind fully,working --n 200 --reps 20 --seed 3";
    REQUIRE(run(base + " --csv " + c1 + " --threads 1", j1) == 0);
    REQUIRE(run(base + " --csv " + c2 + " --threads 2", j2) == 0);
    CHECK(read_file(c1) == read_file(c2));
    CHECK(read_file(j1) == read_file(j2));
    CHECK(!read_file(c1).empty());

    const std::string one = tmp("cli_sim_one.json");
    REQUIRE(run("simulate --dgp cdc --estimand dim --kind fully --n 200 --reps 1 --seed 4", one) == 0);
    const std::string text = read_file(one);
    CHECK(text.find("low_reps") != std::string::npos);
  }
}
