#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "ecodrive/cli_io.hpp"

using namespace ecodrive;
namespace fs = std::filesystem;

namespace {

fs::path problems_dir() { return ECODRIVE_PROBLEMS_DIR; }

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("ecodrive_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string read(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int run(std::vector<std::string> args, std::string* out_text = nullptr) {
  args.insert(args.begin(), "ecodrive");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  if (out_text) *out_text = out.str() + err.str();
  return code;
}

std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(cells);
  }
  return rows;
}

}  // namespace

TEST_CASE("problem round trip") {
  for (const char* name : {"example1.json", "example2.json", "example3.json"}) {
    const ProblemFile a = load_problem(problems_dir() / name);
    const ProblemFile b = parse_problem(serialize_problem(a));
    CHECK(a == b);
    CHECK(serialize_problem(b) == serialize_problem(a));
  }
}

TEST_CASE("defaults and nullable caps") {
  const ProblemFile f = parse_problem(R"({
    "trains": [{"r0": 0.00675, "r2": 5e-5, "A": 3, "Hb": 0.3, "distance": 60000}],
    "horizon": 2400, "grid": [0, 750, 1350, 2400], "caps": [null, 400, null]})");
  CHECK(f.problem.trains[0].params.mass == 1.0);
  CHECK_FALSE(f.problem.caps[0].has_value());
  CHECK(*f.problem.caps[1] == 400.0);
  CHECK(f.solver.tol_x == SolverOptions{}.tol_x);
}

TEST_CASE("malformed and invalid documents are rejected") {
  CHECK_THROWS_AS(parse_problem("{ not json"), InputError);
  CHECK_THROWS_AS(parse_problem(R"({"trains": [], "horizon": 10, "grid": [0, 10], "extra": 1})"),
                  InputError);
  CHECK_THROWS_AS(parse_problem(R"({"trains": [{"r0": 0.1, "r2": 0, "A": 3, "Hb": 0.3,
                  "distance": 10, "colour": "red"}], "horizon": 10, "grid": [0, 10]})"),
                  InputError);
  CHECK_THROWS_AS(parse_problem(R"({"trains": [{"r0": 0.1, "r2": 0, "A": 3, "Hb": 0.3,
                  "distance": 10}], "horizon": 10, "grid": [0, 5], "caps": [null]})"),
                  InputError);
  CHECK_THROWS_AS(parse_problem(R"({"trains": [{"r0": 0.1, "r2": 0, "A": "3", "Hb": 0.3,
                  "distance": 10}], "horizon": 10})"),
                  InputError);
  CHECK_THROWS_AS(load_problem("/nonexistent/problem.json"), InputError);
}

TEST_CASE("solve: exit codes") {
  const fs::path dir = scratch("codes");
  const fs::path bad = dir / "bad.json";
  std::ofstream(bad) << "{\"trains\": [";
  std::string text;
  CHECK(run({"solve", bad.string(), "-o", (dir / "o1").string()}, &text) == kExitInput);
  CHECK(text.find("malformed") != std::string::npos);
  CHECK(run({"solve", (dir / "missing.json").string()}) == kExitInput);
  CHECK(run({"bogus"}) == kExitInput);

  const fs::path far = dir / "far.json";
  std::ofstream(far) << R"({"trains": [{"r0": 0.00675, "r2": 5e-5, "A": 3, "Hb": 0.3,
    "distance": 95000}], "horizon": 2400, "grid": [0, 2400]})";
  CHECK(run({"solve", far.string(), "-o", (dir / "o2").string()}) == kExitInfeasible);

  CHECK(run({"solve", (problems_dir() / "example1.json").string(), "-o", (dir / "o3").string(),
             "--max-iter", "1"}) == kExitNonConvergence);
}

TEST_CASE("solve example 3 with simulation") {
  const fs::path dir = scratch("ex3");
  std::string text;
  const int code = run({"solve", (problems_dir() / "example3.json").string(), "-o", dir.string(),
                        "--simulate"},
                       &text);
  CHECK(code == kExitOk);
  CHECK(text.find("verify: pass") != std::string::npos);
  const auto summary = nlohmann::json::parse(read(dir / "summary.json"));
  CHECK(summary["weights"].size() == 5);
  CHECK(std::abs(summary["weights"][2].get<double>() - 0.378544) < 1e-3);
  CHECK(summary["trains"].size() == 5);
  CHECK(summary["trains"][0].contains("interval_energy_per_mass"));
  CHECK(summary["trains"][0].contains("interval_energy"));
  CHECK(std::abs(summary["total_cost"].get<double>() - 10399.0) < 5.0);
  CHECK(std::abs(summary["unconstrained"]["total_cost"].get<double>() - 10191.0) < 5.0);
  for (const auto& v : summary["verification"]) CHECK(v["passed"].get<bool>());

  for (int j = 0; j < 5; ++j) {
    const auto rows = csv_rows(read(dir / ("profile_train" + std::to_string(j) + ".csv")));
    REQUIRE(rows.size() == 2402);
    CHECK(rows[0] == std::vector<std::string>{"t", "v", "x", "phase", "u_a", "u_b"});
    double prev = -1.0;
    for (std::size_t i = 1; i < rows.size(); ++i) {
      const double t = std::stod(rows[i][0]);
      CHECK(t > prev);
      prev = t;
    }
    CHECK(fs::exists(dir / ("sim_train" + std::to_string(j) + ".csv")));
  }
}

TEST_CASE("summary energies reproduce the solution") {
  const ProblemFile f = load_problem(problems_dir() / "example2.json");
  const FleetSolution sol = solve(f.problem, f.solver);
  const auto s = summary_json(f.problem, sol);
  for (std::size_t j = 0; j < 3; ++j) {
    CHECK(s["trains"][j]["cost"].get<double>() == sol.train_cost[j]);
    CHECK(s["trains"][j]["interval_energy"][1].get<double>() ==
          sol.evaluations[j].interval_energy[1]);
  }
  CHECK(s["fleet_interval_energy"][1].get<double>() == sol.fleet_interval_energy[1]);
}

TEST_CASE("sweep over caps") {
  const fs::path dir = scratch("sweep");
  CHECK(run({"sweep", (problems_dir() / "example1.json").string(), "--interval", "1", "--caps",
             "100,200,300", "-o", dir.string()}) == kExitOk);
  const auto rows = csv_rows(read(dir / "sweep.csv"));
  REQUIRE(rows.size() == 4);
  CHECK(rows[0][0] == "Q");
  // W into the interval falls and W out of it rises as the cap grows
  for (std::size_t i = 2; i < rows.size(); ++i) {
    CHECK(rows[i][1] == "converged");
    CHECK(std::stod(rows[i][5]) < std::stod(rows[i - 1][5]));
    CHECK(std::stod(rows[i][7]) > std::stod(rows[i - 1][7]));
  }
  CHECK(fs::exists(dir / "sweep_row2_train0.csv"));
}

TEST_CASE("single-cap sweep equals solve") {
  const fs::path dir = scratch("sweep1");
  CHECK(run({"sweep", (problems_dir() / "example1.json").string(), "--interval", "1", "--caps",
             "400", "-o", (dir / "s").string()}) == kExitOk);
  CHECK(run({"solve", (problems_dir() / "example1.json").string(), "-o", (dir / "v").string()}) ==
        kExitOk);
  const auto rows = csv_rows(read(dir / "s" / "sweep.csv"));
  const auto summary = nlohmann::json::parse(read(dir / "v" / "summary.json"));
  CHECK(std::stod(rows[1][3]) == doctest::Approx(summary["total_cost"].get<double>()).epsilon(1e-9));
  CHECK(read(dir / "s" / "sweep_row0_train0.csv") == read(dir / "v" / "profile_train0.csv"));
}

TEST_CASE("sweep records per-row failures and continues") {
  const fs::path dir = scratch("sweepfail");
  const fs::path pb = dir / "p.json";
  std::ofstream(pb) << R"({"trains": [{"r0": 0.00675, "r2": 5e-5, "A": 3, "Hb": 0.3,
    "distance": 60000}], "horizon": 2400, "grid": [0, 750, 1350, 2400],
    "solver": {"max_outer": 1}})";
  CHECK(run({"sweep", pb.string(), "--interval", "1", "--caps", "400,1000", "-o",
             (dir / "o").string()}) == kExitOk);
  const auto rows = csv_rows(read(dir / "o" / "sweep.csv"));
  REQUIRE(rows.size() == 3);
  CHECK(rows[1][1] == "NonConvergence");
  CHECK(rows[2][1] == "converged");
}

TEST_CASE("eta curves and turning points") {
  const fs::path dir = scratch("eta");
  const fs::path pb = dir / "p.json";
  std::ofstream(pb) << R"({"trains": [{"r0": 0.00675, "r2": 5e-5, "A": 3, "Hb": 0.3,
    "distance": 60000}], "horizon": 2400, "grid": [0, 750, 1350, 2400],
    "caps": [null, 200, null]})";
  CHECK(run({"eta", pb.string(), "--train", "0", "-o", dir.string()}) == kExitOk);
  const auto points = csv_rows(read(dir / "eta_points.csv"));
  const auto summary_sol = solve(load_problem(pb).problem);
  const double w1 = summary_sol.weights.w[1];
  int switches = 0;
  for (std::size_t i = 1; i < points.size(); ++i) {
    const auto& r = points[i];
    const double eta = std::stod(r[3]);
    if (r[0] == "accel_min" || r[0] == "coast_max") {
      const double expected = r[1] == "1" ? 1.0 + w1 : 1.0;
      CHECK(eta == doctest::Approx(expected).epsilon(1e-12));
    } else {
      CHECK(r[0] == "switch");
      CHECK(std::abs(eta - std::stod(r[4])) < 1e-9);
      ++switches;
    }
  }
  CHECK(switches == 2);
  CHECK(fs::exists(dir / "eta_curves.csv"));

  // with no active cap every turning point sits at eta = 1
  const fs::path free_pb = dir / "free.json";
  std::ofstream(free_pb) << R"({"trains": [{"r0": 0.00675, "r2": 5e-5, "A": 3, "Hb": 0.3,
    "distance": 60000}], "horizon": 2400, "grid": [0, 750, 1350, 2400]})";
  CHECK(run({"eta", free_pb.string(), "-o", (dir / "free").string()}) == kExitOk);
  const auto free_points = csv_rows(read(dir / "free" / "eta_points.csv"));
  for (std::size_t i = 1; i < free_points.size(); ++i) {
    CHECK(std::stod(free_points[i][3]) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("help exits cleanly") {
  std::string text;
  CHECK(run({"--help"}, &text) == kExitOk);
  CHECK(text.find("solve") != std::string::npos);
}
