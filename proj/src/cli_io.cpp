#include "ecodrive/cli_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "ecodrive/errors.hpp"

namespace ecodrive {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw InputError(where + " must be an object");
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.count(key)) throw InputError("unknown key '" + key + "' in " + where);
  }
}

double number(const json& obj, const std::string& key, const std::string& where) {
  if (!obj.contains(key)) throw InputError("missing key '" + key + "' in " + where);
  const json& v = obj.at(key);
  if (!v.is_number()) throw InputError("'" + key + "' in " + where + " must be a number");
  return v.get<double>();
}

double number_or(const json& obj, const std::string& key, double fallback, const std::string& where) {
  return obj.contains(key) ? number(obj, key, where) : fallback;
}

}  // namespace

bool operator==(const ProblemFile& a, const ProblemFile& b) {
  const FleetProblem& x = a.problem;
  const FleetProblem& y = b.problem;
  if (x.trains.size() != y.trains.size() || x.horizon != y.horizon || x.grid != y.grid ||
      x.caps != y.caps) {
    return false;
  }
  for (std::size_t j = 0; j < x.trains.size(); ++j) {
    const TrainParams& p = x.trains[j].params;
    const TrainParams& q = y.trains[j].params;
    if (p.r0 != q.r0 || p.r2 != q.r2 || p.traction_A != q.traction_A ||
        p.brake_bound != q.brake_bound || p.mass != q.mass ||
        x.trains[j].distance != y.trains[j].distance) {
      return false;
    }
  }
  const SolverOptions& s = a.solver;
  const SolverOptions& t = b.solver;
  return s.tol_x == t.tol_x && s.tol_e_rel == t.tol_e_rel && s.max_outer == t.max_outer &&
         s.max_newton == t.max_newton && s.initial_weight == t.initial_weight;
}

ProblemFile parse_problem(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("malformed problem document: ") + e.what());
  }
  reject_unknown(doc, {"trains", "horizon", "grid", "caps", "solver"}, "problem");

  ProblemFile file;
  FleetProblem& pb = file.problem;
  if (!doc.contains("trains") || !doc["trains"].is_array()) {
    throw InputError("'trains' must be an array");
  }
  for (std::size_t j = 0; j < doc["trains"].size(); ++j) {
    const json& t = doc["trains"][j];
    const std::string where = "trains[" + std::to_string(j) + "]";
    reject_unknown(t, {"r0", "r2", "A", "Hb", "mass", "distance"}, where);
    TrainJourney tj;
    tj.params.r0 = number(t, "r0", where);
    tj.params.r2 = number(t, "r2", where);
    tj.params.traction_A = number(t, "A", where);
    tj.params.brake_bound = number(t, "Hb", where);
    tj.params.mass = number_or(t, "mass", 1.0, where);
    tj.distance = number(t, "distance", where);
    pb.trains.push_back(tj);
  }
  pb.horizon = number(doc, "horizon", "problem");
  if (doc.contains("grid")) {
    if (!doc["grid"].is_array()) throw InputError("'grid' must be an array");
    for (const json& g : doc["grid"]) {
      if (!g.is_number()) throw InputError("'grid' entries must be numbers");
      pb.grid.push_back(g.get<double>());
    }
  } else {
    pb.grid = {0.0, pb.horizon};
  }
  pb.caps.assign(pb.interval_count(), std::nullopt);
  if (doc.contains("caps")) {
    const json& caps = doc["caps"];
    if (!caps.is_array() || caps.size() != pb.interval_count()) {
      throw InputError("'caps' must be an array with one entry (number or null) per interval");
    }
    for (std::size_t k = 0; k < caps.size(); ++k) {
      if (caps[k].is_null()) continue;
      if (!caps[k].is_number()) throw InputError("'caps' entries must be numbers or null");
      pb.caps[k] = caps[k].get<double>();
    }
  }
  if (doc.contains("solver")) {
    const json& s = doc["solver"];
    reject_unknown(s, {"tol_x", "tol_e", "max_iter", "max_outer", "initial_weight"}, "solver");
    file.solver.tol_x = number_or(s, "tol_x", file.solver.tol_x, "solver");
    file.solver.tol_e_rel = number_or(s, "tol_e", file.solver.tol_e_rel, "solver");
    file.solver.max_newton =
        static_cast<int>(number_or(s, "max_iter", file.solver.max_newton, "solver"));
    file.solver.max_outer =
        static_cast<int>(number_or(s, "max_outer", file.solver.max_outer, "solver"));
    file.solver.initial_weight =
        number_or(s, "initial_weight", file.solver.initial_weight, "solver");
  }
  try {
    pb.validate();
  } catch (const SolverError& e) {
    throw InputError(e.what());
  }
  if (!(file.solver.tol_x > 0.0) || !(file.solver.tol_e_rel > 0.0) ||
      file.solver.max_newton < 1 || file.solver.max_outer < 1 ||
      !(file.solver.initial_weight > 0.0)) {
    throw InputError("solver tolerances, iteration limits and initial weight must be positive");
  }
  return file;
}

std::string serialize_problem(const ProblemFile& file) {
  json doc;
  doc["trains"] = json::array();
  for (const auto& t : file.problem.trains) {
    doc["trains"].push_back({{"r0", t.params.r0},
                             {"r2", t.params.r2},
                             {"A", t.params.traction_A},
                             {"Hb", t.params.brake_bound},
                             {"mass", t.params.mass},
                             {"distance", t.distance}});
  }
  doc["horizon"] = file.problem.horizon;
  doc["grid"] = file.problem.grid;
  json caps = json::array();
  for (const auto& c : file.problem.caps) caps.push_back(c ? json(*c) : json(nullptr));
  doc["caps"] = caps;
  doc["solver"] = {{"tol_x", file.solver.tol_x},
                   {"tol_e", file.solver.tol_e_rel},
                   {"max_iter", file.solver.max_newton},
                   {"max_outer", file.solver.max_outer},
                   {"initial_weight", file.solver.initial_weight}};
  return doc.dump(2);
}

ProblemFile load_problem(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read problem file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_problem(buf.str());
  } catch (const InputError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

json summary_json(const FleetProblem& problem, const FleetSolution& sol,
                  const std::optional<FleetSolution>& unconstrained) {
  json s;
  s["status"] = "converged";
  s["horizon"] = problem.horizon;
  s["grid"] = problem.grid;
  json caps = json::array();
  for (const auto& c : problem.caps) caps.push_back(c ? json(*c) : json(nullptr));
  s["caps"] = caps;
  s["weights"] = sol.weights.w;
  s["active_set"] = sol.active_set();
  s["fleet_interval_energy"] = sol.fleet_interval_energy;
  s["total_cost"] = sol.total_cost;

  json trains = json::array();
  for (std::size_t j = 0; j < problem.trains.size(); ++j) {
    const TrainParams& p = problem.trains[j].params;
    const ProfileEvaluation& ev = sol.evaluations[j];
    std::vector<double> holds;
    for (std::size_t k = 0; k < problem.interval_count(); ++k) holds.push_back(sol.hold_speed(p, j, k));
    std::vector<double> scaled;
    for (double e : ev.interval_energy) scaled.push_back(p.mass * e);
    trains.push_back({{"index", j},
                      {"mass", p.mass},
                      {"distance", problem.trains[j].distance},
                      {"achieved_distance", ev.total_distance},
                      {"V", sol.V[j]},
                      {"hold_speeds", holds},
                      {"transition_speeds", ev.transition_speeds},
                      {"braking_speed", ev.braking_speed},
                      {"interval_energy_per_mass", ev.interval_energy},
                      {"interval_energy", scaled},
                      {"cost_per_mass", ev.total_energy},
                      {"cost", sol.train_cost[j]}});
  }
  s["trains"] = trains;
  s["residuals"] = {{"max_distance_m", sol.max_distance_residual},
                    {"max_energy_J", sol.max_energy_residual},
                    {"energy_scale_J", sol.energy_scale}};
  s["solver"] = {{"outer_iterations", sol.report.outer_iterations},
                 {"newton_iterations", sol.report.newton_iterations},
                 {"residual_evaluations", sol.report.residual_evaluations},
                 {"used_dogleg", sol.report.used_dogleg},
                 {"log", sol.report.log},
                 {"diagnostics", sol.report.diagnostics}};
  if (unconstrained) {
    std::vector<double> braking;
    for (const auto& ev : unconstrained->evaluations) braking.push_back(ev.braking_speed);
    s["unconstrained"] = {{"V", unconstrained->V},
                          {"braking_speeds", braking},
                          {"train_cost", unconstrained->train_cost},
                          {"total_cost", unconstrained->total_cost}};
    s["incentive_breakeven_per_unit_price"] = incentive_breakeven(*unconstrained, sol, 1.0);
  }
  return s;
}

void write_profile_csv(std::ostream& os, const TrainParams& p, const SpeedProfile& profile,
                       double stride) {
  os << "t,v,x,phase,u_a,u_b\n" << std::setprecision(10);
  for (const ProfileSample& s : sample_profile(p, profile, stride)) {
    os << s.t << ',' << s.v << ',' << s.x << ',' << to_string(s.phase) << ',' << s.u_a << ','
       << s.u_b << '\n';
  }
}

void write_sim_csv(std::ostream& os, const SimResult& sim) {
  os << "t,x,v,u_a,u_b,phase\n" << std::setprecision(10);
  for (const SimSample& s : sim.samples) {
    os << s.t << ',' << s.x << ',' << s.v << ',' << s.u_a << ',' << s.u_b << ','
       << to_string(s.phase) << '\n';
  }
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidInput:
      return kExitInput;
    case ErrorCode::Infeasible:
    case ErrorCode::InfeasibleTiming:
    case ErrorCode::SpeedCapExceeded:
      return kExitInfeasible;
    default:
      return kExitNonConvergence;
  }
}

namespace {

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream f(path);
  if (!f) throw InputError("cannot write " + path.string());
  f << content;
  if (!f) throw InputError("write failed for " + path.string());
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw InputError("cannot create output directory " + dir.string() + ": " + ec.message());
}

std::string profile_csv(const TrainParams& p, const SpeedProfile& profile, double stride) {
  std::ostringstream os;
  write_profile_csv(os, p, profile, stride);
  return os.str();
}

// Runs a command body, mapping exceptions to exit statuses.
template <typename Body>
int guarded(std::ostream& err, Body&& body) {
  try {
    return body();
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const SolverError& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  }
}

}  // namespace

int cmd_solve(const SolveArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    ProblemFile file = load_problem(args.problem);
    if (args.tol_x) file.solver.tol_x = *args.tol_x;
    if (args.tol_e) file.solver.tol_e_rel = *args.tol_e;
    if (args.max_iter) file.solver.max_newton = *args.max_iter;
    const FleetProblem& pb = file.problem;

    const FleetSolution sol = solve(pb, file.solver);
    std::optional<FleetSolution> base;
    if (std::any_of(pb.caps.begin(), pb.caps.end(), [](const auto& c) { return c.has_value(); })) {
      base = solve(without_caps(pb), file.solver);
    }
    for (const auto& d : sol.report.diagnostics) err << "diagnostic: " << d << '\n';

    ensure_dir(args.out_dir);
    json summary = summary_json(pb, sol, base);
    for (std::size_t j = 0; j < pb.trains.size(); ++j) {
      write_file(args.out_dir / ("profile_train" + std::to_string(j) + ".csv"),
                 profile_csv(pb.trains[j].params, sol.profiles[j], args.stride));
    }

    int status = kExitOk;
    if (args.simulate) {
      json verification = json::array();
      for (std::size_t j = 0; j < pb.trains.size(); ++j) {
        SimOptions opt;
        opt.output_stride = args.stride;
        const SimResult sim =
            simulate(pb.trains[j].params, TrackProfile::level(), sol.profiles[j], opt);
        std::ostringstream csv;
        write_sim_csv(csv, sim);
        write_file(args.out_dir / ("sim_train" + std::to_string(j) + ".csv"), csv.str());
        const VerifyReport rep = verify(sol.profiles[j], sol.evaluations[j], sim);
        json items = json::array();
        for (const VerifyItem& it : rep.items) {
          items.push_back({{"name", it.name},
                           {"analytic", it.analytic},
                           {"simulated", it.simulated},
                           {"delta", it.delta()},
                           {"tolerance", it.tolerance},
                           {"passed", it.passed}});
          if (!it.passed) {
            err << "verify: train " << j << ' ' << it.name << " off by " << it.delta()
                << " (tolerance " << it.tolerance << ")\n";
          }
        }
        verification.push_back({{"train", j}, {"passed", rep.passed()}, {"items", items}});
        if (!rep.passed()) status = kExitVerifyFailed;
      }
      summary["verification"] = verification;
    }
    write_file(args.out_dir / "summary.json", summary.dump(2) + "\n");

    out << std::fixed << std::setprecision(4);
    out << "converged: total cost " << sol.total_cost << " J, weights";
    for (double w : sol.weights.w) out << ' ' << w;
    out << '\n';
    for (std::size_t j = 0; j < pb.trains.size(); ++j) {
      out << "train " << j << ": V " << sol.V[j] << " U " << sol.evaluations[j].braking_speed
          << " cost " << sol.train_cost[j] << '\n';
    }
    if (args.simulate) out << (status == kExitOk ? "verify: pass\n" : "verify: FAIL\n");
    return status;
  });
}

int cmd_sweep(const SweepArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const ProblemFile file = load_problem(args.problem);
    const FleetProblem& base = file.problem;
    const std::size_t n = base.interval_count();
    if (args.interval >= n) {
      throw InputError("interval index " + std::to_string(args.interval) + " out of range");
    }
    if (args.caps.empty()) throw InputError("no caps given");
    ensure_dir(args.out_dir);
    const std::size_t k = args.interval;

    std::ostringstream csv;
    csv << std::setprecision(10);
    csv << "Q,status,w";
    for (std::size_t j = 0; j < base.trains.size(); ++j) {
      csv << ",J_" << j << ",V_" << j << ",W_in_" << j << ",V_k_" << j << ",W_out_" << j << ",U_"
          << j;
    }
    csv << ",message\n";

    for (std::size_t row = 0; row < args.caps.size(); ++row) {
      FleetProblem pb = base;
      pb.caps[k] = args.caps[row];
      csv << args.caps[row];
      try {
        const FleetSolution sol = solve(pb, file.solver);
        csv << ",converged," << sol.weights.w[k];
        for (std::size_t j = 0; j < pb.trains.size(); ++j) {
          const ProfileEvaluation& ev = sol.evaluations[j];
          csv << ',' << sol.train_cost[j] << ',' << sol.V[j] << ',';
          if (k >= 1) csv << ev.transition_speeds[k - 1];
          csv << ',' << sol.hold_speed(pb.trains[j].params, j, k) << ',';
          if (k + 1 < n) csv << ev.transition_speeds[k];
          csv << ',' << ev.braking_speed;
          write_file(args.out_dir / ("sweep_row" + std::to_string(row) + "_train" +
                                     std::to_string(j) + ".csv"),
                     profile_csv(pb.trains[j].params, sol.profiles[j], args.stride));
        }
        csv << ",\n";
        out << "Q=" << args.caps[row] << ": converged, w=" << sol.weights.w[k] << '\n';
      } catch (const SolverError& e) {
        csv << ',' << to_string(e.code()) << ',';
        for (std::size_t j = 0; j < pb.trains.size(); ++j) csv << ",,,,,,";
        std::string msg = e.what();
        std::replace(msg.begin(), msg.end(), ',', ';');
        csv << ',' << msg << '\n';
        err << "Q=" << args.caps[row] << ": " << e.what() << '\n';
      }
    }
    write_file(args.out_dir / "sweep.csv", csv.str());
    return kExitOk;
  });
}

int cmd_eta(const EtaArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const ProblemFile file = load_problem(args.problem);
    const FleetProblem& pb = file.problem;
    if (args.train >= pb.trains.size()) {
      throw InputError("train index " + std::to_string(args.train) + " out of range");
    }
    if (args.samples < 2) throw InputError("need at least 2 samples per curve");
    const FleetSolution sol = solve(pb, file.solver);
    const TrainParams& p = pb.trains[args.train].params;
    const std::size_t n = pb.interval_count();
    const double cap = speed_cap(p);
    ensure_dir(args.out_dir);

    std::vector<double> holds;
    for (std::size_t k = 0; k < n; ++k) holds.push_back(sol.hold_speed(p, args.train, k));

    std::ostringstream curves;
    curves << std::setprecision(12) << "interval,phase,v,eta\n";
    for (std::size_t k = 0; k < n; ++k) {
      for (PhaseKind kind : {PhaseKind::MaxAccel, PhaseKind::Coast}) {
        for (int i = 1; i <= args.samples; ++i) {
          const double v = cap * static_cast<double>(i) / static_cast<double>(args.samples);
          curves << k << ',' << to_string(kind) << ',' << v << ','
                 << eta(p, kind, v, holds[k], sol.weights.w[k]) << '\n';
        }
      }
    }

    std::ostringstream points;
    points << std::setprecision(12) << "kind,interval,v,eta,eta_other\n";
    for (std::size_t k = 0; k < n; ++k) {
      const double w = sol.weights.w[k];
      points << "accel_min," << k << ',' << holds[k] << ','
             << eta(p, PhaseKind::MaxAccel, holds[k], holds[k], w) << ",\n";
      points << "coast_max," << k << ',' << holds[k] << ','
             << eta(p, PhaseKind::Coast, holds[k], holds[k], w) << ",\n";
    }
    const ProfileEvaluation& ev = sol.evaluations[args.train];
    for (std::size_t b = 1; b < n; ++b) {
      if (holds[b - 1] == holds[b]) continue;
      const double W = ev.transition_speeds[b - 1];
      const bool falling = holds[b - 1] > holds[b];
      const PhaseKind left = falling ? PhaseKind::MaxAccel : PhaseKind::Coast;
      const PhaseKind right = falling ? PhaseKind::Coast : PhaseKind::MaxAccel;
      points << "switch," << b << ',' << W << ','
             << eta(p, left, W, holds[b - 1], sol.weights.w[b - 1]) << ','
             << eta(p, right, W, holds[b], sol.weights.w[b]) << '\n';
    }
    write_file(args.out_dir / "eta_curves.csv", curves.str());
    write_file(args.out_dir / "eta_points.csv", points.str());
    out << "eta curves for train " << args.train << " written to " << args.out_dir.string() << '\n';
    return kExitOk;
  });
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Energy-capped fleet driving strategy solver"};
  app.require_subcommand(1);
  fs::path default_out = "out";
  if (const char* env = std::getenv("ECODRIVE_OUT_DIR")) default_out = env;

  SolveArgs solve_args;
  solve_args.out_dir = default_out;
  double tol_x = 0.0, tol_e = 0.0;
  int max_iter = 0;
  auto* s = app.add_subcommand("solve", "Solve a fleet problem and write summary and profiles");
  s->add_option("problem", solve_args.problem, "Problem file (JSON)")->required();
  s->add_option("-o,--out", solve_args.out_dir, "Output directory");
  s->add_flag("--simulate", solve_args.simulate, "Re-simulate every profile and verify it");
  auto* o_tol_x = s->add_option("--tol-x", tol_x, "Distance tolerance, m");
  auto* o_tol_e = s->add_option("--tol-e", tol_e, "Relative energy tolerance");
  auto* o_max = s->add_option("--max-iter", max_iter, "Newton iterations per active set");
  s->add_option("--stride", solve_args.stride, "Profile sampling stride, s");

  SweepArgs sweep_args;
  sweep_args.out_dir = default_out;
  auto* w = app.add_subcommand("sweep", "Re-solve over a list of caps on one interval");
  w->add_option("problem", sweep_args.problem, "Base problem file (JSON)")->required();
  w->add_option("--interval", sweep_args.interval, "Capped interval index")->required();
  w->add_option("--caps", sweep_args.caps, "Cap values, J")->required()->delimiter(',');
  w->add_option("-o,--out", sweep_args.out_dir, "Output directory");
  w->add_option("--stride", sweep_args.stride, "Profile sampling stride, s");

  EtaArgs eta_args;
  eta_args.out_dir = default_out;
  auto* e = app.add_subcommand("eta", "Write adjoint curves and turning points for one train");
  e->add_option("problem", eta_args.problem, "Problem file (JSON)")->required();
  e->add_option("--train", eta_args.train, "Train index");
  e->add_option("--samples", eta_args.samples, "Samples per curve");
  e->add_option("-o,--out", eta_args.out_dir, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& ex) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& ex) {
    err << "error: " << ex.what() << '\n';
    return kExitInput;
  }

  if (*s) {
    if (*o_tol_x) solve_args.tol_x = tol_x;
    if (*o_tol_e) solve_args.tol_e = tol_e;
    if (*o_max) solve_args.max_iter = max_iter;
    return cmd_solve(solve_args, out, err);
  }
  if (*w) return cmd_sweep(sweep_args, out, err);
  return cmd_eta(eta_args, out, err);
}

}  // namespace ecodrive
