// Copyright 2026 The cimpc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cimpc/experiment.hpp"

#include <algorithm>
#include <boost/algorithm/string.hpp>
#include <boost/math/statistics/bivariate_statistics.hpp>
#include <boost/math/statistics/univariate_statistics.hpp>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace cimpc {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr double kSettleTime = 1.0;        // s, excluded from stance time
constexpr double kMinFlight = 10e-3;       // s
constexpr double kSlipClearance = 5e-3;    // m

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

bool in_contact(const LogRow& r) {
  return std::any_of(r.feet.begin(), r.feet.end(), [](const FootLog& f) {
    return f.mode != static_cast<int>(ContactMode::Separating);
  });
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
}

}  // namespace

ExperimentSummary summarize(const std::vector<LogRow>& rows,
                            const RobotModel& model, const SummaryClock& clock) {
  ExperimentSummary s;
  s.rows = static_cast<int>(rows.size());
  const int steps = static_cast<int>(std::lround(clock.duration / clock.plant_dt));
  const int per_cycle = std::max(1, static_cast<int>(std::lround(clock.mpc_dt / clock.plant_dt)));
  s.completed = s.rows == steps;
  s.success = s.completed;
  if (rows.empty()) return s;

  double cost = 0.0;
  int stance_rows = 0;
  for (const LogRow& r : rows) {
    cost += r.cycle_cost;
    stance_rows += in_contact(r) ? 1 : 0;
  }
  s.average_cost = cost / s.rows;
  s.stance_fraction = static_cast<double>(stance_rows) / s.rows;

  // Maximal runs of contact / no contact.
  std::vector<double> stance_durations;
  int run_start = 0;
  for (int i = 1; i <= s.rows; ++i) {
    if (i < s.rows && in_contact(rows[i]) == in_contact(rows[run_start])) continue;
    const double begin = rows[run_start].t;
    const double end = rows[i - 1].t + clock.plant_dt;
    if (in_contact(rows[run_start])) {
      const double clipped = end - std::max(begin, kSettleTime);
      if (clipped > 0.5 * clock.plant_dt) stance_durations.push_back(clipped);
    } else if (end - begin >= kMinFlight - 1e-9) {
      ++s.flight_phases;
    }
    run_start = i;
  }
  if (!stance_durations.empty()) {
    s.average_stance_time =
        std::accumulate(stance_durations.begin(), stance_durations.end(), 0.0) /
        static_cast<double>(stance_durations.size());
  }

  std::vector<double> cycle_costs;
  double gap_sum = 0.0;
  for (int i = 0; i < s.rows; i += per_cycle) {
    const LogRow& r = rows[i];
    cycle_costs.push_back(r.cycle_cost);
    s.cycle_iterations.push_back(r.iters);
    s.cycle_solve_ms.push_back(r.solve_ms);
    s.max_iterations = std::max(s.max_iterations, r.iters);
    s.max_gap_norm = std::max(s.max_gap_norm, r.gap_norm);
    gap_sum += r.gap_norm;
  }
  s.cycles = static_cast<int>(cycle_costs.size());
  s.mean_gap_norm = gap_sum / s.cycles;
  s.max_cycle_cost = *std::max_element(cycle_costs.begin(), cycle_costs.end());
  s.median_cycle_cost = boost::math::statistics::median(cycle_costs);

  const int nc = model.n_contacts();
  const double z0 = rows.front().q[1];
  std::vector<double> last_x(nc);
  for (int i = 0; i < s.rows; ++i) {
    const LogRow& r = rows[i];
    s.max_height_deviation = std::max(s.max_height_deviation, std::abs(r.q[1] - z0));
    for (int k = 0; k < nc; ++k) {
      const double phi = r.feet[k].phi;
      const double x = foot_kinematics(model, r.q, k).tangential;
      s.peak_swing_height = std::max(s.peak_swing_height, phi);
      if (r.feet[k].mode == static_cast<int>(ContactMode::Clamping)) {
        s.max_clamping_phi = std::max(s.max_clamping_phi, std::abs(phi));
      }
      if (i > 0 && phi < kSlipClearance && rows[i - 1].feet[k].phi < kSlipClearance) {
        s.slip_distance += std::abs(x - last_x[k]);
      }
      last_x[k] = x;
    }
  }
  return s;
}

std::string csv_header(int n_joints, int n_contacts) {
  std::vector<std::string> cols{"t"};
  for (int i = 0; i < n_joints + 3; ++i) cols.push_back("q" + std::to_string(i));
  for (int i = 0; i < n_joints + 3; ++i) cols.push_back("qdot" + std::to_string(i));
  for (int i = 0; i < n_joints; ++i) cols.push_back("u_cmd" + std::to_string(i));
  for (int i = 0; i < n_joints; ++i) cols.push_back("u_ff" + std::to_string(i));
  for (int k = 0; k < n_contacts; ++k) {
    const std::string n = std::to_string(k);
    cols.insert(cols.end(), {"phi_" + n, "lambda_t_" + n, "lambda_n_" + n, "mode_" + n});
  }
  cols.insert(cols.end(), {"cycle_cost", "gap_norm", "iters", "solve_ms"});
  return boost::join(cols, ",");
}

void write_csv(const std::string& path, const std::vector<LogRow>& rows,
               const RobotModel& model) {
  std::ostringstream out;
  out << csv_header(model.n_joints(), model.n_contacts()) << '\n';
  for (const LogRow& r : rows) {
    out << fmt(r.t);
    for (const Vec* v : {&r.q, &r.qdot, &r.u_cmd, &r.u_ff}) {
      for (double x : *v) out << ',' << fmt(x);
    }
    for (const FootLog& f : r.feet) {
      out << ',' << fmt(f.phi) << ',' << fmt(f.lambda_t) << ',' << fmt(f.lambda_n)
          << ',' << f.mode;
    }
    out << ',' << fmt(r.cycle_cost) << ',' << fmt(r.gap_norm) << ',' << r.iters
        << ',' << fmt(r.solve_ms) << '\n';
  }
  write_text(path, out.str());
}

std::vector<LogRow> read_csv(const std::string& path, const RobotModel& model) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read '" + path + "'");
  const int nq = model.nq();
  const int nj = model.n_joints();
  const int nc = model.n_contacts();
  std::string line;
  std::getline(in, line);
  if (line != csv_header(nj, nc)) {
    throw std::runtime_error("'" + path + "': unexpected CSV header");
  }
  std::vector<LogRow> rows;
  std::vector<std::string> cells;
  const std::size_t width = 1 + 2 * nq + 2 * nj + 4 * nc + 4;
  for (int n = 2; std::getline(in, line); ++n) {
    boost::split(cells, line, boost::is_any_of(","));
    if (cells.size() != width) {
      throw std::runtime_error("'" + path + "' line " + std::to_string(n) +
                               ": expected " + std::to_string(width) + " columns");
    }
    std::size_t c = 0;
    // strtod, unlike stod, accepts subnormals.
    const auto next = [&] { return std::strtod(cells[c++].c_str(), nullptr); };
    const auto vec = [&](int size) {
      Vec v(size);
      for (int i = 0; i < size; ++i) v[i] = next();
      return v;
    };
    LogRow r;
    r.t = next();
    r.q = vec(nq);
    r.qdot = vec(nq);
    r.u_cmd = vec(nj);
    r.u_ff = vec(nj);
    for (int k = 0; k < nc; ++k) {
      FootLog f;
      f.phi = next();
      f.lambda_t = next();
      f.lambda_n = next();
      f.mode = std::stoi(cells[c++]);
      r.feet.push_back(f);
    }
    r.cycle_cost = next();
    r.gap_norm = next();
    r.iters = std::stoi(cells[c++]);
    r.solve_ms = next();
    rows.push_back(std::move(r));
  }
  return rows;
}

std::string summary_json(const ExperimentSummary& s) {
  json j;
  j["rows"] = s.rows;
  j["cycles"] = s.cycles;
  j["completed"] = s.completed;
  j["success"] = s.success;
  j["average_cost"] = s.average_cost;
  j["average_stance_time"] = s.average_stance_time;
  j["flight_phases"] = s.flight_phases;
  j["stance_fraction"] = s.stance_fraction;
  j["max_cycle_cost"] = s.max_cycle_cost;
  j["median_cycle_cost"] = s.median_cycle_cost;
  j["cycle_iterations"] = s.cycle_iterations;
  j["cycle_solve_ms"] = s.cycle_solve_ms;
  j["max_iterations"] = s.max_iterations;
  j["max_gap_norm"] = s.max_gap_norm;
  j["mean_gap_norm"] = s.mean_gap_norm;
  j["slip_distance"] = s.slip_distance;
  j["peak_swing_height"] = s.peak_swing_height;
  j["max_clamping_phi"] = s.max_clamping_phi;
  j["max_height_deviation"] = s.max_height_deviation;
  return j.dump(2) + "\n";
}

ExperimentSummary parse_summary_json(const std::string& text) {
  const json j = json::parse(text);
  ExperimentSummary s;
  j.at("rows").get_to(s.rows);
  j.at("cycles").get_to(s.cycles);
  j.at("completed").get_to(s.completed);
  j.at("success").get_to(s.success);
  j.at("average_cost").get_to(s.average_cost);
  j.at("average_stance_time").get_to(s.average_stance_time);
  j.at("flight_phases").get_to(s.flight_phases);
  j.at("stance_fraction").get_to(s.stance_fraction);
  j.at("max_cycle_cost").get_to(s.max_cycle_cost);
  j.at("median_cycle_cost").get_to(s.median_cycle_cost);
  j.at("cycle_iterations").get_to(s.cycle_iterations);
  j.at("cycle_solve_ms").get_to(s.cycle_solve_ms);
  j.at("max_iterations").get_to(s.max_iterations);
  j.at("max_gap_norm").get_to(s.max_gap_norm);
  j.at("mean_gap_norm").get_to(s.mean_gap_norm);
  j.at("slip_distance").get_to(s.slip_distance);
  j.at("peak_swing_height").get_to(s.peak_swing_height);
  j.at("max_clamping_phi").get_to(s.max_clamping_phi);
  j.at("max_height_deviation").get_to(s.max_height_deviation);
  return s;
}

std::string events_json(const std::vector<Event>& events) {
  json j = json::array();
  for (const Event& e : events) {
    j.push_back({{"t", e.t}, {"kind", e.kind}, {"detail", e.detail}});
  }
  return j.dump(2) + "\n";
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw std::invalid_argument("spearman: need two equal-length series");
  }
  const auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < order.size();) {
      std::size_t j = i;
      while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
      for (std::size_t k = i; k <= j; ++k) r[order[k]] = 0.5 * (i + j) + 1.0;
      i = j + 1;
    }
    return r;
  };
  return boost::math::statistics::correlation_coefficient(ranks(x), ranks(y));
}

std::vector<RunResult> run_experiment(const TaskConfig& config,
                                      const std::string& out_dir) {
  const RobotModel model = build_model(config);
  const CostWeights weights = build_weights(config, model);

  std::vector<RunResult> runs;
  switch (config.experiment) {
    case ExperimentKind::RelaxationSweep:
      for (double rho : config.rho_list) {
        char label[48];
        std::snprintf(label, sizeof label, "rho_%g", rho);
        runs.push_back({label, rho, config.multiple_shooting, {}, {}});
      }
      break;
    case ExperimentKind::ShootingCompare:
      runs.push_back({"multiple_shooting", config.rho, true, {}, {}});
      runs.push_back({"single_shooting", config.rho, false, {}, {}});
      break;
    default:
      runs.push_back({"run", config.rho, config.multiple_shooting, {}, {}});
      break;
  }

  SummaryClock clock{config.plant_dt, config.dt, config.duration};
  std::vector<std::exception_ptr> errors(runs.size());
  const int n = static_cast<int>(runs.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (int i = 0; i < n; ++i) {
    try {
      ClosedLoopConfig loop = build_closed_loop(config);
      loop.mpc.rho = runs[i].rho;
      loop.mpc.multiple_shooting = runs[i].multiple_shooting;
      runs[i].log = run_closed_loop(model, weights, config.task, loop);
      runs[i].summary = summarize(runs[i].log.rows, model, clock);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  if (out_dir.empty()) return runs;
  const fs::path root(out_dir);
  for (const RunResult& r : runs) {
    const fs::path dir = runs.size() == 1 ? root : root / r.label;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw std::runtime_error("cannot create '" + dir.string() + "': " + ec.message());
    write_csv((dir / "trajectory.csv").string(), r.log.rows, model);
    write_text(dir / "summary.json", summary_json(r.summary));
    write_text(dir / "events.json", events_json(r.log.events));
  }
  if (config.experiment == ExperimentKind::RelaxationSweep) {
    std::ostringstream csv;
    csv << "rho,average_cost,average_stance_time,flight_phases,success\n";
    std::vector<double> rho, stance;
    for (const RunResult& r : runs) {
      csv << fmt(r.rho) << ',' << fmt(r.summary.average_cost) << ','
          << fmt(r.summary.average_stance_time) << ',' << r.summary.flight_phases
          << ',' << (r.summary.success ? 1 : 0) << '\n';
      rho.push_back(r.rho);
      stance.push_back(r.summary.average_stance_time);
    }
    write_text(root / "sweep.csv", csv.str());
    json report{{"task", to_string(config.task.kind)}, {"value", config.task.value}};
    if (runs.size() >= 2) {
      const double corr = spearman(rho, stance);
      report["stance_time_spearman"] = std::isfinite(corr) ? json(corr) : json(nullptr);
      report["stance_time_decreasing"] = std::isfinite(corr) && corr <= -0.8;
    }
    write_text(root / "sweep.json", report.dump(2) + "\n");
  }
  return runs;
}

}  // namespace cimpc
