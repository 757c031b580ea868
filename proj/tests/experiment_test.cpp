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

#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cimpc/experiment.hpp"

namespace cimpc {
namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("cimpc_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void expect_equal(const ExperimentSummary& a, const ExperimentSummary& b) {
  EXPECT_EQ(summary_json(a), summary_json(b));
  EXPECT_EQ(a.average_cost, b.average_cost);
  EXPECT_EQ(a.average_stance_time, b.average_stance_time);
  EXPECT_EQ(a.flight_phases, b.flight_phases);
  EXPECT_EQ(a.cycle_iterations, b.cycle_iterations);
  EXPECT_EQ(a.slip_distance, b.slip_distance);
}

// Synthetic log: both feet down except for the given airborne row ranges.
std::vector<LogRow> synthetic(const RobotModel& model, int rows,
                              const std::vector<std::pair<int, int>>& flights) {
  std::vector<LogRow> out(rows);
  for (int i = 0; i < rows; ++i) {
    LogRow& r = out[i];
    r.t = i * 1e-3;
    r.q = model.stance();
    r.qdot = Vec::Zero(7);
    r.u_cmd = r.u_ff = Vec::Zero(4);
    bool air = false;
    for (auto [a, b] : flights) air = air || (i >= a && i < b);
    r.feet.assign(2, FootLog{air ? 0.01 : 0.0, 0.0, air ? 0.0 : 1.0, air ? 0 : 1});
    r.cycle_cost = i % 25 == 0 ? 1.0 + i / 25 : 0.0;
    r.iters = 1 + (i / 25) % 4;
  }
  return out;
}

TEST(SummaryTest, FlightPhasesAndStanceTime) {
  const RobotModel model = RobotModel::planar_quadruped();
  // 3 s log; flights of 50 ms at 0.5 s, 5 ms at 1.5 s (too short), 100 ms at 2 s.
  const auto rows = synthetic(model, 3000, {{500, 550}, {1500, 1505}, {2000, 2100}});
  const ExperimentSummary s = summarize(rows, model, SummaryClock{1e-3, 0.025, 3.0});
  EXPECT_TRUE(s.completed);
  EXPECT_TRUE(s.success);
  EXPECT_EQ(s.flight_phases, 2);
  // Stance intervals after 1 s: [1.0, 1.5), [1.505, 2.0), [2.1, 3.0).
  EXPECT_NEAR(s.average_stance_time, (0.5 + 0.495 + 0.9) / 3.0, 1e-9);
  EXPECT_NEAR(s.stance_fraction, (3000.0 - 155.0) / 3000.0, 1e-12);
  EXPECT_EQ(s.cycles, 120);
  EXPECT_EQ(s.max_iterations, 4);
  EXPECT_DOUBLE_EQ(s.max_cycle_cost, 120.0);
  EXPECT_DOUBLE_EQ(s.median_cycle_cost, 60.5);
  EXPECT_DOUBLE_EQ(s.peak_swing_height, 0.01);
  EXPECT_EQ(s.slip_distance, 0.0);
}

TEST(SummaryTest, IncompleteRunIsNotSuccess) {
  const RobotModel model = RobotModel::planar_quadruped();
  const auto rows = synthetic(model, 1200, {});
  const ExperimentSummary s = summarize(rows, model, SummaryClock{1e-3, 0.025, 5.0});
  EXPECT_FALSE(s.completed);
  EXPECT_FALSE(s.success);
}

TEST(SummaryTest, EmptyRunHasHeaderOnlyCsv) {
  const RobotModel model = RobotModel::planar_quadruped();
  const fs::path dir = scratch("empty");
  write_csv((dir / "t.csv").string(), {}, model);
  EXPECT_EQ(slurp(dir / "t.csv"), csv_header(4, 2) + "\n");
  const ExperimentSummary s = summarize({}, model, SummaryClock{1e-3, 0.025, 0.0});
  EXPECT_EQ(s.rows, 0);
  EXPECT_EQ(s.cycles, 0);
  EXPECT_EQ(s.flight_phases, 0);
  EXPECT_EQ(s.average_cost, 0.0);
  EXPECT_TRUE(read_csv((dir / "t.csv").string(), model).empty());
}

TEST(SummaryTest, CsvColumns) {
  EXPECT_EQ(csv_header(4, 2),
            "t,q0,q1,q2,q3,q4,q5,q6,qdot0,qdot1,qdot2,qdot3,qdot4,qdot5,qdot6,"
            "u_cmd0,u_cmd1,u_cmd2,u_cmd3,u_ff0,u_ff1,u_ff2,u_ff3,"
            "phi_0,lambda_t_0,lambda_n_0,mode_0,phi_1,lambda_t_1,lambda_n_1,mode_1,"
            "cycle_cost,gap_norm,iters,solve_ms");
}

TEST(SummaryTest, ReadRejectsMalformedCsv) {
  const RobotModel model = RobotModel::planar_quadruped();
  const fs::path dir = scratch("malformed");
  std::ofstream(dir / "a.csv") << "t,q0\n0,1\n";
  EXPECT_THROW(read_csv((dir / "a.csv").string(), model), std::runtime_error);
  std::ofstream(dir / "b.csv") << csv_header(4, 2) << "\n0,1,2\n";
  EXPECT_THROW(read_csv((dir / "b.csv").string(), model), std::runtime_error);
  EXPECT_THROW(read_csv((dir / "missing.csv").string(), model), std::runtime_error);
}

TEST(SpearmanTest, KnownValues) {
  EXPECT_DOUBLE_EQ(spearman({1, 2, 3, 4}, {10, 20, 30, 40}), 1.0);
  EXPECT_DOUBLE_EQ(spearman({1, 2, 3, 4}, {4, 3, 2, 1}), -1.0);
  // Monotone but nonlinear, and ties get average ranks.
  EXPECT_DOUBLE_EQ(spearman({0, 0.02, 0.25, 2, 6}, {1, 0.5, 0.3, 0.1, 0.01}), -1.0);
  EXPECT_NEAR(spearman({1, 2, 3, 4}, {1, 1, 2, 2}), 0.894427190999916, 1e-12);
  EXPECT_THROW(spearman({1}, {1}), std::invalid_argument);
}

// ---------------------------------------------------------------------------

TaskConfig short_config(const std::string& extra) {
  return parse_config("[task]\nduration = 0.25\nseed = 3\n" + extra +
                      "[plant]\ninitial_noise = 0.01\n");
}

TEST(RunExperimentTest, CsvRoundTripReproducesSummary) {
  const TaskConfig config = short_config("kind = jump_up\nvalue = 0.1\n");
  const fs::path dir = scratch("roundtrip");
  const auto runs = run_experiment(config, dir.string());
  ASSERT_EQ(runs.size(), 1u);
  const RobotModel model = build_model(config);
  const auto rows = read_csv((dir / "trajectory.csv").string(), model);
  ASSERT_EQ(rows.size(), 250u);
  const ExperimentSummary again = summarize(rows, model, SummaryClock{1e-3, 0.025, 0.25});
  const ExperimentSummary written = parse_summary_json(slurp(dir / "summary.json"));
  expect_equal(again, written);
  expect_equal(again, runs.front().summary);
  for (const LogRow& r : rows) {
    for (const FootLog& f : r.feet) {
      EXPECT_GE(f.mode, 0);
      EXPECT_LE(f.mode, 2);
    }
  }
  EXPECT_TRUE(fs::exists(dir / "events.json"));
}

std::string without_wall_time(const std::string& csv) {
  std::istringstream in(csv);
  std::string line, out;
  while (std::getline(in, line)) out += line.substr(0, line.rfind(',')) + "\n";
  return out;
}

TEST(RunExperimentTest, SameSeedSameCsv) {
  const TaskConfig config = short_config("kind = stand\n");
  const fs::path a = scratch("seed_a"), b = scratch("seed_b");
  run_experiment(config, a.string());
  run_experiment(config, b.string());
  EXPECT_EQ(without_wall_time(slurp(a / "trajectory.csv")),
            without_wall_time(slurp(b / "trajectory.csv")));
}

TEST(RunExperimentTest, SweepWritesPerRunDirectoriesAndSeries) {
  const TaskConfig config =
      short_config("kind = relaxation_sweep\nvalue = 0.1\nrho_list = 0, 1, 4\n");
  const fs::path dir = scratch("sweep");
  const auto runs = run_experiment(config, dir.string());
  ASSERT_EQ(runs.size(), 3u);
  for (const char* label : {"rho_0", "rho_1", "rho_4"}) {
    EXPECT_TRUE(fs::exists(dir / label / "trajectory.csv")) << label;
    EXPECT_TRUE(fs::exists(dir / label / "summary.json")) << label;
  }
  const std::string series = slurp(dir / "sweep.csv");
  EXPECT_EQ(series.substr(0, series.find('\n')),
            "rho,average_cost,average_stance_time,flight_phases,success");
  EXPECT_EQ(std::count(series.begin(), series.end(), '\n'), 4);
  EXPECT_NE(slurp(dir / "sweep.json").find("stance_time_spearman"), std::string::npos);
}

TEST(RunExperimentTest, StandTaskSucceedsWithoutFlight) {
  const TaskConfig config = parse_config("[task]\nkind = stand\nduration = 1.0\n");
  const auto runs = run_experiment(config, "");
  EXPECT_TRUE(runs.front().summary.success);
  EXPECT_EQ(runs.front().summary.flight_phases, 0);
}

TEST(RunExperimentTest, ShootingComparisonDivergesOnlyInSingleShooting) {
  const TaskConfig config = parse_config(
      "[task]\nkind = shooting_compare\nrho = 0.5\nduration = 2.0\n"
      "[cost]\nsymmetric_cost = false\n");
  const auto runs = run_experiment(config, "");
  ASSERT_EQ(runs.size(), 2u);
  const auto diverged = [](const RunResult& r) {
    return std::any_of(r.log.events.begin(), r.log.events.end(),
                       [](const Event& e) { return e.kind == "rollout_divergence"; });
  };
  for (const RunResult& r : runs) {
    SCOPED_TRACE(r.label);
    EXPECT_EQ(diverged(r), !r.multiple_shooting);
    if (r.multiple_shooting) EXPECT_TRUE(r.log.completed);
  }
}

}  // namespace
}  // namespace cimpc
