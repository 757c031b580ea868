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

#include <filesystem>

#include <string>

#include "cimpc/config.hpp"

namespace cimpc {
namespace {

std::string problems_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    std::string all;
    for (const std::string& p : e.problems()) all += p + "\n";
    return all;
  }
  return "";
}

TEST(ConfigTest, MinimalConfigTakesDefaults) {
  const TaskConfig c = parse_config("[task]\nkind = stand\n");
  const TaskConfig d;
  EXPECT_EQ(c.experiment, ExperimentKind::Single);
  EXPECT_EQ(c.task.kind, TaskKind::Stand);
  EXPECT_EQ(c.duration, d.duration);
  EXPECT_EQ(c.rho, 0.0);
  EXPECT_EQ(c.horizon, 20);
  EXPECT_EQ(c.dt, 0.025);
  EXPECT_EQ(c.max_iterations, 4);
  EXPECT_EQ(c.plant_dt, 1e-3);
  EXPECT_EQ(c.airtime_threshold, 12);
  EXPECT_EQ(c.airtime_weight, 2e3);
  EXPECT_EQ(c.symmetric_weight, 1e-2);
  EXPECT_EQ(c.foot_sharpness, -30.0);
  EXPECT_EQ(c.cost_tolerance, 1e-6);
  EXPECT_EQ(c.regularization_max, 1e9);
  EXPECT_EQ(c.scheduled_runs(), 1);
  EXPECT_EQ(parse_config("").task.kind, TaskKind::Stand);
}

TEST(ConfigTest, DefaultsBuildTheDefaultProblem) {
  const TaskConfig c = parse_config("");
  const RobotModel model = build_model(c);
  const RobotModel reference = RobotModel::planar_quadruped();
  EXPECT_EQ(model.stance(), reference.stance());
  EXPECT_EQ(model.total_mass(), reference.total_mass());
  const CostWeights w = build_weights(c, model);
  const CostWeights dw = CostWeights::defaults(model);
  EXPECT_EQ(w.wx, dw.wx);
  EXPECT_EQ(w.wu, dw.wu);
  EXPECT_EQ(w.pairing, dw.pairing);
  const ClosedLoopConfig cl = build_closed_loop(c);
  EXPECT_EQ(cl.gains.kp, Vec::Constant(4, 50.0));
  EXPECT_EQ(cl.gains.kd, Vec::Constant(4, 1.0));
  EXPECT_EQ(cl.mpc.horizon, 20);
}

TEST(ConfigTest, NegativeRhoIsRejected) {
  const std::string p = problems_of("[task]\nkind = jump_up\nrho = -1\n");
  EXPECT_NE(p.find("line 3"), std::string::npos) << p;
  EXPECT_NE(p.find("task.rho"), std::string::npos) << p;
}

TEST(ConfigTest, UnknownKeyReportsItsLine) {
  const std::string p = problems_of("[task]\nkind = stand\n\n[solver]\nhorizn = 20\n");
  EXPECT_NE(p.find("line 5: solver.horizn: unknown key"), std::string::npos) << p;
}

TEST(ConfigTest, SyntaxErrorReportsItsLine) {
  const std::string p = problems_of("[task]\nkind stand\n");
  EXPECT_NE(p.find("line 2"), std::string::npos) << p;
}

TEST(ConfigTest, AllProblemsAreCollected) {
  const std::string p = problems_of("[solver]\nhorizon = 0\ndt = -1\n[plant]\nkp = 1, 2\n");
  EXPECT_NE(p.find("solver.horizon"), std::string::npos) << p;
  EXPECT_NE(p.find("solver.dt"), std::string::npos) << p;
  EXPECT_NE(p.find("plant.kp"), std::string::npos) << p;
}

TEST(ConfigTest, BadValuesAreRejected) {
  EXPECT_FALSE(problems_of("[solver]\nhorizon = twenty\n").empty());
  EXPECT_FALSE(problems_of("[task]\nkind = dance\n").empty());
  EXPECT_FALSE(problems_of("[solver]\ndt = 0.0255\n").empty());  // not a multiple of 1 ms
  EXPECT_FALSE(problems_of("[cost]\nairtime_threshold = 20\n").empty());
  EXPECT_FALSE(problems_of("[solver]\nregularization_min = 1\nregularization_max = 0.1\n").empty());
  EXPECT_FALSE(problems_of("[model]\nbase_mass = 0\n").empty());
}

TEST(ConfigTest, SweepListSchedulesFiveRuns) {
  const TaskConfig c =
      parse_config("[task]\nkind = relaxation_sweep\nrho_list = 0, 0.02, 0.25, 2, 6\n");
  EXPECT_EQ(c.experiment, ExperimentKind::RelaxationSweep);
  EXPECT_EQ(c.scheduled_runs(), 5);
  EXPECT_EQ(c.rho_list, (std::vector<double>{0.0, 0.02, 0.25, 2.0, 6.0}));
  EXPECT_EQ(c.task.kind, TaskKind::JumpUp);
}

TEST(ConfigTest, ScenarioKinds) {
  const TaskConfig compare = parse_config("[task]\nkind = shooting_compare\n");
  EXPECT_EQ(compare.scheduled_runs(), 2);
  EXPECT_EQ(compare.task.kind, TaskKind::MoveForward);
  EXPECT_GT(compare.base_height_offset, 0.0);
  const TaskConfig slip = parse_config("[task]\nkind = slip_recovery\n");
  EXPECT_EQ(slip.task.kind, TaskKind::PitchTarget);
  EXPECT_LT(slip.friction_drop_start, slip.friction_drop_end);
  const TaskConfig fwd = parse_config("[task]\nkind = move_forward\nvalue = 2.0\n");
  EXPECT_EQ(fwd.task.value, 2.0);
}

TEST(ConfigTest, PerJointGainsAndOverrides) {
  const TaskConfig c = parse_config(
      "[plant]\nkp = 40, 45, 50, 55\nkd = 2\n[model]\nfriction = 0.6\n[solver]\n"
      "cost_tolerance = 1e-8\n");
  const ClosedLoopConfig cl = build_closed_loop(c);
  EXPECT_EQ(cl.gains.kp, (Vec(4) << 40, 45, 50, 55).finished());
  EXPECT_EQ(cl.gains.kd, Vec::Constant(4, 2.0));
  EXPECT_EQ(cl.mpc.cost_tolerance, 1e-8);
  EXPECT_EQ(build_model(c).friction(), 0.6);
}

TEST(ConfigTest, ShippedExamplesLoad) {
  int count = 0;
  for (const auto& entry : std::filesystem::directory_iterator(CIMPC_CONFIG_DIR)) {
    if (entry.path().extension() != ".ini") continue;
    SCOPED_TRACE(entry.path().string());
    const TaskConfig c = load_config(entry.path().string());
    EXPECT_NO_THROW(build_closed_loop(c));
    ++count;
  }
  EXPECT_GT(count, 0);
}

}  // namespace
}  // namespace cimpc
