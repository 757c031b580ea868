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

// Task configuration: an INI file with [task], [solver], [plant], [model] and
// [cost] sections. Every key is optional; see configs/ for annotated examples
// and README.md for the defaults.

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "cimpc/mpc.hpp"

namespace cimpc {

enum class ExperimentKind { Single, RelaxationSweep, ShootingCompare, SlipRecovery };

/// All problems found in a config, one per line ("section.key: message").
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

struct TaskConfig {
  ExperimentKind experiment = ExperimentKind::Single;
  Task task;  // for sweeps and comparisons, the task every run executes
  double duration = 5.0;
  double rho = 0.0;
  std::vector<double> rho_list{0.0, 0.02, 0.25, 2.0, 6.0};
  std::uint64_t seed = 0;
  bool multiple_shooting = true;

  // [solver]
  int horizon = 20;
  double dt = 0.025;
  int max_iterations = 4;
  bool drift_compensation = true;
  double cost_tolerance = 1e-6;
  double gap_tolerance = 1e-9;
  double regularization_min = 1e-9;
  double regularization_max = 1e9;

  // [plant]
  double plant_dt = 1e-3;
  std::vector<double> kp{50.0};  // one value for all joints, or one per joint
  std::vector<double> kd{1.0};
  double base_height_offset = 0.0;
  double initial_noise = 0.0;  // rad, uniform on joint angles (seeded)
  double friction_low = 0.25;
  double friction_drop_start = -1.0;
  double friction_drop_end = -1.0;

  QuadrupedParams model;
  // Cost weights; state weights are expanded to the full state vector.
  double w_position = 1.0;
  double w_height = 10.0;
  double w_pitch = 10.0;
  double w_joint = 0.1;
  double w_velocity = 5e-4;
  double w_control = 5e-4;
  double terminal_scale = 10.0;
  bool foot_cost = true;
  double foot_weight = 1.0;
  double foot_sharpness = -30.0;
  bool airtime_cost = true;
  double airtime_weight = 2e3;
  int airtime_threshold = 12;
  bool symmetric_cost = true;
  double symmetric_weight = 1e-2;

  std::string output_dir = "out";

  /// Runs scheduled by this config: one per rho for a sweep, two for a
  /// shooting comparison, one otherwise.
  int scheduled_runs() const;
};

TaskConfig parse_config(const std::string& text);
TaskConfig load_config(const std::string& path);

RobotModel build_model(const TaskConfig& config);
CostWeights build_weights(const TaskConfig& config, const RobotModel& model);
ClosedLoopConfig build_closed_loop(const TaskConfig& config);

const char* to_string(ExperimentKind kind);

}  // namespace cimpc
