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

// Receding-horizon loop around the contact-implicit FDDP solver, and a
// closed-loop harness that runs it against the fine-step plant.

#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "cimpc/ocp.hpp"

namespace cimpc {

enum class TaskKind { Stand, JumpUp, MoveForward, PitchTarget };

const char* to_string(TaskKind kind);

/// Body reference of a task. Joints stay at the nominal stance, velocities
/// and controls at zero, except for the forward task's body velocity.
struct Task {
  TaskKind kind = TaskKind::Stand;
  double value = 0.0;  // height offset (m), velocity (m/s) or pitch (rad)

  /// Reference for a problem starting at `measured`. Only the forward task
  /// depends on the measurement: its target sits velocity * horizon time
  /// ahead of the current base position.
  Reference reference(const RobotModel& model, const Vec& measured,
                      int horizon, double dt) const;
};

struct PdGains {
  Vec kp;  // N·m/rad
  Vec kd;  // N·m·s/rad

  static PdGains uniform(int n_joints, double kp, double kd);
};

/// Joint torque from the feedforward torque and a PD law around the planned
/// joint state: p_target = u_ff / K_p + p_des, clamped to the torque limits.
Vec pd_command(const Vec& u_ff, const Vec& p_des, const Vec& pdot_des,
               const Vec& p, const Vec& pdot, const PdGains& gains,
               const Vec& torque_limits);

struct MpcSettings {
  int horizon = 20;
  double dt = 0.025;
  double rho = 0.0;
  int max_iterations = 4;
  bool multiple_shooting = true;
  bool drift_compensation = true;
  double cost_tolerance = 1e-6;
  double gap_tolerance = 1e-9;
  double regularization_min = 1e-9;  // also the initial value
  double regularization_max = 1e9;
};

/// Previous solution shifted one knot: us -> [u_1 .. u_{N-1}, 0], xs ->
/// [x_1 .. x_N, f(x_N, 0)]. The problem's initial state should already be the
/// measured state, which leaves the mismatch in gaps[0].
Trajectory warm_start_shift(const ShootingProblem& problem,
                            const Trajectory& previous);

struct MpcCycle {
  Trajectory solution;
  Vec u_ff;       // first control of the solution
  Vec p_des;      // joint positions at knot 1
  Vec pdot_des;   // joint velocities at knot 1
  int iterations = 0;
  bool converged = false;
  bool improved = false;
  bool diverged = false;       // the warm-start rollout overflowed; no solve
  bool rejected_overflow = false;  // a line-search candidate overflowed
  double solve_ms = 0.0;
  double contraction_error = 0.0;  // worst gap-contraction mismatch of the solve
  double init_gap_interior = 0.0;  // largest interior gap of the warm start
  bool shift_ok = true;            // warm start obeyed the shift rule
};

class MpcController {
 public:
  MpcController(RobotModel model, CostWeights weights, Task task,
                const MpcSettings& settings);

  /// Solves the stance-reference problem from rest at stance (no relaxation)
  /// until it is static, and stores it as the first warm start.
  const Trajectory& initialize_standing();

  MpcCycle step(const Vec& measured);

  const ContactProblem& problem() const { return *problem_; }
  const Trajectory& previous() const { return previous_; }
  const AirTimeSchedule& schedule() const { return schedule_; }
  int cycle() const { return cycle_; }
  const MpcSettings& settings() const { return settings_; }

 private:
  RobotModel model_;
  CostWeights weights_;
  Task task_;
  MpcSettings settings_;
  std::unique_ptr<ContactProblem> problem_;
  Trajectory previous_;
  AirTimeSchedule schedule_;
  int cycle_ = 0;
};

/// Standing trajectory for `model` with the given horizon and dt: a feasible,
/// static trajectory at the stance reference.
Trajectory make_standing_trajectory(const RobotModel& model,
                                    const CostWeights& weights, int horizon,
                                    double dt);

struct Perturbation {
  double base_height_offset = 0.0;  // m, added to the plant's initial state
  double friction_low = 0.25;
  double friction_drop_start = -1.0;  // s; negative disables the drop
  double friction_drop_end = -1.0;
  double joint_noise = 0.0;  // rad, uniform offsets on the initial joints
  std::uint64_t seed = 0;
};

struct ClosedLoopConfig {
  double plant_dt = 1e-3;
  double duration = 5.0;
  MpcSettings mpc;
  PdGains gains;  // empty: 50 / 1 on every joint
  Perturbation perturbation;
};

struct FootLog {
  double phi = 0.0;
  double lambda_t = 0.0;
  double lambda_n = 0.0;
  int mode = 0;
};

struct LogRow {
  double t = 0.0;
  Vec q;
  Vec qdot;
  Vec u_cmd;
  Vec u_ff;
  std::vector<FootLog> feet;
  double cycle_cost = 0.0;
  double gap_norm = 0.0;
  int iters = 0;
  double solve_ms = 0.0;
};

struct Event {
  double t = 0.0;
  std::string kind;  // state_overflow, fall, rollout_divergence,
                     // line_search_overflow, solver_failure
  std::string detail;
};

struct ExecutionLog {
  std::vector<LogRow> rows;
  std::vector<Event> events;
  int cycles = 0;
  int max_iterations = 0;
  bool completed = false;      // reached the configured duration
  bool bookkeeping_ok = true;  // warm-start invariants held every cycle
  double max_contraction_error = 0.0;
  double max_interior_gap = 0.0;
};

ExecutionLog run_closed_loop(const RobotModel& model,
                             const CostWeights& weights, const Task& task,
                             const ClosedLoopConfig& config);

}  // namespace cimpc
