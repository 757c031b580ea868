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

#include "cimpc/mpc.hpp"

#include <chrono>
#include <cmath>
#include <random>
#include <stdexcept>

namespace cimpc {

namespace {

constexpr int kStandingRounds = 30;
constexpr double kStaticTolerance = 1e-10;
constexpr double kOverflow = 1e3;
constexpr double kFallHeightRatio = 0.5;
constexpr double kFallPitch = 1.5;  // rad

double largest_motion(const Trajectory& t) {
  double m = 0.0;
  for (const Vec& x : t.xs) {
    m = std::max(m, (x - t.xs.front()).cwiseAbs().maxCoeff());
  }
  return m;
}

CostContext make_costs(const RobotModel& model, const CostWeights& weights,
                       const Reference& ref, int horizon) {
  CostContext c;
  c.model = &model;
  c.weights = weights;
  c.reference = ref;
  c.schedule = AirTimeSchedule::empty(model.n_contacts(), horizon);
  return c;
}

}  // namespace

const char* to_string(TaskKind kind) {
  switch (kind) {
    case TaskKind::Stand:
      return "stand";
    case TaskKind::JumpUp:
      return "jump_up";
    case TaskKind::MoveForward:
      return "move_forward";
    case TaskKind::PitchTarget:
      return "pitch_target";
  }
  return "unknown";
}

Reference Task::reference(const RobotModel& model, const Vec& measured,
                          int horizon, double dt) const {
  Reference r = Reference::stance(model);
  switch (kind) {
    case TaskKind::Stand:
      break;
    case TaskKind::JumpUp:
      r.x[1] += value;
      break;
    case TaskKind::MoveForward:
      r.x[0] = measured[0] + value * horizon * dt;
      r.x[model.nq()] = value;
      break;
    case TaskKind::PitchTarget:
      r.x[2] = value;
      break;
  }
  return r;
}

PdGains PdGains::uniform(int n_joints, double kp, double kd) {
  return {Vec::Constant(n_joints, kp), Vec::Constant(n_joints, kd)};
}

Vec pd_command(const Vec& u_ff, const Vec& p_des, const Vec& pdot_des,
               const Vec& p, const Vec& pdot, const PdGains& gains,
               const Vec& torque_limits) {
  if ((gains.kp.array() <= 0.0).any() || (gains.kd.array() <= 0.0).any()) {
    throw std::invalid_argument("PD gains must be positive");
  }
  const Vec p_target = u_ff.cwiseQuotient(gains.kp) + p_des;
  const Vec u = gains.kp.cwiseProduct(p_target - p) +
                gains.kd.cwiseProduct(pdot_des - pdot);
  return u.cwiseMax(-torque_limits).cwiseMin(torque_limits);
}

Trajectory warm_start_shift(const ShootingProblem& problem,
                            const Trajectory& previous) {
  const int n = problem.horizon();
  Trajectory t;
  t.xs.assign(previous.xs.begin() + 1, previous.xs.end());
  t.us.assign(previous.us.begin() + 1, previous.us.end());
  t.us.push_back(Vec::Zero(problem.nu()));
  t.xs.push_back(problem.step(n - 1, t.xs.back(), t.us.back()).next);
  evaluate(problem, t);
  return t;
}

Trajectory make_standing_trajectory(const RobotModel& model,
                                    const CostWeights& weights, int horizon,
                                    double dt) {
  const Reference ref = Reference::stance(model);
  ContactProblem problem(model, make_costs(model, weights, ref, horizon),
                         horizon, dt, 0.0);
  SolverSettings s;
  s.max_iterations = 200;
  s.cost_tolerance = 1e-12;

  // Receding re-solves: each round starts from rest at the last round's end
  // posture, so the fixed point is a static standing trajectory.
  Vec x0 = ref.x;
  // The reference torques hold the stance; a zero-torque guess would
  // collapse the legs and land in a hopping minimum.
  Trajectory best = rollout(problem, std::vector<Vec>(horizon, ref.u));
  for (int round = 0; round < kStandingRounds; ++round) {
    problem.set_initial_state(x0);
    Trajectory init = best;
    init.xs.front() = x0;
    const SolveResult r = solve(problem, init, s);
    if (!r.converged && !r.improved) {
      throw std::runtime_error("standing trajectory: solver failed (" +
                               r.message + ")");
    }
    best = r.traj;
    if (best.gap_norm <= 1e-9 && largest_motion(best) < kStaticTolerance) {
      return best;
    }
    x0 = best.xs.back();
    x0.tail(model.nv()).setZero();
  }
  if (best.gap_norm > 1e-9) {
    throw std::runtime_error("standing trajectory: not feasible");
  }
  return best;
}

MpcController::MpcController(RobotModel model, CostWeights weights, Task task,
                             const MpcSettings& settings)
    : model_(std::move(model)),
      weights_(std::move(weights)),
      task_(task),
      settings_(settings) {
  if (settings_.max_iterations < 1) {
    throw std::invalid_argument("MPC needs at least one solver iteration");
  }
  StepOptions options;
  options.drift_compensation = settings_.drift_compensation;
  const Reference ref = task_.reference(model_, Reference::stance(model_).x,
                                        settings_.horizon, settings_.dt);
  problem_ = std::make_unique<ContactProblem>(
      model_, make_costs(model_, weights_, ref, settings_.horizon),
      settings_.horizon, settings_.dt, settings_.rho, options);
  schedule_ = AirTimeSchedule::empty(model_.n_contacts(), settings_.horizon);
}

const Trajectory& MpcController::initialize_standing() {
  previous_ = make_standing_trajectory(model_, weights_, settings_.horizon,
                                       settings_.dt);
  cycle_ = 0;
  return previous_;
}

MpcCycle MpcController::step(const Vec& measured) {
  if (previous_.xs.empty()) initialize_standing();
  const auto start = std::chrono::steady_clock::now();
  ContactProblem& p = *problem_;
  p.set_reference(task_.reference(model_, measured, settings_.horizon,
                                  settings_.dt));
  p.set_initial_state(measured);

  MpcCycle out;
  bool rollout_failed = false;
  const auto single_shooting_init = [&](const std::vector<Vec>& us) {
    try {
      return rollout(p, us);
    } catch (const RolloutDivergence&) {
      // The controls blow up from the measured state. Keep the previous
      // plan, shifted, and skip this solve.
      rollout_failed = true;
      return cycle_ == 0 ? previous_ : warm_start_shift(p, previous_);
    }
  };
  Trajectory init;
  if (cycle_ == 0 && settings_.multiple_shooting) {
    // The standing trajectory is already aligned with the first problem.
    init = previous_;
    evaluate(p, init);
  } else if (cycle_ == 0) {
    init = single_shooting_init(previous_.us);
  } else if (settings_.multiple_shooting) {
    init = warm_start_shift(p, previous_);
  } else {
    std::vector<Vec> us(previous_.us.begin() + 1, previous_.us.end());
    us.push_back(Vec::Zero(p.nu()));
    init = single_shooting_init(us);
  }
  if (cycle_ > 0 && settings_.multiple_shooting) {
    for (int i = 0; i + 1 < p.horizon(); ++i) {
      out.shift_ok = out.shift_ok && init.us[i] == previous_.us[i + 1] &&
                     init.xs[i] == previous_.xs[i + 1];
    }
    out.shift_ok = out.shift_ok && init.us.back().isZero(0.0);
  }
  // Interior gaps of the warm start are only expected to vanish when the
  // previous solve closed all of its gaps.
  if (previous_.gap_norm <= 1e-9) {
    for (std::size_t i = 1; i < init.gaps.size(); ++i) {
      out.init_gap_interior = std::max(out.init_gap_interior,
                                       init.gaps[i].cwiseAbs().maxCoeff());
    }
  }

  std::vector<Vec> states(init.xs.begin(), init.xs.end() - 1);
  schedule_ = update_airtime_schedule(schedule_, states, model_, weights_);
  p.set_schedule(schedule_);
  evaluate(p, init);

  SolverSettings s;
  s.max_iterations = settings_.max_iterations;
  s.cost_tolerance = settings_.cost_tolerance;
  s.gap_tolerance = settings_.gap_tolerance;
  s.regularization_init = settings_.regularization_min;
  s.regularization_min = settings_.regularization_min;
  s.regularization_max = settings_.regularization_max;
  SolveResult r;
  if (rollout_failed) {
    r.traj = std::move(init);
    r.diverged = true;
  } else {
    r = solve(p, std::move(init), s);
  }
  out.solution = r.traj;
  out.iterations = r.iterations;
  out.converged = r.converged;
  out.improved = r.improved;
  out.diverged = rollout_failed;
  out.rejected_overflow = !rollout_failed && r.diverged;
  out.contraction_error = r.max_contraction_error;

  const int nq = model_.nq();
  const int nj = model_.n_joints();
  out.u_ff = r.traj.us.front();
  out.p_des = r.traj.xs[1].segment(3, nj);
  out.pdot_des = r.traj.xs[1].segment(nq + 3, nj);
  previous_ = r.traj;
  ++cycle_;
  out.solve_ms = std::chrono::duration<double, std::milli>(
                     std::chrono::steady_clock::now() - start)
                     .count();
  return out;
}

ExecutionLog run_closed_loop(const RobotModel& model,
                             const CostWeights& weights, const Task& task,
                             const ClosedLoopConfig& config) {
  const double ratio = config.mpc.dt / config.plant_dt;
  const int per_cycle = static_cast<int>(std::lround(ratio));
  if (per_cycle < 1 || std::abs(ratio - per_cycle) > 1e-9) {
    throw std::invalid_argument(
        "MPC period must be an integer multiple of the plant step");
  }
  const PdGains gains = config.gains.kp.size() == 0
                            ? PdGains::uniform(model.n_joints(), 50.0, 1.0)
                            : config.gains;
  const int steps = static_cast<int>(std::lround(config.duration / config.plant_dt));
  const int nq = model.nq();
  const int nj = model.n_joints();

  ExecutionLog log;
  MpcController mpc(model, weights, task, config.mpc);
  Vec x = mpc.initialize_standing().xs.front();
  x[1] += config.perturbation.base_height_offset;
  if (config.perturbation.joint_noise > 0.0) {
    std::mt19937_64 rng(config.perturbation.seed);
    std::uniform_real_distribution<double> noise(
        -config.perturbation.joint_noise, config.perturbation.joint_noise);
    for (int j = 0; j < nj; ++j) x[3 + j] += noise(rng);
  }
  const double fall_height = kFallHeightRatio * model.stance()[1];

  MpcCycle cycle;
  double cycle_cost = 0.0;
  for (int s = 0; s < steps; ++s) {
    const double t = s * config.plant_dt;
    if (s % per_cycle == 0) {
      cycle = mpc.step(x);
      ++log.cycles;
      log.max_iterations = std::max(log.max_iterations, cycle.iterations);
      log.bookkeeping_ok = log.bookkeeping_ok && cycle.shift_ok &&
                           cycle.iterations <= config.mpc.max_iterations;
      log.max_interior_gap = std::max(log.max_interior_gap,
                                      cycle.init_gap_interior);
      log.max_contraction_error = std::max(log.max_contraction_error,
                                           cycle.contraction_error);
      cycle_cost = mpc.problem().running_cost_value(0, x, cycle.u_ff);
      if (cycle.diverged) {
        log.events.push_back({t, "rollout_divergence",
                              "the warm-start rollout overflowed"});
      }
      if (cycle.rejected_overflow) {
        log.events.push_back({t, "line_search_overflow",
                              "a line-search candidate overflowed and was rejected"});
      }
      if (!cycle.converged && !cycle.improved) {
        log.events.push_back({t, "solver_failure", "no step accepted"});
      }
    }

    const Vec p = x.segment(3, nj);
    const Vec pdot = x.segment(nq + 3, nj);
    const Vec u = pd_command(cycle.u_ff, cycle.p_des, cycle.pdot_des, p, pdot,
                             gains, model.torque_limits());
    StepOptions options;
    const Perturbation& pert = config.perturbation;
    if (pert.friction_drop_start >= 0.0 && t >= pert.friction_drop_start &&
        t < pert.friction_drop_end) {
      options.friction = pert.friction_low;
    }
    const StepResult r =
        step(model, GeneralizedState::from_stacked(x), u, config.plant_dt, options);

    LogRow row;
    row.t = t;
    row.q = x.head(nq);
    row.qdot = x.tail(nq);
    row.u_cmd = u;
    row.u_ff = cycle.u_ff;
    for (int k = 0; k < model.n_contacts(); ++k) {
      row.feet.push_back({r.phi_before[k], r.contact.impulses[2 * k],
                          r.contact.impulses[2 * k + 1],
                          static_cast<int>(r.contact.modes[k])});
    }
    row.cycle_cost = cycle_cost;
    row.gap_norm = cycle.solution.gap_norm;
    row.iters = cycle.iterations;
    row.solve_ms = cycle.solve_ms;
    log.rows.push_back(std::move(row));

    x = r.next.stacked();
    const double t_next = t + config.plant_dt;
    if (!x.allFinite() || x.cwiseAbs().maxCoeff() > kOverflow) {
      log.events.push_back({t_next, "state_overflow", "plant state diverged"});
      return log;
    }
    if (x[1] < fall_height || std::abs(x[2]) > kFallPitch) {
      log.events.push_back({t_next, "fall", "base height or pitch out of range"});
      return log;
    }
  }
  log.completed = true;
  return log;
}

}  // namespace cimpc
