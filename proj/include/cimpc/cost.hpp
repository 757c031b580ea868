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

// Running and terminal costs of the locomotion problem. Every term is a sum of
// squared residuals, so the Hessians below are Gauss-Newton (PSD) blocks.

#pragma once

#include <cmath>
#include <vector>

#include "cimpc/model.hpp"

namespace cimpc {

struct CostWeights {
  Vec wx;  // diagonal state weights, size nx
  Vec wu;  // diagonal control weights, size n_joints
  double terminal_scale = 10.0;  // W_xN = terminal_scale * W_x

  bool foot_enabled = true;
  double foot_weight = 1.0;        // c_f
  double foot_sharpness = -30.0;   // c_1, 1/m; negative so lifted feet cost less

  bool airtime_enabled = true;
  double airtime_weight = 2e3;  // c_a
  int airtime_threshold = 12;   // i_t, knots

  bool symmetric_enabled = true;
  double symmetric_weight = 1e-2;  // c_s
  Mat pairing;  // C_2: front minus hind torque, per joint type

  /// Position 1, height 10, pitch 10, joints 0.1, velocities 5e-4,
  /// controls 5e-4.
  static CostWeights defaults(const RobotModel& model);
};

/// Constant reference over the horizon.
struct Reference {
  Vec x;
  Vec u;

  /// The model's stance at rest, holding it with the statics torques.
  static Reference stance(const RobotModel& model);
};

struct CostEval {
  double value = 0.0;
  Vec lx;
  Vec lu;
  Mat lxx;
  Mat luu;
  Mat lux;

  static CostEval zero(int nx, int nu);
  CostEval& operator+=(const CostEval& other);
};

/// Per-foot, per-knot air-time weights; entries are 0 or c_a.
struct AirTimeSchedule {
  Mat weights;  // n_contacts x N

  static AirTimeSchedule empty(int n_contacts, int horizon);
  bool all_zero() const { return (weights.array() == 0.0).all(); }
};

/// ||x - x_ref||^2_{W_x} + ||u - u_ref||^2_{W_u}; the terminal version uses
/// terminal_scale * W_x and has no control term.
CostEval regulating_cost(const Vec& x, const Vec& u, const Reference& ref,
                         const CostWeights& w, bool terminal);

inline double sigmoid(double s) { return 1.0 / (1.0 + std::exp(-s)); }

/// c_f * sum_k S(c_1 phi_k) |v_t,k|^2: penalizes tangential foot velocity
/// near the ground, which both discourages slip and rewards foot clearance.
CostEval foot_cost(const RobotModel& model, const Vec& x, const CostWeights& w);

/// sum_k c_a[k, knot] phi_k^2.
CostEval airtime_cost(const RobotModel& model, const Vec& x,
                      const AirTimeSchedule& schedule, int knot);

/// c_s ||C_2 u||^2.
CostEval symmetric_cost(const Vec& u, const CostWeights& w, int nx);

/// Shifts the previous schedule one knot toward the start and activates
/// knots i_t .. i_t+3 of every foot that stays in the air for more than i_t
/// consecutive knots of `init_states` (phi > 1e-4 m counts as airborne).
AirTimeSchedule update_airtime_schedule(const AirTimeSchedule& previous,
                                        const std::vector<Vec>& init_states,
                                        const RobotModel& model,
                                        const CostWeights& w);

struct CostContext {
  const RobotModel* model = nullptr;
  CostWeights weights;
  Reference reference;
  AirTimeSchedule schedule;
};

/// Running cost at `knot` (all enabled terms) or, when `terminal`, the
/// terminal regulating cost only.
CostEval total_cost(const CostContext& ctx, const Vec& x, const Vec& u,
                    int knot, bool terminal);

/// Value of total_cost without derivatives.
double total_cost_value(const CostContext& ctx, const Vec& x, const Vec& u,
                        int knot, bool terminal);

}  // namespace cimpc
