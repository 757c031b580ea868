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

// Velocity-level semi-implicit Euler with hard contact:
//
//   qdot' = qdot + M^{-1}((-h + B u) dt + J^T lambda)
//   q'    = q + dt qdot'
//
// The same step drives the optimizer's rollouts and, at a finer dt, the
// closed-loop plant.

#pragma once

#include <vector>

#include "cimpc/contact.hpp"
#include "cimpc/model.hpp"

namespace cimpc {

struct StepOptions {
  /// Add phi/dt to the normal contact velocity so that penetration is
  /// corrected and feet still above ground do not push off early.
  bool drift_compensation = true;
  /// Overrides the model's friction coefficient when non-negative.
  double friction = -1.0;
  GaussSeidelSettings gauss_seidel;
};

/// A foot is a candidate if it is on or below the ground, or would be after
/// an unconstrained step (first-order height prediction).
std::vector<bool> detect_contacts(const RobotModel& model,
                                  const GeneralizedState& state, const Vec& u,
                                  double dt);

ContactSystem make_contact_system(const RobotModel& model,
                                  const GeneralizedState& state, const Vec& u,
                                  double dt, const std::vector<bool>& candidate,
                                  const StepOptions& options = {});

struct StepResult {
  GeneralizedState next;
  ContactSolution contact;
  ContactSystem system;
  Vec phi_before;
  Vec phi_after;
};

StepResult step(const RobotModel& model, const GeneralizedState& state,
                const Vec& u, double dt, const StepOptions& options = {});

struct StepJacobians {
  Mat fx;  // d(q', qdot') / d(q, qdot)
  Mat fu;  // d(q', qdot') / du
  double rho = 0.0;
  bool regularized = false;  // the impulse gradient needed a Tikhonov term
};

/// Jacobians of `step` around an evaluated step, with the contact modes of
/// `result` frozen. The impulse enters through the relaxed gradient with
/// relaxation `rho`; points with a normal impulse below 1e-6 N·s contribute
/// no impulse gradient.
StepJacobians step_jacobians(const RobotModel& model,
                             const GeneralizedState& state, const Vec& u,
                             double dt, double rho, const StepResult& result,
                             const StepOptions& options = {});

/// Convenience overload that evaluates the step first.
StepJacobians step_jacobians(const RobotModel& model,
                             const GeneralizedState& state, const Vec& u,
                             double dt, double rho,
                             const StepOptions& options = {});

}  // namespace cimpc
