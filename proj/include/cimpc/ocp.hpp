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

#pragma once

#include "cimpc/cost.hpp"
#include "cimpc/fddp.hpp"
#include "cimpc/stepper.hpp"

namespace cimpc {

/// Contact-implicit shooting problem: the time stepper is the dynamics, and
/// contact modes are whatever the rollout produces.
class ContactProblem : public ShootingProblem {
 public:
  ContactProblem(RobotModel model, CostContext costs, int horizon, double dt,
                 double rho, const StepOptions& options = {});
  // The cost context refers to the owned model; copies would dangle.
  ContactProblem(const ContactProblem&) = delete;
  ContactProblem& operator=(const ContactProblem&) = delete;

  int horizon() const override { return horizon_; }
  int nx() const override { return model_.nx(); }
  int nu() const override { return model_.n_joints(); }
  const Vec& initial_state() const override { return x0_; }

  StepOutcome step(int knot, const Vec& x, const Vec& u) const override;
  void linearize(int knot, const Vec& x, const Vec& u, Mat& fx,
                 Mat& fu) const override;
  CostEval running_cost(int knot, const Vec& x, const Vec& u) const override;
  CostEval terminal_cost(const Vec& x) const override;
  double running_cost_value(int knot, const Vec& x,
                            const Vec& u) const override;
  double terminal_cost_value(const Vec& x) const override;
  Vec lower_bound() const override { return -model_.torque_limits(); }
  Vec upper_bound() const override { return model_.torque_limits(); }

  void set_initial_state(const Vec& x0) { x0_ = x0; }
  void set_rho(double rho);
  void set_schedule(const AirTimeSchedule& s) { costs_.schedule = s; }
  void set_reference(const Reference& r) { costs_.reference = r; }

  const RobotModel& model() const { return model_; }
  const CostContext& costs() const { return costs_; }
  double dt() const { return dt_; }
  double rho() const { return rho_; }
  const StepOptions& step_options() const { return options_; }

 private:
  RobotModel model_;
  CostContext costs_;
  int horizon_;
  double dt_;
  double rho_;
  StepOptions options_;
  Vec x0_;
};

}  // namespace cimpc
