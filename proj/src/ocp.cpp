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

#include "cimpc/ocp.hpp"

#include <stdexcept>
#include <utility>

namespace cimpc {

ContactProblem::ContactProblem(RobotModel model, CostContext costs,
                               int horizon, double dt, double rho,
                               const StepOptions& options)
    : model_(std::move(model)),
      costs_(std::move(costs)),
      horizon_(horizon),
      dt_(dt),
      rho_(rho),
      options_(options) {
  if (horizon_ < 1) throw std::invalid_argument("horizon must be >= 1");
  if (!(dt_ > 0.0)) throw std::invalid_argument("dt must be positive");
  set_rho(rho);
  // The cost context points at our own copy of the model.
  costs_.model = &model_;
  if (costs_.schedule.weights.size() == 0) {
    costs_.schedule = AirTimeSchedule::empty(model_.n_contacts(), horizon_);
  }
  x0_ = costs_.reference.x.size() == model_.nx() ? costs_.reference.x
                                                 : Vec::Zero(model_.nx());
}

void ContactProblem::set_rho(double rho) {
  if (!(rho >= 0.0)) throw std::invalid_argument("rho must be non-negative");
  rho_ = rho;
}

StepOutcome ContactProblem::step(int, const Vec& x, const Vec& u) const {
  StepResult r = cimpc::step(model_, GeneralizedState::from_stacked(x), u, dt_,
                             options_);
  return {r.next.stacked(), std::move(r.contact)};
}

void ContactProblem::linearize(int, const Vec& x, const Vec& u, Mat& fx,
                               Mat& fu) const {
  StepJacobians j = step_jacobians(
      model_, GeneralizedState::from_stacked(x), u, dt_, rho_, options_);
  fx = std::move(j.fx);
  fu = std::move(j.fu);
}

CostEval ContactProblem::running_cost(int knot, const Vec& x,
                                      const Vec& u) const {
  return total_cost(costs_, x, u, knot, false);
}

CostEval ContactProblem::terminal_cost(const Vec& x) const {
  return total_cost(costs_, x, Vec::Zero(nu()), horizon_, true);
}

double ContactProblem::running_cost_value(int knot, const Vec& x,
                                          const Vec& u) const {
  return total_cost_value(costs_, x, u, knot, false);
}

double ContactProblem::terminal_cost_value(const Vec& x) const {
  return total_cost_value(costs_, x, Vec::Zero(nu()), horizon_, true);
}

}  // namespace cimpc
