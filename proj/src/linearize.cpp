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

// Per-knot linearization. Knots are independent given the shooting nodes, so
// this is the one embarrassingly parallel stage of an FDDP iteration: the
// backward pass and the rollout are inherently sequential.

#include <exception>
#include <mutex>

#include "cimpc/fddp.hpp"

namespace cimpc {

namespace {

void linearize_knot(const ShootingProblem& problem, const Trajectory& traj,
                    int i, KnotDerivatives& out) {
  const int n = problem.horizon();
  if (i == n) {
    out.cost = problem.terminal_cost(traj.xs[n]);
    return;
  }
  problem.linearize(i, traj.xs[i], traj.us[i], out.fx, out.fu);
  out.cost = problem.running_cost(i, traj.xs[i], traj.us[i]);
}

}  // namespace

void linearize_trajectory_serial(const ShootingProblem& problem,
                                 const Trajectory& traj,
                                 std::vector<KnotDerivatives>& out) {
  const int n = problem.horizon();
  out.resize(n + 1);
  for (int i = 0; i <= n; ++i) linearize_knot(problem, traj, i, out[i]);
}

void linearize_trajectory_parallel(const ShootingProblem& problem,
                                   const Trajectory& traj,
                                   std::vector<KnotDerivatives>& out) {
  const int n = problem.horizon();
  out.resize(n + 1);
  std::exception_ptr error;
  std::mutex error_mutex;

  // Contact knots cost several times more than free-flight knots, hence the
  // dynamic schedule.
#pragma omp parallel for schedule(dynamic, 1)
  for (int i = 0; i <= n; ++i) {
    try {
      linearize_knot(problem, traj, i, out[i]);
    } catch (...) {
      const std::lock_guard<std::mutex> lock(error_mutex);
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace cimpc
