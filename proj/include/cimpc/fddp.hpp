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

// Feasibility-driven DDP over multiple shooting nodes.
//
// The shooting states need not be dynamically consistent: the defects
//   gaps[0]   = x0_tilde - xs[0]
//   gaps[i+1] = f(xs[i], us[i]) - xs[i+1]
// are carried through the backward pass and contracted by (1 - alpha) by every
// accepted step. With zero gaps the algorithm is classic DDP.

#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "cimpc/contact.hpp"
#include "cimpc/cost.hpp"

namespace cimpc {

struct StepOutcome {
  Vec next;
  ContactSolution contact;  // empty for problems without contact
};

/// Discrete-time optimal control problem over N knots. Implementations must
/// be safe to call concurrently from several threads (const, no caching).
class ShootingProblem {
 public:
  virtual ~ShootingProblem() = default;

  virtual int horizon() const = 0;
  virtual int nx() const = 0;
  virtual int nu() const = 0;
  virtual const Vec& initial_state() const = 0;

  virtual StepOutcome step(int knot, const Vec& x, const Vec& u) const = 0;
  virtual void linearize(int knot, const Vec& x, const Vec& u, Mat& fx,
                         Mat& fu) const = 0;
  virtual CostEval running_cost(int knot, const Vec& x, const Vec& u) const = 0;
  virtual CostEval terminal_cost(const Vec& x) const = 0;

  virtual double running_cost_value(int knot, const Vec& x,
                                    const Vec& u) const {
    return running_cost(knot, x, u).value;
  }
  virtual double terminal_cost_value(const Vec& x) const {
    return terminal_cost(x).value;
  }

  /// Control box; empty vectors mean unbounded.
  virtual Vec lower_bound() const { return {}; }
  virtual Vec upper_bound() const { return {}; }
};

struct Trajectory {
  std::vector<Vec> xs;     // N + 1 shooting states
  std::vector<Vec> us;     // N controls
  std::vector<Vec> fs;     // N successors f(xs[i], us[i])
  std::vector<Vec> gaps;   // N + 1 defects
  std::vector<ContactSolution> contacts;  // N, from the rollout of each knot
  double cost = 0.0;
  double gap_norm = 0.0;  // largest defect entry in absolute value

  int horizon() const { return static_cast<int>(us.size()); }
};

/// Evaluates successors, defects and cost of the given shooting nodes.
void evaluate(const ShootingProblem& problem, Trajectory& traj);

/// Gap vectors of `traj` against `problem` (recomputes the successors).
std::vector<Vec> compute_gaps(const ShootingProblem& problem,
                              const Trajectory& traj);

/// Raised by rollout() when a state becomes non-finite or overflows.
class RolloutDivergence : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Sequential rollout from the problem's initial state; all gaps are zero.
Trajectory rollout(const ShootingProblem& problem, const std::vector<Vec>& us);

struct KnotDerivatives {
  Mat fx;
  Mat fu;
  CostEval cost;
};

/// Dynamics and cost derivatives at every knot (N running + terminal).
void linearize_trajectory_serial(const ShootingProblem& problem,
                                 const Trajectory& traj,
                                 std::vector<KnotDerivatives>& out);

/// Same as the serial kernel, one knot per OpenMP work item. Results are
/// bit-identical to the serial kernel.
void linearize_trajectory_parallel(const ShootingProblem& problem,
                                   const Trajectory& traj,
                                   std::vector<KnotDerivatives>& out);

struct BackwardPass {
  std::vector<Vec> k;   // feedforward
  std::vector<Mat> K;   // feedback
  std::vector<Vec> vx;  // N + 1
  std::vector<Mat> vxx;
  std::vector<Vec> qu;
  std::vector<Mat> quu;
  bool success = true;
  int failed_knot = -1;
};

/// Riccati sweep with gap deflection V_x+ = V_x' + V_xx' gap. Returns
/// success = false if Q_uu + reg I is not positive definite at some knot.
BackwardPass backward_pass(const ShootingProblem& problem,
                           const Trajectory& traj,
                           const std::vector<KnotDerivatives>& derivs,
                           double regularization);

/// Coefficients of the predicted cost change dJ(alpha) = alpha d1 +
/// alpha^2 d2 / 2 of the local LQ model, from a linear rollout of the policy.
struct ExpectedImprovement {
  double d1 = 0.0;
  double d2 = 0.0;

  double change(double alpha) const { return alpha * d1 + 0.5 * alpha * alpha * d2; }
};

ExpectedImprovement expected_improvement(
    const Trajectory& traj, const std::vector<KnotDerivatives>& derivs,
    const BackwardPass& bp);

struct ForwardResult {
  Trajectory traj;
  bool diverged = false;
  double contraction_error = 0.0;  // max |new gap - (1 - alpha) old gap|
};

ForwardResult forward_pass(const ShootingProblem& problem,
                           const Trajectory& traj, const BackwardPass& bp,
                           double alpha);

struct SolverSettings {
  int max_iterations = 100;
  double cost_tolerance = 1e-6;
  double gap_tolerance = 1e-9;
  double regularization_init = 1e-9;
  double regularization_min = 1e-9;
  double regularization_max = 1e9;
  double regularization_factor = 10.0;
  int line_search_steps = 11;  // alpha = 1, 1/2, ..., 2^-10
  double accept_ratio = 0.1;
  double accept_ratio_infeasible = 2.0;
  double divergence_threshold = 1e6;
  bool parallel = true;
};

struct IterationRecord {
  double cost = 0.0;
  double gap_norm = 0.0;
  double alpha = 0.0;
  double regularization = 0.0;
  double expected = 0.0;  // predicted decrease at the tried alpha
  double actual = 0.0;    // actual decrease
  double contraction_error = 0.0;
  bool accepted = false;
};

struct SolveResult {
  Trajectory traj;
  int iterations = 0;  // line searches performed
  bool converged = false;
  bool improved = false;  // at least one step accepted
  bool diverged = false;  // a rollout overflowed
  double regularization = 0.0;
  double max_contraction_error = 0.0;
  std::vector<IterationRecord> history;
  std::string message;
};

SolveResult solve(const ShootingProblem& problem, Trajectory init,
                  const SolverSettings& settings = {});

/// Classic DDP: rolls the controls out from the initial state and iterates
/// with always-feasible trajectories.
SolveResult solve_single_shooting(const ShootingProblem& problem,
                                  const std::vector<Vec>& us,
                                  const SolverSettings& settings = {});

/// x' = A x + B u + c with cost sum (x-xr)^T Q (x-xr) + u^T R u and terminal
/// (x-xr)^T Qf (x-xr). Used for solver verification and benchmarking.
class LinearQuadraticProblem : public ShootingProblem {
 public:
  LinearQuadraticProblem(Mat a, Mat b, Vec c, Mat q, Mat r, Mat qf, Vec xref,
                         Vec x0, int horizon);

  int horizon() const override { return horizon_; }
  int nx() const override { return static_cast<int>(a_.rows()); }
  int nu() const override { return static_cast<int>(b_.cols()); }
  const Vec& initial_state() const override { return x0_; }
  void set_initial_state(const Vec& x0) { x0_ = x0; }

  StepOutcome step(int knot, const Vec& x, const Vec& u) const override;
  void linearize(int knot, const Vec& x, const Vec& u, Mat& fx,
                 Mat& fu) const override;
  CostEval running_cost(int knot, const Vec& x, const Vec& u) const override;
  CostEval terminal_cost(const Vec& x) const override;

  const Mat& a() const { return a_; }
  const Mat& b() const { return b_; }
  const Vec& c() const { return c_; }
  const Mat& q() const { return q_; }
  const Mat& r() const { return r_; }
  const Mat& qf() const { return qf_; }
  const Vec& xref() const { return xref_; }

 private:
  Mat a_, b_;
  Vec c_;
  Mat q_, r_, qf_;
  Vec xref_, x0_;
  int horizon_;
};

}  // namespace cimpc
