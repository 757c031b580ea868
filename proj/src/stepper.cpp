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

#include "cimpc/stepper.hpp"

#include <stdexcept>

namespace cimpc {

namespace {

constexpr double kGradientImpulseFloor = 1e-6;

Vec free_velocity(const RobotModel& model, const GeneralizedState& s,
                  const Vec& u, double dt, const Eigen::LLT<Mat>& mass) {
  const Vec force = -bias_forces(model, s.q, s.qdot) + model.input_matrix() * u;
  return s.qdot + mass.solve(force) * dt;
}

Vec foot_heights(const RobotModel& model, const Vec& q) {
  Vec phi(model.n_contacts());
  for (int k = 0; k < model.n_contacts(); ++k) {
    phi[k] = foot_kinematics(model, q, k).height;
  }
  return phi;
}

void check_inputs(const RobotModel& model, const GeneralizedState& s,
                  const Vec& u, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("step: dt must be positive");
  if (s.q.size() != model.nq() || s.qdot.size() != model.nv() ||
      u.size() != model.n_joints()) {
    throw std::invalid_argument("step: state or control dimension mismatch");
  }
}

}  // namespace

std::vector<bool> detect_contacts(const RobotModel& model,
                                  const GeneralizedState& state, const Vec& u,
                                  double dt) {
  check_inputs(model, state, u, dt);
  const Eigen::LLT<Mat> mass(mass_matrix(model, state.q));
  const Vec vfree = free_velocity(model, state, u, dt, mass);
  std::vector<bool> out(model.n_contacts());
  for (int k = 0; k < model.n_contacts(); ++k) {
    const double phi = foot_kinematics(model, state.q, k).height;
    const double vn = contact_jacobian(model, state.q, k).row(1).dot(vfree);
    out[k] = phi <= 0.0 || phi + dt * vn <= 0.0;
  }
  return out;
}

ContactSystem make_contact_system(const RobotModel& model,
                                  const GeneralizedState& state, const Vec& u,
                                  double dt, const std::vector<bool>& candidate,
                                  const StepOptions& options) {
  check_inputs(model, state, u, dt);
  const int n = model.nv();
  const Eigen::LLT<Mat> mass(mass_matrix(model, state.q));
  ContactSystem sys;
  sys.minv = mass.solve(Mat::Identity(n, n));
  sys.jacobian = stacked_contact_jacobian(model, state.q);
  sys.free_velocity = free_velocity(model, state, u, dt, mass);
  sys.drift = Vec::Zero(model.n_contacts());
  if (options.drift_compensation) {
    sys.drift = foot_heights(model, state.q) / dt;
  }
  sys.candidate = candidate;
  sys.mu = options.friction >= 0.0 ? options.friction : model.friction();
  return sys;
}

StepResult step(const RobotModel& model, const GeneralizedState& state,
                const Vec& u, double dt, const StepOptions& options) {
  StepResult r;
  r.system = make_contact_system(model, state, u, dt,
                                 detect_contacts(model, state, u, dt), options);
  r.contact = solve_all_contacts(r.system, options.gauss_seidel);
  r.next.qdot = r.system.free_velocity +
                r.system.minv * r.system.jacobian.transpose() *
                    r.contact.impulses;
  r.next.q = state.q + dt * r.next.qdot;
  r.phi_before = foot_heights(model, state.q);
  r.phi_after = foot_heights(model, r.next.q);
  return r;
}

StepJacobians step_jacobians(const RobotModel& model,
                             const GeneralizedState& state, const Vec& u,
                             double dt, double rho, const StepResult& result,
                             const StepOptions& options) {
  const int n = model.nv();
  const int nu = model.n_joints();
  const int nc = model.n_contacts();
  const DynamicsPartials p = forward_dynamics_partials(
      model, state.q, state.qdot, u, result.contact.impulses, dt);

  // Partials of qdot' with the impulse frozen.
  Mat dv_dq = dt * p.dqdd_dq;
  Mat dv_dv = Mat::Identity(n, n) + dt * p.dqdd_dqdot;
  Mat dv_du = dt * p.dqdd_du;

  StepJacobians out;
  out.rho = rho;
  const ContactSystem& sys = result.system;
  const DelassusSystem del =
      assemble_delassus(sys, result.contact, kGradientImpulseFloor);
  if (!del.empty()) {
    // Derivative of the active residual A lambda + b with lambda frozen:
    // the contact velocity J(q) qdot'(xi) plus the drift phi(q)/dt.
    Mat dcv_dq(2 * nc, n);
    for (int k = 0; k < nc; ++k) {
      Mat djv = Mat::Zero(2, n);
      for (int j = 0; j < n; ++j) {
        djv.col(j) = p.djacobian_dq[k][j] * result.next.qdot;
      }
      if (options.drift_compensation) djv.row(1) += p.dphi_dq[k] / dt;
      dcv_dq.middleRows(2 * k, 2) = djv;
    }
    dcv_dq += sys.jacobian * dv_dq;

    Mat residual(del.size(), 2 * n + nu);
    residual << del.selection * dcv_dq, del.selection * sys.jacobian * dv_dv,
        del.selection * sys.jacobian * dv_du;
    const ImpulseGradient g = impulse_gradient(del, rho, residual);
    out.regularized = g.regularized;
    const Mat dv_dxi =
        sys.minv * sys.jacobian.transpose() * del.expansion * g.dlambda;
    dv_dq += dv_dxi.leftCols(n);
    dv_dv += dv_dxi.middleCols(n, n);
    dv_du += dv_dxi.rightCols(nu);
  }

  out.fx.resize(2 * n, 2 * n);
  out.fx << Mat::Identity(n, n) + dt * dv_dq, dt * dv_dv, dv_dq, dv_dv;
  out.fu.resize(2 * n, nu);
  out.fu << dt * dv_du, dv_du;
  return out;
}

StepJacobians step_jacobians(const RobotModel& model,
                             const GeneralizedState& state, const Vec& u,
                             double dt, double rho,
                             const StepOptions& options) {
  const StepResult r = step(model, state, u, dt, options);
  return step_jacobians(model, state, u, dt, rho, r, options);
}

}  // namespace cimpc
