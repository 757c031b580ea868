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

#include "cimpc/model.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

#include "kernels.hpp"

namespace cimpc {

namespace {

void require(bool condition, const std::string& what) {
  if (!condition) throw std::invalid_argument("RobotModel: " + what);
}

}  // namespace

RobotModel::RobotModel(std::vector<Body> bodies,
                       std::vector<ContactPoint> contacts, double gravity,
                       double friction, Vec torque_limits, Vec stance)
    : bodies_(std::move(bodies)),
      contacts_(std::move(contacts)),
      gravity_(gravity),
      friction_(friction),
      torque_limits_(std::move(torque_limits)),
      stance_(std::move(stance)) {
  require(!bodies_.empty(), "at least the base body is required");
  require(bodies_[0].parent == -1, "body 0 must be the floating base");
  for (std::size_t b = 0; b < bodies_.size(); ++b) {
    const Body& body = bodies_[b];
    require(body.mass > 0.0 && body.inertia > 0.0,
            "body '" + body.name + "' needs positive mass and inertia");
    if (b > 0) {
      require(body.parent >= 0 && body.parent < static_cast<int>(b),
              "body '" + body.name + "' must follow its parent");
      require(body.axis_sign == 1.0 || body.axis_sign == -1.0,
              "axis_sign must be +1 or -1");
    }
  }
  for (const ContactPoint& c : contacts_) {
    require(c.body >= 0 && c.body < static_cast<int>(bodies_.size()),
            "contact '" + c.name + "' refers to an unknown body");
  }
  require(friction_ >= 0.0, "friction coefficient must be non-negative");
  require(torque_limits_.size() == n_joints(), "one torque limit per joint");
  require((torque_limits_.array() > 0.0).all(),
          "torque limits must be positive");
  require(stance_.size() == nq(), "stance has the wrong dimension");
}

RobotModel RobotModel::planar_quadruped(const QuadrupedParams& p) {
  require(p.upper.length > 0.0 && p.lower.length > 0.0,
          "link lengths must be positive");
  auto link = [](std::string name, int parent, Vec2 offset, double sign,
                 const LinkParams& lp) {
    Body b;
    b.name = std::move(name);
    b.parent = parent;
    b.joint_offset = offset;
    b.axis_sign = sign;
    b.mass = lp.mass;
    b.inertia = lp.inertia;
    b.com = Vec2(0.0, -0.5 * lp.length);
    return b;
  };

  Body base;
  base.name = "base";
  base.mass = p.base_mass;
  base.inertia = p.base_inertia;

  // The hind leg is the mirror image of the front leg so that the same joint
  // angles put both feet under their hips.
  std::vector<Body> bodies{
      base,
      link("front_thigh", 0, Vec2(p.hip_offset, 0.0), 1.0, p.upper),
      link("front_shank", 1, Vec2(0.0, -p.upper.length), 1.0, p.lower),
      link("hind_thigh", 0, Vec2(-p.hip_offset, 0.0), -1.0, p.upper),
      link("hind_shank", 3, Vec2(0.0, -p.upper.length), -1.0, p.lower),
  };
  std::vector<ContactPoint> contacts{
      {"front_foot", 2, Vec2(0.0, -p.lower.length)},
      {"hind_foot", 4, Vec2(0.0, -p.lower.length)},
  };

  Vec stance(7);
  stance << 0.0, 0.0, 0.0, p.hip_stance, p.knee_stance, p.hip_stance,
      p.knee_stance;
  const Vec limits = Vec::Constant(4, p.torque_limit);
  RobotModel probe(bodies, contacts, p.gravity, p.friction, limits, stance);
  stance[1] = -contact_position(probe, stance, 0).y();
  return RobotModel(std::move(bodies), std::move(contacts), p.gravity,
                    p.friction, limits, stance);
}

RobotModel RobotModel::free_body(double mass, double inertia, double gravity,
                                 double friction) {
  Body base;
  base.name = "body";
  base.mass = mass;
  base.inertia = inertia;
  return RobotModel({base}, {{"origin", 0, Vec2::Zero()}}, gravity, friction,
                    Vec(0), Vec::Zero(3));
}

Mat RobotModel::input_matrix() const {
  Mat b = Mat::Zero(nv(), n_joints());
  b.bottomRows(n_joints()).setIdentity();
  return b;
}

double RobotModel::total_mass() const {
  double m = 0.0;
  for (const Body& b : bodies_) m += b.mass;
  return m;
}

int RobotModel::parent_dof(int dof) const {
  if (dof <= 2) return dof - 1;
  return body_dof(bodies_[dof - 2].parent);
}

RobotModel RobotModel::with_friction(double mu) const {
  return RobotModel(bodies_, contacts_, gravity_, mu, torque_limits_, stance_);
}

Vec GeneralizedState::stacked() const {
  Vec x(q.size() + qdot.size());
  x << q, qdot;
  return x;
}

GeneralizedState GeneralizedState::from_stacked(const Vec& x) {
  const Eigen::Index n = x.size() / 2;
  return {x.head(n), x.tail(n)};
}

Mat mass_matrix(const RobotModel& model, const Vec& q) {
  return kernels::crba<double>(model, q);
}

Vec bias_forces(const RobotModel& model, const Vec& q, const Vec& qdot) {
  return kernels::rnea<double>(model, q, qdot, Vec::Zero(model.nv()), true);
}

Vec gravity_forces(const RobotModel& model, const Vec& q) {
  const Vec zero = Vec::Zero(model.nv());
  return kernels::rnea<double>(model, q, zero, zero, true);
}

Vec static_torques(const RobotModel& model, const Vec& q) {
  // Base rows fix the contact forces up to a null-space term y; the joint
  // rows then give u = a - C y, and y is the least-squares fit.
  const int nb = 3;
  const int nj = model.n_joints();
  const Vec g = gravity_forces(model, q);
  const Mat jt = stacked_contact_jacobian(model, q).transpose();
  const Eigen::CompleteOrthogonalDecomposition<Mat> base(jt.topRows(nb));
  const Vec f0 = base.solve(g.head(nb));
  const Eigen::FullPivLU<Mat> lu(jt.topRows(nb));
  const Mat null = lu.kernel();
  const Vec a = g.tail(nj) - jt.bottomRows(nj) * f0;
  if (null.cols() == 0 || null.isZero(0.0)) return a;
  const Mat c = jt.bottomRows(nj) * null;
  const Vec y = c.completeOrthogonalDecomposition().solve(a);
  return a - c * y;
}

Vec inverse_dynamics(const RobotModel& model, const Vec& q, const Vec& qdot,
                     const Vec& qdd) {
  return kernels::rnea<double>(model, q, qdot, qdd, true);
}

Vec2 contact_position(const RobotModel& model, const Vec& q, int k) {
  const auto frames = kernels::compute_frames<double>(model, q);
  return kernels::contact_point<double>(model, frames, k);
}

FootKinematics foot_kinematics(const RobotModel& model, const Vec& q, int k) {
  const Vec2 p = contact_position(model, q, k);
  return {p.y(), p.x()};
}

Mat contact_jacobian(const RobotModel& model, const Vec& q, int k) {
  const auto frames = kernels::compute_frames<double>(model, q);
  return kernels::contact_jacobian<double>(model, frames, k);
}

Mat stacked_contact_jacobian(const RobotModel& model, const Vec& q) {
  Mat jac(2 * model.n_contacts(), model.nv());
  for (int k = 0; k < model.n_contacts(); ++k) {
    jac.middleRows(2 * k, 2) = contact_jacobian(model, q, k);
  }
  return jac;
}

Mat contact_jacobian_times_derivative(const RobotModel& model, const Vec& q,
                                      int k, const Vec& v) {
  using kernels::AD;
  const int n = model.nv();
  const auto qa = kernels::seed(q, n, 0);
  const auto frames = kernels::compute_frames<AD>(model, qa);
  const kernels::MX<AD> jac = kernels::contact_jacobian<AD>(model, frames, k);
  const kernels::VX<AD> jv = jac * kernels::constant(v, n);
  return kernels::jacobian_of(jv, n);
}

DynamicsPartials forward_dynamics_partials(const RobotModel& model,
                                           const Vec& q, const Vec& qdot,
                                           const Vec& u, const Vec& impulses,
                                           double dt) {
  using kernels::AD;
  const int n = model.nv();
  const int nc = model.n_contacts();
  if (impulses.size() != 2 * nc) {
    throw std::invalid_argument("forward_dynamics_partials: impulse size");
  }
  if (!(dt > 0.0)) {
    throw std::invalid_argument("forward_dynamics_partials: dt must be > 0");
  }

  DynamicsPartials out;
  const Mat mass = mass_matrix(model, q);
  const Eigen::LLT<Mat> llt(mass);
  out.minv = llt.solve(Mat::Identity(n, n));
  const Mat b = model.input_matrix();
  const Mat jac_all = stacked_contact_jacobian(model, q);
  out.qdd = llt.solve(-bias_forces(model, q, qdot) + b * u +
                      jac_all.transpose() * impulses / dt);

  // Inverse dynamics at the realized acceleration, differentiated in (q, qdot)
  // with the acceleration held fixed.
  const int total = 2 * n;
  const auto qa = kernels::seed(q, total, 0);
  const auto va = kernels::seed(qdot, total, n);
  const auto aa = kernels::constant(out.qdd, total);
  const Mat did = kernels::jacobian_of(
      kernels::rnea<AD>(model, qa, va, aa, true), total);

  // Generalized contact force J(q)^T lambda, with lambda frozen, and the
  // per-foot Jacobian slices.
  const auto qk = kernels::seed(q, n, 0);
  const auto frames = kernels::compute_frames<AD>(model, qk);
  kernels::VX<AD> gen_force = kernels::VX<AD>::Zero(n);
  out.dphi_dq.resize(nc);
  out.djacobian_dq.assign(nc, std::vector<Mat>(n, Mat::Zero(2, n)));
  for (int k = 0; k < nc; ++k) {
    const kernels::MX<AD> jk = kernels::contact_jacobian<AD>(model, frames, k);
    Mat value(2, n);
    for (int r = 0; r < 2; ++r) {
      for (int c = 0; c < n; ++c) {
        value(r, c) = jk(r, c).value();
        const auto& d = jk(r, c).derivatives();
        if (d.size() == 0) continue;
        for (int j = 0; j < n; ++j) out.djacobian_dq[k][j](r, c) = d[j];
      }
    }
    out.dphi_dq[k] = value.row(1);
    gen_force += jk.transpose() *
                 kernels::constant(impulses.segment(2 * k, 2), n);
  }
  const Mat dforce_dq = kernels::jacobian_of(gen_force, n);

  out.kinematic_hessian_term = out.minv * dforce_dq / dt;
  out.dqdd_dq = -out.minv * did.leftCols(n) + out.kinematic_hessian_term;
  out.dqdd_dqdot = -out.minv * did.rightCols(n);
  out.dqdd_du = out.minv * b;
  return out;
}

}  // namespace cimpc
