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

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace cimpc {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Vec2 = Eigen::Vector2d;

/// A rigid body of the planar tree. Body 0 is the floating base; every other
/// body hangs from a revolute joint on its parent.
///
/// Body frames follow the world axes at zero angle: x forward, z up. A body's
/// absolute angle is its parent's angle plus `axis_sign * q_joint`, so a leg
/// with `axis_sign = -1` is the mirror image of one with `+1`.
struct Body {
  std::string name;
  int parent = -1;
  Vec2 joint_offset = Vec2::Zero();  // joint location in the parent frame
  double axis_sign = 1.0;
  double mass = 0.0;
  double inertia = 0.0;  // about the COM
  Vec2 com = Vec2::Zero();  // in the body frame
};

/// A point foot rigidly attached to a body.
struct ContactPoint {
  std::string name;
  int body = 0;
  Vec2 offset = Vec2::Zero();  // in the body frame
};

struct LinkParams {
  double length = 0.25;
  double mass = 1.0;
  double inertia = 1.0 * 0.25 * 0.25 / 12.0;
};

/// Parameters of the default planar quadruped. Each planar "leg" stands for a
/// pair of physical legs (front and hind).
struct QuadrupedParams {
  double base_mass = 10.0;
  double base_length = 0.5;
  double base_height = 0.1;
  double base_inertia = 10.0 * (0.5 * 0.5 + 0.1 * 0.1) / 12.0;
  double hip_offset = 0.25;  // |x| of both hips in the base frame
  LinkParams upper;
  LinkParams lower;
  double hip_stance = 0.5;    // rad
  double knee_stance = -1.0;  // rad
  double gravity = 9.81;
  double friction = 0.8;
  double torque_limit = 40.0;  // N·m, every joint
};

/// Planar articulated model: floating base (x, z, pitch) plus revolute joints.
///
/// Immutable after construction; all dynamics routines are free functions of
/// (model, state).
class RobotModel {
 public:
  RobotModel(std::vector<Body> bodies, std::vector<ContactPoint> contacts,
             double gravity, double friction, Vec torque_limits, Vec stance);

  static RobotModel planar_quadruped(const QuadrupedParams& params = {});

  /// Single rigid body with one contact point at its origin.
  static RobotModel free_body(double mass, double inertia,
                              double gravity = 9.81, double friction = 0.8);

  int nq() const { return 2 + static_cast<int>(bodies_.size()); }
  int nv() const { return nq(); }
  int nx() const { return 2 * nq(); }
  int n_joints() const { return nq() - 3; }
  int n_contacts() const { return static_cast<int>(contacts_.size()); }

  const std::vector<Body>& bodies() const { return bodies_; }
  const std::vector<ContactPoint>& contacts() const { return contacts_; }
  double gravity() const { return gravity_; }
  double friction() const { return friction_; }
  const Vec& torque_limits() const { return torque_limits_; }

  /// Nominal stance configuration; every foot is at zero height.
  const Vec& stance() const { return stance_; }

  /// B = [0; I]: joint torques enter the joint rows only.
  Mat input_matrix() const;

  double total_mass() const;

  /// Degree of freedom driven by body `b`'s joint (the pitch dof for the base).
  static int body_dof(int b) { return b == 0 ? 2 : 2 + b; }
  /// Parent in the dof chain; -1 for the base x dof.
  int parent_dof(int dof) const;

  RobotModel with_friction(double mu) const;

 private:
  std::vector<Body> bodies_;
  std::vector<ContactPoint> contacts_;
  double gravity_;
  double friction_;
  Vec torque_limits_;
  Vec stance_;
};

/// Configuration and velocity at one instant. The planar configuration space
/// is Euclidean, so state differences are plain vector differences.
struct GeneralizedState {
  Vec q;
  Vec qdot;

  Vec stacked() const;
  static GeneralizedState from_stacked(const Vec& x);
};

Mat mass_matrix(const RobotModel& model, const Vec& q);

/// Coriolis, centrifugal and gravity terms: M(q) qdd + h(q, qdot) = tau.
Vec bias_forces(const RobotModel& model, const Vec& q, const Vec& qdot);

Vec gravity_forces(const RobotModel& model, const Vec& q);

/// Smallest joint torques that hold posture q at rest with every foot free
/// to push on the ground (friction limits ignored): min |u| subject to
/// B u + J^T f = g(q).
Vec static_torques(const RobotModel& model, const Vec& q);

/// Recursive Newton-Euler: M(q) qdd + h(q, qdot).
Vec inverse_dynamics(const RobotModel& model, const Vec& q, const Vec& qdot,
                     const Vec& qdd);

struct FootKinematics {
  double height;      // signed height above the z = 0 ground plane
  double tangential;  // world x
};

FootKinematics foot_kinematics(const RobotModel& model, const Vec& q, int k);

Vec2 contact_position(const RobotModel& model, const Vec& q, int k);

/// Rows are (tangential, normal) in world-aligned axes centred at the foot.
Mat contact_jacobian(const RobotModel& model, const Vec& q, int k);

/// All contact Jacobians stacked, two rows per contact point.
Mat stacked_contact_jacobian(const RobotModel& model, const Vec& q);

/// d(J_k(q) v)/dq for a fixed vector v.
Mat contact_jacobian_times_derivative(const RobotModel& model, const Vec& q,
                                      int k, const Vec& v);

/// Partials of the forward dynamics
///   qdd = M^{-1} (-h + B u + J^T lambda / dt)
/// with the contact impulse held fixed. The impulse-gradient chain term is
/// added by the time stepper.
struct DynamicsPartials {
  Vec qdd;
  Mat minv;
  Mat dqdd_dq;
  Mat dqdd_dqdot;
  Mat dqdd_du;
  /// M^{-1} (dJ^T/dq lambda) / dt, already contained in dqdd_dq.
  Mat kinematic_hessian_term;
  /// Per foot: gradient of the foot height (1 x nv).
  std::vector<Mat> dphi_dq;
  /// Per foot and per configuration coordinate j: dJ_k/dq_j (2 x nv).
  std::vector<std::vector<Mat>> djacobian_dq;
};

/// `impulses` stacks (tangential, normal) per contact point.
DynamicsPartials forward_dynamics_partials(const RobotModel& model,
                                           const Vec& q, const Vec& qdot,
                                           const Vec& u, const Vec& impulses,
                                           double dt);

}  // namespace cimpc
