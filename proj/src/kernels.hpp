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

// Scalar-generic planar rigid-body kernels. Instantiated with double for
// values and with Eigen's forward-mode AutoDiffScalar for the exact partial
// derivatives the backward pass needs.
//
// Spatial quantities are planar Plücker vectors expressed at the world origin:
// motion (omega, v_x, v_z) and force (n, f_x, f_z). With every quantity at a
// common point, composite inertias are plain sums and no frame transforms
// appear in the recursions.

#pragma once

#include <cmath>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/AutoDiff>

#include "cimpc/model.hpp"

namespace cimpc::kernels {

constexpr int kMaxDerivatives = 32;
using ADDerivatives =
    Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDerivatives, 1>;
using AD = Eigen::AutoDiffScalar<ADDerivatives>;

template <class T>
using V2 = Eigen::Matrix<T, 2, 1>;
template <class T>
using V3 = Eigen::Matrix<T, 3, 1>;
template <class T>
using M3 = Eigen::Matrix<T, 3, 3>;
template <class T>
using VX = Eigen::Matrix<T, Eigen::Dynamic, 1>;
template <class T>
using MX = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;

inline double value_of(double x) { return x; }
inline double value_of(const AD& x) { return x.value(); }

template <class T>
V2<T> rotate(const T& angle, const V2<T>& v) {
  using std::cos;
  using std::sin;
  const T c = cos(angle);
  const T s = sin(angle);
  return V2<T>(c * v.x() - s * v.y(), s * v.x() + c * v.y());
}

template <class T>
V2<T> perp(const V2<T>& r) {
  return V2<T>(-r.y(), r.x());
}

template <class T>
T cross2(const V2<T>& a, const V2<T>& b) {
  return a.x() * b.y() - a.y() * b.x();
}

template <class T>
V2<T> lift(const Vec2& v) {
  return V2<T>(T(v.x()), T(v.y()));
}

template <class T>
struct Frames {
  std::vector<V2<T>> joint;  // world position of each body's joint
  std::vector<T> angle;      // absolute angle of each body
};

template <class T>
Frames<T> compute_frames(const RobotModel& model, const VX<T>& q) {
  const auto& bodies = model.bodies();
  const std::size_t nb = bodies.size();
  Frames<T> f;
  f.joint.resize(nb);
  f.angle.resize(nb);
  f.joint[0] = V2<T>(q[0], q[1]);
  f.angle[0] = q[2];
  for (std::size_t b = 1; b < nb; ++b) {
    const Body& body = bodies[b];
    const int p = body.parent;
    f.angle[b] = f.angle[p] + T(body.axis_sign) * q[RobotModel::body_dof(b)];
    f.joint[b] = f.joint[p] + rotate<T>(f.angle[p], lift<T>(body.joint_offset));
  }
  return f;
}

/// Motion subspace of a dof, at the world origin.
template <class T>
V3<T> motion_subspace(const RobotModel& model, const Frames<T>& f, int dof) {
  if (dof == 0) return V3<T>(T(0), T(1), T(0));
  if (dof == 1) return V3<T>(T(0), T(0), T(1));
  const int b = dof - 2;
  const T s = b == 0 ? T(1) : T(model.bodies()[b].axis_sign);
  const V2<T>& p = f.joint[b];
  return V3<T>(s, s * p.y(), -s * p.x());
}

template <class T>
V2<T> com_position(const RobotModel& model, const Frames<T>& f, int b) {
  return f.joint[b] + rotate<T>(f.angle[b], lift<T>(model.bodies()[b].com));
}

template <class T>
M3<T> spatial_inertia(const RobotModel& model, const Frames<T>& f, int b) {
  const Body& body = model.bodies()[b];
  const V2<T> c = com_position(model, f, b);
  const T m(body.mass);
  M3<T> inertia;
  inertia << T(body.inertia) + m * c.squaredNorm(), -m * c.y(), m * c.x(),
      -m * c.y(), m, T(0),  //
      m * c.x(), T(0), m;
  return inertia;
}

template <class T>
V3<T> cross_motion(const V3<T>& a, const V3<T>& b) {
  const V2<T> va(a[1], a[2]);
  const V2<T> vb(b[1], b[2]);
  const V2<T> lin = a[0] * perp<T>(vb) - b[0] * perp<T>(va);
  return V3<T>(T(0), lin.x(), lin.y());
}

template <class T>
V3<T> cross_force(const V3<T>& v, const V3<T>& f) {
  const V2<T> lin_v(v[1], v[2]);
  const V2<T> lin_f(f[1], f[2]);
  const V2<T> lin = v[0] * perp<T>(lin_f);
  return V3<T>(cross2<T>(lin_v, lin_f), lin.x(), lin.y());
}

/// Body that carries a dof; the two base translations are massless.
inline int dof_body(int dof) { return dof <= 2 ? 0 : dof - 2; }

/// Recursive Newton-Euler. Gravity enters as a fictitious upward
/// acceleration of the root.
template <class T>
VX<T> rnea(const RobotModel& model, const VX<T>& q, const VX<T>& qd,
           const VX<T>& qdd, bool with_gravity) {
  const int n = model.nv();
  const Frames<T> f = compute_frames<T>(model, q);
  std::vector<V3<T>> v(n), a(n), force(n);
  std::vector<V3<T>> subspace(n);
  for (int d = 0; d < n; ++d) {
    subspace[d] = motion_subspace<T>(model, f, d);
    const int pd = model.parent_dof(d);
    const V3<T> vp = pd < 0 ? V3<T>::Zero().eval() : v[pd];
    const V3<T> ap =
        pd < 0 ? V3<T>(T(0), T(0), T(with_gravity ? model.gravity() : 0.0))
               : a[pd];
    v[d] = vp + subspace[d] * qd[d];
    a[d] = ap + cross_motion<T>(v[d], subspace[d]) * qd[d] +
           subspace[d] * qdd[d];
    force[d].setZero();
  }
  for (int b = 0; b < static_cast<int>(model.bodies().size()); ++b) {
    const int d = RobotModel::body_dof(b);
    const M3<T> inertia = spatial_inertia<T>(model, f, b);
    force[d] = inertia * a[d] + cross_force<T>(v[d], inertia * v[d]);
  }
  VX<T> tau(n);
  for (int d = n - 1; d >= 0; --d) {
    tau[d] = subspace[d].dot(force[d]);
    const int pd = model.parent_dof(d);
    if (pd >= 0) force[pd] += force[d];
  }
  return tau;
}

/// Composite-rigid-body mass matrix.
template <class T>
MX<T> crba(const RobotModel& model, const VX<T>& q) {
  const int n = model.nv();
  const int nb = static_cast<int>(model.bodies().size());
  const Frames<T> f = compute_frames<T>(model, q);
  std::vector<M3<T>> composite(nb);
  for (int b = 0; b < nb; ++b) composite[b] = spatial_inertia<T>(model, f, b);
  for (int b = nb - 1; b >= 1; --b) {
    composite[model.bodies()[b].parent] += composite[b];
  }
  MX<T> mass = MX<T>::Zero(n, n);
  for (int d = 0; d < n; ++d) {
    const V3<T> s = motion_subspace<T>(model, f, d);
    const V3<T> force = composite[dof_body(d)] * s;
    mass(d, d) = s.dot(force);
    for (int j = model.parent_dof(d); j >= 0; j = model.parent_dof(j)) {
      mass(j, d) = motion_subspace<T>(model, f, j).dot(force);
      mass(d, j) = mass(j, d);
    }
  }
  return mass;
}

template <class T>
V2<T> contact_point(const RobotModel& model, const Frames<T>& f, int k) {
  const ContactPoint& c = model.contacts()[k];
  return f.joint[c.body] + rotate<T>(f.angle[c.body], lift<T>(c.offset));
}

/// Rows (x, z) of the foot-point velocity map.
template <class T>
MX<T> contact_jacobian(const RobotModel& model, const Frames<T>& f, int k) {
  const int n = model.nv();
  MX<T> jac = MX<T>::Zero(2, n);
  const V2<T> p = contact_point<T>(model, f, k);
  const V2<T> pp = perp<T>(p);
  for (int d = RobotModel::body_dof(model.contacts()[k].body); d >= 0;
       d = model.parent_dof(d)) {
    const V3<T> s = motion_subspace<T>(model, f, d);
    jac(0, d) = s[1] + s[0] * pp.x();
    jac(1, d) = s[2] + s[0] * pp.y();
  }
  return jac;
}

/// Seeds `x` as independent variables starting at derivative slot `offset`.
inline VX<AD> seed(const Vec& x, int total, int offset) {
  VX<AD> out(x.size());
  for (int i = 0; i < x.size(); ++i) {
    out[i] = AD(x[i], total, offset + i);
  }
  return out;
}

inline VX<AD> constant(const Vec& x, int total) {
  VX<AD> out(x.size());
  for (int i = 0; i < x.size(); ++i) {
    out[i] = AD(x[i], ADDerivatives::Zero(total));
  }
  return out;
}

/// Rows of derivatives of an AD vector.
inline Mat jacobian_of(const VX<AD>& y, int total) {
  Mat out(y.size(), total);
  for (int i = 0; i < y.size(); ++i) {
    const auto& d = y[i].derivatives();
    if (d.size() == 0) {
      out.row(i).setZero();
    } else {
      out.row(i) = d.transpose();
    }
  }
  return out;
}

}  // namespace cimpc::kernels
