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

#include "cimpc/cost.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cimpc {

namespace {

constexpr double kSwingHeight = 1e-4;  // m
constexpr int kAirtimeSpan = 4;        // knots i_t .. i_t+3

}  // namespace

CostWeights CostWeights::defaults(const RobotModel& model) {
  const int n = model.nv();
  const int nj = model.n_joints();
  CostWeights w;
  w.wx = Vec::Zero(2 * n);
  w.wx.head(3) << 1.0, 10.0, 10.0;
  w.wx.segment(3, nj).setConstant(0.1);
  w.wx.tail(n).setConstant(5e-4);
  w.wu = Vec::Constant(nj, 5e-4);
  // Front leg joints minus the matching hind leg joints.
  const int half = nj / 2;
  w.pairing = Mat::Zero(half, nj);
  w.pairing.leftCols(half).setIdentity();
  w.pairing.rightCols(half) = -Mat::Identity(half, half);
  return w;
}

Reference Reference::stance(const RobotModel& model) {
  Reference r;
  r.x = Vec::Zero(model.nx());
  r.x.head(model.nq()) = model.stance();
  r.u = static_torques(model, model.stance());
  return r;
}

CostEval CostEval::zero(int nx, int nu) {
  CostEval c;
  c.lx = Vec::Zero(nx);
  c.lu = Vec::Zero(nu);
  c.lxx = Mat::Zero(nx, nx);
  c.luu = Mat::Zero(nu, nu);
  c.lux = Mat::Zero(nu, nx);
  return c;
}

CostEval& CostEval::operator+=(const CostEval& o) {
  value += o.value;
  lx += o.lx;
  lu += o.lu;
  lxx += o.lxx;
  luu += o.luu;
  lux += o.lux;
  return *this;
}

AirTimeSchedule AirTimeSchedule::empty(int n_contacts, int horizon) {
  return {Mat::Zero(n_contacts, horizon)};
}

CostEval regulating_cost(const Vec& x, const Vec& u, const Reference& ref,
                         const CostWeights& w, bool terminal) {
  const int nx = static_cast<int>(x.size());
  const int nu = static_cast<int>(u.size());
  CostEval c = CostEval::zero(nx, nu);
  const Vec wx = terminal ? (w.terminal_scale * w.wx).eval() : w.wx;
  const Vec ex = x - ref.x;
  c.value = ex.dot(wx.cwiseProduct(ex));
  c.lx = 2.0 * wx.cwiseProduct(ex);
  c.lxx = (2.0 * wx).asDiagonal();
  if (!terminal) {
    const Vec eu = u - ref.u;
    c.value += eu.dot(w.wu.cwiseProduct(eu));
    c.lu = 2.0 * w.wu.cwiseProduct(eu);
    c.luu = (2.0 * w.wu).asDiagonal();
  }
  return c;
}

CostEval foot_cost(const RobotModel& model, const Vec& x, const CostWeights& w) {
  const int n = model.nv();
  CostEval c = CostEval::zero(2 * n, model.n_joints());
  const Vec q = x.head(n);
  const Vec qdot = x.tail(n);
  for (int k = 0; k < model.n_contacts(); ++k) {
    const Mat jac = contact_jacobian(model, q, k);
    const double phi = foot_kinematics(model, q, k).height;
    const double vt = jac.row(0).dot(qdot);
    const double s = sigmoid(w.foot_sharpness * phi);
    const double ds = s * (1.0 - s) * w.foot_sharpness;  // dS/dphi
    c.value += w.foot_weight * s * vt * vt;

    // Residual r = sqrt(c_f S) v_t; value = r^2, Hessian = 2 r_x^T r_x.
    const Vec dvt_dq =
        contact_jacobian_times_derivative(model, q, k, qdot).row(0).transpose();
    const Vec dphi_dq = jac.row(1).transpose();
    const double root = std::sqrt(w.foot_weight * s);
    Vec rx = Vec::Zero(2 * n);
    if (root > 0.0) {
      rx.head(n) = w.foot_weight * ds * vt / (2.0 * root) * dphi_dq +
                   root * dvt_dq;
      rx.tail(n) = root * jac.row(0).transpose();
    }
    const double r = root * vt;
    c.lx += 2.0 * r * rx;
    c.lxx += 2.0 * rx * rx.transpose();
  }
  return c;
}

CostEval airtime_cost(const RobotModel& model, const Vec& x,
                      const AirTimeSchedule& schedule, int knot) {
  const int n = model.nv();
  CostEval c = CostEval::zero(2 * n, model.n_joints());
  if (knot < 0 || knot >= schedule.weights.cols()) return c;
  const Vec q = x.head(n);
  for (int k = 0; k < model.n_contacts(); ++k) {
    const double ca = schedule.weights(k, knot);
    if (ca == 0.0) continue;
    const double phi = foot_kinematics(model, q, k).height;
    const Vec dphi = contact_jacobian(model, q, k).row(1).transpose();
    c.value += ca * phi * phi;
    c.lx.head(n) += 2.0 * ca * phi * dphi;
    c.lxx.topLeftCorner(n, n) += 2.0 * ca * dphi * dphi.transpose();
  }
  return c;
}

CostEval symmetric_cost(const Vec& u, const CostWeights& w, int nx) {
  const int nu = static_cast<int>(u.size());
  if (w.pairing.cols() != nu) {
    throw std::invalid_argument("symmetric_cost: pairing matrix dimension");
  }
  CostEval c = CostEval::zero(nx, nu);
  const Vec d = w.pairing * u;
  const Mat ctc = w.pairing.transpose() * w.pairing;
  c.value = w.symmetric_weight * d.squaredNorm();
  c.lu = 2.0 * w.symmetric_weight * ctc * u;
  c.luu = 2.0 * w.symmetric_weight * ctc;
  return c;
}

AirTimeSchedule update_airtime_schedule(const AirTimeSchedule& previous,
                                        const std::vector<Vec>& init_states,
                                        const RobotModel& model,
                                        const CostWeights& w) {
  const int nc = static_cast<int>(previous.weights.rows());
  const int horizon = static_cast<int>(previous.weights.cols());
  AirTimeSchedule next = AirTimeSchedule::empty(nc, horizon);
  if (horizon > 1) {
    next.weights.leftCols(horizon - 1) = previous.weights.rightCols(horizon - 1);
  }

  const int knots = std::min<int>(horizon, static_cast<int>(init_states.size()));
  for (int k = 0; k < nc; ++k) {
    int run = 0;
    int longest = 0;
    for (int i = 0; i < knots; ++i) {
      const Vec q = init_states[i].head(model.nq());
      run = foot_kinematics(model, q, k).height > kSwingHeight ? run + 1 : 0;
      longest = std::max(longest, run);
    }
    if (longest <= w.airtime_threshold) continue;
    const int last = std::min(horizon, w.airtime_threshold + kAirtimeSpan);
    for (int i = w.airtime_threshold; i < last; ++i) {
      next.weights(k, i) = w.airtime_weight;
    }
  }
  return next;
}

CostEval total_cost(const CostContext& ctx, const Vec& x, const Vec& u,
                    int knot, bool terminal) {
  CostEval c = regulating_cost(x, u, ctx.reference, ctx.weights, terminal);
  if (terminal) return c;
  const int nx = static_cast<int>(x.size());
  if (ctx.weights.foot_enabled) c += foot_cost(*ctx.model, x, ctx.weights);
  if (ctx.weights.airtime_enabled) {
    c += airtime_cost(*ctx.model, x, ctx.schedule, knot);
  }
  if (ctx.weights.symmetric_enabled) {
    c += symmetric_cost(u, ctx.weights, nx);
  }
  return c;
}

double total_cost_value(const CostContext& ctx, const Vec& x, const Vec& u,
                        int knot, bool terminal) {
  const CostWeights& w = ctx.weights;
  const Vec ex = x - ctx.reference.x;
  double value = ex.dot(w.wx.cwiseProduct(ex));
  if (terminal) return w.terminal_scale * value;
  const Vec eu = u - ctx.reference.u;
  value += eu.dot(w.wu.cwiseProduct(eu));

  const RobotModel& model = *ctx.model;
  const int n = model.nv();
  const Vec q = x.head(n);
  const bool airtime = w.airtime_enabled && knot >= 0 &&
                       knot < ctx.schedule.weights.cols();
  if (w.foot_enabled || airtime) {
    for (int k = 0; k < model.n_contacts(); ++k) {
      const double phi = foot_kinematics(model, q, k).height;
      if (w.foot_enabled) {
        const double vt = contact_jacobian(model, q, k).row(0).dot(x.tail(n));
        value += w.foot_weight * sigmoid(w.foot_sharpness * phi) * vt * vt;
      }
      if (airtime) value += ctx.schedule.weights(k, knot) * phi * phi;
    }
  }
  if (w.symmetric_enabled) {
    value += w.symmetric_weight * (w.pairing * u).squaredNorm();
  }
  return value;
}

}  // namespace cimpc
