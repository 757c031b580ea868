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

#include "cimpc/fddp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cimpc {

namespace {

double max_abs(const std::vector<Vec>& vs) {
  double m = 0.0;
  for (const Vec& v : vs) {
    if (v.size() > 0) m = std::max(m, v.cwiseAbs().maxCoeff());
  }
  return m;
}

Vec clamp_control(const Vec& u, const Vec& lo, const Vec& hi) {
  if (lo.size() == 0) return u;
  return u.cwiseMax(lo).cwiseMin(hi);
}

constexpr double kOverflow = 1e6;  // rollouts beyond this are diverged

bool finite_and_bounded(const Vec& x, double limit) {
  return x.allFinite() && x.cwiseAbs().maxCoeff() < limit;
}

void check_shape(const ShootingProblem& problem, const Trajectory& traj) {
  const int n = problem.horizon();
  if (static_cast<int>(traj.xs.size()) != n + 1 ||
      static_cast<int>(traj.us.size()) != n) {
    throw std::invalid_argument("trajectory does not match the horizon");
  }
  for (const Vec& x : traj.xs) {
    if (x.size() != problem.nx()) {
      throw std::invalid_argument("trajectory state dimension mismatch");
    }
  }
  for (const Vec& u : traj.us) {
    if (u.size() != problem.nu()) {
      throw std::invalid_argument("trajectory control dimension mismatch");
    }
  }
}

}  // namespace

void evaluate(const ShootingProblem& problem, Trajectory& traj) {
  check_shape(problem, traj);
  const int n = problem.horizon();
  traj.fs.resize(n);
  traj.contacts.resize(n);
  traj.gaps.resize(n + 1);
  traj.gaps[0] = problem.initial_state() - traj.xs[0];
  traj.cost = 0.0;
  for (int i = 0; i < n; ++i) {
    StepOutcome out = problem.step(i, traj.xs[i], traj.us[i]);
    traj.fs[i] = std::move(out.next);
    traj.contacts[i] = std::move(out.contact);
    traj.gaps[i + 1] = traj.fs[i] - traj.xs[i + 1];
    traj.cost += problem.running_cost_value(i, traj.xs[i], traj.us[i]);
  }
  traj.cost += problem.terminal_cost_value(traj.xs[n]);
  traj.gap_norm = max_abs(traj.gaps);
}

std::vector<Vec> compute_gaps(const ShootingProblem& problem,
                              const Trajectory& traj) {
  Trajectory copy = traj;
  evaluate(problem, copy);
  return copy.gaps;
}

Trajectory rollout(const ShootingProblem& problem, const std::vector<Vec>& us) {
  Trajectory traj;
  traj.us = us;
  traj.xs.assign(1, problem.initial_state());
  for (int i = 0; i < problem.horizon(); ++i) {
    traj.xs.push_back(problem.step(i, traj.xs[i], us[i]).next);
    if (!finite_and_bounded(traj.xs.back(), kOverflow)) {
      throw RolloutDivergence("rollout diverged at knot " + std::to_string(i));
    }
  }
  evaluate(problem, traj);
  return traj;
}

BackwardPass backward_pass(const ShootingProblem& problem,
                           const Trajectory& traj,
                           const std::vector<KnotDerivatives>& d,
                           double regularization) {
  const int n = problem.horizon();
  const int nu = problem.nu();
  const Vec lo = problem.lower_bound();
  const Vec hi = problem.upper_bound();

  BackwardPass bp;
  bp.k.resize(n);
  bp.K.resize(n);
  bp.qu.resize(n);
  bp.quu.resize(n);
  bp.vx.resize(n + 1);
  bp.vxx.resize(n + 1);
  bp.vx[n] = d[n].cost.lx;
  bp.vxx[n] = d[n].cost.lxx;

  for (int i = n - 1; i >= 0; --i) {
    const KnotDerivatives& di = d[i];
    const Mat& vxx = bp.vxx[i + 1];
    // The successor's value gradient, deflected by the defect it must close.
    const Vec vx_plus = bp.vx[i + 1] + vxx * traj.gaps[i + 1];
    const Mat vxx_fx = vxx * di.fx;
    const Mat vxx_fu = vxx * di.fu;

    const Vec qx = di.cost.lx + di.fx.transpose() * vx_plus;
    const Vec qu = di.cost.lu + di.fu.transpose() * vx_plus;
    const Mat qxx = di.cost.lxx + di.fx.transpose() * vxx_fx;
    const Mat quu = di.cost.luu + di.fu.transpose() * vxx_fu;
    const Mat qux = di.cost.lux + di.fu.transpose() * vxx_fx;

    const Mat quu_reg = quu + regularization * Mat::Identity(nu, nu);
    const Eigen::LLT<Mat> llt(quu_reg);
    if (llt.info() != Eigen::Success) {
      bp.success = false;
      bp.failed_knot = i;
      return bp;
    }
    Vec k = -llt.solve(qu);
    Mat K = -llt.solve(qux);

    // Box limits: clamp the feedforward and freeze the clamped directions.
    if (lo.size() > 0) {
      const Vec& u = traj.us[i];
      for (int j = 0; j < nu; ++j) {
        const double target = u[j] + k[j];
        if (target < lo[j] || target > hi[j]) {
          k[j] = std::clamp(target, lo[j], hi[j]) - u[j];
          K.row(j).setZero();
        }
      }
    }

    bp.vx[i] = qx + K.transpose() * quu * k + K.transpose() * qu +
               qux.transpose() * k;
    Mat v = qxx + K.transpose() * quu * K + K.transpose() * qux +
            qux.transpose() * K;
    bp.vxx[i] = 0.5 * (v + v.transpose());
    bp.k[i] = std::move(k);
    bp.K[i] = std::move(K);
    bp.qu[i] = qu;
    bp.quu[i] = quu;
  }
  return bp;
}

ExpectedImprovement expected_improvement(
    const Trajectory& traj, const std::vector<KnotDerivatives>& d,
    const BackwardPass& bp) {
  const int n = traj.horizon();
  ExpectedImprovement e;
  Vec dx = traj.gaps[0];
  for (int i = 0; i < n; ++i) {
    const CostEval& c = d[i].cost;
    const Vec du = bp.k[i] + bp.K[i] * dx;
    e.d1 += c.lx.dot(dx) + c.lu.dot(du);
    e.d2 += dx.dot(c.lxx * dx) + 2.0 * du.dot(c.lux * dx) + du.dot(c.luu * du);
    dx = d[i].fx * dx + d[i].fu * du + traj.gaps[i + 1];
  }
  e.d1 += d[n].cost.lx.dot(dx);
  e.d2 += dx.dot(d[n].cost.lxx * dx);
  return e;
}

ForwardResult forward_pass(const ShootingProblem& problem,
                           const Trajectory& traj, const BackwardPass& bp,
                           double alpha) {
  const int n = problem.horizon();
  const Vec lo = problem.lower_bound();
  const Vec hi = problem.upper_bound();

  ForwardResult r;
  Trajectory& t = r.traj;
  t.xs.resize(n + 1);
  t.us.resize(n);
  t.fs.resize(n);
  t.contacts.resize(n);
  t.gaps.resize(n + 1);
  const Vec& x0 = problem.initial_state();
  t.xs[0] = x0 + (alpha - 1.0) * traj.gaps[0];
  t.gaps[0] = x0 - t.xs[0];
  t.cost = 0.0;
  for (int i = 0; i < n; ++i) {
    const Vec u = traj.us[i] + alpha * bp.k[i] + bp.K[i] * (t.xs[i] - traj.xs[i]);
    t.us[i] = clamp_control(u, lo, hi);
    StepOutcome out = problem.step(i, t.xs[i], t.us[i]);
    if (!finite_and_bounded(out.next, kOverflow)) {
      r.diverged = true;
      return r;
    }
    t.cost += problem.running_cost_value(i, t.xs[i], t.us[i]);
    t.fs[i] = std::move(out.next);
    t.contacts[i] = std::move(out.contact);
    t.xs[i + 1] = t.fs[i] + (alpha - 1.0) * traj.gaps[i + 1];
    t.gaps[i + 1] = t.fs[i] - t.xs[i + 1];
  }
  t.cost += problem.terminal_cost_value(t.xs[n]);
  t.gap_norm = max_abs(t.gaps);
  if (!std::isfinite(t.cost)) r.diverged = true;

  for (int i = 0; i <= n; ++i) {
    const Vec expected = (1.0 - alpha) * traj.gaps[i];
    r.contraction_error = std::max(
        r.contraction_error, (t.gaps[i] - expected).cwiseAbs().maxCoeff());
  }
  return r;
}

SolveResult solve(const ShootingProblem& problem, Trajectory init,
                  const SolverSettings& s) {
  SolveResult res;
  res.traj = std::move(init);
  evaluate(problem, res.traj);
  double reg = s.regularization_init;
  std::vector<KnotDerivatives> derivs;

  while (res.iterations < s.max_iterations) {
    if (s.parallel) {
      linearize_trajectory_parallel(problem, res.traj, derivs);
    } else {
      linearize_trajectory_serial(problem, res.traj, derivs);
    }

    BackwardPass bp = backward_pass(problem, res.traj, derivs, reg);
    while (!bp.success && reg < s.regularization_max) {
      reg = std::min(reg * s.regularization_factor, s.regularization_max);
      bp = backward_pass(problem, res.traj, derivs, reg);
    }
    if (!bp.success) {
      res.message = "Q_uu not positive definite at maximum regularization";
      break;
    }

    const ExpectedImprovement model =
        expected_improvement(res.traj, derivs, bp);
    const bool feasible = res.traj.gap_norm <= s.gap_tolerance;
    if (feasible && -model.change(1.0) < s.cost_tolerance) {
      res.converged = true;
      break;
    }

    ++res.iterations;
    IterationRecord rec;
    rec.regularization = reg;
    double alpha = 1.0;
    for (int ls = 0; ls < s.line_search_steps; ++ls, alpha *= 0.5) {
      ForwardResult cand = forward_pass(problem, res.traj, bp, alpha);
      rec.alpha = alpha;
      if (cand.diverged) {
        res.diverged = true;
        continue;
      }
      const double expected = -model.change(alpha);
      const double actual = res.traj.cost - cand.traj.cost;
      rec.expected = expected;
      rec.actual = actual;
      bool accept = false;
      if (expected >= 0.0) {
        accept = actual >= s.accept_ratio * expected;
      } else if (!feasible) {
        accept = actual >= s.accept_ratio_infeasible * expected;
      }
      if (accept) {
        rec.accepted = true;
        rec.contraction_error = cand.contraction_error;
        res.max_contraction_error =
            std::max(res.max_contraction_error, cand.contraction_error);
        res.traj = std::move(cand.traj);
        res.improved = true;
        break;
      }
    }

    if (rec.accepted && rec.alpha == 1.0) {
      reg = std::max(reg / s.regularization_factor, s.regularization_min);
    } else if (!rec.accepted) {
      reg = std::min(reg * s.regularization_factor, s.regularization_max);
    }
    rec.cost = res.traj.cost;
    rec.gap_norm = res.traj.gap_norm;
    res.history.push_back(rec);
    if (!rec.accepted && reg >= s.regularization_max) {
      res.message = "line search failed at maximum regularization";
      break;
    }
  }
  res.regularization = reg;
  if (res.message.empty() && !res.converged) {
    res.message = "iteration limit reached";
  }
  return res;
}

SolveResult solve_single_shooting(const ShootingProblem& problem,
                                  const std::vector<Vec>& us,
                                  const SolverSettings& settings) {
  return solve(problem, rollout(problem, us), settings);
}

LinearQuadraticProblem::LinearQuadraticProblem(Mat a, Mat b, Vec c, Mat q,
                                               Mat r, Mat qf, Vec xref, Vec x0,
                                               int horizon)
    : a_(std::move(a)),
      b_(std::move(b)),
      c_(std::move(c)),
      q_(std::move(q)),
      r_(std::move(r)),
      qf_(std::move(qf)),
      xref_(std::move(xref)),
      x0_(std::move(x0)),
      horizon_(horizon) {
  if (horizon_ < 1) throw std::invalid_argument("horizon must be >= 1");
}

StepOutcome LinearQuadraticProblem::step(int, const Vec& x,
                                         const Vec& u) const {
  return {a_ * x + b_ * u + c_, {}};
}

void LinearQuadraticProblem::linearize(int, const Vec&, const Vec&, Mat& fx,
                                       Mat& fu) const {
  fx = a_;
  fu = b_;
}

CostEval LinearQuadraticProblem::running_cost(int, const Vec& x,
                                              const Vec& u) const {
  CostEval c = CostEval::zero(nx(), nu());
  const Vec e = x - xref_;
  c.value = e.dot(q_ * e) + u.dot(r_ * u);
  c.lx = 2.0 * q_ * e;
  c.lu = 2.0 * r_ * u;
  c.lxx = 2.0 * q_;
  c.luu = 2.0 * r_;
  return c;
}

CostEval LinearQuadraticProblem::terminal_cost(const Vec& x) const {
  CostEval c = CostEval::zero(nx(), nu());
  const Vec e = x - xref_;
  c.value = e.dot(qf_ * e);
  c.lx = 2.0 * qf_ * e;
  c.lxx = 2.0 * qf_;
  return c;
}

}  // namespace cimpc
