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

#include "cimpc/contact.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace cimpc {

namespace {

constexpr int kConeScanSamples = 720;
constexpr int kConeMaxIterations = 80;
constexpr double kConeAngleTolerance = 1e-10;
constexpr double kImpulseFloor = 1e-6;
constexpr double kTikhonov = 1e-10;

struct Inertia {
  Mat m;
  Mat g;  // M^{-1}
};

Inertia factor_inertia(const ContactPointProblem& p) {
  const int d = p.dim();
  if (d != 2 && d != 3) {
    throw std::invalid_argument("contact problem dimension must be 2 or 3");
  }
  if (p.m_app.rows() != d || p.m_app.cols() != d) {
    throw std::invalid_argument("apparent inertia has the wrong shape");
  }
  if (!(p.mu >= 0.0)) {
    throw std::invalid_argument("friction coefficient must be non-negative");
  }
  const double asym = (p.m_app - p.m_app.transpose()).cwiseAbs().maxCoeff();
  const Eigen::LLT<Mat> llt(p.m_app);
  if (asym > 1e-9 * (1.0 + p.m_app.cwiseAbs().maxCoeff()) ||
      llt.info() != Eigen::Success) {
    throw DegenerateInertiaError("apparent inertia is not positive definite");
  }
  return {p.m_app, llt.solve(Mat::Identity(d, d))};
}

Vec generator(double mu, double theta) {
  Vec e(3);
  e << mu * std::cos(theta), mu * std::sin(theta), 1.0;
  return e;
}

// Objective along the cone boundary, with the normal impulse chosen so the
// normal velocity vanishes.
struct ConePoint {
  bool feasible = false;
  double f = std::numeric_limits<double>::infinity();
  double df = 0.0;
  double lambda_n = 0.0;
  Vec e;
};

ConePoint cone_point(const Inertia& in, const Vec& c, double mu, double th) {
  ConePoint out;
  out.e = generator(mu, th);
  const Vec g = in.g * out.e;
  if (g[2] <= 0.0) return out;
  Vec de(3);
  de << -mu * std::sin(th), mu * std::cos(th), 0.0;
  const Vec gd = in.g * de;
  out.feasible = true;
  out.lambda_n = -c[2] / g[2];
  const double dlambda = c[2] * gd[2] / (g[2] * g[2]);
  const Vec v = c + out.lambda_n * g;
  const Vec dv = dlambda * g + out.lambda_n * gd;
  out.f = v.dot(in.m * v);
  out.df = 2.0 * v.dot(in.m * dv);
  return out;
}

ConeSearchResult finish(const Vec& e, double lambda_n, double f) {
  ConeSearchResult r;
  r.direction = e;
  r.impulse = e * lambda_n;
  r.objective = f;
  return r;
}

ConeSearchResult search_plane(const ContactPointProblem& p, const Inertia& in) {
  ConeSearchResult best;
  best.objective = std::numeric_limits<double>::infinity();
  for (double sign : {-1.0, 1.0}) {
    const Vec e = Eigen::Vector2d(sign * p.mu, 1.0);
    const double gn = (in.g * e)[1];
    if (gn <= 0.0) continue;
    const double lambda_n = -p.c[1] / gn;
    const Vec impulse = e * lambda_n;
    const double f = contact_objective(p, impulse);
    if (f < best.objective) best = finish(e, lambda_n, f);
  }
  if (!std::isfinite(best.objective)) {
    throw DegenerateInertiaError("no cone generator closes the contact");
  }
  return best;
}

ConeSearchResult search_space(const ContactPointProblem& p, const Inertia& in) {
  const Vec& c = p.c;
  if (p.mu == 0.0) {
    const ConePoint pt = cone_point(in, c, 0.0, 0.0);
    if (!pt.feasible) throw DegenerateInertiaError("normal inertia is zero");
    return finish(pt.e, pt.lambda_n, pt.f);
  }

  const double step = 2.0 * std::numbers::pi / kConeScanSamples;
  double theta = 0.0;
  ConePoint best;
  for (int i = 0; i < kConeScanSamples; ++i) {
    const ConePoint pt = cone_point(in, c, p.mu, i * step);
    if (pt.f < best.f) {
      best = pt;
      theta = i * step;
    }
  }
  if (!best.feasible) {
    throw DegenerateInertiaError("no cone generator closes the contact");
  }

  double lo = theta - step;
  double hi = theta + step;
  int it = 0;
  const ConePoint plo = cone_point(in, c, p.mu, lo);
  const ConePoint phi = cone_point(in, c, p.mu, hi);
  if (plo.feasible && phi.feasible && plo.df < 0.0 && phi.df > 0.0) {
    while (hi - lo > kConeAngleTolerance && it < kConeMaxIterations) {
      const double mid = 0.5 * (lo + hi);
      (cone_point(in, c, p.mu, mid).df > 0.0 ? hi : lo) = mid;
      ++it;
    }
  } else {
    // No sign change in the bracket (flat or infeasible edge): golden section.
    const double r = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = hi - r * (hi - lo);
    double b = lo + r * (hi - lo);
    double fa = cone_point(in, c, p.mu, a).f;
    double fb = cone_point(in, c, p.mu, b).f;
    while (hi - lo > kConeAngleTolerance && it < kConeMaxIterations) {
      if (fa < fb) {
        hi = b;
        b = a;
        fb = fa;
        a = hi - r * (hi - lo);
        fa = cone_point(in, c, p.mu, a).f;
      } else {
        lo = a;
        a = b;
        fa = fb;
        b = lo + r * (hi - lo);
        fb = cone_point(in, c, p.mu, b).f;
      }
      ++it;
    }
  }
  const ConePoint refined = cone_point(in, c, p.mu, 0.5 * (lo + hi));
  const ConePoint& pick = refined.f <= best.f ? refined : best;
  ConeSearchResult r = finish(pick.e, pick.lambda_n, pick.f);
  r.iterations = it;
  r.converged = hi - lo <= kConeAngleTolerance;
  return r;
}

bool in_cone(const Vec& impulse, double mu) {
  const int d = static_cast<int>(impulse.size());
  const double n = impulse[d - 1];
  return n >= 0.0 && impulse.head(d - 1).norm() <= mu * n;
}

}  // namespace

const char* to_string(ContactMode mode) {
  switch (mode) {
    case ContactMode::Separating:
      return "separating";
    case ContactMode::Clamping:
      return "clamping";
    case ContactMode::Sliding:
      return "sliding";
  }
  return "unknown";
}

double contact_objective(const ContactPointProblem& problem,
                         const Vec& impulse) {
  const Vec v = problem.c + problem.m_app.llt().solve(impulse);
  return v.dot(problem.m_app * v);
}

ConeSearchResult solve_sliding_cone(const ContactPointProblem& problem) {
  const Inertia in = factor_inertia(problem);
  return problem.dim() == 2 ? search_plane(problem, in)
                            : search_space(problem, in);
}

PointSolution solve_contact_point(const ContactPointProblem& problem) {
  const Inertia in = factor_inertia(problem);
  const int d = problem.dim();
  PointSolution out;
  if (problem.c[d - 1] >= 0.0) {
    out.impulse = Vec::Zero(d);
    out.velocity = problem.c;
    return out;
  }
  const Vec clamp = -in.m * problem.c;
  if (in_cone(clamp, problem.mu)) {
    out.impulse = clamp;
    out.mode = ContactMode::Clamping;
    out.velocity = Vec::Zero(d);
    return out;
  }
  const ConeSearchResult cone =
      d == 2 ? search_plane(problem, in) : search_space(problem, in);
  out.impulse = cone.impulse;
  out.mode = ContactMode::Sliding;
  out.direction = cone.direction;
  out.velocity = problem.c + in.g * cone.impulse;
  out.converged = cone.converged;
  return out;
}

bool ContactSolution::any_active() const {
  return std::any_of(modes.begin(), modes.end(), [](ContactMode m) {
    return m != ContactMode::Separating;
  });
}

namespace {

struct SweepResult {
  Vec impulses;
  std::vector<ContactMode> modes;
  std::vector<double> slide_ratio;
  double change = 0.0;
};

// One Gauss-Seidel pass: each candidate is re-solved with the others frozen.
SweepResult sweep(const ContactSystem& sys, const Mat& w, const Vec& v_free,
                  const Vec& start) {
  const int nc = sys.n_contacts();
  SweepResult r;
  r.impulses = start;
  r.modes.assign(nc, ContactMode::Separating);
  r.slide_ratio.assign(nc, 0.0);
  for (int k = 0; k < nc; ++k) {
    if (!sys.candidate[k]) continue;
    const Eigen::Index row = 2 * k;
    ContactPointProblem p;
    p.mu = sys.mu;
    p.m_app = w.block(row, row, 2, 2).inverse();
    p.m_app = 0.5 * (p.m_app + p.m_app.transpose());
    p.c = v_free.segment(row, 2) + w.middleRows(row, 2) * r.impulses -
          w.block(row, row, 2, 2) * r.impulses.segment(row, 2);
    p.c[1] += sys.drift[k];
    const PointSolution s = solve_contact_point(p);
    r.change = std::max(
        r.change, (s.impulse - r.impulses.segment(row, 2)).cwiseAbs().maxCoeff());
    r.impulses.segment(row, 2) = s.impulse;
    r.modes[k] = s.mode;
    if (s.mode == ContactMode::Sliding) r.slide_ratio[k] = s.direction[0];
  }
  return r;
}

ContactSolution package(const Mat& w, const Vec& v_free, const SweepResult& s) {
  ContactSolution out;
  out.impulses = s.impulses;
  out.modes = s.modes;
  out.slide_ratio = s.slide_ratio;
  out.velocities = v_free + w * s.impulses;
  out.residual = s.change;
  return out;
}

}  // namespace

ContactSolution solve_all_contacts(const ContactSystem& sys,
                                   const GaussSeidelSettings& settings) {
  const int nc = sys.n_contacts();
  const Mat w = sys.jacobian * sys.minv * sys.jacobian.transpose();
  const Vec v_free = sys.jacobian * sys.free_velocity;
  Vec lambda = Vec::Zero(2 * nc);

  if (std::none_of(sys.candidate.begin(), sys.candidate.end(),
                   [](bool c) { return c; })) {
    return package(w, v_free, sweep(sys, w, v_free, lambda));
  }

  SweepResult last;
  std::vector<ContactMode> previous;
  int sweeps = 0;
  while (sweeps < settings.max_sweeps) {
    last = sweep(sys, w, v_free, lambda);
    ++sweeps;
    lambda = last.impulses;
    const bool settled = last.change < settings.tolerance;

    // Once the mode pattern settles, jump to the exact active-set solution
    // and keep it only if a verification sweep leaves it in place.
    if (settled || last.modes == previous) {
      ContactSolution trial = package(w, v_free, last);
      const DelassusSystem del = assemble_delassus(sys, trial);
      if (!del.empty() && !del.singular) {
        const Vec polished = del.expansion * del.a.partialPivLu().solve(-del.b);
        const SweepResult check = sweep(sys, w, v_free, polished);
        ++sweeps;
        if (check.change < settings.tolerance && check.modes == last.modes) {
          last = check;
          lambda = check.impulses;
          break;
        }
      }
    }
    if (settled) break;
    previous = last.modes;
  }

  ContactSolution out = package(w, v_free, last);
  out.sweeps = sweeps;
  out.converged = last.change < settings.tolerance;
  return out;
}

DelassusSystem assemble_delassus(const ContactSystem& sys,
                                 const ContactSolution& solution,
                                 double min_normal_impulse) {
  const int nc = sys.n_contacts();
  DelassusSystem d;
  std::vector<int> rows;
  std::vector<std::pair<int, int>> vars;  // (contact, 0 clamp / 1 slide)
  for (int k = 0; k < nc; ++k) {
    const ContactMode mode = solution.modes[k];
    if (mode == ContactMode::Separating) continue;
    if (solution.impulses[2 * k + 1] < min_normal_impulse) continue;
    if (mode == ContactMode::Clamping) {
      d.clamping.push_back(k);
      rows.push_back(2 * k);
      rows.push_back(2 * k + 1);
      d.normal_row.push_back(false);
      d.normal_row.push_back(true);
    } else {
      d.sliding.push_back(k);
      rows.push_back(2 * k + 1);
      d.normal_row.push_back(true);
    }
    vars.emplace_back(k, mode == ContactMode::Clamping ? 0 : 1);
  }

  const int m = static_cast<int>(rows.size());
  d.selection = Mat::Zero(m, 2 * nc);
  d.expansion = Mat::Zero(2 * nc, m);
  d.lambda = Vec::Zero(m);
  for (int i = 0; i < m; ++i) d.selection(i, rows[i]) = 1.0;
  int col = 0;
  for (const auto& [k, sliding] : vars) {
    if (!sliding) {
      d.expansion(2 * k, col) = 1.0;
      d.expansion(2 * k + 1, col + 1) = 1.0;
      d.lambda.segment(col, 2) = solution.impulses.segment(2 * k, 2);
      col += 2;
    } else {
      d.expansion(2 * k, col) = solution.slide_ratio[k];
      d.expansion(2 * k + 1, col) = 1.0;
      d.lambda[col] = solution.impulses[2 * k + 1];
      col += 1;
    }
  }
  if (m == 0) {
    d.a = Mat(0, 0);
    d.b = Vec(0);
    return d;
  }

  const Mat ja = d.selection * sys.jacobian;
  const Mat jf = d.expansion.transpose() * sys.jacobian;
  d.a = ja * sys.minv * jf.transpose();
  Vec drift_rows = Vec::Zero(2 * nc);
  for (int k = 0; k < nc; ++k) drift_rows[2 * k + 1] = sys.drift[k];
  d.b = ja * sys.free_velocity + d.selection * drift_rows;
  const Eigen::FullPivLU<Mat> lu(d.a);
  d.singular = lu.rank() < m || lu.rcond() < 1e-13;
  return d;
}

Mat relaxation_matrix(const DelassusSystem& delassus) {
  const int m = delassus.size();
  Mat dm = Mat::Zero(m, m);
  for (int l = 0; l < m; ++l) {
    if (!delassus.normal_row[l]) continue;
    const double lam = std::max(delassus.lambda[l], kImpulseFloor);
    dm(l, l) = 1.0 / (lam * lam);
  }
  return dm;
}

ImpulseGradient impulse_gradient(const DelassusSystem& delassus, double rho,
                                 const Mat& residual_derivative) {
  if (!(rho >= 0.0)) {
    throw std::invalid_argument("relaxation rho must be non-negative");
  }
  const int m = delassus.size();
  if (residual_derivative.rows() != m) {
    throw std::invalid_argument("residual derivative has the wrong row count");
  }
  ImpulseGradient out;
  if (m == 0) {
    out.dlambda = Mat::Zero(0, residual_derivative.cols());
    return out;
  }
  Mat lhs = delassus.a;
  if (rho > 0.0) lhs += rho * relaxation_matrix(delassus);
  Eigen::PartialPivLU<Mat> lu(lhs);
  // The rcond estimate is unreliable for exactly singular factors, so also
  // look at the pivots.
  const Vec pivots = lu.matrixLU().diagonal().cwiseAbs();
  const double rcond = lu.rcond();
  if (!std::isfinite(rcond) || rcond < 1e-13 ||
      !(pivots.minCoeff() > 1e-13 * pivots.maxCoeff())) {
    lhs += kTikhonov * Mat::Identity(m, m);
    lu.compute(lhs);
    out.regularized = true;
  }
  out.dlambda = -lu.solve(residual_derivative);
  return out;
}

ImpulseGradient impulse_gradient(const DelassusSystem& delassus, double rho,
                                 const std::vector<Mat>& da_dxi,
                                 const Mat& db_dxi) {
  Mat r = db_dxi;
  for (std::size_t j = 0; j < da_dxi.size(); ++j) {
    r.col(static_cast<Eigen::Index>(j)) += da_dxi[j] * delassus.lambda;
  }
  return impulse_gradient(delassus, rho, r);
}

}  // namespace cimpc
