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

// Hard-contact impulses by per-point maximum dissipation, coupled with a
// nonlinear block Gauss-Seidel sweep, and their analytical derivatives.
//
// Contact-space vectors always store the normal component last: (t, n) in the
// plane and (t1, t2, n) in space.

#pragma once

#include <stdexcept>
#include <vector>

#include "cimpc/model.hpp"

namespace cimpc {

enum class ContactMode { Separating = 0, Clamping = 1, Sliding = 2 };

const char* to_string(ContactMode mode);

/// Raised when a contact's apparent inertia is not positive definite.
class DegenerateInertiaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One contact point with everything else frozen:
///   v' = c + M_app^{-1} lambda.
struct ContactPointProblem {
  Mat m_app;
  Vec c;  // unconstrained contact velocity, drift included in the normal
  double mu = 0.8;

  int dim() const { return static_cast<int>(c.size()); }
};

struct PointSolution {
  Vec impulse;
  ContactMode mode = ContactMode::Separating;
  Vec velocity;  // c + M_app^{-1} impulse
  /// Sliding only: unit-normal cone generator e with impulse = e * lambda_n.
  Vec direction;
  bool converged = true;  // false if the cone search hit its iteration cap
};

/// Kinetic energy of the contact-point velocity, v'^T M_app v'.
double contact_objective(const ContactPointProblem& problem, const Vec& impulse);

/// Throws DegenerateInertiaError for a non-PD apparent inertia and
/// std::invalid_argument for dimensions other than 2 or 3.
PointSolution solve_contact_point(const ContactPointProblem& problem);

struct ConeSearchResult {
  Vec impulse;
  Vec direction;
  double objective = 0.0;
  int iterations = 0;
  bool converged = true;
};

/// Minimizes the contact kinetic energy over the friction-cone boundary with
/// zero normal velocity. In the plane the boundary is two rays and the search
/// is a sign choice; in space the cone angle is bracketed by a scan and then
/// bisected on the derivative of the objective.
ConeSearchResult solve_sliding_cone(const ContactPointProblem& problem);

/// Planar contact problem of a whole robot at one knot.
struct ContactSystem {
  Mat jacobian;       // 2 rows per contact point
  Mat minv;           // M^{-1}
  Vec free_velocity;  // qdot + M^{-1}(-h + B u) dt
  Vec drift;          // per contact: phi / dt, or zero when disabled
  std::vector<bool> candidate;
  double mu = 0.8;

  int n_contacts() const { return static_cast<int>(candidate.size()); }
};

struct GaussSeidelSettings {
  int max_sweeps = 50;
  double tolerance = 1e-10;  // N·s, max per-point impulse change
};

struct ContactSolution {
  Vec impulses;  // (t, n) per contact point
  std::vector<ContactMode> modes;
  Vec velocities;  // post-step contact velocity J qdot', drift excluded
  /// Tangential-to-normal impulse ratio of sliding points (+-mu), else 0.
  std::vector<double> slide_ratio;
  int sweeps = 0;
  double residual = 0.0;  // last sweep's max impulse change
  bool converged = true;

  bool any_active() const;
};

ContactSolution solve_all_contacts(const ContactSystem& system,
                                   const GaussSeidelSettings& settings = {});

/// Active-set linear system A lambda + b = 0 of the solved contacts.
///
/// Clamping points contribute both rows; sliding points contribute their
/// normal row, with the tangential impulse folded in through the expansion
/// matrix E. With sliding points present A is not symmetric.
struct DelassusSystem {
  Mat a;
  Vec b;
  Vec lambda;      // active impulses: (t, n) for clamping, n for sliding
  Mat selection;   // active rows of the stacked contact Jacobian
  Mat expansion;   // full impulse = expansion * lambda
  std::vector<int> clamping;
  std::vector<int> sliding;
  std::vector<bool> normal_row;  // per active row
  bool singular = false;

  int size() const { return static_cast<int>(b.size()); }
  bool empty() const { return b.size() == 0; }
};

/// Points whose normal impulse is below `min_normal_impulse` are left out.
DelassusSystem assemble_delassus(const ContactSystem& system,
                                 const ContactSolution& solution,
                                 double min_normal_impulse = 0.0);

struct ImpulseGradient {
  Mat dlambda;  // rows follow the active ordering of the Delassus system
  bool regularized = false;
};

/// Relaxed impulse gradient
///   dlambda/dxi = -(A + rho D)^{-1} (dA/dxi lambda + db/dxi),
/// D diagonal with 1 / max(lambda_l, 1e-6)^2 on normal rows and zero on
/// tangential rows. `residual_derivative` holds dA/dxi lambda + db/dxi, one
/// column per differentiation variable. rho = 0 gives the exact gradient of
/// the active-set solution.
ImpulseGradient impulse_gradient(const DelassusSystem& delassus, double rho,
                                 const Mat& residual_derivative);

/// Same, with dA/dxi given per variable and db/dxi stacked by columns.
ImpulseGradient impulse_gradient(const DelassusSystem& delassus, double rho,
                                 const std::vector<Mat>& da_dxi,
                                 const Mat& db_dxi);

/// The relaxation matrix D of `delassus`.
Mat relaxation_matrix(const DelassusSystem& delassus);

}  // namespace cimpc
