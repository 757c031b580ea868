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

#include <gtest/gtest.h>

#include <cmath>

#include "cimpc/stepper.hpp"
#include "test_util.hpp"

namespace cimpc {
namespace {

using testing::Random;

double foot_height(const RobotModel& model, const Vec& q, int k) {
  return foot_kinematics(model, q, k).height;
}

TEST(DetectContactsTest, FarFromGround) {
  const RobotModel model = RobotModel::planar_quadruped();
  GeneralizedState s{model.stance(), Vec::Zero(7)};
  s.q[1] += 0.5;
  s.qdot[1] = -0.1;
  const auto c = detect_contacts(model, s, Vec::Zero(4), 0.001);
  EXPECT_FALSE(c[0]);
  EXPECT_FALSE(c[1]);
}

TEST(DetectContactsTest, PenetratingFootIsCandidate) {
  const RobotModel model = RobotModel::planar_quadruped();
  GeneralizedState s{model.stance(), Vec::Zero(7)};
  s.q[1] -= 1e-4;
  s.qdot[1] = 5.0;  // moving up fast
  const auto c = detect_contacts(model, s, Vec::Zero(4), 0.01);
  EXPECT_TRUE(c[0]);
  EXPECT_TRUE(c[1]);
}

TEST(DetectContactsTest, PredictedTouchdownIsCandidate) {
  const RobotModel model = RobotModel::planar_quadruped();
  GeneralizedState s{model.stance(), Vec::Zero(7)};
  s.q[1] += 1e-3;
  s.qdot[1] = -0.2;
  const double dt = 0.01;
  const auto c = detect_contacts(model, s, Vec::Zero(4), dt);
  // Oracle: unconstrained step, then first-order prediction of phi.
  const Vec qdd = mass_matrix(model, s.q).llt().solve(-bias_forces(model, s.q, s.qdot));
  const Vec v = s.qdot + qdd * dt;
  for (int k = 0; k < 2; ++k) {
    const double predicted = foot_height(model, s.q, k) + dt * contact_jacobian(model, s.q, k).row(1).dot(v);
    ASSERT_LT(predicted, 0.0);
    EXPECT_TRUE(c[k]);
  }
}

TEST(StepTest, FreeFall) {
  const RobotModel model = RobotModel::planar_quadruped();
  GeneralizedState s{model.stance(), Vec::Zero(7)};
  s.q[1] += 1.0;
  const StepResult r = step(model, s, Vec::Zero(4), 0.01);
  EXPECT_NEAR(r.next.qdot[1], -0.0981, 1e-12);
  EXPECT_NEAR(r.next.q[1] - s.q[1], -9.81e-4, 1e-12);
  EXPECT_TRUE(r.contact.impulses.isZero(0.0));
}

TEST(StepTest, StaticStanceIsFixedPoint) {
  const RobotModel model = RobotModel::planar_quadruped();
  const GeneralizedState s{model.stance(), Vec::Zero(7)};
  const Vec u = testing::oracle_static_torques(model, model.stance());
  const StepResult r = step(model, s, u, 0.025);
  EXPECT_LT((r.next.q - s.q).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_LT(r.next.qdot.cwiseAbs().maxCoeff(), 1e-9);
}

TEST(StepTest, DriftCompensationRecoversPenetration) {
  const RobotModel model = RobotModel::planar_quadruped();
  GeneralizedState s{model.stance(), Vec::Zero(7)};
  s.q[1] -= 0.002;
  const Vec u = testing::oracle_static_torques(model, model.stance());
  const StepResult r = step(model, s, u, 0.025);
  EXPECT_EQ(r.contact.modes[0], ContactMode::Clamping);
  EXPECT_GE(foot_height(model, r.next.q, 0), -1e-6);
  EXPECT_GE(foot_height(model, r.next.q, 1), -1e-6);
}

TEST(StepTest, Deterministic) {
  const RobotModel model = RobotModel::planar_quadruped();
  Random r(31);
  for (int trial = 0; trial < 20; ++trial) {
    GeneralizedState s{testing::random_configuration(r, model), r.vec(7)};
    const Vec u = r.vec(4, -20.0, 20.0);
    const StepResult a = step(model, s, u, 0.01);
    const StepResult b = step(model, s, u, 0.01);
    EXPECT_EQ(a.next.q, b.next.q);
    EXPECT_EQ(a.next.qdot, b.next.qdot);
    EXPECT_EQ(a.contact.impulses, b.contact.impulses);
  }
}

// Standing rollout: drift compensation bounds the penetration of clamping
// feet, and without it
// an initial penetration is never corrected.
TEST(StepTest, PenetrationBoundOverStandingRollout) {
  const RobotModel model = RobotModel::planar_quadruped();
  const Vec u = testing::oracle_static_torques(model, model.stance());
  auto worst = [&](bool drift) {
    GeneralizedState s{model.stance(), Vec::Zero(7)};
    s.q[1] -= 0.002;
    StepOptions opt;
    opt.drift_compensation = drift;
    double late = 0.0;
    for (int i = 0; i < 200; ++i) {
      // Constant statics torques are an unstable equilibrium; hold the
      // stance with a joint PD loop around them.
      Vec command = u;
      for (int j = 0; j < 4; ++j) {
        command[j] += 50.0 * (model.stance()[3 + j] - s.q[3 + j]) - s.qdot[3 + j];
      }
      const StepResult r = step(model, s, command, 0.025, opt);
      s = r.next;
      if (i < 100) continue;
      for (int k = 0; k < 2; ++k) {
        if (r.contact.modes[k] != ContactMode::Clamping) continue;
        late = std::max(late, std::abs(foot_height(model, s.q, k)));
      }
    }
    return late;
  };
  const double with = worst(true);
  const double without = worst(false);
  EXPECT_LE(with, 1e-3);
  EXPECT_GT(without, 10.0 * std::max(with, 1e-6));
}

TEST(StepTest, FrictionInjectsNoEnergy) {
  const RobotModel model = RobotModel::planar_quadruped();
  Random r(32);
  const double dt = 0.01;
  int active = 0;
  for (int trial = 0; trial < 300; ++trial) {
    GeneralizedState s{testing::random_configuration(r, model), r.vec(7, -1.0, 1.0)};
    s.q[1] -= std::min(foot_height(model, s.q, 0), foot_height(model, s.q, 1)) + 1e-4;
    const StepResult res = step(model, s, r.vec(4, -30.0, 30.0), dt);
    for (int k = 0; k < 2; ++k) {
      if (res.contact.modes[k] == ContactMode::Separating) continue;
      ++active;
      const double power = res.contact.impulses[2 * k] * res.contact.velocities[2 * k] / dt;
      EXPECT_LE(power, 1e-8);
    }
  }
  EXPECT_GT(active, 100);
}

// ---------------------------------------------------------------------------

Vec stepped(const RobotModel& model, const Vec& x, const Vec& u, double dt) {
  return step(model, GeneralizedState::from_stacked(x), u, dt).next.stacked();
}

TEST(StepJacobiansTest, ContactFreeMatchesFiniteDifferences) {
  const RobotModel model = RobotModel::planar_quadruped();
  Random r(33);
  const double dt = 0.01;
  for (int trial = 0; trial < 10; ++trial) {
    GeneralizedState s{testing::random_configuration(r, model), r.vec(7)};
    s.q[1] += 0.5;
    const Vec u = r.vec(4, -10.0, 10.0);
    const StepJacobians j = step_jacobians(model, s, u, dt, 0.0);
    const Vec x = s.stacked();
    const Mat fx = testing::fd_jacobian([&](const Vec& xx) { return stepped(model, xx, u, dt); }, x);
    const Mat fu = testing::fd_jacobian([&](const Vec& uu) { return stepped(model, x, uu, dt); }, u);
    EXPECT_LT(testing::rel_error(j.fx, fx), 1e-5);
    EXPECT_LT(testing::rel_error(j.fu, fu), 1e-5);
  }
}

// Finite differences of step() that keep every contact mode of the nominal
// point; returns false if any perturbation changes a mode.
bool mode_stable_fd(const RobotModel& model, const Vec& x, const Vec& u, double dt,
                    Mat& fx, Mat& fu) {
  const auto modes = step(model, GeneralizedState::from_stacked(x), u, dt).contact.modes;
  bool stable = true;
  auto f = [&](const Vec& xx, const Vec& uu) {
    const StepResult r = step(model, GeneralizedState::from_stacked(xx), uu, dt);
    if (r.contact.modes != modes) stable = false;
    return r.next.stacked();
  };
  fx = testing::fd_jacobian([&](const Vec& xx) { return f(xx, u); }, x);
  fu = testing::fd_jacobian([&](const Vec& uu) { return f(x, uu); }, u);
  return stable;
}

TEST(StepJacobiansTest, ClampingStanceMatchesFiniteDifferences) {
  const RobotModel model = RobotModel::planar_quadruped();
  GeneralizedState s{model.stance(), Vec::Zero(7)};
  s.q[1] -= 1e-4;
  const Vec u = testing::oracle_static_torques(model, model.stance());
  const double dt = 0.025;
  const StepResult res = step(model, s, u, dt);
  ASSERT_EQ(res.contact.modes[0], ContactMode::Clamping);
  ASSERT_EQ(res.contact.modes[1], ContactMode::Clamping);
  Mat fx, fu;
  ASSERT_TRUE(mode_stable_fd(model, s.stacked(), u, dt, fx, fu));
  const StepJacobians j = step_jacobians(model, s, u, dt, 0.0, res);
  EXPECT_LT(testing::rel_error(j.fx, fx), 1e-4);
  EXPECT_LT(testing::rel_error(j.fu, fu), 1e-4);
}

TEST(StepJacobiansTest, RandomModeStableKnots) {
  const RobotModel model = RobotModel::planar_quadruped();
  Random r(34);
  const double dt = 0.01;
  int tested = 0, sliding = 0;
  for (int trial = 0; trial < 1000 && tested < 100; ++trial) {
    GeneralizedState s{testing::random_configuration(r, model), r.vec(7, -0.5, 0.5)};
    s.q[1] -= foot_height(model, s.q, trial % 2) + 1e-4;
    const Vec u = r.vec(4, -20.0, 20.0);
    const StepResult res = step(model, s, u, dt);
    if (!res.contact.any_active()) continue;
    Mat fx, fu;
    if (!mode_stable_fd(model, s.stacked(), u, dt, fx, fu)) continue;
    ++tested;
    for (auto m : res.contact.modes) sliding += m == ContactMode::Sliding;
    const StepJacobians j = step_jacobians(model, s, u, dt, 0.0, res);
    EXPECT_LT(testing::rel_error(j.fx, fx), 1e-4) << "trial " << trial;
    EXPECT_LT(testing::rel_error(j.fu, fu), 1e-4) << "trial " << trial;
  }
  EXPECT_EQ(tested, 100);
  EXPECT_GT(sliding, 0);
}

TEST(StepJacobiansTest, RelaxationSmoothsTheContactGradient) {
  const RobotModel model = RobotModel::planar_quadruped();
  GeneralizedState s{model.stance(), Vec::Zero(7)};
  const Vec u = testing::oracle_static_torques(model, model.stance());
  const double dt = 0.025;
  const StepJacobians strict = step_jacobians(model, s, u, dt, 0.0);
  const StepJacobians relaxed = step_jacobians(model, s, u, dt, 1.0);
  const StepJacobians tiny = step_jacobians(model, s, u, dt, 1e-10);
  EXPECT_EQ(relaxed.rho, 1.0);
  EXPECT_LT(testing::rel_error(tiny.fx, strict.fx), 1e-6);
  EXPECT_GT(testing::rel_error(relaxed.fu, strict.fu), 1e-6);
  EXPECT_EQ(strict.fx.rows(), 14);
  EXPECT_EQ(strict.fu.cols(), 4);
}

}  // namespace
}  // namespace cimpc
