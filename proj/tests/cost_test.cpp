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

#include "cimpc/cost.hpp"
#include "test_util.hpp"

namespace cimpc {
namespace {

using testing::Random;

Vec gradient_fd(const std::function<double(const Vec&)>& f, const Vec& x) {
  return testing::fd_jacobian([&](const Vec& y) { return Vec::Constant(1, f(y)); }, x)
      .transpose();
}

double min_eigenvalue(const Mat& m) {
  return Eigen::SelfAdjointEigenSolver<Mat>(0.5 * (m + m.transpose())).eigenvalues().minCoeff();
}

Vec random_state(Random& r, const RobotModel& model) {
  Vec x(model.nx());
  x << testing::random_configuration(r, model), r.vec(model.nv());
  return x;
}

TEST(RegulatingCostTest, ZeroAtReference) {
  const RobotModel model = RobotModel::planar_quadruped();
  Reference ref;
  ref.x = Vec::Zero(14);
  ref.x.head(7) = model.stance();
  ref.u = Vec::Zero(4);
  const CostEval c = regulating_cost(ref.x, Vec::Zero(4), ref, CostWeights::defaults(model), false);
  EXPECT_EQ(c.value, 0.0);
  EXPECT_TRUE(c.lx.isZero(0.0));
  EXPECT_TRUE(c.lu.isZero(0.0));
}

TEST(RegulatingCostTest, PitchError) {
  const RobotModel model = RobotModel::planar_quadruped();
  const Reference ref = Reference::stance(model);
  Vec x = ref.x;
  x[2] += 0.5;
  const CostEval c = regulating_cost(x, ref.u, ref, CostWeights::defaults(model), false);
  EXPECT_DOUBLE_EQ(c.value, 2.5);
  EXPECT_DOUBLE_EQ(regulating_cost(x, ref.u, ref, CostWeights::defaults(model), true).value, 25.0);
}

TEST(RegulatingCostTest, GradientAndHessianMatchFiniteDifferences) {
  const RobotModel model = RobotModel::planar_quadruped();
  const Reference ref = Reference::stance(model);
  const CostWeights w = CostWeights::defaults(model);
  Random r(41);
  for (int trial = 0; trial < 20; ++trial) {
    const Vec x = random_state(r, model);
    const Vec u = r.vec(4, -10.0, 10.0);
    const CostEval c = regulating_cost(x, u, ref, w, false);
    EXPECT_LT(testing::rel_error(c.lx, gradient_fd([&](const Vec& y) { return regulating_cost(y, u, ref, w, false).value; }, x)), 1e-6);
    EXPECT_LT(testing::rel_error(c.lu, gradient_fd([&](const Vec& v) { return regulating_cost(x, v, ref, w, false).value; }, u)), 1e-6);
    EXPECT_LT(testing::rel_error(c.lxx, testing::fd_jacobian([&](const Vec& y) { return regulating_cost(y, u, ref, w, false).lx; }, x)), 1e-6);
  }
}

// The free body's only contact point sits at its origin, so phi = z and the
// tangential velocity is x-dot.
Vec free_body_state(double z, double vx) {
  Vec x = Vec::Zero(6);
  x[1] = z;
  x[3] = vx;
  return x;
}

TEST(FootCostTest, Examples) {
  const RobotModel body = RobotModel::free_body(1.0, 1.0);
  CostWeights w;
  w.foot_weight = 1.0;
  w.foot_sharpness = -30.0;
  EXPECT_EQ(foot_cost(body, free_body_state(0.0, 0.0), w).value, 0.0);
  EXPECT_DOUBLE_EQ(foot_cost(body, free_body_state(0.0, 1.0), w).value, 0.5);
  EXPECT_NEAR(foot_cost(body, free_body_state(0.3, 1.0), w).value, 1.0 / (1.0 + std::exp(9.0)), 1e-15);
  EXPECT_NEAR(1.0 / (1.0 + std::exp(9.0)), 1.23e-4, 1e-6);
}

TEST(FootCostTest, GradientMatchesFiniteDifferencesAndHessianIsPsd) {
  const RobotModel model = RobotModel::planar_quadruped();
  const CostWeights w = CostWeights::defaults(model);
  Random r(42);
  for (int trial = 0; trial < 30; ++trial) {
    Vec x = random_state(r, model);
    x[1] -= foot_kinematics(model, x.head(7), 0).height - r.uniform(-0.01, 0.1);
    const CostEval c = foot_cost(model, x, w);
    const Vec fd = gradient_fd([&](const Vec& y) { return foot_cost(model, y, w).value; }, x);
    EXPECT_LT(testing::rel_error(c.lx, fd), 1e-6);
    EXPECT_GE(min_eigenvalue(c.lxx), -1e-10);
  }
}

TEST(AirtimeCostTest, Examples) {
  const RobotModel body = RobotModel::free_body(1.0, 1.0);
  AirTimeSchedule s = AirTimeSchedule::empty(1, 20);
  EXPECT_EQ(airtime_cost(body, free_body_state(0.05, 0.0), s, 3).value, 0.0);
  s.weights(0, 3) = 2e3;
  EXPECT_DOUBLE_EQ(airtime_cost(body, free_body_state(0.05, 0.0), s, 3).value, 5.0);
  EXPECT_EQ(airtime_cost(body, free_body_state(0.05, 0.0), s, 4).value, 0.0);
}

TEST(AirtimeCostTest, GradientMatchesFiniteDifferences) {
  const RobotModel model = RobotModel::planar_quadruped();
  AirTimeSchedule s = AirTimeSchedule::empty(2, 20);
  s.weights(0, 5) = 2e3;
  s.weights(1, 5) = 2e3;
  Random r(43);
  for (int trial = 0; trial < 20; ++trial) {
    const Vec x = random_state(r, model);
    const CostEval c = airtime_cost(model, x, s, 5);
    const Vec fd = gradient_fd([&](const Vec& y) { return airtime_cost(model, y, s, 5).value; }, x);
    EXPECT_LT(testing::rel_error(c.lx, fd), 1e-6);
    EXPECT_GE(min_eigenvalue(c.lxx), -1e-10);
  }
}

TEST(SymmetricCostTest, ExactHessian) {
  const RobotModel model = RobotModel::planar_quadruped();
  const CostWeights w = CostWeights::defaults(model);
  Random r(44);
  const Vec u = r.vec(4, -10.0, 10.0);
  const CostEval c = symmetric_cost(u, w, 14);
  const double d0 = u[0] - u[2], d1 = u[1] - u[3];
  EXPECT_NEAR(c.value, 1e-2 * (d0 * d0 + d1 * d1), 1e-14);
  EXPECT_TRUE(c.luu.isApprox(2e-2 * w.pairing.transpose() * w.pairing));
  EXPECT_LT(testing::rel_error(c.lu, gradient_fd([&](const Vec& v) { return symmetric_cost(v, w, 14).value; }, u)), 1e-6);
  EXPECT_EQ(symmetric_cost(Vec::Constant(4, 3.0), w, 14).value, 0.0);
}

TEST(SymmetricCostTest, RejectsWrongPairing) {
  CostWeights w;
  w.pairing = Mat::Identity(2, 3);
  EXPECT_THROW(symmetric_cost(Vec::Zero(4), w, 14), std::invalid_argument);
}

// ---------------------------------------------------------------------------

std::vector<Vec> standing(const RobotModel& model, int n) {
  return std::vector<Vec>(n + 1, Reference::stance(model).x);
}

TEST(AirtimeScheduleTest, NoSwingGivesZeroSchedule) {
  const RobotModel model = RobotModel::planar_quadruped();
  const CostWeights w = CostWeights::defaults(model);
  const AirTimeSchedule s =
      update_airtime_schedule(AirTimeSchedule::empty(2, 20), standing(model, 20), model, w);
  EXPECT_TRUE(s.all_zero());
}

TEST(AirtimeScheduleTest, LongSwingActivatesFourKnots) {
  const RobotModel model = RobotModel::planar_quadruped();
  const CostWeights w = CostWeights::defaults(model);
  std::vector<Vec> xs = standing(model, 20);
  for (Vec& x : xs) x[6] -= 0.5;  // lift the hind foot by bending its knee
  ASSERT_GT(foot_kinematics(model, xs[0].head(7), 1).height, 1e-3);
  const AirTimeSchedule s = update_airtime_schedule(AirTimeSchedule::empty(2, 20), xs, model, w);
  for (int i = 0; i < 20; ++i) {
    EXPECT_EQ(s.weights(0, i), 0.0);
    EXPECT_EQ(s.weights(1, i), i >= 12 && i <= 15 ? 2e3 : 0.0) << i;
  }
}

TEST(AirtimeScheduleTest, ShortSwingDoesNotActivate) {
  const RobotModel model = RobotModel::planar_quadruped();
  const CostWeights w = CostWeights::defaults(model);
  std::vector<Vec> xs = standing(model, 20);
  for (int i = 0; i < 12; ++i) xs[i][6] -= 0.5;  // exactly i_t airborne knots
  EXPECT_TRUE(update_airtime_schedule(AirTimeSchedule::empty(2, 20), xs, model, w).all_zero());
}

TEST(AirtimeScheduleTest, PreviousActivationsShift) {
  const RobotModel model = RobotModel::planar_quadruped();
  const CostWeights w = CostWeights::defaults(model);
  AirTimeSchedule prev = AirTimeSchedule::empty(2, 20);
  prev.weights(0, 5) = 2e3;
  prev.weights(1, 0) = 2e3;
  const AirTimeSchedule s = update_airtime_schedule(prev, standing(model, 20), model, w);
  EXPECT_EQ(s.weights(0, 4), 2e3);
  EXPECT_EQ(s.weights(0, 5), 0.0);
  EXPECT_EQ(s.weights.row(1).sum(), 0.0);
  EXPECT_EQ(s.weights.sum(), 2e3);
}

// ---------------------------------------------------------------------------

TEST(TotalCostTest, SumOfEnabledTermsAndValueOnlyAgrees) {
  const RobotModel model = RobotModel::planar_quadruped();
  CostContext ctx;
  ctx.model = &model;
  ctx.weights = CostWeights::defaults(model);
  ctx.reference = Reference::stance(model);
  ctx.schedule = AirTimeSchedule::empty(2, 20);
  ctx.schedule.weights(1, 7) = 2e3;
  Random r(45);
  for (int trial = 0; trial < 20; ++trial) {
    const Vec x = random_state(r, model);
    const Vec u = r.vec(4, -10.0, 10.0);
    const CostEval c = total_cost(ctx, x, u, 7, false);
    const double parts = regulating_cost(x, u, ctx.reference, ctx.weights, false).value +
                         foot_cost(model, x, ctx.weights).value +
                         airtime_cost(model, x, ctx.schedule, 7).value +
                         symmetric_cost(u, ctx.weights, 14).value;
    EXPECT_NEAR(c.value, parts, 1e-12 * (1.0 + std::abs(parts)));
    EXPECT_NEAR(total_cost_value(ctx, x, u, 7, false), c.value, 1e-12 * (1.0 + std::abs(parts)));
    EXPECT_NEAR(total_cost_value(ctx, x, u, 7, true), total_cost(ctx, x, u, 7, true).value, 1e-12);
    EXPECT_GE(min_eigenvalue(c.lxx), -1e-9);
    EXPECT_GE(min_eigenvalue(c.luu), 0.0);
    EXPECT_TRUE(c.lxx.isApprox(c.lxx.transpose()));
  }
}

TEST(TotalCostTest, DisabledTermsDropOut) {
  const RobotModel model = RobotModel::planar_quadruped();
  CostContext ctx;
  ctx.model = &model;
  ctx.weights = CostWeights::defaults(model);
  ctx.weights.foot_enabled = ctx.weights.airtime_enabled = ctx.weights.symmetric_enabled = false;
  ctx.reference = Reference::stance(model);
  ctx.schedule = AirTimeSchedule::empty(2, 20);
  Random r(46);
  const Vec x = random_state(r, model);
  const Vec u = r.vec(4);
  EXPECT_DOUBLE_EQ(total_cost(ctx, x, u, 0, false).value,
                   regulating_cost(x, u, ctx.reference, ctx.weights, false).value);
}

}  // namespace
}  // namespace cimpc
