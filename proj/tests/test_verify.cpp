// Copyright 2026 The conceptsteer Authors.
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

#include "conceptsteer/synth.hpp"
#include "conceptsteer/verify.hpp"
#include "test_support.hpp"

namespace conceptsteer {
namespace {

using testing::Rng;

struct SampleFit {
  Matrix x;
  ConceptLabels source;
  ConceptLabels target;
  Vector mean;
  Matrix cov;
  Matrix s1;
  Matrix s2;
};

SampleFit sampleWorld(Index d, Index l, Index n, std::uint64_t seed) {
  const GeneratedWorld world = generate(randomWorldSpec(d, 2 * l, n, seed));
  SampleFit f;
  f.x = world.activations;
  f.source = world.labels.columns(0, l);
  f.target = world.labels.columns(l, l);
  f.mean = testing::twoPassMean(f.x);
  f.cov = testing::twoPassCovariance(f.x);
  f.s1 = testing::twoPassCrossCovariance(f.x, f.source.asMatrix());
  f.s2 = testing::twoPassCrossCovariance(f.x, f.target.asMatrix());
  return f;
}

TEST(Target, NamesAndDefaults) {
  EXPECT_EQ(*parseTarget("zero"), TargetKind::Zero);
  EXPECT_EQ(*parseTarget("negated"), TargetKind::Negated);
  EXPECT_EQ(*parseTarget("mapto"), TargetKind::MapTo);
  EXPECT_FALSE(parseTarget("other"));
  EXPECT_EQ(defaultTarget(Mode::LeaceErase), TargetKind::Zero);
  EXPECT_EQ(defaultTarget(Mode::VanillaErase), TargetKind::Zero);
  EXPECT_EQ(defaultTarget(Mode::LeaceSwitch), TargetKind::Negated);
  EXPECT_EQ(defaultTarget(Mode::MidSteer), TargetKind::MapTo);
}

TEST(Residual, IdentityAgainstEachTarget) {
  const SampleFit f = sampleWorld(4, 1, 500, 1);
  const AffineTransform id = AffineTransform::identity(4);
  const double norm = f.s1.norm();
  EXPECT_NEAR(constraintResidual(id, f.x, f.source, ConstraintTarget::zero()),
              norm, 1e-12);
  EXPECT_NEAR(constraintResidual(id, f.x, f.source, ConstraintTarget::negated()),
              2.0 * norm / (1.0 + norm), 1e-12);
  EXPECT_NEAR(constraintResidual(id, f.x, f.source,
                                 ConstraintTarget::mapTo(f.source)),
              0.0, 1e-15);
  EXPECT_THROW(constraintResidual(id, f.x, f.source,
                                  ConstraintTarget{TargetKind::MapTo, {}}),
               Error);
  EXPECT_THROW(constraintResidual(id, f.x, f.source,
                                  ConstraintTarget::mapTo(ConceptLabels(
                                      LabelMatrix::Zero(500, 2)))),
               Error);
}

TEST(Residual, FittedTransformsSatisfyConstraintsOnSample) {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const Index d = 2 + static_cast<Index>(seed % 15);
    const Index l = 1 + static_cast<Index>(seed % 2);
    const SampleFit f = sampleWorld(d, l, 2000, seed);
    const AffineTransform erase = fitLeaceErase(f.mean, f.cov, f.s1);
    const AffineTransform sw = fitLeaceSwitch(f.mean, f.cov, f.s1);
    const AffineTransform steer = fitMidSteer(f.mean, f.cov, f.s1, f.s2);
    EXPECT_LE(constraintResidual(erase, f.x, f.source, ConstraintTarget::zero()),
              1e-8);
    EXPECT_LE(constraintResidual(sw, f.x, f.source, ConstraintTarget::negated()),
              1e-8);
    EXPECT_LE(constraintResidual(steer, f.x, f.source,
                                 ConstraintTarget::mapTo(f.target)),
              1e-8);
  }
}

TEST(Objective, SampleAndExpectedAgree) {
  const SampleFit f = sampleWorld(5, 1, 800, 3);
  const AffineTransform t = fitLeaceErase(f.mean, f.cov, f.s1);
  const double n = static_cast<double>(f.x.rows());
  // The sample mean divides by n, the covariance by n - 1.
  EXPECT_NEAR(disturbanceObjective(t, f.x),
              expectedDisturbance(t, f.mean, f.cov) * (n - 1.0) / n, 1e-10);
  EXPECT_EQ(disturbanceObjective(AffineTransform::identity(5), f.x), 0.0);
  EXPECT_EQ(disturbanceObjective(t, Matrix(0, 5)), 0.0);
  EXPECT_THROW(disturbanceObjective(t, Matrix::Zero(3, 4)), Error);
}

TEST(Objective, ScalesAsBetaSquaredOnErasureFamily) {
  const SampleFit f = sampleWorld(6, 2, 1000, 4);
  const double base = disturbanceObjective(fitLeaceErase(f.mean, f.cov, f.s1), f.x);
  ASSERT_GT(base, 0.0);
  for (double beta : {0.0, 0.5, 1.0, 2.0, 5.0}) {
    const double erase =
        disturbanceObjective(fitLeaceErase(f.mean, f.cov, f.s1, beta), f.x);
    const double sw =
        disturbanceObjective(fitLeaceSwitch(f.mean, f.cov, f.s1, beta), f.x);
    EXPECT_NEAR(erase, beta * beta * base, 1e-10 * (1.0 + beta * beta * base));
    EXPECT_NEAR(sw, beta * beta * base, 1e-10 * (1.0 + beta * beta * base));
  }
}

TEST(KktOracle, HandWorkedIsotropicCase) {
  // Sigma = I, S1 = e1, target 0: the minimizer projects out e1.
  const Index d = 3;
  Matrix s1 = Matrix::Zero(d, 1);
  s1(0, 0) = 1.0;
  const OracleSolution sol =
      kktOracle(Vector::Zero(d), Matrix::Identity(d, d), s1, Matrix::Zero(d, 1));
  Matrix want = Matrix::Identity(d, d);
  want(0, 0) = 0.0;
  EXPECT_LE((sol.a - want).norm(), 1e-14);
  EXPECT_NEAR(sol.objective, 1.0, 1e-14);
}

TEST(KktOracle, AgreesWithClosedFormsOnFullRankInstances) {
  Rng rng(77);
  for (int trial = 0; trial < 50; ++trial) {
    const Index d = rng.integer(2, 8);
    const Index l = rng.integer(1, 2);
    const Vector mean = rng.gaussian(d, 1);
    const Matrix cov = rng.spd(d);
    const Matrix s1 = rng.gaussian(d, l);
    const Matrix s2 = rng.gaussian(d, l);
    struct Case {
      AffineTransform fit;
      Matrix target;
    };
    const Case cases[] = {
        {fitLeaceErase(mean, cov, s1), Matrix::Zero(d, l)},
        {fitLeaceSwitch(mean, cov, s1), -s1},
        {fitMidSteer(mean, cov, s1, s2), s2},
    };
    for (const Case& c : cases) {
      const OracleSolution best = kktOracle(mean, cov, s1, c.target);
      const double mine = expectedDisturbance(c.fit, mean, cov);
      EXPECT_LE(std::abs(mine - best.objective),
                1e-6 * std::max(best.objective, 1e-12))
          << "trial " << trial << " " << modeName(c.fit.mode);
      EXPECT_LE((c.fit.a - best.a).norm(), 1e-6) << "trial " << trial;
      EXPECT_LE((best.a * s1 - c.target).norm(), 1e-9 * (1.0 + c.target.norm()));
    }
  }
}

TEST(KktOracle, Errors) {
  Matrix singular = Matrix::Identity(3, 3);
  singular(2, 2) = 0.0;
  try {
    kktOracle(Vector::Zero(3), singular, Matrix::Ones(3, 1), Matrix::Zero(3, 1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::SingularSystem);
  }
  Matrix dependent(3, 2);
  dependent << 1, 2, 1, 2, 1, 2;
  try {
    kktOracle(Vector::Zero(3), Matrix::Identity(3, 3), dependent,
              Matrix::Zero(3, 2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::SingularSystem);
  }
  EXPECT_THROW(kktOracle(Vector::Zero(2), Matrix::Identity(3, 3),
                         Matrix::Ones(3, 1), Matrix::Zero(3, 1)),
               Error);
}

TEST(PenaltyOracle, ConvergesToClosedForm) {
  Rng rng(88);
  for (int trial = 0; trial < 5; ++trial) {
    const Index d = rng.integer(2, 4);
    const Vector mean = rng.gaussian(d, 1);
    const Matrix cov = rng.spd(d);
    const Matrix s1 = rng.gaussian(d, 1);
    const Matrix s2 = rng.gaussian(d, 1);
    const Matrix a = penaltyOracle(cov, s1, s2);
    const AffineTransform fit = fitMidSteer(mean, cov, s1, s2);
    EXPECT_LE((a - fit.a).norm(), 1e-4 * fit.a.norm()) << "trial " << trial;
  }
}

TEST(Guardedness, ErasureRemovesLinearPredictability) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const SampleFit f = sampleWorld(8, 1 + seed % 2, 2000, 100 + seed);
    const RankPolicy policy = guardednessPolicy(f.x);
    const double before = guardednessScore(f.x, f.source, policy);
    const AffineTransform t = fitLeaceErase(f.mean, f.cov, f.s1);
    const double after = guardednessScore(applyTransform(t, f.x), f.source, policy);
    EXPECT_GT(before, 0.1);
    EXPECT_LE(after, 1e-6 * before) << "seed " << seed;
  }
}

TEST(Guardedness, FullErasureNeedsScaleAnchor) {
  // d = l = 2: erasure collapses every direction to round-off.
  const SampleFit f = sampleWorld(2, 2, 2000, 815);
  const AffineTransform t = fitLeaceErase(f.mean, f.cov, f.s1);
  const Matrix erased = applyTransform(t, f.x);
  const double before = guardednessScore(f.x, f.source);
  EXPECT_LE(guardednessScore(erased, f.source, guardednessPolicy(f.x)),
            1e-6 * before);
  const VerificationReport r =
      verifyTransform(t, f.x, f.source, ConstraintTarget::zero());
  EXPECT_TRUE(r.pass()) << r.toText();
}

TEST(Guardedness, MatchesLeastSquaresCoefficients) {
  const SampleFit f = sampleWorld(4, 1, 300, 9);
  // Ordinary least squares with an intercept column, solved by QR.
  Matrix design(f.x.rows(), 5);
  design.leftCols(4) = f.x;
  design.col(4).setOnes();
  const Matrix coef =
      design.colPivHouseholderQr().solve(f.source.asMatrix());
  EXPECT_NEAR(guardednessScore(f.x, f.source), coef.topRows(4).norm(), 1e-9);
  EXPECT_THROW(guardednessScore(f.x.topRows(5), f.source.rows(0, 5)), Error);
  EXPECT_THROW(guardednessScore(f.x, f.source.rows(0, 10)), Error);
}

TEST(Report, VerifyPassesForFittedErasure) {
  const SampleFit f = sampleWorld(6, 1, 1500, 5);
  const AffineTransform t = fitLeaceErase(f.mean, f.cov, f.s1);
  VerifyOptions opts;
  opts.oracle = true;
  const VerificationReport r =
      verifyTransform(t, f.x, f.source, ConstraintTarget::zero(), opts);
  EXPECT_TRUE(r.pass()) << r.toText();
  ASSERT_EQ(r.checks.size(), 3u);
  ASSERT_TRUE(r.oracle_gap.has_value());
  EXPECT_LE(std::abs(*r.oracle_gap), 1e-6);
  const std::string text = r.toText();
  EXPECT_NE(text.find("constraint_residual:"), std::string::npos);
  EXPECT_NE(text.find("result: PASS"), std::string::npos);
  const std::string csv = r.toCsv();
  EXPECT_EQ(csv.rfind("mode,target,beta,", 0), 0u);
  EXPECT_EQ(csv.back(), '\n');
  EXPECT_EQ(r.toCsv(false).find("mode,"), std::string::npos);
}

TEST(Report, VerifyFailsForIdentity) {
  const SampleFit f = sampleWorld(6, 1, 1500, 6);
  const VerificationReport r = verifyTransform(
      AffineTransform::identity(6), f.x, f.source, ConstraintTarget::zero());
  EXPECT_FALSE(r.pass());
  EXPECT_NE(r.toText().find("result: FAIL"), std::string::npos);
}

TEST(Report, MidSteerWithMappedTarget) {
  const SampleFit f = sampleWorld(7, 2, 2000, 7);
  const AffineTransform t = fitMidSteer(f.mean, f.cov, f.s1, f.s2);
  VerifyOptions opts;
  opts.oracle = true;
  const VerificationReport r = verifyTransform(
      t, f.x, f.source, ConstraintTarget::mapTo(f.target), opts);
  EXPECT_TRUE(r.pass()) << r.toText();
  EXPECT_EQ(r.target, TargetKind::MapTo);
  // No guardedness check for a nonzero target.
  for (const Check& c : r.checks) EXPECT_NE(c.name, "guardedness");
}

}  // namespace
}  // namespace conceptsteer
