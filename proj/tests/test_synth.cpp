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
#include "test_support.hpp"

namespace conceptsteer {
namespace {

ConceptWorldSpec singleConcept(Index d, double p, double gap, Index n,
                               std::uint64_t seed) {
  ConceptWorldSpec spec;
  spec.dim = d;
  spec.sample_count = n;
  spec.seed = seed;
  spec.noise_covariance = Matrix::Identity(d, d);
  Vector u = Vector::Zero(d);
  u(0) = 1.0;
  spec.concepts.push_back({u, p, gap});
  return spec;
}

TEST(CounterRng, StatelessAndSeedSensitive) {
  const CounterRng a(5), b(5), c(6);
  EXPECT_EQ(a.bits(3, 17), b.bits(3, 17));
  EXPECT_NE(a.bits(3, 17), c.bits(3, 17));
  EXPECT_NE(a.bits(3, 17), a.bits(4, 17));
  EXPECT_NE(a.bits(3, 17), a.bits(3, 18));
  for (std::uint64_t i = 0; i < 1000; ++i) {
    const double u = a.uniform(0, i);
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
    EXPECT_TRUE(std::isfinite(a.normal(1, i)));
  }
}

TEST(CounterRng, NormalMoments) {
  const CounterRng rng(11);
  const int n = 200000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal(2, static_cast<std::uint64_t>(i));
    sum += z;
    sq += z * z;
  }
  EXPECT_NEAR(sum / n, 0.0, 0.01);
  EXPECT_NEAR(sq / n, 1.0, 0.02);
}

TEST(Generate, DeterministicForSeed) {
  const ConceptWorldSpec spec = randomWorldSpec(5, 2, 300, 42);
  const GeneratedWorld a = generate(spec);
  const GeneratedWorld b = generate(spec);
  EXPECT_TRUE(a.activations == b.activations);
  EXPECT_TRUE(a.labels.indicators() == b.labels.indicators());
  ConceptWorldSpec other = spec;
  other.seed = 43;
  EXPECT_FALSE(generate(other).activations == a.activations);
}

TEST(Generate, PrefixStableAcrossSampleCounts) {
  ConceptWorldSpec spec = randomWorldSpec(4, 1, 100, 7);
  const GeneratedWorld small = generate(spec);
  spec.sample_count = 250;
  const GeneratedWorld large = generate(spec);
  EXPECT_TRUE(large.activations.topRows(100) == small.activations);
}

TEST(Generate, ZeroSamples) {
  const GeneratedWorld w = generate(randomWorldSpec(3, 2, 0, 1));
  EXPECT_EQ(w.activations.rows(), 0);
  EXPECT_EQ(w.labels.sampleCount(), 0);
  EXPECT_EQ(w.labels.labelDim(), 2);
}

TEST(Population, CrossCovarianceIdentity) {
  // Cov(X, z) = p (1 - p) (E[X | z = 1] - E[X | z = 0]) for binary z.
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    for (bool exclusive : {false, true}) {
      const ConceptWorldSpec spec = randomWorldSpec(6, 3, 0, seed, exclusive);
      const PopulationMoments pop = populationMoments(spec);
      for (Index c = 0; c < 3; ++c) {
        const double p = pop.positive_fraction(c);
        EXPECT_LE((pop.cov_xz.col(c) - p * (1 - p) * pop.mean_gap.col(c)).norm(),
                  1e-14);
      }
    }
  }
}

TEST(Population, HandWorkedSingleConcept) {
  const PopulationMoments pop =
      populationMoments(singleConcept(3, 0.5, 2.0, 0, 0));
  // p(1-p) g u = 0.25 * 2 * e1
  EXPECT_NEAR(pop.cov_xz(0, 0), 0.5, 1e-15);
  EXPECT_NEAR(pop.cov_xz.col(0).tail(2).norm(), 0.0, 1e-15);
  EXPECT_NEAR(pop.mean(0), 1.0, 1e-15);
  // Var(X_0) = 1 + g^2 p (1 - p) = 2
  EXPECT_NEAR(pop.cov_xx(0, 0), 2.0, 1e-15);
}

TEST(Population, ZeroGapLeavesNoSignal) {
  const PopulationMoments pop =
      populationMoments(singleConcept(4, 0.3, 0.0, 0, 0));
  EXPECT_TRUE(pop.cov_xz.isZero(0.0));
  EXPECT_TRUE(pop.cov_xx.isApprox(Matrix::Identity(4, 4)));
}

TEST(Population, SampleMomentsConverge) {
  for (bool exclusive : {false, true}) {
    const ConceptWorldSpec spec = randomWorldSpec(6, 2, 50000, 3, exclusive);
    const GeneratedWorld w = generate(spec);
    const Matrix cov = testing::twoPassCovariance(w.activations);
    const Matrix xz =
        testing::twoPassCrossCovariance(w.activations, w.labels.asMatrix());
    EXPECT_LE(testing::relativeError(cov, w.population.cov_xx), 0.05);
    EXPECT_LE(testing::relativeError(xz, w.population.cov_xz), 0.05);
    EXPECT_LE((testing::twoPassMean(w.activations) - w.population.mean).norm(),
              0.05 * (1.0 + w.population.mean.norm()));
  }
}

TEST(Generate, PartitionFlag) {
  EXPECT_TRUE(generate(randomWorldSpec(3, 1, 10, 0)).partition_assumption_holds);
  EXPECT_FALSE(generate(randomWorldSpec(3, 2, 10, 0)).partition_assumption_holds);
  ConceptWorldSpec spec = randomWorldSpec(3, 2, 200, 0, true);
  EXPECT_FALSE(generate(spec).partition_assumption_holds);
  spec.concepts[0].positive_fraction = 0.4;
  spec.concepts[1].positive_fraction = 0.6;
  const GeneratedWorld w = generate(spec);
  EXPECT_TRUE(w.partition_assumption_holds);
  EXPECT_TRUE(w.labels.isPartitioning());
}

TEST(Generate, ExclusiveLabelsAreOneHotOrEmpty) {
  const GeneratedWorld w = generate(randomWorldSpec(4, 3, 2000, 9, true));
  for (Index i = 0; i < w.labels.sampleCount(); ++i) {
    EXPECT_LE(w.labels.indicators().row(i).cast<int>().sum(), 1);
  }
}

TEST(Spec, Validation) {
  auto expectInvalid = [](const ConceptWorldSpec& s) {
    try {
      s.validate();
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), Errc::InvalidSpec);
    }
  };
  ConceptWorldSpec s = singleConcept(3, 0.5, 1.0, 10, 0);
  s.validate();
  ConceptWorldSpec bad = s;
  bad.concepts[0].positive_fraction = 1.0;
  expectInvalid(bad);
  bad = s;
  bad.concepts[0].direction.setZero();
  expectInvalid(bad);
  bad = s;
  bad.concepts[0].gap = -1.0;
  expectInvalid(bad);
  bad = s;
  bad.noise_covariance(0, 0) = -1.0;
  expectInvalid(bad);
  bad = s;
  bad.noise_covariance = Matrix::Identity(2, 2);
  expectInvalid(bad);
  bad = s;
  bad.exclusive = true;
  bad.concepts.push_back(bad.concepts[0]);
  bad.concepts[1].positive_fraction = 0.6;
  expectInvalid(bad);
}

TEST(Standardized, Construction) {
  const Vector s = randomUnitVector(5, 3);
  EXPECT_NEAR(s.norm(), 1.0, 1e-15);
  const StandardizedInstance in = exactStandardizedInstance(5, s, 3);
  EXPECT_TRUE(in.cov_xx.isIdentity(0.0));
  EXPECT_TRUE(in.mean.isZero(0.0));
  const double c = in.cov_xz.col(0).dot(s);
  EXPECT_GT(c, 0.0);
  EXPECT_LE((in.cov_xz.col(0) - c * s).norm(), 1e-15);
  EXPECT_THROW(exactStandardizedInstance(5, 2.0 * s, 3), Error);
  EXPECT_THROW(exactStandardizedInstance(4, s, 3), Error);
}

}  // namespace
}  // namespace conceptsteer
