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

#pragma once

// Synthetic representation worlds with planted linear concepts.
//
// Each sample draws concept indicators z (independent Bernoulli draws, or one
// categorical draw when concepts are mutually exclusive) and is
//
//     x = base + sum_c z_c * gap_c * u_c + L eps,   eps ~ N(0, I),  L L^T = N
//
// The exact population moments of this model are returned next to the
// samples. Randomness comes from a counter-based generator, so any sample
// can be regenerated independently of the others.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "conceptsteer/errors.hpp"
#include "conceptsteer/linalg.hpp"
#include "conceptsteer/moments.hpp"

namespace conceptsteer {

/// Stateless generator: every (stream, counter) pair maps to a fixed 64-bit
/// value through two rounds of the splitmix64 finalizer.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : key_(mix(seed ^ 0x6a09e667f3bcc909ULL)) {}

  std::uint64_t bits(std::uint64_t stream, std::uint64_t counter) const {
    return mix(mix(key_ ^ mix(stream + 0x9e3779b97f4a7c15ULL)) +
               counter * 0xd1b54a32d192ed03ULL);
  }

  /// Uniform in [0, 1).
  double uniform(std::uint64_t stream, std::uint64_t counter) const {
    return static_cast<double>(bits(stream, counter) >> 11) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller on two consecutive counters.
  double normal(std::uint64_t stream, std::uint64_t counter) const {
    const double u1 = 1.0 - uniform(stream, 2 * counter);  // (0, 1]
    const double u2 = uniform(stream, 2 * counter + 1);
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  Vector normalVector(std::uint64_t stream, Index d,
                      std::uint64_t offset = 0) const {
    Vector v(d);
    for (Index j = 0; j < d; ++j) v(j) = normal(stream, offset + j);
    return v;
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t key_;
};

struct ConceptSpec {
  Vector direction;  // normalized on generation
  double positive_fraction = 0.5;
  double gap = 1.0;
};

struct ConceptWorldSpec {
  Index dim = 0;
  std::vector<ConceptSpec> concepts;
  Matrix noise_covariance;
  Vector base_mean;  // empty means zero
  Index sample_count = 0;
  std::uint64_t seed = 0;
  bool exclusive = false;  // at most one concept per sample

  void validate() const {
    auto bad = [](const std::string& why) { throw Error(Errc::InvalidSpec, why); };
    if (dim <= 0) bad("dim must be positive");
    if (sample_count < 0) bad("sample count must be >= 0");
    if (noise_covariance.rows() != dim || noise_covariance.cols() != dim) {
      bad("noise covariance must be dim x dim");
    }
    if (base_mean.size() != 0 && base_mean.size() != dim) {
      bad("base mean must have length dim");
    }
    double total = 0.0;
    for (const ConceptSpec& c : concepts) {
      if (c.direction.size() != dim) bad("concept direction must have length dim");
      if (!c.direction.allFinite() || c.direction.norm() == 0.0) {
        bad("concept direction must be finite and nonzero");
      }
      if (!(c.positive_fraction > 0.0 && c.positive_fraction < 1.0)) {
        bad("positive fraction must lie in (0, 1)");
      }
      if (!(c.gap >= 0.0) || !std::isfinite(c.gap)) bad("gap must be >= 0");
      total += c.positive_fraction;
    }
    if (exclusive && total > 1.0 + 1e-12) {
      bad("exclusive concept fractions sum to more than 1");
    }
    try {
      eigDecomposePsd(noise_covariance);
    } catch (const Error& e) {
      bad(std::string("noise covariance: ") + e.what());
    }
  }

  double totalFraction() const {
    double total = 0.0;
    for (const ConceptSpec& c : concepts) total += c.positive_fraction;
    return total;
  }
};

struct PopulationMoments {
  Vector mean;
  Matrix cov_xx;
  Matrix cov_xz;          // d x k, one column per concept
  Matrix mean_gap;        // d x k, E[X | z_c = 1] - E[X | z_c = 0]
  Vector positive_fraction;
};

struct GeneratedWorld {
  Matrix activations;
  ConceptLabels labels;
  PopulationMoments population;
  // Whether the concept columns partition the sample (single binary concept
  // with its complement, or exclusive concepts whose fractions sum to one).
  // The bidirectional switch presumes this; the directed map does not.
  bool partition_assumption_holds = false;
};

namespace detail {
// Stream ids: 0 categorical draws, 1 + c Bernoulli draws of concept c,
// noise on a dedicated high stream.
constexpr std::uint64_t kCategoricalStream = 0;
constexpr std::uint64_t kNoiseStream = 1ULL << 32;
}  // namespace detail

inline PopulationMoments populationMoments(const ConceptWorldSpec& spec) {
  const Index d = spec.dim;
  const Index k = static_cast<Index>(spec.concepts.size());
  const Vector base = spec.base_mean.size() ? spec.base_mean : Vector::Zero(d);

  Matrix shifts(d, k);  // gap_c * u_c
  Vector p(k);
  for (Index c = 0; c < k; ++c) {
    const ConceptSpec& cs = spec.concepts[c];
    shifts.col(c) = cs.gap * cs.direction.normalized();
    p(c) = cs.positive_fraction;
  }

  PopulationMoments pop;
  pop.positive_fraction = p;
  pop.mean = base + shifts * p;

  // Cov(z): diag(p(1-p)) for independent draws, diag(p) - p p^T for one
  // categorical draw.
  Matrix cov_z;
  if (spec.exclusive) {
    cov_z = Matrix(p.asDiagonal()) - p * p.transpose();
  } else {
    cov_z = Matrix((p.array() * (1.0 - p.array())).matrix().asDiagonal());
  }
  pop.cov_xx = spec.noise_covariance + shifts * cov_z * shifts.transpose();
  pop.cov_xx = symmetrize(pop.cov_xx);

  // Conditional mean gaps, then Cov(X, z_c) = p(1-p) (E[X|1] - E[X|0]).
  pop.mean_gap.resize(d, k);
  pop.cov_xz.resize(d, k);
  for (Index c = 0; c < k; ++c) {
    Vector gap = shifts.col(c);
    if (spec.exclusive) {
      // Given z_c = 0 the other concepts occur with p_a / (1 - p_c).
      for (Index a = 0; a < k; ++a) {
        if (a != c) gap -= shifts.col(a) * (p(a) / (1.0 - p(c)));
      }
    }
    pop.mean_gap.col(c) = gap;
    pop.cov_xz.col(c) = p(c) * (1.0 - p(c)) * gap;
  }
  return pop;
}

inline GeneratedWorld generate(const ConceptWorldSpec& spec) {
  spec.validate();
  const Index d = spec.dim;
  const Index k = static_cast<Index>(spec.concepts.size());
  const Index n = spec.sample_count;
  const CounterRng rng(spec.seed);
  const Matrix noise_factor = sqrtPsd(spec.noise_covariance);
  const Vector base = spec.base_mean.size() ? spec.base_mean : Vector::Zero(d);

  Matrix shifts(d, k);
  for (Index c = 0; c < k; ++c) {
    shifts.col(c) = spec.concepts[c].gap * spec.concepts[c].direction.normalized();
  }

  GeneratedWorld world;
  world.activations.resize(n, d);
  LabelMatrix z = LabelMatrix::Zero(n, k);
  for (Index i = 0; i < n; ++i) {
    const auto row = static_cast<std::uint64_t>(i);
    if (spec.exclusive) {
      const double u = rng.uniform(detail::kCategoricalStream, row);
      double cumulative = 0.0;
      for (Index c = 0; c < k; ++c) {
        cumulative += spec.concepts[c].positive_fraction;
        if (u < cumulative) {
          z(i, c) = 1;
          break;
        }
      }
    } else {
      for (Index c = 0; c < k; ++c) {
        const double u = rng.uniform(1 + static_cast<std::uint64_t>(c), row);
        z(i, c) = u < spec.concepts[c].positive_fraction ? 1 : 0;
      }
    }
    Vector x = base + noise_factor * rng.normalVector(detail::kNoiseStream, d,
                                                      row * static_cast<std::uint64_t>(d));
    for (Index c = 0; c < k; ++c) {
      if (z(i, c)) x += shifts.col(c);
    }
    world.activations.row(i) = x.transpose();
  }
  world.labels = ConceptLabels(std::move(z));
  world.population = populationMoments(spec);
  world.partition_assumption_holds =
      k == 1 || (spec.exclusive && std::abs(spec.totalFraction() - 1.0) <= 1e-12);
  return world;
}

/// Random unit vector in R^d from the given seed.
inline Vector randomUnitVector(Index d, std::uint64_t seed) {
  const CounterRng rng(seed);
  Vector v = rng.normalVector(7, d);
  while (v.norm() == 0.0) v = rng.normalVector(8, d, d);
  return v.normalized();
}

/// A world with k random concepts: unit directions, fractions in [0.3, 0.7],
/// gaps in [1, 3], noise G G^T / d + I / 2.
inline ConceptWorldSpec randomWorldSpec(Index d, Index k, Index n,
                                        std::uint64_t seed,
                                        bool exclusive = false) {
  const CounterRng rng(seed ^ 0x5851f42d4c957f2dULL);
  ConceptWorldSpec spec;
  spec.dim = d;
  spec.sample_count = n;
  spec.seed = seed;
  spec.exclusive = exclusive;
  Matrix g(d, d);
  for (Index i = 0; i < d; ++i) {
    for (Index j = 0; j < d; ++j) g(i, j) = rng.normal(11, static_cast<std::uint64_t>(i * d + j));
  }
  spec.noise_covariance =
      symmetrize(g * g.transpose() / static_cast<double>(d)) +
      0.5 * Matrix::Identity(d, d);
  spec.base_mean = rng.normalVector(12, d);
  for (Index c = 0; c < k; ++c) {
    const auto cc = static_cast<std::uint64_t>(c);
    ConceptSpec concept_spec;
    concept_spec.direction = rng.normalVector(100 + cc, d);
    concept_spec.positive_fraction = 0.3 + 0.4 * rng.uniform(13, cc);
    if (exclusive) concept_spec.positive_fraction /= static_cast<double>(k);
    concept_spec.gap = 1.0 + 2.0 * rng.uniform(14, cc);
    spec.concepts.push_back(std::move(concept_spec));
  }
  return spec;
}

/// Population inputs with zero mean and identity covariance whose single
/// concept has cross-covariance c s, c > 0.
struct StandardizedInstance {
  Vector mean;
  Matrix cov_xx;
  Matrix cov_xz;  // d x 1
  Vector direction;
  double positive_fraction = 0.5;
  double gap = 1.0;
};

inline StandardizedInstance exactStandardizedInstance(Index d, const Vector& s,
                                                      std::uint64_t seed) {
  if (s.size() != d || std::abs(s.norm() - 1.0) > 1e-12) {
    throw Error(Errc::InvalidSpec, "direction must be a unit vector of length d");
  }
  const CounterRng rng(seed);
  StandardizedInstance out;
  out.mean = Vector::Zero(d);
  out.cov_xx = Matrix::Identity(d, d);
  out.direction = s;
  out.positive_fraction = 0.2 + 0.6 * rng.uniform(0, 0);
  // gap <= 1 keeps Sigma_XX - Sigma_XZ Sigma_ZZ^{-1} Sigma_ZX PSD.
  out.gap = 0.5 + 0.5 * rng.uniform(0, 1);
  const double p = out.positive_fraction;
  out.cov_xz = (p * (1.0 - p) * out.gap) * s;
  return out;
}

}  // namespace conceptsteer
