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

// Independent checks for fitted transforms. The two optimality oracles
// never touch the closed forms: one solves the dense KKT system, the other
// runs penalty-method gradient descent.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "conceptsteer/errors.hpp"
#include "conceptsteer/linalg.hpp"
#include "conceptsteer/moments.hpp"
#include "conceptsteer/transforms.hpp"

namespace conceptsteer {

enum class TargetKind { Zero, Negated, MapTo };

constexpr std::string_view targetName(TargetKind kind) noexcept {
  switch (kind) {
    case TargetKind::Zero: return "zero";
    case TargetKind::Negated: return "negated";
    case TargetKind::MapTo: return "mapto";
  }
  return "unknown";
}

inline std::optional<TargetKind> parseTarget(std::string_view name) {
  for (TargetKind k : {TargetKind::Zero, TargetKind::Negated, TargetKind::MapTo}) {
    if (targetName(k) == name) return k;
  }
  return std::nullopt;
}

constexpr TargetKind defaultTarget(Mode mode) noexcept {
  switch (mode) {
    case Mode::VanillaSwitch:
    case Mode::LeaceSwitch:
      return TargetKind::Negated;
    case Mode::MidSteer:
      return TargetKind::MapTo;
    default:
      return TargetKind::Zero;
  }
}

/// What Cov(f(X), Z1) should equal. MapTo carries the Z2 labels.
struct ConstraintTarget {
  TargetKind kind = TargetKind::Zero;
  std::optional<ConceptLabels> mapped;  // Z2, only for MapTo

  static ConstraintTarget zero() { return {TargetKind::Zero, std::nullopt}; }
  static ConstraintTarget negated() {
    return {TargetKind::Negated, std::nullopt};
  }
  static ConstraintTarget mapTo(ConceptLabels z2) {
    return {TargetKind::MapTo, std::move(z2)};
  }
};

inline Matrix targetCrossCovariance(const Matrix& data,
                                    const ConceptLabels& labels,
                                    const ConstraintTarget& target) {
  switch (target.kind) {
    case TargetKind::Zero:
      return Matrix::Zero(data.cols(), labels.labelDim());
    case TargetKind::Negated:
      return -crossCovariance(data, labels);
    case TargetKind::MapTo:
      if (!target.mapped) {
        throw Error(Errc::DimensionMismatch, "mapto target needs Z2 labels");
      }
      if (target.mapped->labelDim() != labels.labelDim()) {
        throw Error(Errc::DimensionMismatch,
                    "Z1 and Z2 label blocks differ in width");
      }
      return crossCovariance(data, *target.mapped);
  }
  return {};
}

/// ||Cov(f(X), Z1) - T||_F / (1 + ||T||_F) on the given sample.
inline double constraintResidual(const AffineTransform& t, const Matrix& data,
                                 const ConceptLabels& labels,
                                 const ConstraintTarget& target) {
  const Matrix transformed = applyTransform(t, data);
  const Matrix achieved = crossCovariance(transformed, labels);
  const Matrix wanted = targetCrossCovariance(data, labels, target);
  return (achieved - wanted).norm() / (1.0 + wanted.norm());
}

/// Sample mean of ||A x + b - x||^2.
inline double disturbanceObjective(const AffineTransform& t,
                                   const Matrix& data) {
  if (data.cols() != t.dim()) {
    throw Error(Errc::DimensionMismatch, "data dim != transform dim");
  }
  if (data.rows() == 0) return 0.0;
  const Matrix moved = applyTransform(t, data) - data;
  return moved.rowwise().squaredNorm().mean();
}

/// E||A X + b - X||^2 under mean mu and covariance Sigma:
/// tr((A - I) Sigma (A - I)^T) + ||(A - I) mu + b||^2.
inline double expectedDisturbance(const Matrix& a, const Vector& b,
                                  const Vector& mean, const Matrix& cov_xx) {
  const Matrix shift = a - Matrix::Identity(a.rows(), a.cols());
  const double spread = (shift * cov_xx * shift.transpose()).trace();
  return spread + (shift * mean + b).squaredNorm();
}

inline double expectedDisturbance(const AffineTransform& t, const Vector& mean,
                                  const Matrix& cov_xx) {
  return expectedDisturbance(t.a, t.b, mean, cov_xx);
}

struct OracleSolution {
  Matrix a;
  Vector b;
  Matrix multiplier;  // Lambda, d x l
  double objective = 0.0;
};

/// Minimizes E||A X + b - X||^2 subject to A Sigma_XZ1 = target by solving
/// the stationarity and feasibility equations
///
///     (A - I) Sigma_XX + Lambda Sigma_XZ1^T = 0,   A Sigma_XZ1 = target
///
/// as one dense linear system in vec(A), vec(Lambda). Restricted to
/// positive definite Sigma_XX and full-column-rank Sigma_XZ1, where the
/// minimizer is unique.
inline OracleSolution kktOracle(const Vector& mean, const Matrix& cov_xx,
                                const Matrix& cov_xz1, const Matrix& target) {
  requireSymmetric(cov_xx, "covariance");
  const Index d = cov_xx.rows();
  const Index l = cov_xz1.cols();
  if (mean.size() != d || cov_xz1.rows() != d || target.rows() != d ||
      target.cols() != l) {
    throw Error(Errc::DimensionMismatch, "KKT oracle inputs disagree in shape");
  }
  Eigen::LLT<Matrix> chol(symmetrize(cov_xx));
  if (chol.info() != Eigen::Success) {
    throw Error(Errc::SingularSystem,
                "oracle needs a positive definite covariance");
  }

  // Column-major vectorization: A(i, j) -> i + j d, Lambda(i, c) -> d^2 + i + c d.
  const Index na = d * d;
  const Index size = na + d * l;
  Matrix system = Matrix::Zero(size, size);
  Vector rhs = Vector::Zero(size);
  auto a_at = [d](Index i, Index j) { return i + j * d; };
  auto lam_at = [d, na](Index i, Index c) { return na + i + c * d; };

  Index row = 0;
  for (Index j = 0; j < d; ++j) {
    for (Index i = 0; i < d; ++i, ++row) {
      // sum_m A(i,m) S(m,j) + sum_c Lambda(i,c) S1(j,c) = S(i,j)
      for (Index m = 0; m < d; ++m) system(row, a_at(i, m)) = cov_xx(m, j);
      for (Index c = 0; c < l; ++c) system(row, lam_at(i, c)) = cov_xz1(j, c);
      rhs(row) = cov_xx(i, j);
    }
  }
  for (Index c = 0; c < l; ++c) {
    for (Index i = 0; i < d; ++i, ++row) {
      // sum_m A(i,m) S1(m,c) = T(i,c)
      for (Index m = 0; m < d; ++m) system(row, a_at(i, m)) = cov_xz1(m, c);
      rhs(row) = target(i, c);
    }
  }

  Eigen::FullPivLU<Matrix> lu(system);
  lu.setThreshold(1e-12);
  if (!lu.isInvertible()) {
    throw Error(Errc::SingularSystem, "KKT system has rank " +
                                          std::to_string(lu.rank()) + " < " +
                                          std::to_string(size));
  }
  const Vector solution = lu.solve(rhs);

  OracleSolution out;
  out.a = Eigen::Map<const Matrix>(solution.data(), d, d);
  out.multiplier = Eigen::Map<const Matrix>(solution.data() + na, d, l);
  out.b = mean - out.a * mean;
  out.objective = expectedDisturbance(out.a, out.b, mean, cov_xx);
  return out;
}

struct PenaltyOptions {
  std::vector<double> weights{1e2, 1e4, 1e6, 1e8};
  int max_iterations_per_weight = 400000;
  double gradient_tolerance = 1e-13;
};

/// Second, slower oracle: Nesterov-accelerated gradient descent with a fixed
/// 1/L step on tr((A - I) S (A - I)^T) + rho ||A S1 - T||_F^2, warm-started
/// through an increasing penalty schedule. Accuracy is O(1/rho_max).
inline Matrix penaltyOracle(const Matrix& cov_xx, const Matrix& cov_xz1,
                            const Matrix& target,
                            const PenaltyOptions& opts = {}) {
  const Index d = cov_xx.rows();
  const Matrix identity = Matrix::Identity(d, d);
  const double lambda_max =
      Eigen::SelfAdjointEigenSolver<Matrix>(symmetrize(cov_xx),
                                            Eigen::EigenvaluesOnly)
          .eigenvalues()
          .maxCoeff();
  const double s1_norm = cov_xz1.size()
                             ? Eigen::JacobiSVD<Matrix>(cov_xz1).singularValues()(0)
                             : 0.0;

  Matrix a = identity;
  for (double rho : opts.weights) {
    const double lipschitz = 2.0 * lambda_max + 2.0 * rho * s1_norm * s1_norm;
    const double step = 1.0 / lipschitz;
    auto gradient = [&](const Matrix& x) -> Matrix {
      return 2.0 * (x - identity) * cov_xx +
             2.0 * rho * (x * cov_xz1 - target) * cov_xz1.transpose();
    };
    Matrix y = a;
    Matrix prev = a;
    double momentum = 1.0;
    const double scale = 1.0 + lipschitz;
    for (int it = 0; it < opts.max_iterations_per_weight; ++it) {
      const Matrix g = gradient(y);
      if (g.norm() <= opts.gradient_tolerance * scale) {
        a = y;
        break;
      }
      a = y - step * g;
      const double next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
      // Restart momentum when the step stops descending.
      if ((a - prev).cwiseProduct(g).sum() > 0.0) {
        momentum = 1.0;
        y = a;
      } else {
        y = a + ((momentum - 1.0) / next) * (a - prev);
        momentum = next;
      }
      prev = a;
    }
  }
  return a;
}

/// Frobenius norm of the ridgeless least-squares coefficients predicting Z
/// from the (centered) representation: ||Sigma_XX^+ Sigma_XZ||_F. Zero iff
/// no affine predictor beats the constant one under squared loss.
///
/// The default policy drops eigenvalues below 1e-9 of the largest, so
/// directions that an erasure collapsed to round-off do not divide noise by
/// noise. When every direction collapses that relative cut is not enough;
/// pass guardednessPolicy(original) to anchor it to the untransformed scale.
inline double guardednessScore(const Matrix& transformed,
                               const ConceptLabels& labels,
                               RankPolicy policy = {1e-9, 0.0, 1e-8}) {
  const Index n = transformed.rows();
  const Index d = transformed.cols();
  if (n != labels.sampleCount()) {
    throw Error(Errc::DimensionMismatch, "data and labels differ in n");
  }
  if (n < d + 2) {
    throw Error(Errc::InsufficientSamples,
                "guardedness needs n >= d + 2 (n=" + std::to_string(n) +
                    ", d=" + std::to_string(d) + ")");
  }
  const Matrix centered = transformed.rowwise() - transformed.colwise().mean();
  const Matrix cov = symmetrize(centered.transpose() * centered) /
                     static_cast<double>(n - 1);
  const Matrix cross = crossCovariance(transformed, labels);
  return (pinvPsd(cov, policy) * cross).norm();
}

/// Cutoff at 1e-9 of the largest covariance eigenvalue of `reference`,
/// applied as an absolute floor as well as a relative one.
inline RankPolicy guardednessPolicy(const Matrix& reference) {
  RankPolicy policy{1e-9, 0.0, 1e-8};
  if (reference.rows() >= 2 && reference.cols() > 0) {
    const Matrix centered = reference.rowwise() - reference.colwise().mean();
    const Matrix cov = symmetrize(centered.transpose() * centered) /
                       static_cast<double>(reference.rows() - 1);
    const double largest =
        Eigen::SelfAdjointEigenSolver<Matrix>(cov, Eigen::EigenvaluesOnly)
            .eigenvalues()
            .maxCoeff();
    policy.absolute_floor = 1e-9 * std::max(largest, 0.0);
  }
  return policy;
}

// ---------------------------------------------------------------------------

struct Check {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  bool pass = false;
};

struct VerificationReport {
  Mode mode = Mode::LeaceErase;
  TargetKind target = TargetKind::Zero;
  double strength = 1.0;
  double constraint_residual = 0.0;
  double objective = 0.0;
  double guardedness = 0.0;
  double guardedness_before = 0.0;
  std::optional<double> oracle_gap;
  std::vector<Check> checks;

  bool pass() const {
    return std::all_of(checks.begin(), checks.end(),
                       [](const Check& c) { return c.pass; });
  }

  std::string toText() const {
    std::ostringstream out;
    out.precision(6);
    out << std::scientific;
    out << "mode: " << modeName(mode) << "\n"
        << "target: " << targetName(target) << "\n"
        << "beta: " << strength << "\n"
        << "constraint_residual: " << constraint_residual << "\n"
        << "disturbance_objective: " << objective << "\n"
        << "guardedness_before: " << guardedness_before << "\n"
        << "guardedness_after: " << guardedness << "\n";
    if (oracle_gap) out << "oracle_gap: " << *oracle_gap << "\n";
    for (const Check& c : checks) {
      out << "check " << c.name << ": " << (c.pass ? "PASS" : "FAIL")
          << " value=" << c.value << " threshold=" << c.threshold << "\n";
    }
    out << "result: " << (pass() ? "PASS" : "FAIL") << "\n";
    return out.str();
  }

  std::string toCsv(bool header = true) const {
    std::ostringstream out;
    out.precision(17);
    if (header) {
      out << "mode,target,beta,constraint_residual,disturbance_objective,"
             "guardedness_before,guardedness_after,oracle_gap,pass\n";
    }
    out << modeName(mode) << ',' << targetName(target) << ',' << strength
        << ',' << constraint_residual << ',' << objective << ','
        << guardedness_before << ',' << guardedness << ',';
    if (oracle_gap) out << *oracle_gap;
    out << ',' << (pass() ? 1 : 0) << "\n";
    return out.str();
  }
};

struct VerifyOptions {
  double residual_threshold = 1e-8;
  // Post/pre guardedness ratio required for a zero target.
  double guardedness_ratio = 1e-6;
  // Compare against the KKT oracle built from the sample moments. Only
  // meaningful when the transform was fitted on this very sample.
  bool oracle = false;
  double oracle_tolerance = 1e-6;
};

inline VerificationReport verifyTransform(const AffineTransform& t,
                                          const Matrix& data,
                                          const ConceptLabels& labels,
                                          const ConstraintTarget& target,
                                          const VerifyOptions& opts = {}) {
  VerificationReport report;
  report.mode = t.mode;
  report.target = target.kind;
  report.strength = t.strength;
  report.constraint_residual = constraintResidual(t, data, labels, target);
  report.objective = disturbanceObjective(t, data);
  report.checks.push_back({"constraint_residual", report.constraint_residual,
                           opts.residual_threshold,
                           report.constraint_residual <= opts.residual_threshold});

  if (data.rows() >= data.cols() + 2) {
    const RankPolicy policy = guardednessPolicy(data);
    report.guardedness_before = guardednessScore(data, labels, policy);
    report.guardedness =
        guardednessScore(applyTransform(t, data), labels, policy);
    if (target.kind == TargetKind::Zero) {
      const double limit = opts.guardedness_ratio * report.guardedness_before;
      report.checks.push_back({"guardedness", report.guardedness, limit,
                               report.guardedness <= limit});
    }
  }

  if (opts.oracle) {
    const Vector mean = data.colwise().mean().transpose();
    const Matrix centered = data.rowwise() - mean.transpose();
    const Matrix cov = symmetrize(centered.transpose() * centered) /
                       static_cast<double>(data.rows() - 1);
    const Matrix s1 = crossCovariance(data, labels);
    const OracleSolution best =
        kktOracle(mean, cov, s1, targetCrossCovariance(data, labels, target));
    const double mine = expectedDisturbance(t, mean, cov);
    const double gap =
        (mine - best.objective) / std::max(std::abs(best.objective), 1e-12);
    report.oracle_gap = gap;
    report.checks.push_back({"oracle_gap", gap, opts.oracle_tolerance,
                             std::abs(gap) <= opts.oracle_tolerance});
  }
  return report;
}

}  // namespace conceptsteer
