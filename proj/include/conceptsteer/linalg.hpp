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

// Dense symmetric and PSD primitives built on one sorted eigendecomposition.
// Every spectral routine is a full decomposition with no seed, so a fixed
// input always gives the same output.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include "conceptsteer/errors.hpp"

namespace conceptsteer {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Decides which singular / eigen values count as zero.
///
/// A value is treated as zero when it is at or below
/// max(relative * largest, absolute_floor). When `relative_tolerance` is unset
/// the relative factor is max(rows, cols) * machine epsilon, the usual
/// numerical-rank convention.
///
/// `range_tolerance` is the relative residual accepted by columnSpaceContains.
struct RankPolicy {
  std::optional<double> relative_tolerance;
  double absolute_floor = 0.0;
  double range_tolerance = 1e-8;

  void validate() const {
    if ((relative_tolerance && !(*relative_tolerance >= 0.0)) ||
        !(absolute_floor >= 0.0) || !(range_tolerance >= 0.0)) {
      throw Error(Errc::InvalidSpec, "rank policy tolerances must be >= 0");
    }
  }

  double relativeFactor(Index rows, Index cols) const {
    if (relative_tolerance) return *relative_tolerance;
    return static_cast<double>(std::max<Index>({rows, cols, 1})) *
           std::numeric_limits<double>::epsilon();
  }

  double threshold(double largest, Index rows, Index cols) const {
    return std::max(relativeFactor(rows, cols) * std::abs(largest),
                    absolute_floor);
  }
};

/// Eigenpairs of a symmetric PSD matrix, eigenvalues sorted descending.
struct EigenSpectrum {
  Vector eigenvalues;
  Matrix eigenvectors;  // columns, orthonormal
  Index clamped_count = 0;

  Matrix reconstruct() const {
    return eigenvectors * eigenvalues.asDiagonal() * eigenvectors.transpose();
  }
};

struct WhiteningContext {
  Matrix whitener;       // W = (Sigma^{1/2})^+
  Matrix whitener_pinv;  // W^+ = Sigma^{1/2} restricted to its range
  Matrix range_basis;    // d x rank, orthonormal basis of Im(Sigma)
  Index rank = 0;

  Index dim() const { return whitener.rows(); }
  Matrix rangeProjector() const {
    return range_basis * range_basis.transpose();
  }
};

struct ContainmentResult {
  bool contained = false;
  double residual = 0.0;  // ||(I - P_Im(A)) B||_F, absolute
};

// ---------------------------------------------------------------------------

inline bool allFinite(const Matrix& m) { return m.allFinite(); }

inline void requireFinite(const Matrix& m, const char* what) {
  if (!m.allFinite()) {
    throw Error(Errc::NonFiniteValue, std::string(what) + " has NaN/Inf");
  }
}

inline Matrix symmetrize(const Matrix& m) {
  return 0.5 * (m + m.transpose());
}

inline void requireSymmetric(const Matrix& m, const char* what) {
  if (m.rows() != m.cols()) {
    throw Error(Errc::NotSquare, std::string(what) + " is " +
                                     std::to_string(m.rows()) + "x" +
                                     std::to_string(m.cols()));
  }
  requireFinite(m, what);
  const double scale = m.cwiseAbs().maxCoeff();
  const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12 * scale) {
    throw Error(Errc::NotSymmetric, std::string(what) + " asymmetry " +
                                        std::to_string(asym));
  }
}

inline EigenSpectrum eigDecomposePsd(const Matrix& m,
                                     const RankPolicy& policy = {}) {
  policy.validate();
  requireSymmetric(m, "matrix");
  const Index d = m.rows();
  EigenSpectrum out;
  if (d == 0) {
    out.eigenvalues = Vector(0);
    out.eigenvectors = Matrix(0, 0);
    return out;
  }

  const Matrix sym = symmetrize(m);
  Eigen::SelfAdjointEigenSolver<Matrix> solver(sym, Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) {
    throw Error(Errc::NonFiniteValue, "eigensolver failed to converge");
  }
  // Eigen returns ascending order.
  out.eigenvalues = solver.eigenvalues().reverse();
  out.eigenvectors = solver.eigenvectors().rowwise().reverse();

  const double largest = out.eigenvalues.cwiseAbs().maxCoeff();
  const double clamp = policy.threshold(largest, d, d);
  const double indefinite =
      std::max(clamp, policy.relativeFactor(d, d) * sym.norm());
  for (Index i = 0; i < d; ++i) {
    double& lambda = out.eigenvalues(i);
    if (lambda >= 0.0) continue;
    if (lambda < -indefinite) {
      throw Error(Errc::IndefiniteMatrix,
                  "eigenvalue " + std::to_string(lambda) + " below -" +
                      std::to_string(indefinite));
    }
    lambda = 0.0;
    ++out.clamped_count;
  }
  return out;
}

inline Matrix sqrtPsd(const Matrix& m, const RankPolicy& policy = {}) {
  const EigenSpectrum spec = eigDecomposePsd(m, policy);
  const Vector roots = spec.eigenvalues.cwiseSqrt();
  return spec.eigenvectors * roots.asDiagonal() *
         spec.eigenvectors.transpose();
}

inline Matrix pinvPsd(const Matrix& m, const RankPolicy& policy = {}) {
  const EigenSpectrum spec = eigDecomposePsd(m, policy);
  const Index d = m.rows();
  if (d == 0) return Matrix(0, 0);
  const double cut = policy.threshold(spec.eigenvalues(0), d, d);
  Vector inv = Vector::Zero(d);
  for (Index i = 0; i < d; ++i) {
    if (spec.eigenvalues(i) > cut) inv(i) = 1.0 / spec.eigenvalues(i);
  }
  return spec.eigenvectors * inv.asDiagonal() * spec.eigenvectors.transpose();
}

/// Pseudo-inverse of a general matrix together with the numerical rank and
/// the thin left singular basis of its column space.
struct RectPinv {
  Matrix inverse;     // cols x rows
  Matrix range_basis; // rows x rank
  Vector singular_values;
  Index rank = 0;
};

inline RectPinv pinvRectDetailed(const Matrix& m,
                                 const RankPolicy& policy = {}) {
  policy.validate();
  requireFinite(m, "matrix");
  RectPinv out;
  out.inverse = Matrix::Zero(m.cols(), m.rows());
  out.range_basis = Matrix(m.rows(), 0);
  if (m.size() == 0) {
    out.singular_values = Vector(0);
    return out;
  }
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  out.singular_values = svd.singularValues();
  const double largest =
      out.singular_values.size() ? out.singular_values(0) : 0.0;
  const double cut = policy.threshold(largest, m.rows(), m.cols());
  Index r = 0;
  while (r < out.singular_values.size() && out.singular_values(r) > cut &&
         out.singular_values(r) > 0.0) {
    ++r;
  }
  out.rank = r;
  if (r == 0) return out;
  const Matrix u = svd.matrixU().leftCols(r);
  const Matrix v = svd.matrixV().leftCols(r);
  const Vector inv = out.singular_values.head(r).cwiseInverse();
  out.inverse = v * inv.asDiagonal() * u.transpose();
  out.range_basis = u;
  return out;
}

inline Matrix pinvRect(const Matrix& m, const RankPolicy& policy = {}) {
  return pinvRectDetailed(m, policy).inverse;
}

inline Index numericalRank(const Matrix& m, const RankPolicy& policy = {}) {
  return pinvRectDetailed(m, policy).rank;
}

/// W = (Sigma^{1/2})^+ and its pseudo-inverse. Eigenvalues of Sigma at or
/// below the policy threshold are dropped from both, so W * W^+ is the
/// orthogonal projector onto the numerical range. For full-rank Sigma this is
/// the familiar Sigma^{-1/2}.
inline WhiteningContext whiten(const Matrix& cov_xx,
                               const RankPolicy& policy = {}) {
  const EigenSpectrum spec = eigDecomposePsd(cov_xx, policy);
  const Index d = cov_xx.rows();
  WhiteningContext ctx;
  ctx.whitener = Matrix::Zero(d, d);
  ctx.whitener_pinv = Matrix::Zero(d, d);
  ctx.range_basis = Matrix(d, 0);
  if (d == 0) return ctx;

  const double cut = policy.threshold(spec.eigenvalues(0), d, d);
  Index r = 0;
  while (r < d && spec.eigenvalues(r) > cut && spec.eigenvalues(r) > 0.0) ++r;
  ctx.rank = r;
  if (r == 0) return ctx;

  const Matrix u = spec.eigenvectors.leftCols(r);
  const Vector roots = spec.eigenvalues.head(r).cwiseSqrt();
  ctx.whitener = u * roots.cwiseInverse().asDiagonal() * u.transpose();
  ctx.whitener_pinv = u * roots.asDiagonal() * u.transpose();
  ctx.range_basis = u;
  return ctx;
}

inline ContainmentResult columnSpaceContains(const Matrix& a, const Matrix& b,
                                             const RankPolicy& policy = {}) {
  if (a.rows() != b.rows()) {
    throw Error(Errc::DimensionMismatch,
                "column-space test needs equal row counts (" +
                    std::to_string(a.rows()) + " vs " +
                    std::to_string(b.rows()) + ")");
  }
  const RectPinv basis = pinvRectDetailed(a, policy);
  const Matrix& u = basis.range_basis;
  const Matrix outside = b - u * (u.transpose() * b);
  ContainmentResult res;
  res.residual = outside.norm();
  res.contained = res.residual <= policy.range_tolerance * b.norm();
  return res;
}

}  // namespace conceptsteer
