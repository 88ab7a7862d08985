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

// Affine concept interventions f(h) = A h + b.
//
// The closed-form solvers share one construction. With W the whitener of
// Sigma_XX and M = W Sigma_XZ, the oblique projector
//
//     P = W^+ (M M^+) W
//
// removes the linear footprint of Z, so erasure is I - beta P and the
// bidirectional switch is the same family at beta = 2. The directed map
// from a source concept block Z1 onto a target block Z2 replaces M M^+ by
// (M2 - M1) M1^+, which reduces to erasure when Sigma_XZ2 = 0 and to the
// switch when Sigma_XZ2 = -Sigma_XZ1. Every solver sets b = mu - A mu, so the
// fitted mean is a fixed point.

#include <optional>
#include <sstream>
#include <string>
#include <string_view>

#include "conceptsteer/errors.hpp"
#include "conceptsteer/linalg.hpp"
#include "conceptsteer/moments.hpp"

namespace conceptsteer {

enum class Mode {
  VanillaAdd,
  VanillaErase,
  VanillaSwitch,
  LeaceErase,
  LeaceSwitch,
  MidSteer,
};

constexpr std::string_view modeName(Mode mode) noexcept {
  switch (mode) {
    case Mode::VanillaAdd: return "vanilla-add";
    case Mode::VanillaErase: return "vanilla-erase";
    case Mode::VanillaSwitch: return "vanilla-switch";
    case Mode::LeaceErase: return "erase";
    case Mode::LeaceSwitch: return "switch";
    case Mode::MidSteer: return "midsteer";
  }
  return "unknown";
}

inline std::optional<Mode> parseMode(std::string_view name) {
  for (Mode m : {Mode::VanillaAdd, Mode::VanillaErase, Mode::VanillaSwitch,
                 Mode::LeaceErase, Mode::LeaceSwitch, Mode::MidSteer}) {
    if (modeName(m) == name) return m;
  }
  return std::nullopt;
}

/// beta = 1 erases, beta = 2 switches; the directed map is canonical at 1.
constexpr double defaultBeta(Mode mode) noexcept {
  switch (mode) {
    case Mode::VanillaSwitch:
    case Mode::LeaceSwitch:
      return 2.0;
    default:
      return 1.0;
  }
}

struct AffineTransform {
  Matrix a;
  Vector b;
  Mode mode = Mode::LeaceErase;
  double strength = 1.0;
  std::string provenance;

  Index dim() const { return a.rows(); }

  Vector operator()(const Vector& h) const { return a * h + b; }

  static AffineTransform identity(Index d, Mode mode = Mode::LeaceErase) {
    return AffineTransform{Matrix::Identity(d, d), Vector::Zero(d), mode, 0.0,
                           {}};
  }
};

/// h_out = weight * h_in + bias
struct LinearLayer {
  Matrix weight;
  Vector bias;

  Index outputDim() const { return weight.rows(); }
  Index inputDim() const { return weight.cols(); }
  Vector operator()(const Vector& h) const { return weight * h + bias; }
};

struct FitOptions {
  RankPolicy policy;
  // Project cross-covariance columns onto Im(Sigma_XX) instead of failing
  // with RangeViolation when sampling noise breaks containment.
  bool project_onto_range = false;
};

// ---------------------------------------------------------------------------
// Vanilla steering

inline Vector vanillaAdd(const Vector& h, const SteeringVector& s,
                         double alpha) {
  if (h.size() != s.dim()) {
    throw Error(Errc::DimensionMismatch, "steering vector dim mismatch");
  }
  return h + alpha * s.direction;
}

inline AffineTransform vanillaAddTransform(const SteeringVector& s,
                                           double alpha) {
  const Index d = s.dim();
  return AffineTransform{Matrix::Identity(d, d), alpha * s.direction,
                         Mode::VanillaAdd, alpha, "vanilla additive steering"};
}

/// A = I - beta s s^T. beta = 1 projects out s, beta = 2 reflects across
/// the hyperplane orthogonal to s; intermediate values interpolate.
inline AffineTransform vanillaEraseMatrix(const SteeringVector& s,
                                          double beta = 1.0) {
  const Index d = s.dim();
  const Vector& u = s.direction;
  return AffineTransform{Matrix::Identity(d, d) - beta * (u * u.transpose()),
                         Vector::Zero(d), Mode::VanillaErase, beta,
                         "vanilla projection steering"};
}

inline AffineTransform vanillaSwitchMatrix(const SteeringVector& s,
                                           double beta = 2.0) {
  AffineTransform t = vanillaEraseMatrix(s, beta);
  t.mode = Mode::VanillaSwitch;
  t.provenance = "vanilla reflection steering";
  return t;
}

// ---------------------------------------------------------------------------
// Closed-form solvers

namespace detail {

inline void checkMoments(const Vector& mean, const Matrix& cov_xx) {
  requireFinite(mean, "mean");
  requireSymmetric(cov_xx, "covariance");
  if (mean.size() != cov_xx.rows()) {
    throw Error(Errc::DimensionMismatch,
                "mean has dim " + std::to_string(mean.size()) +
                    ", covariance is " + std::to_string(cov_xx.rows()));
  }
}

/// Returns cov_xz, possibly projected onto Im(cov_xx).
inline Matrix admitCrossCovariance(const Matrix& cov_xx, const Matrix& cov_xz,
                                   const WhiteningContext& ctx,
                                   const FitOptions& opts, const char* what) {
  if (cov_xz.rows() != cov_xx.rows()) {
    throw Error(Errc::DimensionMismatch,
                std::string(what) + " has " + std::to_string(cov_xz.rows()) +
                    " rows, expected " + std::to_string(cov_xx.rows()));
  }
  requireFinite(cov_xz, what);
  if (opts.project_onto_range) {
    const Matrix& u = ctx.range_basis;
    return u * (u.transpose() * cov_xz);
  }
  const ContainmentResult c = columnSpaceContains(cov_xx, cov_xz, opts.policy);
  if (!c.contained) {
    std::ostringstream msg;
    msg << what << " leaves Im(Sigma_XX): residual " << c.residual
        << " vs norm " << cov_xz.norm();
    throw Error(Errc::RangeViolation, msg.str());
  }
  return cov_xz;
}

inline Matrix sandwich(const WhiteningContext& ctx, const Matrix& inner) {
  return ctx.whitener_pinv * (inner * ctx.whitener);
}

inline AffineTransform finish(Matrix a, const Vector& mean, Mode mode,
                              double beta, std::string provenance) {
  Vector b = mean - a * mean;
  if (!a.allFinite() || !b.allFinite()) {
    throw Error(Errc::NonFiniteValue, "fitted transform is not finite");
  }
  return AffineTransform{std::move(a), std::move(b), mode, beta,
                         std::move(provenance)};
}

inline std::string describe(const WhiteningContext& ctx, Index concept_rank,
                            const FitOptions& opts) {
  std::ostringstream out;
  out.precision(17);
  out << "covariance_rank=" << ctx.rank << " concept_rank=" << concept_rank
      << " rank_rtol="
      << opts.policy.relativeFactor(ctx.dim(), ctx.dim())
      << " rank_atol=" << opts.policy.absolute_floor
      << " projected=" << (opts.project_onto_range ? 1 : 0);
  return out.str();
}

struct ErasureProjector {
  WhiteningContext ctx;
  Matrix projector;
  Index concept_rank = 0;
};

inline ErasureProjector erasureProjector(const Vector& mean,
                                         const Matrix& cov_xx,
                                         const Matrix& cov_xz,
                                         const FitOptions& opts) {
  checkMoments(mean, cov_xx);
  ErasureProjector out;
  out.ctx = whiten(cov_xx, opts.policy);
  const Matrix xz =
      admitCrossCovariance(cov_xx, cov_xz, out.ctx, opts, "cross-covariance");
  const Matrix whitened = out.ctx.whitener * xz;
  const RectPinv inv = pinvRectDetailed(whitened, opts.policy);
  out.concept_rank = inv.rank;
  out.projector = sandwich(out.ctx, whitened * inv.inverse);
  return out;
}

}  // namespace detail

/// Least-squares-optimal affine erasure: A = I - beta W^+ (W S)(W S)^+ W with
/// S = Sigma_XZ. At beta = 1, Cov(AX + b, Z) = 0.
inline AffineTransform fitLeaceErase(const Vector& mean, const Matrix& cov_xx,
                                     const Matrix& cov_xz, double beta = 1.0,
                                     const FitOptions& opts = {}) {
  const auto parts = detail::erasureProjector(mean, cov_xx, cov_xz, opts);
  const Index d = mean.size();
  Matrix a = Matrix::Identity(d, d) - beta * parts.projector;
  return detail::finish(std::move(a), mean, Mode::LeaceErase, beta,
                        detail::describe(parts.ctx, parts.concept_rank, opts));
}

/// Same projector as erasure, default beta = 2, which gives
/// Cov(AX + b, Z) = -Cov(X, Z).
inline AffineTransform fitLeaceSwitch(const Vector& mean, const Matrix& cov_xx,
                                      const Matrix& cov_xz, double beta = 2.0,
                                      const FitOptions& opts = {}) {
  const auto parts = detail::erasureProjector(mean, cov_xx, cov_xz, opts);
  const Index d = mean.size();
  Matrix a = Matrix::Identity(d, d) - beta * parts.projector;
  return detail::finish(std::move(a), mean, Mode::LeaceSwitch, beta,
                        detail::describe(parts.ctx, parts.concept_rank, opts));
}

/// Directed map of a source concept block onto a target block:
/// A = I + beta W^+ (W S2 - W S1)(W S1)^+ W. At beta = 1,
/// Cov(AX + b, Z1) = Cov(X, Z2). Requires W S1 to have full column rank.
inline AffineTransform fitMidSteer(const Vector& mean, const Matrix& cov_xx,
                                   const Matrix& cov_xz_source,
                                   const Matrix& cov_xz_target,
                                   double beta = 1.0,
                                   const FitOptions& opts = {}) {
  detail::checkMoments(mean, cov_xx);
  if (cov_xz_source.cols() != cov_xz_target.cols()) {
    throw Error(Errc::DimensionMismatch,
                "source and target concept blocks differ in width");
  }
  const WhiteningContext ctx = whiten(cov_xx, opts.policy);
  const Matrix source = detail::admitCrossCovariance(
      cov_xx, cov_xz_source, ctx, opts, "source cross-covariance");
  const Matrix target = detail::admitCrossCovariance(
      cov_xx, cov_xz_target, ctx, opts, "target cross-covariance");

  const Matrix ws = ctx.whitener * source;
  const Matrix wt = ctx.whitener * target;
  const RectPinv inv = pinvRectDetailed(ws, opts.policy);
  if (inv.rank != ws.cols()) {
    throw Error(Errc::ConceptRankDeficient,
                "whitened source cross-covariance has rank " +
                    std::to_string(inv.rank) + ", need " +
                    std::to_string(ws.cols()));
  }
  const Matrix update = detail::sandwich(ctx, (wt - ws) * inv.inverse);
  const Index d = mean.size();
  Matrix a = Matrix::Identity(d, d) + beta * update;
  return detail::finish(std::move(a), mean, Mode::MidSteer, beta,
                        detail::describe(ctx, inv.rank, opts));
}

// ---------------------------------------------------------------------------
// Application and weight folding

/// Maps every row x of `batch` to A x + b.
inline Matrix applyTransform(const AffineTransform& t, const Matrix& batch) {
  if (batch.cols() != t.dim()) {
    throw Error(Errc::DimensionMismatch,
                "batch has " + std::to_string(batch.cols()) +
                    " columns, transform dim is " + std::to_string(t.dim()));
  }
  Matrix out = batch * t.a.transpose();
  out.rowwise() += t.b.transpose();
  return out;
}

/// Returns the layer h -> A (W h + c) + b written as a single linear layer.
inline LinearLayer foldIntoLayer(const AffineTransform& t,
                                 const LinearLayer& layer) {
  if (layer.bias.size() != layer.weight.rows()) {
    throw Error(Errc::DimensionMismatch, "layer bias length != output dim");
  }
  if (t.dim() != layer.outputDim()) {
    throw Error(Errc::DimensionMismatch,
                "transform dim " + std::to_string(t.dim()) +
                    " != layer output dim " +
                    std::to_string(layer.outputDim()));
  }
  return LinearLayer{t.a * layer.weight, t.a * layer.bias + t.b};
}

}  // namespace conceptsteer
