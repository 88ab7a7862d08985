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

// First and second moment estimation from streamed activation batches.
//
// MomentSummary follows the batched Welford recurrence: the first batch
// initializes the running sum and the centered scatter, later batches add
// (X - mu_old)^T (X - mu_new). Finalization symmetrizes the scatter and
// normalizes by n - 1. Independent summaries can be merged pairwise, so a
// stream may be sharded and tree-reduced.

#include <cstdint>
#include <string>
#include <utility>

#include "conceptsteer/errors.hpp"
#include "conceptsteer/linalg.hpp"

namespace conceptsteer {

using LabelMatrix =
    Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// n x k binary concept indicators.
class ConceptLabels {
 public:
  ConceptLabels() = default;

  explicit ConceptLabels(LabelMatrix indicators)
      : indicators_(std::move(indicators)) {
    for (Index i = 0; i < indicators_.size(); ++i) {
      if (indicators_.data()[i] > 1) {
        throw Error(Errc::InvalidLabel,
                    "label value " +
                        std::to_string(int{indicators_.data()[i]}) +
                        " is not 0/1");
      }
    }
  }

  /// Accepts only exact 0.0 / 1.0 entries; anything else is rejected rather
  /// than rounded.
  static ConceptLabels fromReal(const Matrix& values) {
    LabelMatrix ind(values.rows(), values.cols());
    for (Index i = 0; i < values.rows(); ++i) {
      for (Index j = 0; j < values.cols(); ++j) {
        const double v = values(i, j);
        if (v != 0.0 && v != 1.0) {
          throw Error(Errc::InvalidLabel,
                      "label value " + std::to_string(v) + " is not 0/1");
        }
        ind(i, j) = static_cast<std::uint8_t>(v);
      }
    }
    return ConceptLabels(std::move(ind));
  }

  Index sampleCount() const { return indicators_.rows(); }
  Index labelDim() const { return indicators_.cols(); }
  const LabelMatrix& indicators() const { return indicators_; }

  Matrix asMatrix() const { return indicators_.cast<double>(); }

  ConceptLabels columns(Index first, Index count) const {
    if (first < 0 || count < 0 || first + count > labelDim()) {
      throw Error(Errc::DimensionMismatch, "label column range out of bounds");
    }
    return ConceptLabels(LabelMatrix(indicators_.middleCols(first, count)));
  }

  ConceptLabels rows(Index first, Index count) const {
    if (first < 0 || count < 0 || first + count > sampleCount()) {
      throw Error(Errc::DimensionMismatch, "label row range out of bounds");
    }
    return ConceptLabels(LabelMatrix(indicators_.middleRows(first, count)));
  }

  /// Concatenates label columns of two label sets over the same samples.
  static ConceptLabels hstack(const ConceptLabels& a, const ConceptLabels& b) {
    if (a.sampleCount() != b.sampleCount()) {
      throw Error(Errc::DimensionMismatch,
                  "label sets have different sample counts");
    }
    LabelMatrix out(a.sampleCount(), a.labelDim() + b.labelDim());
    out << a.indicators_, b.indicators_;
    return ConceptLabels(std::move(out));
  }

  /// True when every row is one-hot, i.e. the concepts partition the sample.
  bool isPartitioning() const {
    for (Index i = 0; i < sampleCount(); ++i) {
      int total = 0;
      for (Index j = 0; j < labelDim(); ++j) total += indicators_(i, j);
      if (total != 1) return false;
    }
    return true;
  }

  void requirePartitioning() const {
    if (!isPartitioning()) {
      throw Error(Errc::NotPartitioning,
                  "declared partitioning labels have a row sum != 1");
    }
  }

 private:
  LabelMatrix indicators_;
};

struct MomentEstimate {
  Vector mean;
  Matrix covariance;
};

class MomentSummary {
 public:
  MomentSummary() = default;
  explicit MomentSummary(Index dim)
      : dim_(dim), sum_(Vector::Zero(dim)), scatter_(Matrix::Zero(dim, dim)) {}

  Index dim() const { return dim_; }
  Index sampleCount() const { return count_; }
  const Vector& runningSum() const { return sum_; }
  const Matrix& scatter() const { return scatter_; }
  bool finalized() const { return finalized_; }

  void update(const Matrix& batch) {
    if (finalized_) {
      throw Error(Errc::AlreadyFinalized, "summary was already finalized");
    }
    if (batch.cols() != dim_) {
      throw Error(Errc::DimensionMismatch,
                  "batch has " + std::to_string(batch.cols()) +
                      " columns, summary dim is " + std::to_string(dim_));
    }
    requireFinite(batch, "activation batch");
    const Index m = batch.rows();
    if (m == 0) return;

    if (count_ == 0) {
      count_ = m;
      sum_ = batch.colwise().sum().transpose();
      const Vector mu = sum_ / static_cast<double>(count_);
      const Matrix centered = batch.rowwise() - mu.transpose();
      scatter_ = centered.transpose() * centered;
      return;
    }
    const Vector mu_old = sum_ / static_cast<double>(count_);
    count_ += m;
    sum_ += batch.colwise().sum().transpose();
    const Vector mu_new = sum_ / static_cast<double>(count_);
    const Matrix delta_old = batch.rowwise() - mu_old.transpose();
    const Matrix delta_new = batch.rowwise() - mu_new.transpose();
    scatter_.noalias() += delta_old.transpose() * delta_new;
  }

  /// Mean and 1/(n-1) covariance without changing the summary.
  MomentEstimate estimate() const {
    if (count_ < 2) {
      throw Error(Errc::InsufficientSamples,
                  "covariance needs n >= 2, have " + std::to_string(count_));
    }
    MomentEstimate out;
    out.mean = sum_ / static_cast<double>(count_);
    out.covariance =
        symmetrize(scatter_) / static_cast<double>(count_ - 1);
    return out;
  }

  /// Same as estimate(), but seals the summary against further updates.
  MomentEstimate finalize() {
    MomentEstimate out = estimate();
    finalized_ = true;
    return out;
  }

  friend MomentSummary mergeSummaries(const MomentSummary& a,
                                      const MomentSummary& b);

 private:
  Index dim_ = 0;
  Index count_ = 0;
  Vector sum_;
  Matrix scatter_;
  bool finalized_ = false;
};

inline MomentSummary updateBatch(MomentSummary summary, const Matrix& batch) {
  summary.update(batch);
  return summary;
}

/// Pairwise combination (Chan et al.): S = Sa + Sb + na*nb/n * dd^T with d
/// the difference of the two running means.
inline MomentSummary mergeSummaries(const MomentSummary& a,
                                    const MomentSummary& b) {
  if (a.dim_ != b.dim_) {
    throw Error(Errc::DimensionMismatch, "cannot merge summaries of dim " +
                                             std::to_string(a.dim_) + " and " +
                                             std::to_string(b.dim_));
  }
  if (a.finalized_ || b.finalized_) {
    throw Error(Errc::AlreadyFinalized, "cannot merge a finalized summary");
  }
  if (a.count_ == 0) return b;
  if (b.count_ == 0) return a;
  MomentSummary out(a.dim_);
  const double na = static_cast<double>(a.count_);
  const double nb = static_cast<double>(b.count_);
  const Vector delta = b.sum_ / nb - a.sum_ / na;
  out.count_ = a.count_ + b.count_;
  out.sum_ = a.sum_ + b.sum_;
  out.scatter_ = a.scatter_ + b.scatter_ +
                 (na * nb / (na + nb)) * (delta * delta.transpose());
  return out;
}

inline MomentEstimate finalizeCovariance(const MomentSummary& summary) {
  return summary.estimate();
}

/// Streaming cross-covariance between activations (d) and labels (k).
///
/// Keeps the running sums of X and Z and the centered co-moment
/// C = sum (x - xbar)(z - zbar)^T, updated with the same old/new mean pairing
/// as MomentSummary. Finalized value is C / (n - 1), which equals
/// (sum x z^T - n xbar zbar^T) / (n - 1).
class CrossMomentSummary {
 public:
  CrossMomentSummary() = default;
  CrossMomentSummary(Index dim, Index label_dim)
      : dim_(dim),
        label_dim_(label_dim),
        sum_x_(Vector::Zero(dim)),
        sum_z_(Vector::Zero(label_dim)),
        comoment_(Matrix::Zero(dim, label_dim)) {}

  Index dim() const { return dim_; }
  Index labelDim() const { return label_dim_; }
  Index sampleCount() const { return count_; }
  const Vector& sumX() const { return sum_x_; }
  const Vector& sumZ() const { return sum_z_; }
  const Matrix& comoment() const { return comoment_; }

  void update(const Matrix& batch, const ConceptLabels& labels) {
    if (batch.cols() != dim_ || labels.labelDim() != label_dim_ ||
        batch.rows() != labels.sampleCount()) {
      throw Error(Errc::DimensionMismatch,
                  "cross-moment batch shape does not match summary");
    }
    requireFinite(batch, "activation batch");
    const Index m = batch.rows();
    if (m == 0) return;
    const Matrix z = labels.asMatrix();
    const Vector mx_old = count_ ? Vector(sum_x_ / double(count_))
                                 : Vector(batch.colwise().mean().transpose());
    count_ += m;
    sum_x_ += batch.colwise().sum().transpose();
    sum_z_ += z.colwise().sum().transpose();
    const Vector mz_new = sum_z_ / static_cast<double>(count_);
    const Matrix dx = batch.rowwise() - mx_old.transpose();
    const Matrix dz = z.rowwise() - mz_new.transpose();
    comoment_.noalias() += dx.transpose() * dz;
  }

  Matrix covariance() const {
    if (count_ < 2) {
      throw Error(Errc::InsufficientSamples,
                  "cross-covariance needs n >= 2, have " +
                      std::to_string(count_));
    }
    return comoment_ / static_cast<double>(count_ - 1);
  }

  Vector positiveFractions() const {
    if (count_ == 0) return Vector::Zero(label_dim_);
    return sum_z_ / static_cast<double>(count_);
  }

  friend CrossMomentSummary mergeCrossSummaries(const CrossMomentSummary& a,
                                                const CrossMomentSummary& b);

 private:
  Index dim_ = 0;
  Index label_dim_ = 0;
  Index count_ = 0;
  Vector sum_x_;
  Vector sum_z_;
  Matrix comoment_;
};

inline CrossMomentSummary mergeCrossSummaries(const CrossMomentSummary& a,
                                              const CrossMomentSummary& b) {
  if (a.dim_ != b.dim_ || a.label_dim_ != b.label_dim_) {
    throw Error(Errc::DimensionMismatch, "cross summaries differ in shape");
  }
  if (a.count_ == 0) return b;
  if (b.count_ == 0) return a;
  CrossMomentSummary out(a.dim_, a.label_dim_);
  const double na = static_cast<double>(a.count_);
  const double nb = static_cast<double>(b.count_);
  const Vector dx = b.sum_x_ / nb - a.sum_x_ / na;
  const Vector dz = b.sum_z_ / nb - a.sum_z_ / na;
  out.count_ = a.count_ + b.count_;
  out.sum_x_ = a.sum_x_ + b.sum_x_;
  out.sum_z_ = a.sum_z_ + b.sum_z_;
  out.comoment_ =
      a.comoment_ + b.comoment_ + (na * nb / (na + nb)) * (dx * dz.transpose());
  return out;
}

/// Unbiased sample cross-covariance Cov(X, Z), d x k.
inline Matrix crossCovariance(const Matrix& activations,
                              const ConceptLabels& labels) {
  if (activations.rows() != labels.sampleCount()) {
    throw Error(Errc::DimensionMismatch,
                std::to_string(activations.rows()) + " activation rows vs " +
                    std::to_string(labels.sampleCount()) + " label rows");
  }
  const Index n = activations.rows();
  if (n < 2) {
    throw Error(Errc::InsufficientSamples,
                "cross-covariance needs n >= 2, have " + std::to_string(n));
  }
  requireFinite(activations, "activations");
  const Matrix z = labels.asMatrix();
  const Matrix xc = activations.rowwise() - activations.colwise().mean();
  const Matrix zc = z.rowwise() - z.colwise().mean();
  return xc.transpose() * zc / static_cast<double>(n - 1);
}

struct SteeringVector {
  Vector direction;       // unit norm
  Vector raw_difference;  // E[h | C=1] - E[h | C=0]
  double positive_fraction = 0.0;

  Index dim() const { return direction.size(); }
};

/// Builds a unit steering vector from a raw mean difference.
inline SteeringVector steeringFromDifference(const Vector& difference,
                                             double positive_fraction = 0.5) {
  const double norm = difference.norm();
  if (!(norm >= 1e-12)) {
    throw Error(Errc::ZeroDirection,
                "conditional mean difference has norm " + std::to_string(norm));
  }
  return SteeringVector{difference / norm, difference, positive_fraction};
}

inline SteeringVector steeringVector(const Matrix& activations,
                                     const ConceptLabels& labels,
                                     Index column = 0) {
  if (activations.rows() != labels.sampleCount()) {
    throw Error(Errc::DimensionMismatch, "activations and labels differ in n");
  }
  if (column < 0 || column >= labels.labelDim()) {
    throw Error(Errc::DimensionMismatch, "label column out of range");
  }
  requireFinite(activations, "activations");
  const Index d = activations.cols();
  Vector sum1 = Vector::Zero(d), sum0 = Vector::Zero(d);
  Index n1 = 0, n0 = 0;
  for (Index i = 0; i < activations.rows(); ++i) {
    if (labels.indicators()(i, column)) {
      sum1 += activations.row(i).transpose();
      ++n1;
    } else {
      sum0 += activations.row(i).transpose();
      ++n0;
    }
  }
  if (n1 == 0 || n0 == 0) {
    throw Error(Errc::EmptyClass, n1 == 0 ? "no positive samples"
                                          : "no negative samples");
  }
  const Vector diff = sum1 / double(n1) - sum0 / double(n0);
  return steeringFromDifference(
      diff, static_cast<double>(n1) / static_cast<double>(n1 + n0));
}

}  // namespace conceptsteer
