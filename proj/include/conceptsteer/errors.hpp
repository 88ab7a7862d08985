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

#include <stdexcept>
#include <string>
#include <string_view>

namespace conceptsteer {

/// Error conditions raised by the library. The CLI prints errorName() of the
/// code on stderr, so the names are part of the public contract.
enum class Errc {
  NotSquare,
  NotSymmetric,
  IndefiniteMatrix,
  DimensionMismatch,
  NonFiniteValue,
  AlreadyFinalized,
  InsufficientSamples,
  InvalidLabel,
  NotPartitioning,
  EmptyClass,
  ZeroDirection,
  RangeViolation,
  ConceptRankDeficient,
  SingularSystem,
  InvalidSpec,
  BadMagic,
  VersionUnsupported,
  TruncatedHeader,
  TruncatedPayload,
  TrailingData,
  MalformedDocument,
  IoFailure,
};

constexpr std::string_view errorName(Errc code) noexcept {
  switch (code) {
    case Errc::NotSquare: return "NotSquare";
    case Errc::NotSymmetric: return "NotSymmetric";
    case Errc::IndefiniteMatrix: return "IndefiniteMatrix";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::NonFiniteValue: return "NonFiniteValue";
    case Errc::AlreadyFinalized: return "AlreadyFinalized";
    case Errc::InsufficientSamples: return "InsufficientSamples";
    case Errc::InvalidLabel: return "InvalidLabel";
    case Errc::NotPartitioning: return "NotPartitioning";
    case Errc::EmptyClass: return "EmptyClass";
    case Errc::ZeroDirection: return "ZeroDirection";
    case Errc::RangeViolation: return "RangeViolation";
    case Errc::ConceptRankDeficient: return "ConceptRankDeficient";
    case Errc::SingularSystem: return "SingularSystem";
    case Errc::InvalidSpec: return "InvalidSpec";
    case Errc::BadMagic: return "BadMagic";
    case Errc::VersionUnsupported: return "VersionUnsupported";
    case Errc::TruncatedHeader: return "TruncatedHeader";
    case Errc::TruncatedPayload: return "TruncatedPayload";
    case Errc::TrailingData: return "TrailingData";
    case Errc::MalformedDocument: return "MalformedDocument";
    case Errc::IoFailure: return "IoFailure";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& detail)
      : std::runtime_error(std::string(errorName(code)) + ": " + detail),
        code_(code) {}

  Errc code() const noexcept { return code_; }
  std::string_view name() const noexcept { return errorName(code_); }

 private:
  Errc code_;
};

}  // namespace conceptsteer
