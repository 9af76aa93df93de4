// beamkit/error.hpp

// Copyright 2026  The beamkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace beamkit {

// Every failure raised by the library carries one of these codes, so callers
// (and tests) can branch on the kind of failure rather than the message text.
enum class Errc {
  kInvalidArgument,
  kShapeMismatch,
  kMissingFile,
  kMalformedHeader,
  kUnsupportedCodec,
  kUnwritablePath,
  kSignalTooShort,
  kTooFewChannels,
  kNotPositiveDefinite,
  kNonFinite,
  kBadMagic,
  kTruncatedPayload,
  kZeroPower,
  kSourceInsideArray,
};

inline std::string_view ErrcName(Errc code) {
  switch (code) {
    case Errc::kInvalidArgument: return "invalid argument";
    case Errc::kShapeMismatch: return "shape mismatch";
    case Errc::kMissingFile: return "missing file";
    case Errc::kMalformedHeader: return "malformed header";
    case Errc::kUnsupportedCodec: return "unsupported codec";
    case Errc::kUnwritablePath: return "unwritable path";
    case Errc::kSignalTooShort: return "signal shorter than one window";
    case Errc::kTooFewChannels: return "too few channels";
    case Errc::kNotPositiveDefinite: return "matrix not positive definite";
    case Errc::kNonFinite: return "non-finite value";
    case Errc::kBadMagic: return "bad magic";
    case Errc::kTruncatedPayload: return "truncated payload";
    case Errc::kZeroPower: return "zero-power signal";
    case Errc::kSourceInsideArray: return "source inside array";
  }
  return "unknown error";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string &what)
      : std::runtime_error(std::string(ErrcName(code)) + ": " + what),
        code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace beamkit
