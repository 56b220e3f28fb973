// Copyright 2026 The fcsense Authors
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

#ifndef FCSENSE__ERROR_HPP_
#define FCSENSE__ERROR_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

namespace fcsense
{

enum class ErrorKind
{
  Domain,
  InsufficientData,
  DegenerateAbscissa,
  DegenerateChannel,
  InsufficientSpan,
  CalibrationFailed,
  MissingChannel,
  IncomparableProfiles,
  Extrapolation,
  Stream,
  FileNotFound,
  Io,
  MalformedDocument,
  VersionMismatch,
};

inline std::string_view to_string(ErrorKind kind)
{
  switch (kind) {
    case ErrorKind::Domain: return "domain";
    case ErrorKind::InsufficientData: return "insufficient-data";
    case ErrorKind::DegenerateAbscissa: return "degenerate-abscissa";
    case ErrorKind::DegenerateChannel: return "degenerate-channel";
    case ErrorKind::InsufficientSpan: return "insufficient-span";
    case ErrorKind::CalibrationFailed: return "calibration-failed";
    case ErrorKind::MissingChannel: return "missing-channel";
    case ErrorKind::IncomparableProfiles: return "incomparable-profiles";
    case ErrorKind::Extrapolation: return "extrapolation";
    case ErrorKind::Stream: return "stream";
    case ErrorKind::FileNotFound: return "file-not-found";
    case ErrorKind::Io: return "io";
    case ErrorKind::MalformedDocument: return "malformed-document";
    case ErrorKind::VersionMismatch: return "version-mismatch";
  }
  return "unknown";
}

/// Every failure raised by the library carries a kind so callers (the CLI in
/// particular) can map it to a stable exit status.
class Error : public std::runtime_error
{
public:
  Error(ErrorKind kind, const std::string & what)
  : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind)
  {}

  ErrorKind kind() const noexcept {return kind_;}

private:
  ErrorKind kind_;
};

}  // namespace fcsense

#endif  // FCSENSE__ERROR_HPP_
