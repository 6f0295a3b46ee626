#pragma once
//------------------------------------------------------------------------------
//
//   Copyright 2026 The Priority Pass Simulator Authors
//
//   Licensed under the Apache License, Version 2.0 (the "License");
//   you may not use this file except in compliance with the License.
//   You may obtain a copy of the License at
//
//       http://www.apache.org/licenses/LICENSE-2.0
//
//   Unless required by applicable law or agreed to in writing, software
//   distributed under the License is distributed on an "AS IS" BASIS,
//   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//   See the License for the specific language governing permissions and
//   limitations under the License.
//
//------------------------------------------------------------------------------

#include <stdexcept>
#include <string>
#include <string_view>

namespace ppass {

enum class ErrorKind
{
  invalid_dimension,
  unreachable_exit,
  invalid_argument,
  allocation_size_mismatch,
  malformed_log,
  rank_deficiency,
  empty_support,
  missing_response_entry,
  infeasible,
  profile_gap,
  config_invalid,
  missing_dependency,
  io_error,
};

constexpr std::string_view to_string(ErrorKind kind)
{
  switch (kind)
  {
  case ErrorKind::invalid_dimension:
    return "invalid-dimension";
  case ErrorKind::unreachable_exit:
    return "unreachable-exit";
  case ErrorKind::invalid_argument:
    return "invalid-argument";
  case ErrorKind::allocation_size_mismatch:
    return "allocation-size-mismatch";
  case ErrorKind::malformed_log:
    return "malformed-log";
  case ErrorKind::rank_deficiency:
    return "rank-deficiency";
  case ErrorKind::empty_support:
    return "empty-support";
  case ErrorKind::missing_response_entry:
    return "missing-response-entry";
  case ErrorKind::infeasible:
    return "infeasible";
  case ErrorKind::profile_gap:
    return "profile-gap";
  case ErrorKind::config_invalid:
    return "config-invalid";
  case ErrorKind::missing_dependency:
    return "missing-dependency";
  case ErrorKind::io_error:
    return "io-error";
  }
  return "unknown";
}

/// Exception carrying a machine-readable kind next to the message.
class Error : public std::runtime_error
{
public:
  Error(ErrorKind kind, std::string const &message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message)
    , kind_(kind)
  {}

  ErrorKind kind() const noexcept
  {
    return kind_;
  }

private:
  ErrorKind kind_;
};

}  // namespace ppass
