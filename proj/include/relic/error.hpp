#pragma once

#include <stdexcept>
#include <string>

namespace relic {

/// Process exit status associated with each error family.
enum class ExitCode : int {
  kOk = 0,
  kConfig = 2,
  kData = 3,
  kBackend = 4,
  kInternal = 5,
};

class Error : public std::runtime_error {
 public:
  Error(ExitCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ExitCode code() const noexcept { return code_; }

 private:
  ExitCode code_;
};

/// Invalid flags, config files, or missing endpoints.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ExitCode::kConfig, what) {}
};

/// Malformed or inconsistent input records and artifact files.
class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ExitCode::kData, what) {}
};

/// Reward backend unreachable, malformed reply, or non-finite score.
class BackendError : public Error {
 public:
  explicit BackendError(const std::string& what) : Error(ExitCode::kBackend, what) {}
};

/// A violated internal invariant (bad shapes, non-finite logits, ...).
class InvariantError : public Error {
 public:
  explicit InvariantError(const std::string& what) : Error(ExitCode::kInternal, what) {}
};

}  // namespace relic
