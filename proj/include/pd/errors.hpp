#pragma once

#include <stdexcept>
#include <string>

namespace pd {

// Exit codes used by the CLI: 0 ok, 2 config, 3 solver, 4 admissibility, 5 io.
enum class ErrorCode : int {
  Config = 2,
  Solver = 3,
  Admissibility = 4,
  Io = 5,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string msg) : std::runtime_error(std::move(msg)), code_(code) {}
  ErrorCode code() const noexcept { return code_; }
  int exit_code() const noexcept { return static_cast<int>(code_); }

 private:
  ErrorCode code_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(std::string msg) : Error(ErrorCode::Config, std::move(msg)) {}
};

class SolverError : public Error {
 public:
  explicit SolverError(std::string msg) : Error(ErrorCode::Solver, std::move(msg)) {}
};

class AdmissibilityError : public Error {
 public:
  explicit AdmissibilityError(std::string msg) : Error(ErrorCode::Admissibility, std::move(msg)) {}
};

class IoError : public Error {
 public:
  explicit IoError(std::string msg) : Error(ErrorCode::Io, std::move(msg)) {}
};

}  // namespace pd
