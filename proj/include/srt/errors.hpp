#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace srt {

// Exit codes used by the CLI; see tools/srt_main.cpp.
enum class ErrorCode {
  config_invalid = 2,
  data_error = 3,
  remote_error = 4,
  budget_exceeded = 5,
};

class SrtError : public std::runtime_error {
 public:
  SrtError(ErrorCode code, std::string message)
      : std::runtime_error(std::move(message)), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

struct ConfigError : SrtError {
  explicit ConfigError(std::string m) : SrtError(ErrorCode::config_invalid, std::move(m)) {}
};

struct DataError : SrtError {
  explicit DataError(std::string m) : SrtError(ErrorCode::data_error, std::move(m)) {}
};

struct RemoteError : SrtError {
  explicit RemoteError(std::string m) : SrtError(ErrorCode::remote_error, std::move(m)) {}
};

struct BudgetExceededError : SrtError {
  explicit BudgetExceededError(std::string m)
      : SrtError(ErrorCode::budget_exceeded, std::move(m)) {}
};

struct ManifestCorruptError : DataError {
  explicit ManifestCorruptError(std::string m) : DataError(std::move(m)) {}
};

}  // namespace srt
