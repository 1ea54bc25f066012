#pragma once

#include <stdexcept>
#include <string>

namespace vrl {

enum class ErrorCode {
  invalid_argument,
  config,        // bad or missing configuration value
  io,            // filesystem failures
  data,          // malformed input files (JSONL lines, agent records)
  incompatible,  // checkpoint/dataset shape or hash mismatch
  training,      // non-finite gradient, failed cold start
  locked,        // output directory already claimed by another run
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string message)
      : std::runtime_error(std::move(message)), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace vrl
