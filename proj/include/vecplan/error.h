#pragma once

#include <stdexcept>
#include <string>

namespace vecplan {

// Failure categories surfaced by the CLI as a single machine-parsable token.
enum class ErrorCategory {
  kInvalidArgument,
  kShape,
  kConfig,
  kSchema,
  kParse,
  kMissingFile,
  kCheckpointMismatch,
  kDivergence,
  kHorizon,
  kDrift,
};

const char* category_name(ErrorCategory category);

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const { return category_; }

 private:
  ErrorCategory category_;
};

}  // namespace vecplan
