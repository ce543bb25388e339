#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lerc {

enum class ErrorCode {
  CyclicDependency,
  DanglingBlock,
  DuplicateProducer,
  InvalidTask,
  InvalidBlock,
  UnknownBlock,
  UnknownTask,
  DoubleComplete,
  InsufficientCapacity,
  Deadlock,
  UnknownPolicy,
  InvalidConfig,
  InvalidPlan,
  ParseError,
  IOFailure,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::CyclicDependency: return "CyclicDependency";
    case ErrorCode::DanglingBlock: return "DanglingBlock";
    case ErrorCode::DuplicateProducer: return "DuplicateProducer";
    case ErrorCode::InvalidTask: return "InvalidTask";
    case ErrorCode::InvalidBlock: return "InvalidBlock";
    case ErrorCode::UnknownBlock: return "UnknownBlock";
    case ErrorCode::UnknownTask: return "UnknownTask";
    case ErrorCode::DoubleComplete: return "DoubleComplete";
    case ErrorCode::InsufficientCapacity: return "InsufficientCapacity";
    case ErrorCode::Deadlock: return "Deadlock";
    case ErrorCode::UnknownPolicy: return "UnknownPolicy";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::InvalidPlan: return "InvalidPlan";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::IOFailure: return "IOFailure";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace lerc
