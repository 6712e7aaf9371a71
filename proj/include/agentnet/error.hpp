#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace agentnet {

enum class Errc {
  // network-core
  DuplicateId,
  InvalidVertex,
  UnknownVertex,
  UnknownEndpoint,
  SoftRouteOutsideGroup,
  ExtRouteInsideGroup,
  SelfLoop,
  WouldEmptyGroup,
  CycleDetected,
  InvalidDescriptor,
  // registry
  DuplicateService,
  UnknownService,
  EmptyQuery,
  InvalidQuery,
  // scheduler
  UnknownTask,
  InvalidPayload,
  NoSatisfiableMember,
  ContractViolation,
  // executors
  ExecutorError,
  ExecutorTimeout,
  OutputNotJson,
  UnknownTransform,
  ApiError,
  ParseError,
  // flow log
  InvalidRecord,
  IoError,
  // gateway
  BindError,
  ConfigError,
};

std::string_view to_string(Errc code) noexcept;

/// The single exception type thrown across the library; `code()` names the
/// contract error and `what()` carries detail for humans.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + (detail.empty() ? "" : ": " + detail)),
        code_(code) {}

  explicit Error(Errc code) : Error(code, "") {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace agentnet
