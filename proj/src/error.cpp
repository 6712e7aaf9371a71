#include "agentnet/error.hpp"

namespace agentnet {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::DuplicateId: return "DuplicateId";
    case Errc::InvalidVertex: return "InvalidVertex";
    case Errc::UnknownVertex: return "UnknownVertex";
    case Errc::UnknownEndpoint: return "UnknownEndpoint";
    case Errc::SoftRouteOutsideGroup: return "SoftRouteOutsideGroup";
    case Errc::ExtRouteInsideGroup: return "ExtRouteInsideGroup";
    case Errc::SelfLoop: return "SelfLoop";
    case Errc::WouldEmptyGroup: return "WouldEmptyGroup";
    case Errc::CycleDetected: return "CycleDetected";
    case Errc::InvalidDescriptor: return "InvalidDescriptor";
    case Errc::DuplicateService: return "DuplicateService";
    case Errc::UnknownService: return "UnknownService";
    case Errc::EmptyQuery: return "EmptyQuery";
    case Errc::InvalidQuery: return "InvalidQuery";
    case Errc::UnknownTask: return "UnknownTask";
    case Errc::InvalidPayload: return "InvalidPayload";
    case Errc::NoSatisfiableMember: return "NoSatisfiableMember";
    case Errc::ContractViolation: return "ContractViolation";
    case Errc::ExecutorError: return "ExecutorError";
    case Errc::ExecutorTimeout: return "ExecutorTimeout";
    case Errc::OutputNotJson: return "OutputNotJson";
    case Errc::UnknownTransform: return "UnknownTransform";
    case Errc::ApiError: return "ApiError";
    case Errc::ParseError: return "ParseError";
    case Errc::InvalidRecord: return "InvalidRecord";
    case Errc::IoError: return "IoError";
    case Errc::BindError: return "BindError";
    case Errc::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

}  // namespace agentnet
