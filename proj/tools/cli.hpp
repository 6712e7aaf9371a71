#pragma once

#include <ostream>

namespace agentnet::cli {

/// Entry point of the `agentnet` command. Returns 0 on success, 1 on a
/// domain error, 2 on a usage error.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace agentnet::cli
