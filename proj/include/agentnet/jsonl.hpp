#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace agentnet {

/// Appends `line` plus '\n' with a single O_APPEND write so concurrent
/// writers never interleave partial lines. Throws Error(IoError).
void append_line(const std::filesystem::path& path, std::string_view line);

/// All lines of the file (without terminators); empty if it does not exist.
std::vector<std::string> read_lines(const std::filesystem::path& path);

}  // namespace agentnet
