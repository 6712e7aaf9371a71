#pragma once

#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace agentnet {

using Json = nlohmann::json;

/// Canonical JSON text: object keys sorted, no insignificant whitespace,
/// UTF-8 output, numbers in shortest round-trip form. Stable across runs and
/// used for every digest and similarity computation.
std::string canonical_json(const Json& value);

/// Splits on whitespace and ASCII punctuation; bytes >= 0x80 are kept as
/// token characters so UTF-8 text survives intact.
std::vector<std::string> tokenize(std::string_view text);
std::set<std::string> token_set(std::string_view text);

/// |a ∩ b| / |a ∪ b|, with two empty sets counting as identical (1.0).
double jaccard(const std::set<std::string>& a, const std::set<std::string>& b);

/// Token-level Jaccard over the canonical JSON text of both values.
double json_similarity(const Json& a, const Json& b);

/// Lowercased alphanumeric words; used for keyword matching in discovery.
std::set<std::string> keyword_tokens(std::string_view text);

}  // namespace agentnet
