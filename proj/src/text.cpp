#include "agentnet/text.hpp"

#include <algorithm>
#include <cctype>

namespace agentnet {

namespace {

bool is_separator(unsigned char c) {
  if (c >= 0x80) return false;
  return std::isspace(c) != 0 || std::ispunct(c) != 0;
}

}  // namespace

std::string canonical_json(const Json& value) {
  // nlohmann::json stores objects in a std::map, so keys come out sorted.
  return value.dump(-1, ' ', false, Json::error_handler_t::replace);
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string current;
  for (char ch : text) {
    if (is_separator(static_cast<unsigned char>(ch))) {
      if (!current.empty()) out.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(ch);
    }
  }
  if (!current.empty()) out.push_back(std::move(current));
  return out;
}

std::set<std::string> token_set(std::string_view text) {
  auto tokens = tokenize(text);
  return {std::make_move_iterator(tokens.begin()), std::make_move_iterator(tokens.end())};
}

double jaccard(const std::set<std::string>& a, const std::set<std::string>& b) {
  if (a.empty() && b.empty()) return 1.0;
  std::size_t common = 0;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (*ia < *ib) {
      ++ia;
    } else if (*ib < *ia) {
      ++ib;
    } else {
      ++common;
      ++ia;
      ++ib;
    }
  }
  const std::size_t uni = a.size() + b.size() - common;
  return static_cast<double>(common) / static_cast<double>(uni);
}

double json_similarity(const Json& a, const Json& b) {
  return jaccard(token_set(canonical_json(a)), token_set(canonical_json(b)));
}

std::set<std::string> keyword_tokens(std::string_view text) {
  std::set<std::string> out;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) out.insert(current);
    current.clear();
  };
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c) != 0) {
      current.push_back(static_cast<char>(std::tolower(c)));
    } else {
      flush();
    }
  }
  flush();
  return out;
}

}  // namespace agentnet
