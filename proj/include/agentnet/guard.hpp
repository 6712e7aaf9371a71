#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "agentnet/text.hpp"

namespace agentnet {

/// Route guard predicates over a context:
///   has(<param>) | eq(<param>, <json-literal>) | and(e1,e2) | or(e1,e2) | not(e)
class GuardExpr {
 public:
  struct Has {
    std::string param;
  };
  struct Eq {
    std::string param;
    Json literal;
  };
  struct And {
    std::shared_ptr<const GuardExpr> lhs, rhs;
  };
  struct Or {
    std::shared_ptr<const GuardExpr> lhs, rhs;
  };
  struct Not {
    std::shared_ptr<const GuardExpr> operand;
  };
  using Node = std::variant<Has, Eq, And, Or, Not>;

  explicit GuardExpr(Node node) : node_(std::move(node)) {}

  /// Throws Error(ParseError) on malformed text.
  static GuardExpr parse(std::string_view text);

  bool evaluate(const Json& ctx) const;
  std::string to_string() const;

  const Node& node() const noexcept { return node_; }

 private:
  Node node_;
};

}  // namespace agentnet
