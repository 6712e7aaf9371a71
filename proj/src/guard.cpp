#include "agentnet/guard.hpp"

#include <cctype>

#include "agentnet/error.hpp"
#include "agentnet/schema.hpp"

namespace agentnet {

namespace {

class GuardParser {
 public:
  explicit GuardParser(std::string_view text) : text_(text) {}

  GuardExpr parse_all() {
    GuardExpr expr = parse_expr();
    skip_ws();
    if (pos_ != text_.size()) fail("trailing input");
    return expr;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw Error(Errc::ParseError, "guard '" + std::string(text_) + "': " + what + " at offset " +
                                      std::to_string(pos_));
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_])) != 0) ++pos_;
  }

  void expect(char c) {
    skip_ws();
    if (pos_ >= text_.size() || text_[pos_] != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  std::string identifier() {
    skip_ws();
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) != 0 || text_[pos_] == '_')) {
      ++pos_;
    }
    return std::string(text_.substr(start, pos_ - start));
  }

  std::string param() {
    std::string name = identifier();
    if (!is_identifier(name)) fail("expected parameter name");
    return name;
  }

  // Scans a JSON literal up to the ')' that closes the enclosing eq(...),
  // honouring nested brackets and string escapes.
  Json literal() {
    skip_ws();
    const std::size_t start = pos_;
    int depth = 0;
    bool in_string = false;
    for (; pos_ < text_.size(); ++pos_) {
      const char c = text_[pos_];
      if (in_string) {
        if (c == '\\') {
          ++pos_;
        } else if (c == '"') {
          in_string = false;
        }
        continue;
      }
      if (c == '"') {
        in_string = true;
      } else if (c == '[' || c == '{') {
        ++depth;
      } else if (c == ']' || c == '}') {
        --depth;
      } else if (c == ')' && depth == 0) {
        break;
      }
    }
    const std::string_view raw = text_.substr(start, pos_ - start);
    Json value = Json::parse(raw, nullptr, false);
    if (value.is_discarded()) fail("invalid JSON literal");
    return value;
  }

  GuardExpr parse_expr() {
    const std::string op = identifier();
    expect('(');
    if (op == "has") {
      auto name = param();
      expect(')');
      return GuardExpr(GuardExpr::Has{std::move(name)});
    }
    if (op == "eq") {
      auto name = param();
      expect(',');
      Json lit = literal();
      expect(')');
      return GuardExpr(GuardExpr::Eq{std::move(name), std::move(lit)});
    }
    if (op == "and" || op == "or") {
      auto lhs = std::make_shared<const GuardExpr>(parse_expr());
      expect(',');
      auto rhs = std::make_shared<const GuardExpr>(parse_expr());
      expect(')');
      if (op == "and") return GuardExpr(GuardExpr::And{std::move(lhs), std::move(rhs)});
      return GuardExpr(GuardExpr::Or{std::move(lhs), std::move(rhs)});
    }
    if (op == "not") {
      auto operand = std::make_shared<const GuardExpr>(parse_expr());
      expect(')');
      return GuardExpr(GuardExpr::Not{std::move(operand)});
    }
    fail("unknown operator '" + op + "'");
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

}  // namespace

GuardExpr GuardExpr::parse(std::string_view text) { return GuardParser(text).parse_all(); }

bool GuardExpr::evaluate(const Json& ctx) const {
  return std::visit(
      Overloaded{
          [&](const Has& h) { return ctx.is_object() && ctx.contains(h.param); },
          [&](const Eq& e) {
            if (!ctx.is_object()) return false;
            auto it = ctx.find(e.param);
            return it != ctx.end() && *it == e.literal;
          },
          [&](const And& a) { return a.lhs->evaluate(ctx) && a.rhs->evaluate(ctx); },
          [&](const Or& o) { return o.lhs->evaluate(ctx) || o.rhs->evaluate(ctx); },
          [&](const Not& n) { return !n.operand->evaluate(ctx); },
      },
      node_);
}

std::string GuardExpr::to_string() const {
  return std::visit(
      Overloaded{
          [](const Has& h) { return "has(" + h.param + ")"; },
          [](const Eq& e) { return "eq(" + e.param + ", " + canonical_json(e.literal) + ")"; },
          [](const And& a) { return "and(" + a.lhs->to_string() + ", " + a.rhs->to_string() + ")"; },
          [](const Or& o) { return "or(" + o.lhs->to_string() + ", " + o.rhs->to_string() + ")"; },
          [](const Not& n) { return "not(" + n.operand->to_string() + ")"; },
      },
      node_);
}

}  // namespace agentnet
