#pragma once

// Reader for the PRISM subset this library emits: an mdp header, modules
// with one [0..K] variable each, guarded commands whose guards are
// equalities on the module's own variable, quoted labels over variable
// equalities, and rewards blocks whose items reference command action
// labels. Reading a file and composing the result reproduces the state
// graph of the model it was emitted from.

#include <cctype>
#include <cstdlib>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "errors.hpp"
#include "mdp.hpp"

namespace bpmn2mdp {

struct PrismModel {
  std::vector<MdpModule> modules;
  std::vector<RewardStructure> rewards;
  std::vector<LabelAtom> atoms;  // labels other than done_all
};

namespace detail {

struct PrismToken {
  enum Kind { Ident, Number, Str, Punct, End } kind = End;
  std::string text;
  double num = 0.0;
};

class PrismLexer {
 public:
  explicit PrismLexer(const std::string& src) : src_(src) { advance(); }

  const PrismToken& peek() const { return tok_; }

  PrismToken next() {
    PrismToken t = tok_;
    advance();
    return t;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError("prism: " + what + " at line " + std::to_string(line_));
  }

  PrismToken expect(PrismToken::Kind kind, const std::string& what) {
    if (tok_.kind != kind) fail("expected " + what + ", got '" + tok_.text + "'");
    return next();
  }

  void expect_punct(const std::string& p) {
    if (tok_.kind != PrismToken::Punct || tok_.text != p)
      fail("expected '" + p + "', got '" + tok_.text + "'");
    advance();
  }

  bool accept_punct(const std::string& p) {
    if (tok_.kind == PrismToken::Punct && tok_.text == p) {
      advance();
      return true;
    }
    return false;
  }

 private:
  void advance() {
    skip_space();
    tok_ = PrismToken{};
    if (pos_ >= src_.size()) {
      tok_.kind = PrismToken::End;
      tok_.text = "<eof>";
      return;
    }
    char c = src_[pos_];
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t b = pos_;
      while (pos_ < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[pos_])) ||
              src_[pos_] == '_'))
        ++pos_;
      tok_.kind = PrismToken::Ident;
      tok_.text = src_.substr(b, pos_ - b);
      return;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      // scanned by hand so "0..12" stays number, range operator, number
      // (strtod would swallow the first dot)
      std::size_t b = pos_;
      auto digits = [&] {
        while (pos_ < src_.size() &&
               std::isdigit(static_cast<unsigned char>(src_[pos_])))
          ++pos_;
      };
      digits();
      if (pos_ + 1 < src_.size() && src_[pos_] == '.' &&
          std::isdigit(static_cast<unsigned char>(src_[pos_ + 1]))) {
        ++pos_;
        digits();
      }
      if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
        std::size_t e = pos_ + 1;
        if (e < src_.size() && (src_[e] == '+' || src_[e] == '-')) ++e;
        if (e < src_.size() &&
            std::isdigit(static_cast<unsigned char>(src_[e]))) {
          pos_ = e;
          digits();
        }
      }
      tok_.kind = PrismToken::Number;
      tok_.text = src_.substr(b, pos_ - b);
      tok_.num = std::strtod(tok_.text.c_str(), nullptr);
      return;
    }
    if (c == '"') {
      std::size_t b = ++pos_;
      while (pos_ < src_.size() && src_[pos_] != '"') ++pos_;
      if (pos_ >= src_.size()) fail("unterminated string");
      tok_.kind = PrismToken::Str;
      tok_.text = src_.substr(b, pos_ - b);
      ++pos_;
      return;
    }
    if (c == '-' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '>') {
      pos_ += 2;
      tok_.kind = PrismToken::Punct;
      tok_.text = "->";
      return;
    }
    if (c == '.' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '.') {
      pos_ += 2;
      tok_.kind = PrismToken::Punct;
      tok_.text = "..";
      return;
    }
    ++pos_;
    tok_.kind = PrismToken::Punct;
    tok_.text = std::string(1, c);
  }

  void skip_space() {
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (c == '\n') {
        ++line_;
        ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else if (c == '/' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '/') {
        while (pos_ < src_.size() && src_[pos_] != '\n') ++pos_;
      } else if (c == '/' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '*') {
        pos_ += 2;
        while (pos_ + 1 < src_.size() &&
               !(src_[pos_] == '*' && src_[pos_ + 1] == '/')) {
          if (src_[pos_] == '\n') ++line_;
          ++pos_;
        }
        pos_ = pos_ + 2 <= src_.size() ? pos_ + 2 : src_.size();
      } else {
        break;
      }
    }
  }

  const std::string& src_;
  std::size_t pos_ = 0;
  int line_ = 1;
  PrismToken tok_;
};

inline int expect_int(PrismLexer& lx, const std::string& what) {
  PrismToken t = lx.expect(PrismToken::Number, what);
  return static_cast<int>(t.num);
}

}  // namespace detail

inline PrismModel read_prism(const std::string& text) {
  detail::PrismLexer lx(text);

  auto head = lx.expect(detail::PrismToken::Ident, "model type");
  if (head.text != "mdp")
    throw ParseError("prism: unsupported model type '" + head.text + "'");

  PrismModel out;
  std::map<std::string, std::size_t> module_of_var;

  // label name -> DNF over (var, value)
  std::map<std::string, std::vector<std::vector<std::pair<std::string, int>>>>
      label_exprs;
  std::vector<std::string> label_order;

  while (lx.peek().kind != detail::PrismToken::End) {
    auto kw = lx.expect(detail::PrismToken::Ident, "declaration");

    if (kw.text == "module") {
      MdpModule mod;
      mod.name = lx.expect(detail::PrismToken::Ident, "module name").text;
      mod.state_var.name =
          lx.expect(detail::PrismToken::Ident, "variable name").text;
      lx.expect_punct(":");
      lx.expect_punct("[");
      int lo = detail::expect_int(lx, "range low");
      lx.expect_punct("..");
      int hi = detail::expect_int(lx, "range high");
      lx.expect_punct("]");
      auto init_kw = lx.expect(detail::PrismToken::Ident, "init");
      if (init_kw.text != "init") lx.fail("expected 'init'");
      mod.initial_location = detail::expect_int(lx, "initial value");
      lx.expect_punct(";");
      if (lo != 0 || hi < 0)
        throw ParseError("prism: variable range must start at 0");
      mod.state_var.max = hi;
      mod.location_count = hi + 1;
      mod.done_location = -1;  // set from the done_all label, if present

      while (!(lx.peek().kind == detail::PrismToken::Ident &&
               lx.peek().text == "endmodule")) {
        lx.expect_punct("[");
        Command c;
        if (lx.peek().kind == detail::PrismToken::Ident)
          c.action = lx.next().text;
        lx.expect_punct("]");
        auto var = lx.expect(detail::PrismToken::Ident, "guard variable");
        if (var.text != mod.state_var.name)
          lx.fail("guard must test the module's own variable");
        lx.expect_punct("=");
        c.guard_location = detail::expect_int(lx, "guard value");
        lx.expect_punct("->");
        do {
          double p = 1.0;
          if (lx.peek().kind == detail::PrismToken::Number) {
            p = lx.next().num;
            lx.expect_punct(":");
          }
          lx.expect_punct("(");
          auto uvar = lx.expect(detail::PrismToken::Ident, "update variable");
          if (uvar.text != mod.state_var.name)
            lx.fail("update must assign the module's own variable");
          lx.expect_punct("'");
          lx.expect_punct("=");
          int tgt = detail::expect_int(lx, "update value");
          lx.expect_punct(")");
          c.branches.emplace_back(p, tgt);
        } while (lx.accept_punct("+"));
        lx.expect_punct(";");
        mod.commands.push_back(std::move(c));
      }
      lx.next();  // endmodule
      module_of_var.emplace(mod.state_var.name, out.modules.size());
      out.modules.push_back(std::move(mod));

    } else if (kw.text == "label") {
      std::string name = lx.expect(detail::PrismToken::Str, "label name").text;
      lx.expect_punct("=");
      std::vector<std::vector<std::pair<std::string, int>>> dnf;
      do {
        std::vector<std::pair<std::string, int>> conj;
        do {
          auto var = lx.expect(detail::PrismToken::Ident, "label variable");
          lx.expect_punct("=");
          conj.emplace_back(var.text, detail::expect_int(lx, "label value"));
        } while (lx.accept_punct("&"));
        dnf.push_back(std::move(conj));
      } while (lx.accept_punct("|"));
      lx.expect_punct(";");
      if (!label_exprs.count(name)) label_order.push_back(name);
      label_exprs[name] = std::move(dnf);

    } else if (kw.text == "rewards") {
      RewardStructure rs;
      rs.name = lx.expect(detail::PrismToken::Str, "rewards name").text;
      out.rewards.push_back({});  // reserve order even if empty
      while (!(lx.peek().kind == detail::PrismToken::Ident &&
               lx.peek().text == "endrewards")) {
        lx.expect_punct("[");
        if (lx.peek().kind != detail::PrismToken::Ident)
          lx.fail("reward items must use an action label");
        std::string action = lx.next().text;
        lx.expect_punct("]");
        auto var = lx.expect(detail::PrismToken::Ident, "reward guard variable");
        lx.expect_punct("=");
        int guard = detail::expect_int(lx, "reward guard value");
        lx.expect_punct(":");
        auto val = lx.expect(detail::PrismToken::Number, "reward value");
        lx.expect_punct(";");

        auto mit = module_of_var.find(var.text);
        if (mit == module_of_var.end()) lx.fail("unknown variable in rewards");
        const MdpModule& mod = out.modules[mit->second];
        bool found = false;
        for (std::size_t ci = 0; ci < mod.commands.size(); ++ci) {
          const Command& c = mod.commands[ci];
          if (c.action && *c.action == action && c.guard_location == guard) {
            rs.values[{mod.name, static_cast<int>(ci)}] = val.num;
            found = true;
          }
        }
        if (!found) lx.fail("reward item matches no command");
      }
      lx.next();  // endrewards
      out.rewards.back() = std::move(rs);

    } else {
      lx.fail("unsupported declaration '" + kw.text + "'");
    }
  }

  // done_all fixes each module's done location; other labels become atoms.
  for (const auto& name : label_order) {
    const auto& dnf = label_exprs.at(name);
    if (name == "done_all") {
      if (dnf.size() != 1)
        throw ParseError("prism: done_all must be a conjunction");
      for (const auto& [var, val] : dnf.front()) {
        auto mit = module_of_var.find(var);
        if (mit == module_of_var.end())
          throw ParseError("prism: unknown variable in done_all");
        out.modules[mit->second].done_location = val;
      }
    } else {
      for (const auto& conj : dnf) {
        if (conj.size() != 1)
          throw ParseError("prism: unsupported label shape for '" + name + "'");
        auto mit = module_of_var.find(conj.front().first);
        if (mit == module_of_var.end())
          throw ParseError("prism: unknown variable in label '" + name + "'");
        out.atoms.push_back(
            {name, out.modules[mit->second].name, conj.front().second});
      }
    }
  }

  return out;
}

}  // namespace bpmn2mdp
