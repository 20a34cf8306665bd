#pragma once

#include <cctype>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "pqa/syntax.hpp"

namespace pqa {

struct Diag {
  std::string code;
  std::string message;
  Loc loc{};
  std::string file;

  std::string render() const {
    std::string f = file.empty() ? "<input>" : file;
    return f + ":" + std::to_string(loc.line) + ":" + std::to_string(loc.col) + ": error[" + code +
           "]: " + message;
  }
};

// Gate signature: gate name -> circuit function type between simple types.
struct Signature {
  std::map<std::string, Type> gates;

  const Type* find(const std::string& g) const {
    auto it = gates.find(g);
    return it == gates.end() ? nullptr : &it->second;
  }
};

namespace detail {

enum class Tok : uint8_t {
  Ident, Gate,          // #name
  LParen, RParen, LBrace, RBrace, Comma, Colon, At, Star, Arrow, FatArrow,
  KwFn, KwLam, KwSusp, KwCirc, KwDown, KwForce, KwMatch, KwCircval, KwWith,
  KwUnit, KwQubit, KwUp, KwDownTy, KwGateDecl, KwUnitWord,
  End,
};

struct Token {
  Tok tok;
  std::string text;
  Loc loc;
};

struct ParseError {
  std::string message;
  Loc loc;
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    while (true) {
      skip_ws();
      Loc loc{line_, col_};
      if (at_end()) {
        out.push_back({Tok::End, "", loc});
        return out;
      }
      char c = peek();
      if (c == '(') { out.push_back({Tok::LParen, "(", loc}); take(); continue; }
      if (c == ')') { out.push_back({Tok::RParen, ")", loc}); take(); continue; }
      if (c == '{') { out.push_back({Tok::LBrace, "{", loc}); take(); continue; }
      if (c == '}') { out.push_back({Tok::RBrace, "}", loc}); take(); continue; }
      if (c == ',') { out.push_back({Tok::Comma, ",", loc}); take(); continue; }
      if (c == ':') { out.push_back({Tok::Colon, ":", loc}); take(); continue; }
      if (c == '@') { out.push_back({Tok::At, "@", loc}); take(); continue; }
      if (c == '*') { out.push_back({Tok::Star, "*", loc}); take(); continue; }
      if (c == '#') {
        take();
        std::string name = lex_ident_chars();
        if (name.empty()) throw ParseError{"expected gate name after '#'", loc};
        out.push_back({Tok::Gate, name, loc});
        continue;
      }
      if (c == '-') {
        take();
        if (!at_end() && peek() == 'o') {
          take();
          out.push_back({Tok::Arrow, "-o", loc});
          continue;
        }
        throw ParseError{"unexpected '-'", loc};
      }
      if (c == '=') {
        take();
        if (!at_end() && peek() == '>') {
          take();
          out.push_back({Tok::FatArrow, "=>", loc});
          continue;
        }
        throw ParseError{"unexpected '='", loc};
      }
      if (c == '%') {
        take();
        std::string digits;
        while (!at_end() && std::isdigit(static_cast<unsigned char>(peek()))) digits += take();
        if (digits.empty()) throw ParseError{"expected digits after '%'", loc};
        out.push_back({Tok::Ident, "%" + digits, loc});
        continue;
      }
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        std::string word = lex_ident_chars();
        out.push_back({keyword_or_ident(word), word, loc});
        continue;
      }
      throw ParseError{std::string("unexpected character '") + c + "'", loc};
    }
  }

 private:
  static Tok keyword_or_ident(const std::string& w) {
    if (w == "fn") return Tok::KwFn;
    if (w == "lam") return Tok::KwLam;
    if (w == "susp") return Tok::KwSusp;
    if (w == "circ") return Tok::KwCirc;
    if (w == "down") return Tok::KwDown;
    if (w == "force") return Tok::KwForce;
    if (w == "match") return Tok::KwMatch;
    if (w == "circval") return Tok::KwCircval;
    if (w == "with") return Tok::KwWith;
    if (w == "unit") return Tok::KwUnit;
    if (w == "qubit") return Tok::KwQubit;
    if (w == "Up") return Tok::KwUp;
    if (w == "Down") return Tok::KwDownTy;
    if (w == "gate") return Tok::KwGateDecl;
    return Tok::Ident;
  }

  std::string lex_ident_chars() {
    std::string word;
    while (!at_end()) {
      char c = peek();
      if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '\'')
        word += take();
      else
        break;
    }
    return word;
  }

  void skip_ws() {
    while (!at_end()) {
      char c = peek();
      if (c == '-' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '-') {
        while (!at_end() && peek() != '\n') take();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        take();
      } else {
        return;
      }
    }
  }

  bool at_end() const { return pos_ >= src_.size(); }
  char peek() const { return src_[pos_]; }
  char take() {
    char c = src_[pos_++];
    if (c == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    return c;
  }

  std::string_view src_;
  size_t pos_ = 0;
  int line_ = 1, col_ = 1;
};

class Parser {
 public:
  explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

  Term parse_program_entry() {
    // A file holds one functional term, or a circuit when unambiguous.
    size_t save = pos_;
    try {
      Term t = parse_term();
      expect(Tok::End, "end of input");
      return t;
    } catch (const ParseError& functional_err) {
      pos_ = save;
      try {
        Term c = parse_circ();
        expect(Tok::End, "end of input");
        return c;
      } catch (const ParseError&) {
        throw functional_err;
      }
    }
  }

  Term parse_circuit_entry() {
    Term c = parse_circ();
    expect(Tok::End, "end of input");
    return c;
  }

  Type parse_type_entry() {
    Type t = parse_type();
    expect(Tok::End, "end of input");
    return t;
  }

  Signature parse_signature_entry() {
    Signature sig;
    while (peek().tok != Tok::End) {
      Loc loc = peek().loc;
      expect(Tok::KwGateDecl, "'gate'");
      Token name = expect(Tok::Ident, "gate name");
      expect(Tok::Colon, "':'");
      Type ty = parse_sig_type();
      if (ty->kind != TKind::Arrow || !is_simple(ty->a) || !is_simple(ty->b))
        throw ParseError{"gate '" + name.text + "' must map a simple type to a simple type", loc};
      if (sig.gates.count(name.text))
        throw ParseError{"duplicate gate '" + name.text + "'", name.loc};
      sig.gates.emplace(name.text, ty);
    }
    return sig;
  }

  // ---- types ----

  Type parse_type() {  // arrow level, right associative, trailing @mode
    Type lhs = parse_type_tensor();
    if (peek().tok == Tok::Arrow) {
      next();
      Type rhs = parse_type();
      Mode m = parse_mode_suffix();
      return t_arrow(lhs, rhs, m);
    }
    return lhs;
  }

  Type parse_type_tensor() {
    Type lhs = parse_type_prefix();
    if (peek().tok == Tok::Star) {
      next();
      Type rhs = parse_type_tensor();
      Mode m = parse_mode_suffix();
      return t_tensor(lhs, rhs, m);
    }
    return lhs;
  }

  Type parse_type_prefix() {
    Token t = peek();
    if (t.tok == Tok::KwUp) {
      next();
      Type inner = parse_type_prefix();
      if (mode_of(inner) == Mode::U) throw ParseError{"Up has no source above mode u", t.loc};
      return t_up(inner);
    }
    if (t.tok == Tok::KwDownTy) {
      next();
      Type inner = parse_type_prefix();
      if (mode_of(inner) != Mode::U) throw ParseError{"Down embeds unrestricted types only", t.loc};
      return t_down(inner);
    }
    return parse_type_atom();
  }

  Type parse_type_atom() {
    Token t = next();
    switch (t.tok) {
      case Tok::KwUnit: {
        expect(Tok::At, "'@' after unit");
        return t_unit(parse_mode());
      }
      case Tok::KwQubit: return t_qubit();
      case Tok::LParen: {
        Type inner = parse_type();
        expect(Tok::RParen, "')'");
        return inner;
      }
      default: throw ParseError{"expected a type, found '" + t.text + "'", t.loc};
    }
  }

  // Signature files leave the circuit mode implicit.
  Type parse_sig_type() {
    Type lhs = parse_sig_tensor();
    if (peek().tok == Tok::Arrow) {
      next();
      Type rhs = parse_sig_type();
      return t_arrow(lhs, rhs, Mode::Q);
    }
    return lhs;
  }

  Type parse_sig_tensor() {
    Type lhs = parse_sig_atom();
    if (peek().tok == Tok::Star) {
      next();
      Type rhs = parse_sig_tensor();
      return t_tensor(lhs, rhs, Mode::Q);
    }
    return lhs;
  }

  Type parse_sig_atom() {
    Token t = next();
    switch (t.tok) {
      case Tok::KwQubit: return t_qubit();
      case Tok::KwUnit: return t_unit(Mode::Q);
      case Tok::LParen: {
        Type inner = parse_sig_type();
        expect(Tok::RParen, "')'");
        return inner;
      }
      default: throw ParseError{"expected a simple type, found '" + t.text + "'", t.loc};
    }
  }

  Mode parse_mode_suffix() {
    expect(Tok::At, "'@mode'");
    return parse_mode();
  }

  Mode parse_mode() {
    Token t = expect(Tok::Ident, "mode (u, l or q)");
    if (t.text == "u") return Mode::U;
    if (t.text == "l") return Mode::L;
    if (t.text == "q") return Mode::Q;
    throw ParseError{"expected mode u, l or q, found '" + t.text + "'", t.loc};
  }

  // ---- functional terms ----

  Term parse_term() {
    Token t = peek();
    switch (t.tok) {
      case Tok::KwFn: {
        next();
        auto [name, annot] = parse_binder();
        expect(Tok::FatArrow, "'=>'");
        return at(lam_f(name, annot, parse_term()), t.loc);
      }
      case Tok::KwSusp: {
        next();
        return at(susp_term(parse_term()), t.loc);
      }
      case Tok::KwDown: {
        next();
        return at(down_intro(parse_term()), t.loc);
      }
      case Tok::KwForce: {
        next();
        return at(force_f(parse_term()), t.loc);
      }
      case Tok::KwMatch: return parse_functional_match();
      default: return parse_term_app();
    }
  }

  Term parse_functional_match() {
    Token t = expect(Tok::KwMatch, "'match'");
    bool circ_scrut = false;
    if (peek().tok == Tok::KwCircval) {
      next();
      circ_scrut = true;
    }
    Term scrut = circ_scrut ? parse_circ() : parse_term();
    expect(Tok::KwWith, "'with'");
    expect(Tok::LBrace, "'{'");
    PatFamily fam = circ_scrut ? PatFamily::QF : PatFamily::FF;
    Pattern pat = parse_pattern(fam);
    expect(Tok::RBrace, "'}'");
    return at(match_term(std::move(scrut), std::move(pat)), t.loc);
  }

  Pattern parse_pattern(PatFamily fam) {
    Token t = peek();
    if (t.tok == Tok::LParen) {
      next();
      if (peek().tok == Tok::RParen) {
        next();
        expect(Tok::FatArrow, "'=>'");
        return pat_unit(fam, parse_body(fam));
      }
      Token x = expect(Tok::Ident, "pattern variable");
      expect(Tok::Comma, "','");
      Token y = expect(Tok::Ident, "pattern variable");
      expect(Tok::RParen, "')'");
      expect(Tok::FatArrow, "'=>'");
      if (x.text == y.text) throw ParseError{"pattern binds '" + x.text + "' twice", y.loc};
      return pat_pair(fam, x.text, y.text, parse_body(fam));
    }
    if (t.tok == Tok::KwDown) {
      if (fam != PatFamily::FF)
        throw ParseError{"'down' patterns only eliminate functional terms", t.loc};
      next();
      Token x = expect(Tok::Ident, "pattern variable");
      expect(Tok::FatArrow, "'=>'");
      return pat_down(x.text, parse_body(fam));
    }
    throw ParseError{"expected a pattern, found '" + t.text + "'", t.loc};
  }

  Term parse_body(PatFamily fam) { return fam == PatFamily::QQ ? parse_circ() : parse_term(); }

  Term parse_term_app() {
    Loc loc = peek().loc;
    Term head = parse_term_atom();
    while (starts_term_atom(peek().tok)) {
      Term arg = parse_term_atom();
      head = at(app_f(std::move(head), std::move(arg)), loc);
    }
    return head;
  }

  static bool starts_term_atom(Tok t) {
    return t == Tok::Ident || t == Tok::LParen || t == Tok::KwCirc;
  }

  Term parse_term_atom() {
    Token t = next();
    switch (t.tok) {
      case Tok::Ident: return at(var_f(t.text), t.loc);
      case Tok::KwCirc: {
        expect(Tok::LBrace, "'{'");
        Term c = parse_circ();
        expect(Tok::RBrace, "'}'");
        return at(susp_circ(std::move(c)), t.loc);
      }
      case Tok::LParen: {
        if (peek().tok == Tok::RParen) {
          next();
          return at(unit_f(), t.loc);
        }
        Term first = parse_term();
        if (peek().tok == Tok::Comma) {
          next();
          Term second = parse_term();
          expect(Tok::RParen, "')'");
          return at(pair_f(std::move(first), std::move(second)), t.loc);
        }
        expect(Tok::RParen, "')'");
        return first;
      }
      default: throw ParseError{"expected a term, found '" + t.text + "'", t.loc};
    }
  }

  // ---- circuits ----

  Term parse_circ() {
    Token t = peek();
    switch (t.tok) {
      case Tok::KwLam: {
        next();
        auto [name, annot] = parse_binder();
        expect(Tok::FatArrow, "'=>'");
        return at(lam_c(name, annot, parse_circ()), t.loc);
      }
      case Tok::KwMatch: {
        next();
        Term scrut = parse_circ();
        expect(Tok::KwWith, "'with'");
        expect(Tok::LBrace, "'{'");
        Pattern pat = parse_pattern(PatFamily::QQ);
        expect(Tok::RBrace, "'}'");
        return at(match_term(std::move(scrut), std::move(pat)), t.loc);
      }
      default: return parse_circ_app();
    }
  }

  Term parse_circ_app() {
    Loc loc = peek().loc;
    Term head = parse_circ_atom();
    while (starts_circ_atom(peek().tok)) {
      Term arg = parse_circ_atom();
      head = at(app_c(std::move(head), std::move(arg)), loc);
    }
    return head;
  }

  static bool starts_circ_atom(Tok t) {
    return t == Tok::Ident || t == Tok::LParen || t == Tok::Gate || t == Tok::KwForce;
  }

  Term parse_circ_atom() {
    Token t = next();
    switch (t.tok) {
      case Tok::Ident: return at(var_c(t.text), t.loc);
      case Tok::Gate: return at(gate(t.text), t.loc);
      case Tok::KwForce: {
        expect(Tok::LBrace, "'{'");
        Term m = parse_term();
        expect(Tok::RBrace, "'}'");
        return at(force_c(std::move(m)), t.loc);
      }
      case Tok::LParen: {
        if (peek().tok == Tok::RParen) {
          next();
          return at(unit_c(), t.loc);
        }
        Term first = parse_circ();
        if (peek().tok == Tok::Comma) {
          next();
          Term second = parse_circ();
          expect(Tok::RParen, "')'");
          return at(pair_c(std::move(first), std::move(second)), t.loc);
        }
        expect(Tok::RParen, "')'");
        return first;
      }
      default: throw ParseError{"expected a circuit, found '" + t.text + "'", t.loc};
    }
  }

  // ---- shared ----

  std::pair<std::string, std::optional<Type>> parse_binder() {
    if (peek().tok == Tok::Ident) {
      return {next().text, std::nullopt};
    }
    expect(Tok::LParen, "binder");
    Token x = expect(Tok::Ident, "binder name");
    expect(Tok::Colon, "':'");
    Type ty = parse_type();
    expect(Tok::RParen, "')'");
    return {x.text, ty};
  }

 private:
  static Term at(Term t, Loc loc) { return with_loc(std::move(t), loc); }

  const Token& peek() const { return toks_[pos_]; }
  Token next() { return toks_[pos_ == toks_.size() - 1 ? pos_ : pos_++]; }
  Token expect(Tok t, const std::string& what) {
    Token tok = peek();
    if (tok.tok != t) throw ParseError{"expected " + what + ", found '" + (tok.tok == Tok::End ? "end of input" : tok.text) + "'", tok.loc};
    return next();
  }

  std::vector<Token> toks_;
  size_t pos_ = 0;
};

template <typename F>
inline auto run_parse(std::string_view src, const std::string& file, F f)
    -> std::variant<decltype(f(std::declval<Parser&>())), Diag> {
  try {
    Parser p(Lexer(src).run());
    return f(p);
  } catch (const ParseError& e) {
    return Diag{"parse", e.message, e.loc, file};
  }
}

}  // namespace detail

using detail::Parser;

inline std::variant<Term, Diag> parse_program(std::string_view src, const std::string& file = "") {
  return detail::run_parse(src, file, [](detail::Parser& p) { return p.parse_program_entry(); });
}

// Parses the source as a circuit unconditionally.
inline std::variant<Term, Diag> parse_circuit(std::string_view src, const std::string& file = "") {
  return detail::run_parse(src, file, [](detail::Parser& p) { return p.parse_circuit_entry(); });
}

inline std::variant<Type, Diag> parse_type(std::string_view src, const std::string& file = "") {
  return detail::run_parse(src, file, [](detail::Parser& p) { return p.parse_type_entry(); });
}

inline std::variant<Signature, Diag> parse_signature(std::string_view src, const std::string& file = "") {
  return detail::run_parse(src, file, [](detail::Parser& p) { return p.parse_signature_entry(); });
}

// Convenience for tests and builders: parse or abort.
inline Term must_parse(std::string_view src) {
  auto r = parse_program(src);
  if (auto* d = std::get_if<Diag>(&r)) {
    throw std::runtime_error("must_parse: " + d->render());
  }
  return std::get<Term>(r);
}

inline Term must_parse_circ(std::string_view src) {
  auto r = parse_circuit(src);
  if (auto* d = std::get_if<Diag>(&r)) {
    throw std::runtime_error("must_parse_circ: " + d->render());
  }
  return std::get<Term>(r);
}

inline Type must_parse_type(std::string_view src) {
  auto r = parse_type(src);
  if (auto* d = std::get_if<Diag>(&r)) {
    throw std::runtime_error("must_parse_type: " + d->render());
  }
  return std::get<Type>(r);
}

}  // namespace pqa
