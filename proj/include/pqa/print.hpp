#pragma once

#include <sstream>
#include <string>

#include "pqa/syntax.hpp"

namespace pqa {

// ---------------------------------------------------------------------------
// Type printing
// ---------------------------------------------------------------------------

namespace detail {

// Grammar levels: arrows sit below tensors, which sit below the prefix
// shifts and atoms. Children print at the level their slot parses at.
enum class TyLv : uint8_t { Arrow, Tensor, Prefix };

inline TyLv type_level(const Type& t) {
  switch (t->kind) {
    case TKind::Arrow: return TyLv::Arrow;
    case TKind::Tensor: return TyLv::Tensor;
    default: return TyLv::Prefix;
  }
}

inline void print_type_rec(const Type& t, std::ostream& os, TyLv slot) {
  bool parens = static_cast<int>(type_level(t)) < static_cast<int>(slot);
  if (parens) os << '(';
  switch (t->kind) {
    case TKind::UnitAt: os << "unit@" << mode_name(t->mode); break;
    case TKind::Qubit: os << "qubit"; break;
    case TKind::Tensor:
      print_type_rec(t->a, os, TyLv::Prefix);
      os << " * ";
      print_type_rec(t->b, os, TyLv::Tensor);
      os << " @" << mode_name(t->mode);
      break;
    case TKind::Arrow:
      print_type_rec(t->a, os, TyLv::Tensor);
      os << " -o ";
      print_type_rec(t->b, os, TyLv::Arrow);
      os << " @" << mode_name(t->mode);
      break;
    case TKind::Up:
      os << "Up ";
      print_type_rec(t->a, os, TyLv::Prefix);
      break;
    case TKind::Down:
      os << "Down ";
      print_type_rec(t->a, os, TyLv::Prefix);
      break;
  }
  if (parens) os << ')';
}

}  // namespace detail

inline std::string print_type(const Type& t) {
  std::ostringstream os;
  detail::print_type_rec(t, os, detail::TyLv::Arrow);
  return os.str();
}

// ---------------------------------------------------------------------------
// Term printing
// ---------------------------------------------------------------------------

namespace detail {

// Atoms are tokens that can stand as arguments of a juxtaposed application
// without parentheses.
inline bool term_atomic(const Term& t) {
  switch (t->kind) {
    case Kind::Var:
    case Kind::Unit:
    case Kind::Pair:
    case Kind::Gate:
    case Kind::SuspCirc: return true;
    case Kind::Force: return t->color == Color::Circuit;  // force { M } is self-delimiting
    default: return false;
  }
}

inline void print_term_rec(const Term& t, std::ostream& os, bool as_atom);

inline void print_pattern(const Pattern& p, std::ostream& os) {
  switch (p.kind) {
    case PatKind::Unit: os << "()"; break;
    case PatKind::Pair: os << '(' << p.x << ", " << p.y << ')'; break;
    case PatKind::Down: os << "down " << p.x; break;
  }
  os << " => ";
  print_term_rec(p.body, os, false);
}

inline void print_term_rec(const Term& t, std::ostream& os, bool as_atom) {
  bool parens = as_atom && !term_atomic(t);
  if (parens) os << '(';
  switch (t->kind) {
    case Kind::Var: os << t->name; break;
    case Kind::Gate: os << '#' << t->name; break;
    case Kind::Unit: os << "()"; break;
    case Kind::Pair:
      os << '(';
      print_term_rec(t->a, os, false);
      os << ", ";
      print_term_rec(t->b, os, false);
      os << ')';
      break;
    case Kind::Lam:
      os << (t->color == Color::Functional ? "fn " : "lam ");
      if (t->annot) {
        os << '(' << t->name << " : ";
        print_type_rec(*t->annot, os, TyLv::Arrow);
        os << ')';
      } else {
        os << t->name;
      }
      os << " => ";
      print_term_rec(t->a, os, false);
      break;
    case Kind::SuspTerm:
      os << "susp ";
      print_term_rec(t->a, os, true);
      break;
    case Kind::SuspCirc:
      os << "circ { ";
      print_term_rec(t->a, os, false);
      os << " }";
      break;
    case Kind::DownIntro:
      os << "down ";
      print_term_rec(t->a, os, true);
      break;
    case Kind::App: {
      // Left-nested application chains print without parentheses.
      if (t->a->kind == Kind::App) {
        print_term_rec(t->a, os, false);
      } else {
        print_term_rec(t->a, os, true);
      }
      os << ' ';
      print_term_rec(t->b, os, true);
      break;
    }
    case Kind::Force:
      if (t->color == Color::Functional) {
        os << "force ";
        print_term_rec(t->a, os, true);
      } else {
        os << "force { ";
        print_term_rec(t->a, os, false);
        os << " }";
      }
      break;
    case Kind::Match:
      os << "match ";
      if (t->pat->family == PatFamily::QF) os << "circval ";
      print_term_rec(t->a, os, true);
      os << " with { ";
      print_pattern(*t->pat, os);
      os << " }";
      break;
  }
  if (parens) os << ')';
}

}  // namespace detail

inline std::string print_term(const Term& t) {
  std::ostringstream os;
  detail::print_term_rec(t, os, false);
  return os.str();
}

}  // namespace pqa
