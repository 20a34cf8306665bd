#pragma once

#include <cassert>
#include <cstdint>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace pqa {

// ---------------------------------------------------------------------------
// Modes
// ---------------------------------------------------------------------------

enum class Mode : uint8_t { U, L, Q };

inline const char* mode_name(Mode m) {
  switch (m) {
    case Mode::U: return "u";
    case Mode::L: return "l";
    case Mode::Q: return "q";
  }
  return "?";
}

// Preorder generated by U > L, L > Q and Q > L. L and Q sit in a cycle, so
// m >= k fails exactly when k is U and m is not.
inline bool mode_geq(Mode m, Mode k) { return k != Mode::U || m == Mode::U; }

inline bool is_functional_mode(Mode m) { return m != Mode::Q; }

// ---------------------------------------------------------------------------
// Types
// ---------------------------------------------------------------------------

enum class TKind : uint8_t { UnitAt, Qubit, Tensor, Arrow, Up, Down };

struct TypeNode;
using Type = std::shared_ptr<const TypeNode>;

struct TypeNode {
  TKind kind;
  Mode mode;  // mode the type lives at
  Type a, b;  // Tensor/Arrow children; Up/Down payload in a
};

inline Mode mode_of(const Type& t) { return t->mode; }

inline Type t_unit(Mode m) {
  return std::make_shared<TypeNode>(TypeNode{TKind::UnitAt, m, nullptr, nullptr});
}
inline Type t_qubit() {
  return std::make_shared<TypeNode>(TypeNode{TKind::Qubit, Mode::Q, nullptr, nullptr});
}
inline Type t_tensor(Type l, Type r, Mode m) {
  return std::make_shared<TypeNode>(TypeNode{TKind::Tensor, m, std::move(l), std::move(r)});
}
inline Type t_arrow(Type dom, Type cod, Mode m) {
  return std::make_shared<TypeNode>(TypeNode{TKind::Arrow, m, std::move(dom), std::move(cod)});
}
// Shift targets are determined by the payload: Up takes Q to L and L to U,
// Down takes U to L. A payload at an impossible mode is flagged by
// type_violation, not here.
inline Type t_up(Type inner) {
  Mode to = mode_of(inner) == Mode::Q ? Mode::L : Mode::U;
  return std::make_shared<TypeNode>(TypeNode{TKind::Up, to, std::move(inner), nullptr});
}
inline Type t_down(Type inner) {
  return std::make_shared<TypeNode>(TypeNode{TKind::Down, Mode::L, std::move(inner), nullptr});
}

inline bool type_eq(const Type& x, const Type& y) {
  if (x == y) return true;
  if (!x || !y) return false;
  if (x->kind != y->kind || x->mode != y->mode) return false;
  switch (x->kind) {
    case TKind::UnitAt:
    case TKind::Qubit: return true;
    case TKind::Tensor:
    case TKind::Arrow: return type_eq(x->a, y->a) && type_eq(x->b, y->b);
    case TKind::Up:
    case TKind::Down: return type_eq(x->a, y->a);
  }
  return false;
}

// Simple types: the shapes of wire bundles.
inline bool is_simple(const Type& t) {
  switch (t->kind) {
    case TKind::UnitAt: return t->mode == Mode::Q;
    case TKind::Qubit: return true;
    case TKind::Tensor: return t->mode == Mode::Q && is_simple(t->a) && is_simple(t->b);
    default: return false;
  }
}

// Returns a description of the first grammar violation, or nullopt if the
// type is well formed.
inline std::optional<std::string> type_violation(const Type& t) {
  switch (t->kind) {
    case TKind::UnitAt:
    case TKind::Qubit: return std::nullopt;
    case TKind::Tensor: {
      if (auto v = type_violation(t->a)) return v;
      if (auto v = type_violation(t->b)) return v;
      if (t->mode == Mode::Q) {
        if (!is_simple(t->a) || !is_simple(t->b))
          return "circuit tensor components must be simple types";
      } else if (mode_of(t->a) != t->mode || mode_of(t->b) != t->mode) {
        return "tensor components must live at the tensor's mode";
      }
      return std::nullopt;
    }
    case TKind::Arrow: {
      if (auto v = type_violation(t->a)) return v;
      if (auto v = type_violation(t->b)) return v;
      if (t->mode == Mode::Q) {
        if (!is_simple(t->a) || !is_simple(t->b))
          return "circuit functions only exist between simple types";
      } else if (mode_of(t->a) != t->mode || mode_of(t->b) != t->mode) {
        return "function domain and codomain must live at the arrow's mode";
      }
      return std::nullopt;
    }
    case TKind::Up: {
      if (auto v = type_violation(t->a)) return v;
      if (mode_of(t->a) == Mode::U) return "Up has no source above mode u";
      return std::nullopt;
    }
    case TKind::Down: {
      if (auto v = type_violation(t->a)) return v;
      if (mode_of(t->a) != Mode::U) return "Down embeds unrestricted types only";
      return std::nullopt;
    }
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Programs
// ---------------------------------------------------------------------------

enum class Color : uint8_t { Functional, Circuit };

enum class Kind : uint8_t {
  Var,        // name
  Lam,        // binder name, optional annotation, body in a
  Unit,       //
  Pair,       // a, b
  SuspTerm,   // functional: suspended functional term in a
  SuspCirc,   // functional: suspended circuit in a
  DownIntro,  // functional: unrestricted payload in a
  App,        // a applied to b
  Force,      // payload (always a functional term) in a
  Match,      // scrutinee in a, pattern holds the body
  Gate,       // name
};

enum class PatKind : uint8_t { Unit, Pair, Down };
enum class PatFamily : uint8_t { FF, QF, QQ };

struct Node;
using Term = std::shared_ptr<const Node>;

struct Pattern {
  PatKind kind;
  PatFamily family;
  std::string x, y;  // Pair binds x and y; Down binds x
  Term body;
};

// Variables bound by a pattern live in the language its scrutinee came from.
inline Color pattern_binder_color(PatFamily f) {
  return f == PatFamily::FF ? Color::Functional : Color::Circuit;
}

struct Loc {
  int line = 0, col = 0;
};

struct Node {
  Kind kind;
  Color color;
  Loc loc{};
  std::string name;           // Var/Gate name, Lam binder
  std::optional<Type> annot;  // Lam binder annotation
  Term a, b;
  std::optional<Pattern> pat;  // Match only
};

namespace detail {
inline Term mk(Kind k, Color c, std::string name, std::optional<Type> annot, Term a, Term b,
               std::optional<Pattern> pat) {
  return std::make_shared<Node>(
      Node{k, c, {}, std::move(name), std::move(annot), std::move(a), std::move(b), std::move(pat)});
}
}  // namespace detail

inline Term var_f(std::string x) {
  return detail::mk(Kind::Var, Color::Functional, std::move(x), std::nullopt, nullptr, nullptr, std::nullopt);
}
inline Term var_c(std::string x) {
  return detail::mk(Kind::Var, Color::Circuit, std::move(x), std::nullopt, nullptr, nullptr, std::nullopt);
}
inline Term var(Color c, std::string x) { return c == Color::Functional ? var_f(std::move(x)) : var_c(std::move(x)); }
inline Term lam_f(std::string x, std::optional<Type> annot, Term body) {
  return detail::mk(Kind::Lam, Color::Functional, std::move(x), std::move(annot), std::move(body), nullptr,
                    std::nullopt);
}
inline Term lam_c(std::string x, std::optional<Type> annot, Term body) {
  return detail::mk(Kind::Lam, Color::Circuit, std::move(x), std::move(annot), std::move(body), nullptr,
                    std::nullopt);
}
inline Term unit_f() { return detail::mk(Kind::Unit, Color::Functional, {}, std::nullopt, nullptr, nullptr, std::nullopt); }
inline Term unit_c() { return detail::mk(Kind::Unit, Color::Circuit, {}, std::nullopt, nullptr, nullptr, std::nullopt); }
inline Term pair_f(Term l, Term r) {
  return detail::mk(Kind::Pair, Color::Functional, {}, std::nullopt, std::move(l), std::move(r), std::nullopt);
}
inline Term pair_c(Term l, Term r) {
  return detail::mk(Kind::Pair, Color::Circuit, {}, std::nullopt, std::move(l), std::move(r), std::nullopt);
}
inline Term susp_term(Term m) {
  return detail::mk(Kind::SuspTerm, Color::Functional, {}, std::nullopt, std::move(m), nullptr, std::nullopt);
}
inline Term susp_circ(Term c) {
  return detail::mk(Kind::SuspCirc, Color::Functional, {}, std::nullopt, std::move(c), nullptr, std::nullopt);
}
inline Term down_intro(Term m) {
  return detail::mk(Kind::DownIntro, Color::Functional, {}, std::nullopt, std::move(m), nullptr, std::nullopt);
}
inline Term app_f(Term f, Term a) {
  return detail::mk(Kind::App, Color::Functional, {}, std::nullopt, std::move(f), std::move(a), std::nullopt);
}
inline Term app_c(Term f, Term a) {
  return detail::mk(Kind::App, Color::Circuit, {}, std::nullopt, std::move(f), std::move(a), std::nullopt);
}
inline Term force_f(Term m) {
  return detail::mk(Kind::Force, Color::Functional, {}, std::nullopt, std::move(m), nullptr, std::nullopt);
}
inline Term force_c(Term m) {
  return detail::mk(Kind::Force, Color::Circuit, {}, std::nullopt, std::move(m), nullptr, std::nullopt);
}
inline Term gate(std::string g) {
  return detail::mk(Kind::Gate, Color::Circuit, std::move(g), std::nullopt, nullptr, nullptr, std::nullopt);
}

inline Color match_color(PatFamily f) { return f == PatFamily::QQ ? Color::Circuit : Color::Functional; }
inline Color scrutinee_color(PatFamily f) { return f == PatFamily::FF ? Color::Functional : Color::Circuit; }

inline Term match_term(Term scrutinee, Pattern pat) {
  Color c = match_color(pat.family);
  return detail::mk(Kind::Match, c, {}, std::nullopt, std::move(scrutinee), nullptr, std::move(pat));
}

inline Pattern pat_unit(PatFamily f, Term body) { return Pattern{PatKind::Unit, f, {}, {}, std::move(body)}; }
inline Pattern pat_pair(PatFamily f, std::string x, std::string y, Term body) {
  return Pattern{PatKind::Pair, f, std::move(x), std::move(y), std::move(body)};
}
inline Pattern pat_down(std::string x, Term body) {
  return Pattern{PatKind::Down, PatFamily::FF, std::move(x), {}, std::move(body)};
}

inline Term with_loc(Term t, Loc loc) {
  auto n = std::make_shared<Node>(*t);
  n->loc = loc;
  return n;
}

// ---------------------------------------------------------------------------
// Variables, alpha-equivalence, substitution
// ---------------------------------------------------------------------------

// Variables are identified by name *and* language: a circuit wire may share
// its spelling with an unrelated functional variable.
struct VarId {
  std::string name;
  Color color;
  friend bool operator==(const VarId&, const VarId&) = default;
  friend bool operator<(const VarId& l, const VarId& r) {
    if (l.name != r.name) return l.name < r.name;
    return static_cast<int>(l.color) < static_cast<int>(r.color);
  }
};

namespace detail {

inline void pattern_binders(const Pattern& p, std::vector<VarId>& out) {
  Color c = pattern_binder_color(p.family);
  switch (p.kind) {
    case PatKind::Unit: break;
    case PatKind::Pair:
      out.push_back({p.x, c});
      out.push_back({p.y, c});
      break;
    case PatKind::Down: out.push_back({p.x, Color::Functional}); break;
  }
}

inline void free_vars_rec(const Term& t, std::vector<VarId>& bound, std::set<VarId>& out) {
  switch (t->kind) {
    case Kind::Var: {
      VarId v{t->name, t->color};
      for (auto it = bound.rbegin(); it != bound.rend(); ++it)
        if (*it == v) return;
      out.insert(v);
      return;
    }
    case Kind::Lam: {
      bound.push_back({t->name, t->color});
      free_vars_rec(t->a, bound, out);
      bound.pop_back();
      return;
    }
    case Kind::Unit:
    case Kind::Gate: return;
    case Kind::Pair:
    case Kind::App:
      free_vars_rec(t->a, bound, out);
      free_vars_rec(t->b, bound, out);
      return;
    case Kind::SuspTerm:
    case Kind::SuspCirc:
    case Kind::DownIntro:
    case Kind::Force: free_vars_rec(t->a, bound, out); return;
    case Kind::Match: {
      free_vars_rec(t->a, bound, out);
      std::vector<VarId> binders;
      pattern_binders(*t->pat, binders);
      for (auto& b : binders) bound.push_back(b);
      free_vars_rec(t->pat->body, bound, out);
      for (size_t i = 0; i < binders.size(); ++i) bound.pop_back();
      return;
    }
  }
}

}  // namespace detail

inline std::set<VarId> free_vars(const Term& t) {
  std::set<VarId> out;
  std::vector<VarId> bound;
  detail::free_vars_rec(t, bound, out);
  return out;
}

inline std::set<std::string> free_vars(const Term& t, Color c) {
  std::set<std::string> out;
  for (auto& v : free_vars(t))
    if (v.color == c) out.insert(v.name);
  return out;
}

inline bool functionally_closed(const Term& t) { return free_vars(t, Color::Functional).empty(); }

namespace detail {

// Innermost index of v in the binder stack, or -1 when free.
inline int bound_index(const std::vector<VarId>& env, const VarId& v) {
  for (int i = static_cast<int>(env.size()) - 1; i >= 0; --i)
    if (env[static_cast<size_t>(i)] == v) return i;
  return -1;
}

inline bool alpha_eq_rec(const Term& p, const Term& q, std::vector<VarId>& envp, std::vector<VarId>& envq) {
  if (p->kind != q->kind || p->color != q->color) return false;
  switch (p->kind) {
    case Kind::Var: {
      int i = bound_index(envp, {p->name, p->color});
      int j = bound_index(envq, {q->name, q->color});
      if (i != j) return false;
      return i >= 0 || p->name == q->name;
    }
    case Kind::Gate: return p->name == q->name;
    case Kind::Unit: return true;
    case Kind::Lam: {
      // Annotations are typing hints, not term structure.
      envp.push_back({p->name, p->color});
      envq.push_back({q->name, q->color});
      bool r = alpha_eq_rec(p->a, q->a, envp, envq);
      envp.pop_back();
      envq.pop_back();
      return r;
    }
    case Kind::Pair:
    case Kind::App:
      return alpha_eq_rec(p->a, q->a, envp, envq) && alpha_eq_rec(p->b, q->b, envp, envq);
    case Kind::SuspTerm:
    case Kind::SuspCirc:
    case Kind::DownIntro:
    case Kind::Force: return alpha_eq_rec(p->a, q->a, envp, envq);
    case Kind::Match: {
      const Pattern& pp = *p->pat;
      const Pattern& qp = *q->pat;
      if (pp.kind != qp.kind || pp.family != qp.family) return false;
      if (!alpha_eq_rec(p->a, q->a, envp, envq)) return false;
      std::vector<VarId> bp, bq;
      pattern_binders(pp, bp);
      pattern_binders(qp, bq);
      for (auto& b : bp) envp.push_back(b);
      for (auto& b : bq) envq.push_back(b);
      bool r = alpha_eq_rec(pp.body, qp.body, envp, envq);
      for (size_t i = 0; i < bp.size(); ++i) envp.pop_back();
      for (size_t i = 0; i < bq.size(); ++i) envq.pop_back();
      return r;
    }
  }
  return false;
}

}  // namespace detail

inline bool alpha_eq(const Term& p, const Term& q) {
  std::vector<VarId> envp, envq;
  return detail::alpha_eq_rec(p, q, envp, envq);
}

// ---------------------------------------------------------------------------
// Fresh names
// ---------------------------------------------------------------------------

// Generated names use the reserved "%" prefix, so they can never collide
// with a source identifier; the counter only ever moves forward within a run.
struct NameSupply {
  long next = 0;
  std::string fresh() { return "%" + std::to_string(next++); }
  void reserve_from(long seen) {
    if (seen + 1 > next) next = seen + 1;
  }
};

inline long max_reserved_index(const std::string& name) {
  if (name.size() < 2 || name[0] != '%') return -1;
  for (size_t i = 1; i < name.size(); ++i)
    if (name[i] < '0' || name[i] > '9') return -1;
  return std::stol(name.substr(1));
}

namespace detail {
inline void scan_reserved(const Term& t, long& hi) {
  hi = std::max(hi, max_reserved_index(t->name));
  if (t->pat) {
    hi = std::max(hi, max_reserved_index(t->pat->x));
    hi = std::max(hi, max_reserved_index(t->pat->y));
    scan_reserved(t->pat->body, hi);
  }
  if (t->a) scan_reserved(t->a, hi);
  if (t->b) scan_reserved(t->b, hi);
}
}  // namespace detail

inline NameSupply supply_for(std::initializer_list<Term> terms, std::initializer_list<std::string> names = {}) {
  long hi = -1;
  for (auto& t : terms)
    if (t) detail::scan_reserved(t, hi);
  for (auto& n : names) hi = std::max(hi, max_reserved_index(n));
  NameSupply s;
  s.reserve_from(hi);
  return s;
}

// ---------------------------------------------------------------------------
// Capture-avoiding substitution
// ---------------------------------------------------------------------------

struct Subst {
  VarId var;
  Term image;
};

namespace detail {

struct SubstEnv {
  std::vector<Subst> subs;
  std::set<VarId> image_fvs;  // union over active images
  NameSupply* supply;
};

inline Term subst_rec(const Term& t, SubstEnv& env);

// Renames a binder when it would capture a free variable of an image.
template <typename Rebuild>
inline Term subst_under_binder(const Term& t, SubstEnv& env, std::vector<VarId> binders, const Term& body,
                               Rebuild rebuild) {
  std::vector<Subst> kept;
  for (auto& s : env.subs) {
    bool shadowed = false;
    for (auto& b : binders)
      if (b == s.var) shadowed = true;
    if (!shadowed) kept.push_back(s);
  }
  if (kept.empty()) return t;

  std::set<VarId> kept_fvs;
  for (auto& s : kept)
    for (auto& v : free_vars(s.image)) kept_fvs.insert(v);

  std::vector<std::string> names;
  Term cur_body = body;
  for (auto& b : binders) {
    std::string name = b.name;
    if (kept_fvs.count(b)) {
      name = env.supply->fresh();
      SubstEnv ren{{Subst{b, var(b.color, name)}}, {}, env.supply};
      cur_body = subst_rec(cur_body, ren);
    }
    names.push_back(name);
  }
  SubstEnv inner{std::move(kept), std::move(kept_fvs), env.supply};
  return rebuild(names, subst_rec(cur_body, inner));
}

inline Term subst_rec(const Term& t, SubstEnv& env) {
  switch (t->kind) {
    case Kind::Var: {
      for (auto& s : env.subs)
        if (s.var == VarId{t->name, t->color}) return s.image;
      return t;
    }
    case Kind::Unit:
    case Kind::Gate: return t;
    case Kind::Lam:
      return subst_under_binder(t, env, {{t->name, t->color}}, t->a,
                                [&](const std::vector<std::string>& names, Term body) {
                                  return detail::mk(Kind::Lam, t->color, names[0], t->annot, std::move(body),
                                                    nullptr, std::nullopt);
                                });
    case Kind::Pair:
    case Kind::App: {
      Term a = subst_rec(t->a, env);
      Term b = subst_rec(t->b, env);
      if (a == t->a && b == t->b) return t;
      return detail::mk(t->kind, t->color, {}, std::nullopt, std::move(a), std::move(b), std::nullopt);
    }
    case Kind::SuspTerm:
    case Kind::SuspCirc:
    case Kind::DownIntro:
    case Kind::Force: {
      Term a = subst_rec(t->a, env);
      if (a == t->a) return t;
      return detail::mk(t->kind, t->color, {}, std::nullopt, std::move(a), nullptr, std::nullopt);
    }
    case Kind::Match: {
      Term scrut = subst_rec(t->a, env);
      const Pattern& p = *t->pat;
      std::vector<VarId> binders;
      pattern_binders(p, binders);
      Term body_holder = subst_under_binder(
          t, env, binders, p.body, [&](const std::vector<std::string>& names, Term body) {
            Pattern np = p;
            if (p.kind == PatKind::Pair) {
              np.x = names[0];
              np.y = names[1];
            } else if (p.kind == PatKind::Down) {
              np.x = names[0];
            }
            np.body = std::move(body);
            return detail::mk(Kind::Match, t->color, {}, std::nullopt, scrut, nullptr, std::move(np));
          });
      if (body_holder == t && scrut != t->a)
        return detail::mk(Kind::Match, t->color, {}, std::nullopt, scrut, nullptr, *t->pat);
      return body_holder;
    }
  }
  return t;
}

}  // namespace detail

inline Term subst_multi(const Term& body, std::vector<Subst> subs, NameSupply& supply) {
  std::set<VarId> fvs;
  for (auto& s : subs)
    for (auto& v : free_vars(s.image)) fvs.insert(v);
  detail::SubstEnv env{std::move(subs), std::move(fvs), &supply};
  return detail::subst_rec(body, env);
}

inline Term subst_multi(const Term& body, std::vector<Subst> subs) {
  NameSupply supply = supply_for({body});
  for (auto& s : subs) {
    long hi = -1;
    detail::scan_reserved(s.image, hi);
    supply.reserve_from(hi);
  }
  return subst_multi(body, std::move(subs), supply);
}

inline Term subst(const Term& body, const std::string& x, Color c, const Term& v) {
  return subst_multi(body, {Subst{{x, c}, v}});
}

// Functional-variable substitution, the common case in beta reduction.
inline Term subst(const Term& body, const std::string& x, const Term& v) {
  return subst(body, x, Color::Functional, v);
}

}  // namespace pqa
