#pragma once

#include <algorithm>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "pqa/parse.hpp"
#include "pqa/statics.hpp"
#include "pqa/syntax.hpp"

namespace pqa {

// ---------------------------------------------------------------------------
// Neutral contexts
// ---------------------------------------------------------------------------

// The free circuit variables in scope while reducing under binders.
struct NeutralContext {
  std::vector<std::string> names;

  NeutralContext() = default;
  NeutralContext(std::initializer_list<std::string> ns) : names(ns) {}

  bool contains(const std::string& x) const {
    return std::find(names.begin(), names.end(), x) != names.end();
  }
  NeutralContext extended(const std::vector<std::string>& more) const {
    NeutralContext out = *this;
    for (auto& x : more)
      if (!out.contains(x)) out.names.push_back(x);
    return out;
  }
};

// Typed variant: wires paired with their simple types.
struct TypedNeutralContext {
  std::vector<CtxBinding> entries;

  TypedNeutralContext() = default;
  TypedNeutralContext(std::initializer_list<CtxBinding> es) : entries(es) {}

  NeutralContext cneu() const {
    NeutralContext out;
    for (auto& e : entries) out.names.push_back(e.name);
    return out;
  }
  TypingContext ctp() const {
    TypingContext out;
    out.bindings = entries;
    return out;
  }
  const Type* find(const std::string& x) const {
    for (auto& e : entries)
      if (e.name == x) return &e.type;
    return nullptr;
  }
};

// ---------------------------------------------------------------------------
// Classification: canonical, neutral and normal forms
// ---------------------------------------------------------------------------

enum class FormClass : uint8_t { Canonical, Neutral, NormalMatch, Reducible };

inline const char* form_class_name(FormClass c) {
  switch (c) {
    case FormClass::Canonical: return "canonical";
    case FormClass::Neutral: return "neutral";
    case FormClass::NormalMatch: return "normal-match";
    case FormClass::Reducible: return "reducible";
  }
  return "?";
}

namespace detail {

inline std::vector<std::string> pattern_names(const Pattern& p) {
  switch (p.kind) {
    case PatKind::Unit: return {};
    case PatKind::Pair: return {p.x, p.y};
    case PatKind::Down: return {p.x};
  }
  return {};
}

inline bool is_normal_rec(const NeutralContext& pi, const Term& t);

inline bool is_canonical_rec(const NeutralContext& pi, const Term& t) {
  switch (t->kind) {
    case Kind::Unit: return true;
    case Kind::SuspTerm:
    case Kind::SuspCirc: return true;
    case Kind::Pair: return is_normal_rec(pi, t->a) && is_normal_rec(pi, t->b);
    case Kind::DownIntro: return is_normal_rec(pi, t->a);
    case Kind::Lam:
      // Functional lambdas are values outright; a circuit lambda only names
      // input wires, so it is canonical once its body is normal.
      if (t->color == Color::Functional) return true;
      return is_normal_rec(pi.extended({t->name}), t->a);
    default: return false;
  }
}

inline bool is_neutral_rec(const NeutralContext& pi, const Term& t) {
  switch (t->kind) {
    case Kind::Var: return t->color == Color::Circuit && pi.contains(t->name);
    case Kind::Gate: return true;
    case Kind::App:
      // Only gates can head a stuck application: circuit variables never
      // have function type.
      if (t->color != Color::Circuit || t->a->kind != Kind::Gate) return false;
      return is_canonical_rec(pi, t->b) || is_neutral_rec(pi, t->b);
    default: return false;
  }
}

inline bool is_normal_match_rec(const NeutralContext& pi, const Term& t) {
  if (t->kind != Kind::Match) return false;
  const Pattern& p = *t->pat;
  if (p.family == PatFamily::FF) return false;  // functional scrutinees are never neutral
  if (!is_neutral_rec(pi, t->a)) return false;
  return is_normal_rec(pi.extended(pattern_names(p)), p.body);
}

inline bool is_normal_rec(const NeutralContext& pi, const Term& t) {
  return is_canonical_rec(pi, t) || is_neutral_rec(pi, t) || is_normal_match_rec(pi, t);
}

}  // namespace detail

inline bool is_canonical(const NeutralContext& pi, const Term& t) {
  return detail::is_canonical_rec(pi, t);
}
inline bool is_neutral(const NeutralContext& pi, const Term& t) {
  return detail::is_neutral_rec(pi, t);
}
inline bool is_normal(const NeutralContext& pi, const Term& t) {
  return detail::is_normal_rec(pi, t);
}
inline bool is_normal_match(const NeutralContext& pi, const Term& t) {
  return detail::is_normal_match_rec(pi, t);
}

// Scope validation shared by the public entry points: programs must be
// functionally closed and may only mention circuit variables from pi.
inline std::optional<Diag> validate_scope(const NeutralContext& pi, const Term& t) {
  for (auto& v : free_vars(t)) {
    if (v.color == Color::Functional)
      return Diag{"scope", "program has a free functional variable '" + v.name + "'", t->loc, ""};
    if (!pi.contains(v.name))
      return Diag{"scope", "circuit variable '" + v.name + "' is not a declared wire", t->loc, ""};
  }
  return std::nullopt;
}

inline FormClass classify(const NeutralContext& pi, const Term& t) {
  if (detail::is_canonical_rec(pi, t)) return FormClass::Canonical;
  if (detail::is_neutral_rec(pi, t)) return FormClass::Neutral;
  if (detail::is_normal_match_rec(pi, t)) return FormClass::NormalMatch;
  return FormClass::Reducible;
}

// ---------------------------------------------------------------------------
// Canonical elimination
// ---------------------------------------------------------------------------

// ecan: eliminating a canonical form with a pattern. Returns nullopt on a
// shape mismatch (the canonical form is not the pattern's constructor).
inline std::optional<Term> eliminate_canonical(const Term& k, const Pattern& p, NameSupply& supply) {
  Color bc = pattern_binder_color(p.family);
  switch (p.kind) {
    case PatKind::Unit:
      if (k->kind != Kind::Unit) return std::nullopt;
      return p.body;
    case PatKind::Pair:
      if (k->kind != Kind::Pair) return std::nullopt;
      return subst_multi(p.body, {Subst{{p.x, bc}, k->a}, Subst{{p.y, bc}, k->b}}, supply);
    case PatKind::Down:
      if (k->kind != Kind::DownIntro) return std::nullopt;
      return subst_multi(p.body, {Subst{{p.x, Color::Functional}, k->a}}, supply);
  }
  return std::nullopt;
}

inline std::optional<Term> eliminate_canonical(const Term& k, const Pattern& p) {
  NameSupply supply = supply_for({k, p.body});
  return eliminate_canonical(k, p, supply);
}

// ---------------------------------------------------------------------------
// Single-step reduction
// ---------------------------------------------------------------------------

struct StepOut {
  Term term;
  std::string rule;
};

namespace detail {

struct Stepper {
  NameSupply* supply;

  std::optional<StepOut> hit(Term t, const char* rule) { return StepOut{std::move(t), rule}; }

  // Renames the match binders apart from the free variables of `ctx_term`
  // before an elimination form is pushed into the match body.
  Pattern freshen_against(const Pattern& p, const std::vector<Term>& pushed) {
    std::set<VarId> clash;
    for (auto& t : pushed)
      for (auto& v : free_vars(t)) clash.insert(v);
    Pattern out = p;
    Color bc = pattern_binder_color(p.family);
    auto rename = [&](std::string& name) {
      if (!clash.count({name, bc})) return;
      std::string fresh = supply->fresh();
      out.body = subst_multi(out.body, {Subst{{name, bc}, var(bc, fresh)}}, *supply);
      name = fresh;
    };
    if (p.kind == PatKind::Pair) {
      rename(out.x);
      rename(out.y);
    } else if (p.kind == PatKind::Down) {
      rename(out.x);
    }
    return out;
  }

  // Commuting conversions rebuild the match around the transformed body.
  Term commute(const Term& match_node, PatFamily new_family, const std::vector<Term>& pushed,
               const std::function<Term(const Term&)>& wrap) {
    const Pattern& p = *match_node->pat;
    Pattern np = freshen_against(p, pushed);
    np.family = new_family;
    np.body = wrap(np.body);
    return match_term(match_node->a, std::move(np));
  }

  // Fresh renaming of a binder entered for reduction under it; the fresh
  // name is what gets recorded in the extended neutral context.
  std::pair<std::string, Term> enter_binder(const std::string& name, Color c, const Term& body) {
    std::string fresh = supply->fresh();
    Term renamed = subst_multi(body, {Subst{{name, c}, var(c, fresh)}}, *supply);
    return {fresh, renamed};
  }

  std::pair<Pattern, std::vector<std::string>> enter_pattern(const Pattern& p) {
    Pattern np = p;
    std::vector<std::string> names;
    Color bc = pattern_binder_color(p.family);
    if (p.kind == PatKind::Pair) {
      std::string fx = supply->fresh(), fy = supply->fresh();
      np.body = subst_multi(p.body, {Subst{{p.x, bc}, var(bc, fx)}, Subst{{p.y, bc}, var(bc, fy)}},
                            *supply);
      np.x = fx;
      np.y = fy;
      names = {fx, fy};
    }
    return {np, names};
  }

  std::optional<StepOut> step(const NeutralContext& pi, const Term& t) {
    return t->color == Color::Functional ? fstep(pi, t) : cstep(pi, t);
  }

  std::optional<StepOut> fstep(const NeutralContext& pi, const Term& t) {
    switch (t->kind) {
      case Kind::Var:
      case Kind::Unit:
      case Kind::Lam:
      case Kind::SuspTerm:
      case Kind::SuspCirc:
      case Kind::Gate: return std::nullopt;
      case Kind::App: {
        if (auto s = step(pi, t->a)) return hit(app_f(s->term, t->b), "fstep/app/1");
        if (!is_normal_rec(pi, t->a)) return std::nullopt;
        if (auto s = step(pi, t->b)) return hit(app_f(t->a, s->term), "fstep/app/2");
        if (!is_normal_rec(pi, t->b)) return std::nullopt;
        if (t->a->kind == Kind::Lam)
          return hit(subst_multi(t->a->a, {Subst{{t->a->name, Color::Functional}, t->b}}, *supply),
                     "fstep/app/beta");
        if (is_normal_match_rec(pi, t->a)) {
          Term arg = t->b;
          return hit(commute(t->a, t->a->pat->family, {arg},
                             [&](const Term& body) { return app_f(body, arg); }),
                     "fstep/app/cc");
        }
        return std::nullopt;
      }
      case Kind::Force: {
        if (t->a->kind == Kind::SuspTerm) return hit(t->a->a, "fstep/force");
        if (auto s = step(pi, t->a)) return hit(force_f(s->term), "fstep/force/1");
        if (is_normal_match_rec(pi, t->a))
          return hit(commute(t->a, t->a->pat->family, {},
                             [&](const Term& body) { return force_f(body); }),
                     "fstep/force/cc");
        return std::nullopt;
      }
      case Kind::Pair: {
        if (auto s = step(pi, t->a)) return hit(pair_f(s->term, t->b), "fstep/pair/1");
        if (!is_normal_rec(pi, t->a)) return std::nullopt;
        if (auto s = step(pi, t->b)) return hit(pair_f(t->a, s->term), "fstep/pair/2");
        return std::nullopt;
      }
      case Kind::DownIntro: {
        if (auto s = step(pi, t->a)) return hit(down_intro(s->term), "fstep/down");
        return std::nullopt;
      }
      case Kind::Match: {
        const Pattern& p = *t->pat;
        bool circuit_scrut = p.family != PatFamily::FF;
        if (auto s = step(pi, t->a)) {
          Pattern np = p;
          return hit(match_term(s->term, np), circuit_scrut ? "fstep/m/q" : "fstep/m/f");
        }
        if (is_canonical_rec(pi, t->a)) {
          if (auto e = eliminate_canonical(t->a, p, *supply)) return hit(*e, "fstep/m/k");
          return std::nullopt;
        }
        if (circuit_scrut && is_neutral_rec(pi, t->a)) {
          auto [np, names] = enter_pattern(p);
          if (auto s = step(pi.extended(names), np.body)) {
            np.body = s->term;
            return hit(match_term(t->a, np), "fstep/m/q/r");
          }
          return std::nullopt;
        }
        if (is_normal_match_rec(pi, t->a)) {
          Pattern outer = p;
          const char* rule = t->a->pat->family == PatFamily::QF ? "fstep/m/f/cc" : "fstep/m/q/cc";
          return hit(commute(t->a, PatFamily::QF, {outer.body},
                             [&](const Term& body) {
                               Pattern inner = outer;
                               inner.family = t->a->pat->family == PatFamily::QF
                                                  ? PatFamily::FF
                                                  : PatFamily::QF;
                               return match_term(body, inner);
                             }),
                     rule);
        }
        return std::nullopt;
      }
    }
    return std::nullopt;
  }

  std::optional<StepOut> cstep(const NeutralContext& pi, const Term& t) {
    switch (t->kind) {
      case Kind::Var:
      case Kind::Unit:
      case Kind::Gate: return std::nullopt;
      case Kind::Lam: {
        auto [fresh, body] = enter_binder(t->name, Color::Circuit, t->a);
        if (auto s = step(pi.extended({fresh}), body))
          return hit(lam_c(fresh, t->annot, s->term), "cstep/lam");
        return std::nullopt;
      }
      case Kind::App: {
        if (auto s = step(pi, t->a)) return hit(app_c(s->term, t->b), "cstep/app/1");
        if (!is_normal_rec(pi, t->a)) return std::nullopt;
        if (auto s = step(pi, t->b)) return hit(app_c(t->a, s->term), "cstep/app/2");
        if (!is_normal_rec(pi, t->b)) return std::nullopt;
        if (t->a->kind == Kind::Lam)
          return hit(subst_multi(t->a->a, {Subst{{t->a->name, Color::Circuit}, t->b}}, *supply),
                     "cstep/app/beta");
        if (is_normal_match_rec(pi, t->a)) {
          Term arg = t->b;
          return hit(commute(t->a, PatFamily::QQ, {arg},
                             [&](const Term& body) { return app_c(body, arg); }),
                     "cstep/app/cc/1");
        }
        if (t->a->kind == Kind::Gate && is_normal_match_rec(pi, t->b)) {
          Term g = t->a;
          return hit(commute(t->b, PatFamily::QQ, {},
                             [&](const Term& body) { return app_c(g, body); }),
                     "cstep/app/cc/2");
        }
        return std::nullopt;
      }
      case Kind::Force: {
        if (t->a->kind == Kind::SuspCirc) return hit(t->a->a, "cstep/force");
        if (auto s = step(pi, t->a)) return hit(force_c(s->term), "cstep/force/1");
        if (is_normal_match_rec(pi, t->a))
          return hit(commute(t->a, PatFamily::QQ, {},
                             [&](const Term& body) { return force_c(body); }),
                     "cstep/force/cc");
        return std::nullopt;
      }
      case Kind::Pair: {
        if (auto s = step(pi, t->a)) return hit(pair_c(s->term, t->b), "cstep/pair/1");
        if (!is_normal_rec(pi, t->a)) return std::nullopt;
        if (auto s = step(pi, t->b)) return hit(pair_c(t->a, s->term), "cstep/pair/2");
        return std::nullopt;
      }
      case Kind::Match: {
        const Pattern& p = *t->pat;
        if (auto s = step(pi, t->a)) {
          Pattern np = p;
          return hit(match_term(s->term, np), "cstep/m");
        }
        if (is_canonical_rec(pi, t->a)) {
          if (auto e = eliminate_canonical(t->a, p, *supply)) return hit(*e, "cstep/m/k");
          return std::nullopt;
        }
        if (is_neutral_rec(pi, t->a)) {
          auto [np, names] = enter_pattern(p);
          if (auto s = step(pi.extended(names), np.body)) {
            np.body = s->term;
            return hit(match_term(t->a, np), "cstep/m/r");
          }
          return std::nullopt;
        }
        if (is_normal_match_rec(pi, t->a)) {
          Pattern outer = p;
          return hit(commute(t->a, PatFamily::QQ, {outer.body},
                             [&](const Term& body) {
                               Pattern inner = outer;
                               return match_term(body, inner);
                             }),
                     "cstep/m/cc");
        }
        return std::nullopt;
      }
      default: return std::nullopt;
    }
  }
};

}  // namespace detail

// One reduction step. Fresh names drawn from `supply` keep binders entered
// by cstep/lam, fstep/m/q/r and cstep/m/r apart from the ambient context.
inline std::optional<StepOut> step(const NeutralContext& pi, const Term& t, NameSupply& supply) {
  detail::Stepper s{&supply};
  return s.step(pi, t);
}

inline std::optional<StepOut> step(const NeutralContext& pi, const Term& t) {
  NameSupply supply = supply_for({t});
  for (auto& n : pi.names) supply.reserve_from(max_reserved_index(n));
  return step(pi, t, supply);
}

// All top-level rules whose guards fire, evaluated independently of the
// stepper's first-match cascade. Determinism demands that at most one fires,
// and exactly one when the program is reducible.
inline std::vector<std::string> applicable_rules(const NeutralContext& pi, const Term& t) {
  std::vector<std::string> out;
  NameSupply supply = supply_for({t});
  for (auto& n : pi.names) supply.reserve_from(max_reserved_index(n));
  detail::Stepper st{&supply};
  auto steps = [&](const NeutralContext& p, const Term& x) { return st.step(p, x).has_value(); };
  bool fn = t->color == Color::Functional;
  auto add = [&](const char* f_rule, const char* c_rule) { out.push_back(fn ? f_rule : c_rule); };

  switch (t->kind) {
    case Kind::App: {
      if (steps(pi, t->a)) add("fstep/app/1", "cstep/app/1");
      if (is_normal(pi, t->a) && steps(pi, t->b)) add("fstep/app/2", "cstep/app/2");
      if (t->a->kind == Kind::Lam && is_canonical(pi, t->a) && is_normal(pi, t->b))
        add("fstep/app/beta", "cstep/app/beta");
      if (is_normal_match(pi, t->a) && is_normal(pi, t->b)) add("fstep/app/cc", "cstep/app/cc/1");
      if (!fn && t->a->kind == Kind::Gate && is_normal_match(pi, t->b))
        out.push_back("cstep/app/cc/2");
      break;
    }
    case Kind::Force: {
      if (fn ? t->a->kind == Kind::SuspTerm : t->a->kind == Kind::SuspCirc)
        add("fstep/force", "cstep/force");
      if (steps(pi, t->a)) add("fstep/force/1", "cstep/force/1");
      if (is_normal_match(pi, t->a)) add("fstep/force/cc", "cstep/force/cc");
      break;
    }
    case Kind::Pair: {
      if (steps(pi, t->a)) add("fstep/pair/1", "cstep/pair/1");
      if (is_normal(pi, t->a) && steps(pi, t->b)) add("fstep/pair/2", "cstep/pair/2");
      break;
    }
    case Kind::DownIntro: {
      if (steps(pi, t->a)) out.push_back("fstep/down");
      break;
    }
    case Kind::Lam: {
      if (!fn) {
        detail::Stepper probe{&supply};
        auto [fresh, body] = probe.enter_binder(t->name, Color::Circuit, t->a);
        if (steps(pi.extended({fresh}), body)) out.push_back("cstep/lam");
      }
      break;
    }
    case Kind::Match: {
      const Pattern& p = *t->pat;
      bool circuit_scrut = p.family != PatFamily::FF;
      if (steps(pi, t->a)) {
        if (fn)
          out.push_back(circuit_scrut ? "fstep/m/q" : "fstep/m/f");
        else
          out.push_back("cstep/m");
      }
      if (is_canonical(pi, t->a) && eliminate_canonical(t->a, p)) add("fstep/m/k", "cstep/m/k");
      if (circuit_scrut && is_neutral(pi, t->a)) {
        detail::Stepper probe{&supply};
        auto [np, names] = probe.enter_pattern(p);
        if (steps(pi.extended(names), np.body)) add("fstep/m/q/r", "cstep/m/r");
      }
      if (is_normal_match(pi, t->a)) {
        if (fn)
          out.push_back(t->a->pat->family == PatFamily::QF ? "fstep/m/f/cc" : "fstep/m/q/cc");
        else
          out.push_back("cstep/m/cc");
      }
      break;
    }
    default: break;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Fuel-bounded normalization
// ---------------------------------------------------------------------------

enum class Terminal : uint8_t { Normal, FuelExhausted, Stuck };

inline const char* terminal_name(Terminal t) {
  switch (t) {
    case Terminal::Normal: return "normal";
    case Terminal::FuelExhausted: return "fuel-exhausted";
    case Terminal::Stuck: return "stuck";
  }
  return "?";
}

struct TraceEntry {
  Term term;  // the program after the step
  std::string rule;
};

struct StepTrace {
  Term initial;
  std::vector<TraceEntry> steps;
  Terminal terminal = Terminal::Stuck;
  Term final_term;
  std::optional<Diag> diag;
};

constexpr long kDefaultFuel = 100000;

inline StepTrace normalize(const NeutralContext& pi, const Term& t, long fuel = kDefaultFuel) {
  StepTrace trace;
  trace.initial = t;
  trace.final_term = t;
  if (auto d = validate_scope(pi, t)) {
    trace.terminal = Terminal::Stuck;
    trace.diag = d;
    return trace;
  }
  NameSupply supply = supply_for({t});
  for (auto& n : pi.names) supply.reserve_from(max_reserved_index(n));
  Term cur = t;
  for (long i = 0; i < fuel; ++i) {
    auto s = step(pi, cur, supply);
    if (!s) {
      if (is_normal(pi, cur)) {
        trace.terminal = Terminal::Normal;
      } else {
        trace.terminal = Terminal::Stuck;
        trace.diag = Diag{"stuck", "program is neither normal nor reducible", cur->loc, ""};
      }
      trace.final_term = cur;
      return trace;
    }
    cur = s->term;
    trace.steps.push_back({cur, s->rule});
  }
  // Out of fuel: distinguish a normal landing from a genuine timeout.
  if (is_normal(pi, cur)) {
    trace.terminal = Terminal::Normal;
  } else {
    trace.terminal = Terminal::FuelExhausted;
  }
  trace.final_term = cur;
  return trace;
}

// ---------------------------------------------------------------------------
// Neutral substitutions
// ---------------------------------------------------------------------------

struct NeutralSubst {
  std::vector<std::pair<std::string, Term>> map;  // circuit variable -> image
};

// Applies a substitution whose images are all neutral in the target context.
// Such substitutions preserve classification and reduction.
inline std::variant<Term, Diag> apply_neutral_subst(const NeutralContext& target,
                                                    const NeutralSubst& sigma, const Term& t) {
  std::vector<Subst> subs;
  for (auto& [x, img] : sigma.map) {
    if (!is_neutral(target, img))
      return Diag{"non-neutral",
                  "image for '" + x + "' does not classify as neutral in the target context",
                  img->loc, ""};
    subs.push_back(Subst{{x, Color::Circuit}, img});
  }
  return subst_multi(t, std::move(subs));
}

}  // namespace pqa
