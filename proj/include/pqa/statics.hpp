#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "pqa/parse.hpp"
#include "pqa/print.hpp"
#include "pqa/syntax.hpp"

namespace pqa {

enum class System : uint8_t { PQA, PQX };

struct CtxBinding {
  std::string name;
  Type type;
};

struct TypingContext {
  std::vector<CtxBinding> bindings;

  TypingContext() = default;
  TypingContext(std::initializer_list<CtxBinding> bs) : bindings(bs) {}

  TypingContext& add(std::string name, Type type) {
    bindings.push_back({std::move(name), std::move(type)});
    return *this;
  }
  bool geq(Mode k) const {
    for (auto& b : bindings)
      if (!mode_geq(mode_of(b.type), k)) return false;
    return true;
  }
  std::vector<std::string> linear_names() const {
    std::vector<std::string> out;
    for (auto& b : bindings)
      if (mode_of(b.type) != Mode::U) out.push_back(b.name);
    return out;
  }
};

inline bool geq_mode(const TypingContext& ctx, Mode k) { return ctx.geq(k); }

struct CheckResult {
  bool ok = false;
  Type type;                       // on success
  std::set<std::string> consumed;  // linear names of the input context used
  std::optional<Diag> error;

  static CheckResult failure(Diag d) {
    CheckResult r;
    r.error = std::move(d);
    return r;
  }
};

namespace detail {

struct CheckError {
  Diag diag;
};

[[noreturn]] inline void fail(std::string code, std::string msg, Loc loc) {
  throw CheckError{Diag{std::move(code), std::move(msg), loc, ""}};
}

// Leftover reading of the declarative rules: every subterm sees the whole
// context and reports the set of linear bindings it consumed; splitting
// rules check those sets for disjointness.
class Checker {
 public:
  // Per-node typing notes, used by the shrinker to rebuild subterms in place.
  struct Note {
    Type type;
    std::vector<CtxBinding> linear_slice;
  };
  using Notes = std::map<const Node*, Note>;

  Checker(const Signature& sig, System system, Notes* notes = nullptr)
      : sig_(sig), system_(system), notes_(notes) {}

  struct Entry {
    std::string name;
    Type type;
    int id;
  };

  struct Res {
    Type type;
    std::set<int> used;  // ids of linear bindings consumed
  };

  Res check_in(const TypingContext& ctx, const Term& t) {
    std::set<std::string> seen;
    for (auto& b : ctx.bindings) {
      if (!seen.insert(b.name).second)
        fail("duplicate-binding", "context binds '" + b.name + "' twice", {});
      validate_binding(b.name, b.type, {});
      env_.push_back({b.name, b.type, next_id_++});
    }
    Res r = check(t);
    // Unused assumptions must be unrestricted.
    if (system_ == System::PQA) {
      for (auto& e : env_)
        if (mode_of(e.type) != Mode::U && !r.used.count(e.id))
          fail("linear-unused", "linear variable '" + e.name + "' is never used", t->loc);
    }
    return r;
  }

  std::string name_of(int id) const {
    for (auto& e : env_)
      if (e.id == id) return e.name;
    return "?";
  }

 private:
  void validate_binding(const std::string& name, const Type& ty, Loc loc) {
    if (auto v = type_violation(ty)) fail("malformed-type", *v, loc);
    if (mode_of(ty) == Mode::Q && !is_simple(ty))
      fail("nonsimple-quantum", "quantum variable '" + name + "' must have a simple type", loc);
  }

  const Entry* lookup(const std::string& name) const {
    for (auto it = env_.rbegin(); it != env_.rend(); ++it)
      if (it->name == name) return &*it;
    return nullptr;
  }

  bool linear(int id) const {
    for (auto& e : env_)
      if (e.id == id) return mode_of(e.type) != Mode::U;
    return false;
  }

  void check_disjoint(const Res& l, const Res& r, Loc loc) {
    if (system_ == System::PQX) return;
    for (int id : l.used)
      if (r.used.count(id))
        fail("linear-reuse", "linear variable '" + name_of(id) + "' is used twice", loc);
  }

  static std::set<int> merged(const Res& l, const Res& r) {
    std::set<int> out = l.used;
    out.insert(r.used.begin(), r.used.end());
    return out;
  }

  // The independence principle: a conclusion at mode u may not depend on
  // linear assumptions.
  void check_independence(Mode m, const std::set<int>& used, Loc loc) {
    if (system_ == System::PQX || m != Mode::U) return;
    for (int id : used)
      if (linear(id))
        fail("independence",
             "unrestricted conclusion depends on linear variable '" + name_of(id) + "'", loc);
  }

  Res done(const Term& t, Type type, std::set<int> used) {
    check_independence(mode_of(type), used, t->loc);
    if (notes_) {
      Note note;
      note.type = type;
      for (int id : used)
        for (auto& e : env_)
          if (e.id == id) note.linear_slice.push_back({e.name, e.type});
      (*notes_)[t.get()] = std::move(note);
    }
    return {std::move(type), std::move(used)};
  }

  Res check(const Term& t) {
    switch (t->kind) {
      case Kind::Var: {
        const Entry* e = lookup(t->name);
        if (!e) fail("unbound-variable", "variable '" + t->name + "' is not in scope", t->loc);
        Mode m = mode_of(e->type);
        bool circuit_var = m == Mode::Q;
        if (circuit_var != (t->color == Color::Circuit))
          fail("color-mismatch",
               "variable '" + t->name + "' belongs to the " +
                   (circuit_var ? "circuit" : "functional") + " language",
               t->loc);
        if (circuit_var && !is_simple(e->type))
          fail("nonsimple-quantum", "quantum variable '" + t->name + "' must have a simple type",
               t->loc);
        std::set<int> used;
        if (m != Mode::U) used.insert(e->id);
        return done(t, e->type, std::move(used));
      }
      case Kind::Gate: {
        const Type* g = sig_.find(t->name);
        if (!g) fail("unknown-gate", "gate '" + t->name + "' is not in the signature", t->loc);
        return done(t, *g, {});
      }
      case Kind::Unit:
        return done(t, t_unit(t->color == Color::Circuit ? Mode::Q : Mode::L), {});
      case Kind::Lam: {
        if (!t->annot)
          fail("annotation-required", "binder '" + t->name + "' needs a type annotation", t->loc);
        Type dom = *t->annot;
        validate_binding(t->name, dom, t->loc);
        Mode dm = mode_of(dom);
        bool circuit_binder = dm == Mode::Q;
        if (circuit_binder != (t->color == Color::Circuit))
          fail("color-mismatch",
               circuit_binder ? "'fn' binders take functional types" : "'lam' binders take simple types",
               t->loc);
        int id = next_id_++;
        env_.push_back({t->name, dom, id});
        Res body = check(t->a);
        env_.pop_back();
        if (system_ == System::PQA && dm != Mode::U && !body.used.count(id))
          fail("linear-unused", "linear variable '" + t->name + "' is never used", t->loc);
        body.used.erase(id);
        Mode cm = mode_of(body.type);
        if (t->color == Color::Circuit) {
          if (cm != Mode::Q || !is_simple(body.type))
            fail("type-mismatch", "circuit function bodies must have simple types, got " +
                                      print_type(body.type),
                 t->loc);
        } else if (cm != dm) {
          fail("mode-mismatch", "function domain at mode " + std::string(mode_name(dm)) +
                                    " but body at mode " + mode_name(cm),
               t->loc);
        }
        return done(t, t_arrow(dom, body.type, t->color == Color::Circuit ? Mode::Q : dm),
                    std::move(body.used));
      }
      case Kind::Pair: {
        Res l = check(t->a);
        Res r = check(t->b);
        require_color(t->a, t->color);
        require_color(t->b, t->color);
        check_disjoint(l, r, t->loc);
        Mode lm = mode_of(l.type), rm = mode_of(r.type);
        if (t->color == Color::Circuit) {
          if (lm != Mode::Q || rm != Mode::Q || !is_simple(l.type) || !is_simple(r.type))
            fail("type-mismatch", "circuit pairs combine simple types", t->loc);
        } else if (lm != rm) {
          fail("mode-mismatch", "pair components at modes " + std::string(mode_name(lm)) + " and " +
                                    mode_name(rm),
               t->loc);
        }
        return done(t, t_tensor(l.type, r.type, lm), merged(l, r));
      }
      case Kind::SuspTerm: {
        require_color(t->a, Color::Functional);
        Res m = check(t->a);
        if (mode_of(m.type) != Mode::L)
          fail("mode-mismatch", "susp suspends terms at mode l, got " + print_type(m.type), t->loc);
        // a/f/susp carries an explicit independence restriction.
        check_independence(Mode::U, m.used, t->loc);
        return done(t, t_up(m.type), std::move(m.used));
      }
      case Kind::SuspCirc: {
        require_color(t->a, Color::Circuit);
        Res c = check(t->a);
        if (mode_of(c.type) != Mode::Q)
          fail("mode-mismatch", "circ suspends circuit-mode terms", t->loc);
        return done(t, t_up(c.type), std::move(c.used));
      }
      case Kind::DownIntro: {
        require_color(t->a, Color::Functional);
        Res m = check(t->a);
        if (mode_of(m.type) != Mode::U)
          fail("mode-mismatch", "down takes unrestricted terms, got " + print_type(m.type), t->loc);
        return done(t, t_down(m.type), std::move(m.used));
      }
      case Kind::App: {
        require_color(t->a, t->color);
        require_color(t->b, t->color);
        Res f = check(t->a);
        Res a = check(t->b);
        check_disjoint(f, a, t->loc);
        if (f.type->kind != TKind::Arrow)
          fail("type-mismatch", "applying a non-function of type " + print_type(f.type), t->loc);
        if (!type_eq(f.type->a, a.type))
          fail("type-mismatch", "function expects " + print_type(f.type->a) + " but argument has type " +
                                    print_type(a.type),
               t->loc);
        return done(t, f.type->b, merged(f, a));
      }
      case Kind::Force: {
        require_color(t->a, Color::Functional);
        Res m = check(t->a);
        if (m.type->kind != TKind::Up)
          fail("type-mismatch", "force expects a suspension, got " + print_type(m.type), t->loc);
        Mode target = t->color == Color::Circuit ? Mode::L : Mode::U;
        if (mode_of(m.type) != target)
          fail("mode-mismatch", t->color == Color::Circuit
                                    ? "force { - } unwraps suspensions of circuits"
                                    : "force unwraps suspensions at mode u",
               t->loc);
        return done(t, m.type->a, std::move(m.used));
      }
      case Kind::Match: {
        const Pattern& p = *t->pat;
        require_color(t->a, scrutinee_color(p.family));
        Res scrut = check(t->a);
        Res body = check_pattern(p, scrut.type, t->loc);
        check_disjoint(scrut, body, t->loc);
        return done(t, body.type, merged(scrut, body));
      }
    }
    fail("type-mismatch", "unreachable term form", t->loc);
  }

  // Pattern judgments: p eliminates scrutinees of type A into a body of type
  // B, subject to A >= B and to the body context being >= B's mode.
  Res check_pattern(const Pattern& p, const Type& scrut, Loc loc) {
    Res body;
    switch (p.kind) {
      case PatKind::Unit: {
        if (scrut->kind != TKind::UnitAt)
          fail("pattern-mismatch", "unit pattern against " + print_type(scrut), loc);
        require_family_mode(p.family, mode_of(scrut), loc);
        body = check(p.body);
        break;
      }
      case PatKind::Pair: {
        if (scrut->kind != TKind::Tensor)
          fail("pattern-mismatch", "pair pattern against " + print_type(scrut), loc);
        require_family_mode(p.family, mode_of(scrut), loc);
        Color bc = pattern_binder_color(p.family);
        int idx = next_id_++, idy = next_id_++;
        env_.push_back({p.x, scrut->a, idx});
        env_.push_back({p.y, scrut->b, idy});
        body = check(p.body);
        env_.pop_back();
        env_.pop_back();
        if (system_ == System::PQA) {
          if (mode_of(scrut->a) != Mode::U && !body.used.count(idx))
            fail("linear-unused", "linear variable '" + p.x + "' is never used", loc);
          if (mode_of(scrut->b) != Mode::U && !body.used.count(idy))
            fail("linear-unused", "linear variable '" + p.y + "' is never used", loc);
        }
        (void)bc;
        body.used.erase(idx);
        body.used.erase(idy);
        break;
      }
      case PatKind::Down: {
        if (p.family != PatFamily::FF)
          fail("pattern-mismatch", "'down' patterns only eliminate functional terms", loc);
        if (scrut->kind != TKind::Down)
          fail("pattern-mismatch", "down pattern against " + print_type(scrut), loc);
        int id = next_id_++;
        env_.push_back({p.x, scrut->a, id});
        body = check(p.body);
        env_.pop_back();
        body.used.erase(id);
        break;
      }
    }
    Mode bm = mode_of(body.type);
    bool body_circuit = bm == Mode::Q;
    if (body_circuit != (p.family == PatFamily::QQ))
      fail("color-mismatch", "match body lives in the wrong language", loc);
    if (system_ == System::PQA) {
      if (!mode_geq(mode_of(scrut), bm))
        fail("independence", "eliminating a scrutinee at mode " +
                                 std::string(mode_name(mode_of(scrut))) +
                                 " cannot produce a result at mode " + mode_name(bm),
             loc);
      check_independence(bm, body.used, loc);
    }
    return body;
  }

  void require_family_mode(PatFamily f, Mode scrut_mode, Loc loc) {
    bool circuit_scrut = scrut_mode == Mode::Q;
    if (circuit_scrut != (f != PatFamily::FF))
      fail("color-mismatch", "pattern family does not match the scrutinee's language", loc);
  }

  void require_color(const Term& t, Color c) {
    if (t->color != c)
      fail("color-mismatch", c == Color::Circuit ? "expected a circuit term here"
                                                 : "expected a functional term here",
           t->loc);
  }

  const Signature& sig_;
  System system_;
  Notes* notes_;
  std::vector<Entry> env_;
  int next_id_ = 0;
};

inline CheckResult run_check(const Signature& sig, const TypingContext& ctx, const Term& t,
                             System system, Checker::Notes* notes = nullptr) {
  Checker c(sig, system, notes);
  try {
    auto r = c.check_in(ctx, t);
    CheckResult out;
    out.ok = true;
    out.type = r.type;
    for (int id : r.used) out.consumed.insert(c.name_of(id));
    return out;
  } catch (const CheckError& e) {
    return CheckResult::failure(e.diag);
  }
}

}  // namespace detail

using detail::Checker;

inline CheckResult check_pqa(const Signature& sig, const TypingContext& ctx, const Term& t) {
  return detail::run_check(sig, ctx, t, System::PQA);
}

inline CheckResult check_pqx(const Signature& sig, const TypingContext& ctx, const Term& t) {
  return detail::run_check(sig, ctx, t, System::PQX);
}

inline CheckResult check_system(const Signature& sig, const TypingContext& ctx, const Term& t,
                                System system) {
  return detail::run_check(sig, ctx, t, system);
}

inline CheckResult check_with_notes(const Signature& sig, const TypingContext& ctx, const Term& t,
                                    System system, Checker::Notes& notes) {
  return detail::run_check(sig, ctx, t, system, &notes);
}

// Pattern typing as a standalone operation.
inline CheckResult check_pattern_pqa(const Signature& sig, const TypingContext& ctx,
                                     const Pattern& pat, const Type& scrutinee_type) {
  // Wrap the pattern around a synthetic scrutinee variable so the same
  // derivation machinery applies.
  std::string scrut_name = "%scrutinee";
  TypingContext inner = ctx;
  inner.add(scrut_name, scrutinee_type);
  Term probe = match_term(var(mode_of(scrutinee_type) == Mode::Q ? Color::Circuit : Color::Functional,
                              scrut_name),
                          pat);
  CheckResult r = check_pqa(sig, inner, probe);
  r.consumed.erase(scrut_name);
  return r;
}

}  // namespace pqa
