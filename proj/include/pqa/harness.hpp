#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "pqa/circuit.hpp"
#include "pqa/dynamics.hpp"
#include "pqa/encoding.hpp"
#include "pqa/parse.hpp"
#include "pqa/print.hpp"
#include "pqa/statics.hpp"
#include "pqa/syntax.hpp"

namespace pqa {

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

struct GenConfig {
  uint64_t seed = 0;
  int max_depth = 8;
  std::array<double, 3> mode_bias{1.0, 3.0, 3.0};  // weights for U, L, Q goals
  Signature gate_pool = stdlib_signature();
};

// ---------------------------------------------------------------------------
// Rule-directed generation of well-typed terms
// ---------------------------------------------------------------------------

namespace detail {

class Generator {
 public:
  Generator(const Signature& pool, uint64_t seed) : pool_(pool), rng_(seed) {}

  std::mt19937_64& rng() { return rng_; }

  std::string fresh_name() { return "v" + std::to_string(names_++); }

  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(rng_); }
  int below(int n) { return n <= 1 ? 0 : static_cast<int>(rng_() % static_cast<uint64_t>(n)); }
  bool coin() { return rng_() & 1; }

  Mode pick_mode(const std::array<double, 3>& bias) {
    double total = bias[0] + bias[1] + bias[2];
    double x = uniform() * total;
    if (x < bias[0]) return Mode::U;
    if (x < bias[0] + bias[1]) return Mode::L;
    return Mode::Q;
  }

  // Random well-formed type at the given mode. Goals avoid unit@u, which no
  // closed term synthesizes.
  Type gen_type(Mode m, int depth, bool for_goal = true) {
    if (m == Mode::Q) {
      int n = depth > 0 ? below(8) : below(3);
      if (n <= 1) return t_qubit();
      if (n == 2) return t_unit(Mode::Q);
      if (n <= 5) return t_tensor(gen_simple(depth - 1), gen_simple(depth - 1), Mode::Q);
      return t_arrow(gen_simple(depth - 1), gen_simple(depth - 1), Mode::Q);
    }
    if (m == Mode::L) {
      int n = depth > 0 ? below(7) : below(3);
      if (n == 0) return t_unit(Mode::L);
      if (n <= 2) return t_up(gen_simple(depth > 0 ? depth - 1 : 0));
      if (n == 3) return t_tensor(gen_type(Mode::L, depth - 1), gen_type(Mode::L, depth - 1), Mode::L);
      if (n == 4) return t_arrow(gen_type(Mode::L, depth - 1), gen_type(Mode::L, depth - 1), Mode::L);
      if (n == 5) return t_down(gen_type(Mode::U, depth - 1));
      return t_up(t_arrow(gen_simple(depth - 1), gen_simple(depth - 1), Mode::Q));
    }
    // Mode U
    int n = depth > 0 ? below(5) : 0;
    if (n == 0) return t_up(gen_type(Mode::L, depth > 0 ? depth - 1 : 0));
    if (n == 1 && !for_goal) return t_unit(Mode::U);
    if (n <= 2) return t_tensor(gen_type(Mode::U, depth - 1), gen_type(Mode::U, depth - 1), Mode::U);
    return t_arrow(gen_type(Mode::U, depth - 1, false), gen_type(Mode::U, depth - 1), Mode::U);
  }

  Type gen_simple(int depth) {
    int n = depth > 0 ? below(5) : below(3);
    if (n <= 1) return t_qubit();
    if (n == 2) return t_unit(Mode::Q);
    return t_tensor(gen_simple(depth - 1), gen_simple(depth - 1), Mode::Q);
  }

  // Derivation-directed: pick a rule whose conclusion matches the goal,
  // split the linear context among the premisses, recurse. The budget caps
  // how much failing search a single attempt may burn.
  std::optional<Term> gen_term(const std::vector<CtxBinding>& ctx, const Type& goal, int depth,
                               long budget = 4000) {
    budget_ = budget;
    return gen_rec(ctx, goal, depth);
  }

  std::optional<Term> gen_rec(const std::vector<CtxBinding>& ctx, const Type& goal, int depth) {
    if (--budget_ < 0) return std::nullopt;
    std::vector<CtxBinding> lin, unr;
    for (auto& b : ctx)
      (mode_of(b.type) == Mode::U ? unr : lin).push_back(b);
    if (mode_of(goal) == Mode::U && !lin.empty()) return std::nullopt;

    std::vector<int> order = production_order(depth);
    for (int prod : order) {
      if (auto t = try_production(prod, ctx, lin, unr, goal, depth)) return t;
    }
    return std::nullopt;
  }

 private:
  enum Prod { PVar, PUnitP, PGate, PPairI, PLamI, PSuspT, PSuspC, PDownI, PGateApp, PForceE, PMatchE, PAppE, kProdCount };

  std::vector<int> production_order(int depth) {
    std::vector<int> axioms = {PVar, PUnitP, PGate};
    std::vector<int> intros = {PPairI, PLamI, PSuspT, PSuspC, PDownI};
    std::vector<int> elims = {PGateApp, PForceE, PMatchE, PAppE};
    std::shuffle(axioms.begin(), axioms.end(), rng_);
    if (depth <= 0) return axioms;
    std::shuffle(intros.begin(), intros.end(), rng_);
    std::shuffle(elims.begin(), elims.end(), rng_);
    // Redex-rich terms exercise the dynamics, so eliminators lead half the
    // time; near the leaves the axioms get a head start.
    std::vector<int> order;
    double r = uniform();
    auto append = [&](const std::vector<int>& v) { order.insert(order.end(), v.begin(), v.end()); };
    if (depth <= 2 && r < 0.25) {
      append(axioms);
      append(intros);
      append(elims);
    } else if (r < 0.65) {
      append(elims);
      append(intros);
      append(axioms);
    } else {
      append(intros);
      append(elims);
      append(axioms);
    }
    return order;
  }

  // Splits the linear context randomly into two slices.
  std::pair<std::vector<CtxBinding>, std::vector<CtxBinding>> split(const std::vector<CtxBinding>& lin) {
    std::vector<CtxBinding> l, r;
    for (auto& b : lin) (coin() ? l : r).push_back(b);
    return {l, r};
  }

  static std::vector<CtxBinding> joined(const std::vector<CtxBinding>& unr,
                                        const std::vector<CtxBinding>& lin) {
    std::vector<CtxBinding> out = unr;
    out.insert(out.end(), lin.begin(), lin.end());
    return out;
  }

  std::optional<Term> try_production(int prod, const std::vector<CtxBinding>& ctx,
                                     const std::vector<CtxBinding>& lin,
                                     const std::vector<CtxBinding>& unr, const Type& goal,
                                     int depth) {
    bool circuit = mode_of(goal) == Mode::Q;
    switch (prod) {
      case PVar: {
        // A variable consumes exactly the singleton linear slice.
        std::vector<const CtxBinding*> hits;
        for (auto& b : ctx)
          if (type_eq(b.type, goal)) hits.push_back(&b);
        std::shuffle(hits.begin(), hits.end(), rng_);
        for (auto* b : hits) {
          bool blin = mode_of(b->type) != Mode::U;
          if (blin ? (lin.size() == 1 && lin[0].name == b->name) : lin.empty())
            return var(circuit ? Color::Circuit : Color::Functional, b->name);
        }
        return std::nullopt;
      }
      case PUnitP:
        if (goal->kind == TKind::UnitAt && lin.empty()) {
          if (goal->mode == Mode::L) return unit_f();
          if (goal->mode == Mode::Q) return unit_c();
        }
        return std::nullopt;
      case PGate: {
        if (goal->kind != TKind::Arrow || goal->mode != Mode::Q || !lin.empty()) return std::nullopt;
        std::vector<std::string> hits;
        for (auto& [g, ty] : pool_.gates)
          if (type_eq(ty, goal)) hits.push_back(g);
        if (hits.empty()) return std::nullopt;
        return gate(hits[static_cast<size_t>(below(static_cast<int>(hits.size())))]);
      }
      case PPairI: {
        if (goal->kind != TKind::Tensor) return std::nullopt;
        for (int attempt = 0; attempt < 3; ++attempt) {
          if (budget_ < 0) return std::nullopt;
          auto [l, r] = split(lin);
          auto lt = gen_rec(joined(unr, l), goal->a, depth - 1);
          if (!lt) continue;
          auto rt = gen_rec(joined(unr, r), goal->b, depth - 1);
          if (!rt) continue;
          return circuit ? pair_c(*lt, *rt) : pair_f(*lt, *rt);
        }
        return std::nullopt;
      }
      case PLamI: {
        if (goal->kind != TKind::Arrow) return std::nullopt;
        std::string x = fresh_name();
        std::vector<CtxBinding> inner = ctx;
        inner.push_back({x, goal->a});
        auto body = gen_rec(inner, goal->b, depth - 1);
        if (!body) return std::nullopt;
        return circuit ? lam_c(x, goal->a, *body) : lam_f(x, goal->a, *body);
      }
      case PSuspT: {
        if (goal->kind != TKind::Up || goal->mode != Mode::U) return std::nullopt;
        auto m = gen_rec(ctx, goal->a, depth - 1);
        if (!m) return std::nullopt;
        return susp_term(*m);
      }
      case PSuspC: {
        if (goal->kind != TKind::Up || goal->mode != Mode::L) return std::nullopt;
        auto c = gen_rec(ctx, goal->a, depth - 1);
        if (!c) return std::nullopt;
        return susp_circ(*c);
      }
      case PDownI: {
        if (goal->kind != TKind::Down) return std::nullopt;
        auto m = gen_rec(ctx, goal->a, depth - 1);
        if (!m) return std::nullopt;
        return down_intro(*m);
      }
      case PGateApp: {
        if (!circuit || !is_simple(goal)) return std::nullopt;
        std::vector<const Type*> doms;
        std::vector<std::string> names;
        for (auto& [g, ty] : pool_.gates)
          if (type_eq(ty->b, goal)) {
            doms.push_back(&ty->a);
            names.push_back(g);
          }
        if (names.empty()) return std::nullopt;
        int i = below(static_cast<int>(names.size()));
        auto arg = gen_rec(ctx, *doms[static_cast<size_t>(i)], depth - 1);
        if (!arg) return std::nullopt;
        return app_c(gate(names[static_cast<size_t>(i)]), *arg);
      }
      case PForceE: {
        if (circuit) {
          auto m = gen_rec(ctx, t_up(goal), depth - 1);
          if (!m) return std::nullopt;
          return force_c(*m);
        }
        if (mode_of(goal) == Mode::L && lin.empty()) {
          auto m = gen_rec(ctx, t_up(goal), depth - 1);
          if (!m) return std::nullopt;
          return force_f(*m);
        }
        return std::nullopt;
      }
      case PMatchE: return gen_match(lin, unr, goal, depth);
      case PAppE: {
        Mode m = mode_of(goal);
        if (m == Mode::Q && !is_simple(goal)) return std::nullopt;
        Type dom = m == Mode::Q ? gen_simple(1) : gen_type(m, 1);
        Type fty = t_arrow(dom, goal, m);
        for (int attempt = 0; attempt < 3; ++attempt) {
          if (budget_ < 0) return std::nullopt;
          auto [l, r] = split(lin);
          auto f = gen_rec(joined(unr, l), fty, depth - 1);
          if (!f) continue;
          auto a = gen_rec(joined(unr, r), dom, depth - 1);
          if (!a) continue;
          return circuit ? app_c(*f, *a) : app_f(*f, *a);
        }
        return std::nullopt;
      }
      default: return std::nullopt;
    }
  }

  std::optional<Term> gen_match(const std::vector<CtxBinding>& lin,
                                const std::vector<CtxBinding>& unr, const Type& goal, int depth) {
    Mode gm = mode_of(goal);
    // Scrutinee mode must sit at or above the body's mode.
    std::vector<Mode> scrut_modes;
    if (gm == Mode::U)
      scrut_modes = {Mode::U};
    else if (gm == Mode::L)
      scrut_modes = {Mode::L, Mode::Q, Mode::U};
    else
      scrut_modes = {Mode::Q};
    Mode sm = scrut_modes[static_cast<size_t>(below(static_cast<int>(scrut_modes.size())))];
    PatFamily fam = gm == Mode::Q ? PatFamily::QQ : (sm == Mode::Q ? PatFamily::QF : PatFamily::FF);

    enum { MUnit, MPair, MDown };
    std::vector<int> shapes = {MUnit, MPair};
    if (fam == PatFamily::FF && sm == Mode::L && gm == Mode::L) shapes.push_back(MDown);
    int shape = shapes[static_cast<size_t>(below(static_cast<int>(shapes.size())))];

    for (int attempt = 0; attempt < 3; ++attempt) {
      if (budget_ < 0) return std::nullopt;
      auto [sl, bl] = split(lin);
      Type scrut_ty;
      switch (shape) {
        case MUnit: scrut_ty = t_unit(sm); break;
        case MPair: {
          Type a = sm == Mode::Q ? gen_simple(1) : gen_type(sm, 1, false);
          Type b = sm == Mode::Q ? gen_simple(1) : gen_type(sm, 1, false);
          scrut_ty = t_tensor(a, b, sm);
          break;
        }
        case MDown: scrut_ty = t_down(gen_type(Mode::U, 1, false)); break;
      }
      if (shape == MUnit && sm == Mode::U) scrut_ty = t_unit(Mode::U);
      auto scrut = gen_rec(joined(unr, sl), scrut_ty, depth - 1);
      if (!scrut) continue;
      std::vector<CtxBinding> bctx = joined(unr, bl);
      Pattern pat{PatKind::Unit, fam, "", "", nullptr};
      if (shape == MPair) {
        std::string x = fresh_name(), y = fresh_name();
        bctx.push_back({x, scrut_ty->a});
        bctx.push_back({y, scrut_ty->b});
        pat = Pattern{PatKind::Pair, fam, x, y, nullptr};
      } else if (shape == MDown) {
        std::string x = fresh_name();
        bctx.push_back({x, scrut_ty->a});
        pat = Pattern{PatKind::Down, fam, x, "", nullptr};
      }
      auto body = gen_rec(bctx, goal, depth - 1);
      if (!body) continue;
      pat.body = *body;
      return match_term(*scrut, pat);
    }
    return std::nullopt;
  }

  const Signature& pool_;
  std::mt19937_64 rng_;
  long names_ = 0;
  long budget_ = 4000;
};

}  // namespace detail

// Generates a term that check_pqa accepts at `goal` in `ctx`; nullopt when
// the goal is unsatisfiable within the retry budget.
inline std::optional<Term> gen_well_typed(const GenConfig& cfg, const Type& goal,
                                          const TypingContext& ctx) {
  detail::Generator g(cfg.gate_pool, cfg.seed);
  for (int attempt = 0; attempt < 100; ++attempt) {
    if (auto t = g.gen_term(ctx.bindings, goal, cfg.max_depth)) return t;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// One-constructor mutation
// ---------------------------------------------------------------------------

namespace detail {

inline void collect_paths(const Term& t, std::vector<std::vector<int>>& out, std::vector<int>& cur) {
  out.push_back(cur);
  if (t->a) {
    cur.push_back(0);
    collect_paths(t->a, out, cur);
    cur.pop_back();
  }
  if (t->b) {
    cur.push_back(1);
    collect_paths(t->b, out, cur);
    cur.pop_back();
  }
  if (t->pat) {
    cur.push_back(2);
    collect_paths(t->pat->body, out, cur);
    cur.pop_back();
  }
}

inline Term replace_at(const Term& t, const std::vector<int>& path, size_t i,
                       const std::function<Term(const Term&)>& f) {
  if (i == path.size()) return f(t);
  Node n = *t;
  if (path[i] == 0)
    n.a = replace_at(t->a, path, i + 1, f);
  else if (path[i] == 1)
    n.b = replace_at(t->b, path, i + 1, f);
  else {
    Pattern p = *t->pat;
    p.body = replace_at(p.body, path, i + 1, f);
    n.pat = p;
  }
  return std::make_shared<Node>(std::move(n));
}

}  // namespace detail

// Applies one random local constructor flip somewhere in the term.
inline Term mutate_term(const Term& t, const Signature& pool, std::mt19937_64& rng) {
  std::vector<std::vector<int>> paths;
  std::vector<int> cur;
  detail::collect_paths(t, paths, cur);

  std::vector<std::string> gate_names;
  for (auto& [g, ty] : pool.gates) gate_names.push_back(g);

  for (int attempt = 0; attempt < 32; ++attempt) {
    auto& path = paths[rng() % paths.size()];
    int flavor = static_cast<int>(rng() % 8);
    bool changed = false;
    Term out = detail::replace_at(t, path, 0, [&](const Term& s) -> Term {
      switch (flavor) {
        case 0:
          if (s->kind == Kind::Pair) {
            changed = true;
            return s->color == Color::Functional ? app_f(s->a, s->b) : app_c(s->a, s->b);
          }
          break;
        case 1:
          if (s->kind == Kind::App) {
            changed = true;
            return s->color == Color::Functional ? pair_f(s->a, s->b) : pair_c(s->a, s->b);
          }
          break;
        case 2:
          if (s->kind == Kind::SuspTerm) {
            changed = true;
            return down_intro(s->a);
          }
          if (s->kind == Kind::DownIntro) {
            changed = true;
            return susp_term(s->a);
          }
          break;
        case 3:
          if (s->kind == Kind::Force && s->color == Color::Functional) {
            changed = true;
            return s->a;  // drop the eliminator
          }
          if (s->color == Color::Functional) {
            changed = true;
            return force_f(s);
          }
          break;
        case 4:
          if (s->kind == Kind::Gate && gate_names.size() > 1) {
            std::string g;
            do {
              g = gate_names[rng() % gate_names.size()];
            } while (g == s->name);
            changed = true;
            return gate(g);
          }
          break;
        case 5:
          if (s->kind == Kind::Lam && s->annot) {
            changed = true;
            Node n = *s;
            n.annot = type_eq(*s->annot, t_qubit()) ? t_up(t_qubit()) : t_qubit();
            return std::make_shared<Node>(std::move(n));
          }
          break;
        case 6:
          if ((s->kind == Kind::Pair || s->kind == Kind::App) && s->a && s->b) {
            changed = true;
            Node n = *s;
            std::swap(n.a, n.b);
            return std::make_shared<Node>(std::move(n));
          }
          break;
        case 7:
          if (s->kind == Kind::Match && s->pat->kind == PatKind::Pair) {
            changed = true;
            Node n = *s;
            Pattern p = *s->pat;
            p.kind = PatKind::Unit;
            n.pat = p;
            return std::make_shared<Node>(std::move(n));
          }
          if (s->kind == Kind::Unit) {
            changed = true;
            return s->color == Color::Functional ? susp_term(unit_f()) : gate("H");
          }
          break;
      }
      return s;
    });
    if (changed) return out;
  }
  return t;
}

// ---------------------------------------------------------------------------
// Brute-force declarative checker: enumerate every context split
// ---------------------------------------------------------------------------

namespace detail {

struct BruteBudgetExceeded {};

class BruteChecker {
 public:
  BruteChecker(const Signature& sig, long budget = 4'000'000) : sig_(sig), budget_(budget) {}

  // Returns the synthesized type, nullopt when no derivation exists.
  std::optional<Type> synth(const TypingContext& ctx, const Term& t) {
    entries_.clear();
    for (auto& b : ctx.bindings) entries_.push_back({b.name, b.type, true});
    return derive(t);
  }

 private:
  struct Entry {
    std::string name;
    Type type;
    bool alive;
  };

  void spend() {
    if (--budget_ < 0) throw BruteBudgetExceeded{};
  }

  std::vector<size_t> alive_linear() const {
    std::vector<size_t> out;
    for (size_t i = 0; i < entries_.size(); ++i)
      if (entries_[i].alive && mode_of(entries_[i].type) != Mode::U) out.push_back(i);
    return out;
  }

  // The judgment for an unrestricted conclusion is only well formed over an
  // unrestricted context.
  std::optional<Type> admit(Type ty) {
    if (mode_of(ty) == Mode::U && !alive_linear().empty()) return std::nullopt;
    return ty;
  }

  const Entry* lookup(const std::string& name) const {
    for (auto it = entries_.rbegin(); it != entries_.rend(); ++it)
      if (it->alive && it->name == name) return &*it;
    return nullptr;
  }

  template <typename F>
  std::optional<Type> with_binding(const std::string& name, const Type& ty, F body) {
    entries_.push_back({name, ty, true});
    auto r = body();
    entries_.pop_back();
    return r;
  }

  // Enumerates all assignments of the alive linear entries to the two
  // premisses of a binary rule.
  std::optional<Type> all_splits(
      const std::function<std::optional<Type>(BruteChecker&)>& left,
      const std::function<std::optional<Type>(BruteChecker&, const Type&)>& right) {
    std::vector<size_t> lin = alive_linear();
    if (lin.size() > 20) throw BruteBudgetExceeded{};
    for (uint32_t mask = 0; mask < (1u << lin.size()); ++mask) {
      spend();
      for (size_t i = 0; i < lin.size(); ++i) entries_[lin[i]].alive = (mask >> i) & 1;
      auto lt = left(*this);
      if (lt) {
        for (size_t i = 0; i < lin.size(); ++i) entries_[lin[i]].alive = !((mask >> i) & 1);
        auto rt = right(*this, *lt);
        if (rt) {
          for (size_t i : lin) entries_[i].alive = true;
          return rt;
        }
      }
      for (size_t i : lin) entries_[i].alive = true;
    }
    return std::nullopt;
  }

  std::optional<Type> derive(const Term& t) {
    spend();
    switch (t->kind) {
      case Kind::Var: {
        const Entry* e = lookup(t->name);
        if (!e) return std::nullopt;
        Mode m = mode_of(e->type);
        if ((m == Mode::Q) != (t->color == Color::Circuit)) return std::nullopt;
        if (m == Mode::Q && !is_simple(e->type)) return std::nullopt;
        // All other alive assumptions must be unrestricted.
        for (size_t i : alive_linear())
          if (&entries_[i] != e) return std::nullopt;
        if (m != Mode::U && !e->alive) return std::nullopt;
        return admit(e->type);
      }
      case Kind::Gate: {
        if (!alive_linear().empty()) return std::nullopt;
        const Type* g = sig_.find(t->name);
        return g ? admit(*g) : std::nullopt;
      }
      case Kind::Unit:
        if (!alive_linear().empty()) return std::nullopt;
        return admit(t_unit(t->color == Color::Circuit ? Mode::Q : Mode::L));
      case Kind::Lam: {
        if (!t->annot) return std::nullopt;
        Type dom = *t->annot;
        if (type_violation(dom)) return std::nullopt;
        Mode dm = mode_of(dom);
        if ((dm == Mode::Q) != (t->color == Color::Circuit)) return std::nullopt;
        if (dm == Mode::Q && !is_simple(dom)) return std::nullopt;
        auto body = with_binding(t->name, dom, [&] { return derive(t->a); });
        if (!body) return std::nullopt;
        if (t->color == Color::Circuit) {
          if (mode_of(*body) != Mode::Q || !is_simple(*body)) return std::nullopt;
          return admit(t_arrow(dom, *body, Mode::Q));
        }
        if (mode_of(*body) != dm) return std::nullopt;
        return admit(t_arrow(dom, *body, dm));
      }
      case Kind::Pair: {
        if (t->a->color != t->color || t->b->color != t->color) return std::nullopt;
        auto r = all_splits([&](BruteChecker& c) { return c.derive(t->a); },
                            [&](BruteChecker& c, const Type& lt) -> std::optional<Type> {
                              auto rt = c.derive(t->b);
                              if (!rt) return std::nullopt;
                              Mode lm = mode_of(lt), rm = mode_of(*rt);
                              if (t->color == Color::Circuit) {
                                if (!is_simple(lt) || !is_simple(*rt)) return std::nullopt;
                              } else if (lm != rm || lm == Mode::Q) {
                                return std::nullopt;
                              }
                              return t_tensor(lt, *rt, lm);
                            });
        return r ? admit(*r) : std::nullopt;
      }
      case Kind::App: {
        if (t->a->color != t->color || t->b->color != t->color) return std::nullopt;
        auto r = all_splits([&](BruteChecker& c) { return c.derive(t->a); },
                            [&](BruteChecker& c, const Type& ft) -> std::optional<Type> {
                              if (ft->kind != TKind::Arrow) return std::nullopt;
                              auto at = c.derive(t->b);
                              if (!at || !type_eq(ft->a, *at)) return std::nullopt;
                              return ft->b;
                            });
        return r ? admit(*r) : std::nullopt;
      }
      case Kind::SuspTerm: {
        if (t->a->color != Color::Functional) return std::nullopt;
        if (!alive_linear().empty()) return std::nullopt;  // independence restriction
        auto m = derive(t->a);
        if (!m || mode_of(*m) != Mode::L) return std::nullopt;
        return admit(t_up(*m));
      }
      case Kind::SuspCirc: {
        if (t->a->color != Color::Circuit) return std::nullopt;
        auto c = derive(t->a);
        if (!c || mode_of(*c) != Mode::Q) return std::nullopt;
        return admit(t_up(*c));
      }
      case Kind::DownIntro: {
        if (t->a->color != Color::Functional) return std::nullopt;
        auto m = derive(t->a);
        if (!m || mode_of(*m) != Mode::U) return std::nullopt;
        return admit(t_down(*m));
      }
      case Kind::Force: {
        if (t->a->color != Color::Functional) return std::nullopt;
        auto m = derive(t->a);
        if (!m || (*m)->kind != TKind::Up) return std::nullopt;
        Mode want = t->color == Color::Circuit ? Mode::L : Mode::U;
        if (mode_of(*m) != want) return std::nullopt;
        return admit((*m)->a);
      }
      case Kind::Match: {
        const Pattern& p = *t->pat;
        if (t->a->color != scrutinee_color(p.family)) return std::nullopt;
        auto r = all_splits(
            [&](BruteChecker& c) { return c.derive(t->a); },
            [&](BruteChecker& c, const Type& st) { return c.derive_pattern(p, st); });
        return r ? admit(*r) : std::nullopt;
      }
    }
    return std::nullopt;
  }

  std::optional<Type> derive_pattern(const Pattern& p, const Type& scrut) {
    std::optional<Type> body;
    switch (p.kind) {
      case PatKind::Unit: {
        if (scrut->kind != TKind::UnitAt) return std::nullopt;
        if ((mode_of(scrut) == Mode::Q) != (p.family != PatFamily::FF)) return std::nullopt;
        body = derive(p.body);
        break;
      }
      case PatKind::Pair: {
        if (scrut->kind != TKind::Tensor) return std::nullopt;
        if ((mode_of(scrut) == Mode::Q) != (p.family != PatFamily::FF)) return std::nullopt;
        body = with_binding(p.x, scrut->a, [&] {
          return with_binding(p.y, scrut->b, [&] { return derive(p.body); });
        });
        break;
      }
      case PatKind::Down: {
        if (p.family != PatFamily::FF || scrut->kind != TKind::Down) return std::nullopt;
        body = with_binding(p.x, scrut->a, [&] { return derive(p.body); });
        break;
      }
    }
    if (!body) return std::nullopt;
    Mode bm = mode_of(*body);
    if ((bm == Mode::Q) != (p.family == PatFamily::QQ)) return std::nullopt;
    if (!mode_geq(mode_of(scrut), bm)) return std::nullopt;  // A >= B
    return body;
  }

  const Signature& sig_;
  std::vector<Entry> entries_;
  long budget_;
};

}  // namespace detail

enum class BruteVerdict : uint8_t { Typed, Untyped, BudgetExceeded };

struct BruteResult {
  BruteVerdict verdict;
  Type type;  // when Typed
};

inline BruteResult brute_force_synth(const Signature& sig, const TypingContext& ctx, const Term& t) {
  detail::BruteChecker b(sig);
  try {
    auto r = b.synth(ctx, t);
    if (!r) return {BruteVerdict::Untyped, nullptr};
    return {BruteVerdict::Typed, *r};
  } catch (const detail::BruteBudgetExceeded&) {
    return {BruteVerdict::BudgetExceeded, nullptr};
  }
}

// Split-enumeration oracle: does some derivation give `p` the type `goal`?
inline bool brute_force_split_check(const Signature& sig, const TypingContext& ctx, const Term& p,
                                    const Type& goal) {
  BruteResult r = brute_force_synth(sig, ctx, p);
  return r.verdict == BruteVerdict::Typed && type_eq(r.type, goal);
}

// ---------------------------------------------------------------------------
// Type-preserving shrinking
// ---------------------------------------------------------------------------

namespace detail {

inline long term_size(const Term& t) {
  long n = 1;
  if (t->a) n += term_size(t->a);
  if (t->b) n += term_size(t->b);
  if (t->pat) n += term_size(t->pat->body);
  return n;
}

inline const Term* term_at(const Term& t, const std::vector<int>& path) {
  const Term* cur = &t;
  for (int step : path) {
    if (step == 0)
      cur = &(*cur)->a;
    else if (step == 1)
      cur = &(*cur)->b;
    else
      cur = &(*cur)->pat->body;
    if (!*cur) return nullptr;
  }
  return cur;
}

}  // namespace detail

// Replaces subterms with freshly generated smaller terms of the same type
// and context slice, keeping the failure alive.
inline std::pair<Term, int> shrink_term(const Signature& sig, const TypingContext& ctx,
                                        const Term& start,
                                        const std::function<bool(const Term&)>& still_fails,
                                        uint64_t seed) {
  detail::Generator gen(sig, seed);
  std::vector<CtxBinding> root_unrestricted;
  for (auto& b : ctx.bindings)
    if (mode_of(b.type) == Mode::U) root_unrestricted.push_back(b);

  Term cur = start;
  int steps = 0;
  for (int round = 0; round < 40; ++round) {
    Checker::Notes notes;
    CheckResult chk = check_with_notes(sig, ctx, cur, System::PQA, notes);
    if (!chk.ok) break;

    std::vector<std::vector<int>> paths;
    std::vector<int> buf;
    detail::collect_paths(cur, paths, buf);
    std::stable_sort(paths.begin(), paths.end(), [&](const auto& a, const auto& b) {
      const Term* ta = detail::term_at(cur, a);
      const Term* tb = detail::term_at(cur, b);
      return detail::term_size(*ta) > detail::term_size(*tb);
    });

    bool improved = false;
    for (auto& path : paths) {
      const Term* sub = detail::term_at(cur, path);
      if (!sub || detail::term_size(*sub) <= 1) continue;
      auto it = notes.find(sub->get());
      if (it == notes.end()) continue;
      std::vector<CtxBinding> slice = root_unrestricted;
      slice.insert(slice.end(), it->second.linear_slice.begin(), it->second.linear_slice.end());
      for (int d = 0; d <= 1 && !improved; ++d) {
        auto cand = gen.gen_term(slice, it->second.type, d);
        if (!cand || detail::term_size(*cand) >= detail::term_size(*sub)) continue;
        Term next = detail::replace_at(cur, path, 0, [&](const Term&) { return *cand; });
        if (!check_pqa(sig, ctx, next).ok) continue;
        if (!still_fails(next)) continue;
        cur = next;
        ++steps;
        improved = true;
      }
      if (improved) break;
    }
    if (!improved) break;
  }
  return {cur, steps};
}

// ---------------------------------------------------------------------------
// The metatheory suite
// ---------------------------------------------------------------------------

struct PropStat {
  long attempts = 0;
  long failures = 0;
};

struct Counterexample {
  std::string property;
  long index = 0;
  std::string source;
  std::string detail;
  int shrink_steps = 0;
};

struct SuiteReport {
  uint64_t seed = 0;
  long count = 0;
  long generation_misses = 0;
  double seconds = 0.0;
  std::map<std::string, PropStat> props;
  std::vector<Counterexample> examples;

  bool all_passed() const {
    for (auto& [name, stat] : props)
      if (stat.failures > 0) return false;
    return true;
  }
};

namespace detail {

struct SuiteRunner {
  const Signature& sig;
  GenConfig cfg;
  SuiteReport report;
  Generator gen;

  struct Instance {
    TypingContext ctx;
    TypedNeutralContext psi;
    Type goal;
    Term term;
  };

  struct Pending {
    std::string property;
    long index;
    Instance inst;
    Term witness;
    std::string detail;
  };
  std::vector<Pending> pending_;

  SuiteRunner(const Signature& s, const GenConfig& c) : sig(s), cfg(c), gen(c.gate_pool, c.seed) {}

  void record(const std::string& prop, bool okay, long index, const Instance& inst,
              const Term& witness, const std::string& detail_msg) {
    auto& stat = report.props[prop];
    stat.attempts++;
    if (okay) return;
    stat.failures++;
    if (pending_.size() < 16)
      pending_.push_back(Pending{prop, index, inst, witness, detail_msg});
  }

  // Re-evaluates one named property for a candidate term of the same goal,
  // so shrinking can keep the failure alive.
  bool property_fails(const std::string& prop, const Instance& inst, const Term& cand) {
    NeutralContext pi = inst.psi.cneu();
    CheckResult ra = check_pqa(sig, inst.ctx, cand);
    if (!ra.ok) return prop == "generator-soundness";
    if (prop == "generator-soundness") return !type_eq(ra.type, inst.goal);
    if (prop == "independence") return !geq_mode(inst.ctx, mode_of(ra.type));
    if (prop == "pqa-implies-pqx") {
      CheckResult rx = check_pqx(sig, inst.ctx, cand);
      return !(rx.ok && type_eq(rx.type, ra.type));
    }
    StepTrace trace = normalize(pi, cand, kDefaultFuel);
    if (prop == "normalization") return trace.terminal != Terminal::Normal;
    if (prop == "determinism-overlap") {
      Term prev = cand;
      for (auto& e : trace.steps) {
        if (applicable_rules(pi, prev).size() != 1) return true;
        prev = e.term;
      }
      return false;
    }
    if (prop == "subject-reduction-pqa" || prop == "subject-reduction-pqx") {
      System sys = prop.back() == 'a' ? System::PQA : System::PQX;
      for (auto& e : trace.steps) {
        CheckResult r = check_system(sig, inst.ctx, e.term, sys);
        if (!r.ok || !type_eq(r.type, ra.type)) return true;
      }
      return false;
    }
    if (prop == "finality")
      return trace.terminal == Terminal::Normal && !applicable_rules(pi, trace.final_term).empty();
    if (prop == "normal-form-grammar")
      return trace.terminal == Terminal::Normal &&
             !check_normal_grammar(sig, ra.type, inst.psi, trace.final_term).conforms;
    return false;
  }

  void finalize_examples() {
    for (auto& p : pending_) {
      Counterexample ex;
      ex.property = p.property;
      ex.index = p.index;
      ex.detail = p.detail;
      Term best = p.witness;
      int steps = 0;
      // Shrink against the original instance when the witness is the
      // generated term itself (trace entries are not regenerated).
      if (alpha_eq(p.witness, p.inst.term)) {
        auto fails = [&](const Term& cand) { return property_fails(p.property, p.inst, cand); };
        if (property_fails(p.property, p.inst, p.inst.term)) {
          auto [shrunk, n] = shrink_term(sig, p.inst.ctx, p.inst.term, fails, report.seed ^ 0x9e3779b9ULL);
          best = shrunk;
          steps = n;
        }
      }
      ex.source = print_term(best);
      ex.shrink_steps = steps;
      report.examples.push_back(ex);
    }
  }

  // Gates in the pool preserve wire counts, so a term's type bounds how many
  // free wires it can absorb: function domains supply wires that the
  // codomain must also soak up, and unrestricted payloads absorb none.
  static int wire_capacity(const Type& t) {
    switch (t->kind) {
      case TKind::Qubit: return 1;
      case TKind::UnitAt: return 0;
      case TKind::Tensor: return wire_capacity(t->a) + wire_capacity(t->b);
      case TKind::Arrow: return wire_capacity(t->b) - wire_capacity(t->a);
      case TKind::Up: return wire_capacity(t->a);
      case TKind::Down: return 0;
    }
    return 0;
  }

  std::optional<Instance> make_instance() {
    for (int attempt = 0; attempt < 30; ++attempt) {
      Instance inst;
      Mode gm = gen.pick_mode(cfg.mode_bias);
      int nwires = gm == Mode::U ? 0 : (gm == Mode::Q ? 1 + gen.below(3) : gen.below(4));
      for (int w = 0; w < nwires; ++w) {
        std::string name = "w" + std::to_string(w + 1);
        inst.psi.entries.push_back({name, t_qubit()});
        inst.ctx.add(name, t_qubit());
      }
      inst.goal = gen.gen_type(gm, 3);
      if (wire_capacity(inst.goal) < nwires) {
        report.generation_misses++;
        continue;
      }
      std::optional<Term> found;
      for (int inner = 0; inner < 3; ++inner) {
        auto t = gen.gen_term(inst.ctx.bindings, inst.goal, cfg.max_depth, 4000);
        if (!t) {
          report.generation_misses++;
          continue;
        }
        found = t;
        // Prefer terms with work left to do; values mostly test the statics.
        if (!is_normal(inst.psi.cneu(), *t)) break;
      }
      if (found) {
        inst.term = *found;
        return inst;
      }
    }
    return std::nullopt;
  }

  bool run_one(long i) {
    auto oinst = make_instance();
    if (!oinst) return false;
    Instance& inst = *oinst;
    NeutralContext pi = inst.psi.cneu();

    CheckResult ra = check_pqa(sig, inst.ctx, inst.term);
    record("generator-soundness", ra.ok && type_eq(ra.type, inst.goal), i, inst, inst.term,
           ra.ok ? "type differs from goal" : ra.error->message);
    if (!ra.ok) return true;

    record("independence", geq_mode(inst.ctx, mode_of(ra.type)), i, inst, inst.term,
           "context not >= conclusion mode");

    CheckResult rx = check_pqx(sig, inst.ctx, inst.term);
    record("pqa-implies-pqx", rx.ok && type_eq(rx.type, ra.type), i, inst, inst.term,
           rx.ok ? "approximate type differs" : rx.error->message);

    StepTrace trace = normalize(pi, inst.term, kDefaultFuel);
    record("normalization", trace.terminal == Terminal::Normal, i, inst, inst.term,
           std::string("terminal: ") + terminal_name(trace.terminal));

    Term prev = inst.term;
    long audited = 0;
    for (auto& entry : trace.steps) {
      if (audited < 64) {
        auto rules = applicable_rules(pi, prev);
        record("determinism-overlap", rules.size() == 1, i, inst, prev,
               "rules applicable: " + std::to_string(rules.size()));
        ++audited;
      }
      CheckResult sa = check_pqa(sig, inst.ctx, entry.term);
      record("subject-reduction-pqa", sa.ok && type_eq(sa.type, ra.type), i, inst, inst.term,
             "after rule " + entry.rule + (sa.ok ? ": type changed" : ": " + sa.error->message));
      CheckResult sx = check_pqx(sig, inst.ctx, entry.term);
      record("subject-reduction-pqx", sx.ok && type_eq(sx.type, ra.type), i, inst, inst.term,
             "after rule " + entry.rule + (sx.ok ? ": type changed" : ": " + sx.error->message));
      prev = entry.term;
    }

    if (trace.terminal == Terminal::Normal) {
      bool final_normal = is_normal(pi, trace.final_term);
      bool no_rule = applicable_rules(pi, trace.final_term).empty();
      record("finality", final_normal && no_rule, i, inst, trace.final_term,
             final_normal ? "normal form still reduces" : "terminal not normal");
      NormalFormReport nf = check_normal_grammar(sig, ra.type, inst.psi, trace.final_term);
      record("normal-form-grammar", nf.conforms, i, inst, trace.final_term,
             "clause " + nf.grammar_case + " at " + nf.witness);
    }

    if (ra.type->kind == TKind::Up) {
      Term forced = mode_of(ra.type) == Mode::U ? force_f(inst.term) : force_c(inst.term);
      StepTrace ftr = normalize(pi, forced, kDefaultFuel);
      if (ftr.terminal == Terminal::Normal) {
        StepTrace mtr = normalize(pi, inst.term, kDefaultFuel);
        record("halts-force-implies-halts", mtr.terminal == Terminal::Normal, i, inst, inst.term,
               "force halts but the suspension does not");
      }
    }

    if (!inst.psi.entries.empty()) check_neutral_subst(i, inst, pi);
    if (i % 5 == 0) check_oracle(i, inst);
    check_mutant(i, inst, pi);
    return true;
  }

  void check_neutral_subst(long i, const Instance& inst, const NeutralContext& pi) {
    NeutralSubst sigma;
    NeutralContext target;
    for (auto& e : inst.psi.entries) {
      std::string primed = e.name + "p";
      target.names.push_back(primed);
      if (gen.coin())
        sigma.map.push_back({e.name, var_c(primed)});
      else
        sigma.map.push_back({e.name, app_c(gate("H"), var_c(primed))});
    }
    auto image = apply_neutral_subst(target, sigma, inst.term);
    if (auto* d = std::get_if<Diag>(&image)) {
      record("neutral-subst-preservation", false, i, inst, inst.term, d->message);
      return;
    }
    Term mapped = std::get<Term>(image);
    bool class_ok = classify(pi, inst.term) == classify(target, mapped);
    auto s1 = step(pi, inst.term);
    auto s2 = step(target, mapped);
    bool step_ok;
    if (s1.has_value() != s2.has_value()) {
      step_ok = false;
    } else if (!s1) {
      step_ok = true;
    } else {
      auto mapped_succ = apply_neutral_subst(target, sigma, s1->term);
      step_ok = std::holds_alternative<Term>(mapped_succ) &&
                alpha_eq(std::get<Term>(mapped_succ), s2->term);
    }
    record("neutral-subst-preservation", class_ok && step_ok, i, inst, inst.term,
           class_ok ? "steps do not commute" : "classification changed");
  }

  void check_oracle(long i, const Instance& inst) {
    BruteResult br = brute_force_synth(sig, inst.ctx, inst.term);
    if (br.verdict == BruteVerdict::BudgetExceeded) return;
    bool agree = br.verdict == BruteVerdict::Typed && type_eq(br.type, inst.goal);
    record("oracle-equivalence", agree, i, inst, inst.term,
           br.verdict == BruteVerdict::Typed ? "types differ" : "oracle rejects");

    Term mutant = mutate_term(inst.term, cfg.gate_pool, gen.rng());
    CheckResult ma = check_pqa(sig, inst.ctx, mutant);
    BruteResult mb = brute_force_synth(sig, inst.ctx, mutant);
    if (mb.verdict == BruteVerdict::BudgetExceeded) return;
    bool magree = ma.ok ? (mb.verdict == BruteVerdict::Typed && type_eq(mb.type, ma.type))
                        : mb.verdict == BruteVerdict::Untyped;
    record("oracle-equivalence", magree, i, inst, mutant, "verdicts differ on mutant");
  }

  void check_mutant(long i, const Instance& inst, const NeutralContext& pi) {
    Term mutant = mutate_term(inst.term, cfg.gate_pool, gen.rng());
    bool okay = true;
    std::string detail_msg;
    try {
      (void)check_pqa(sig, inst.ctx, mutant);
      StepTrace tr = normalize(pi, mutant, 4000);
      okay = tr.terminal == Terminal::Normal || tr.terminal == Terminal::FuelExhausted ||
             tr.terminal == Terminal::Stuck;
      if (tr.terminal == Terminal::Stuck && !tr.diag) {
        okay = false;
        detail_msg = "stuck without a diagnostic";
      }
    } catch (const std::exception& e) {
      okay = false;
      detail_msg = std::string("exception: ") + e.what();
    }
    record("mutation-robustness", okay, i, inst, mutant, detail_msg);
  }
};

}  // namespace detail

inline SuiteReport run_suite(const Signature& sig, const GenConfig& cfg, long count) {
  auto start = std::chrono::steady_clock::now();
  detail::SuiteRunner runner(sig, cfg);
  runner.report.seed = cfg.seed;
  runner.report.count = count;
  // Every requested index corresponds to one generated well-typed term;
  // instances the generator gives up on are regenerated, within reason.
  long dry_spells = 0;
  for (long i = 0; i < count && dry_spells < 1000;) {
    if (runner.run_one(i)) {
      ++i;
      dry_spells = 0;
    } else {
      ++dry_spells;
    }
  }
  runner.finalize_examples();
  runner.report.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return runner.report;
}

// Robustness sweep on its own: one-constructor mutations of well-typed terms
// must never crash the stepper.
struct RobustnessReport {
  long total = 0;
  long normal = 0, fuel = 0, stuck = 0;
  long crashes = 0;
  std::vector<std::string> crash_sources;
};

inline RobustnessReport run_mutation_robustness(const Signature& sig, const GenConfig& cfg,
                                                long count) {
  detail::SuiteRunner runner(sig, cfg);
  RobustnessReport rep;
  while (rep.total < count) {
    auto inst = runner.make_instance();
    if (!inst) continue;
    NeutralContext pi = inst->psi.cneu();
    Term mutant = mutate_term(inst->term, cfg.gate_pool, runner.gen.rng());
    rep.total++;
    try {
      (void)check_pqa(sig, inst->ctx, mutant);
      StepTrace tr = normalize(pi, mutant, 4000);
      switch (tr.terminal) {
        case Terminal::Normal: rep.normal++; break;
        case Terminal::FuelExhausted: rep.fuel++; break;
        case Terminal::Stuck:
          rep.stuck++;
          if (!tr.diag) {
            rep.crashes++;
            if (rep.crash_sources.size() < 4)
              rep.crash_sources.push_back("missing diagnostic: " + print_term(mutant));
          }
          break;
      }
    } catch (const std::exception& e) {
      rep.crashes++;
      if (rep.crash_sources.size() < 4)
        rep.crash_sources.push_back(std::string(e.what()) + ": " + print_term(mutant));
    }
  }
  return rep;
}

// Oracle sweep: the leftover checker against naive split enumeration.
struct OracleReport {
  long total = 0;
  long agreements = 0;
  long budget_skips = 0;
  std::vector<std::string> disagreements;
};

inline OracleReport run_oracle_equivalence(const Signature& sig, const GenConfig& cfg, long count) {
  detail::SuiteRunner runner(sig, cfg);
  OracleReport rep;
  while (rep.total < count) {
    auto inst = runner.make_instance();
    if (!inst) continue;
    // Alternate between the generated term and a one-flip mutant so both
    // accepting and rejecting verdicts get compared.
    Term subject = (rep.total % 2 == 0)
                       ? inst->term
                       : mutate_term(inst->term, cfg.gate_pool, runner.gen.rng());
    BruteResult br = brute_force_synth(sig, inst->ctx, subject);
    if (br.verdict == BruteVerdict::BudgetExceeded) {
      rep.budget_skips++;
      continue;
    }
    rep.total++;
    CheckResult ca = check_pqa(sig, inst->ctx, subject);
    bool agree = ca.ok ? (br.verdict == BruteVerdict::Typed && type_eq(br.type, ca.type))
                       : br.verdict == BruteVerdict::Untyped;
    if (agree)
      rep.agreements++;
    else if (rep.disagreements.size() < 4)
      rep.disagreements.push_back(print_term(subject));
  }
  return rep;
}

}  // namespace pqa
