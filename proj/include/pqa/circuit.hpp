#pragma once

#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "pqa/dynamics.hpp"
#include "pqa/print.hpp"
#include "pqa/statics.hpp"
#include "pqa/syntax.hpp"

namespace pqa {

// ---------------------------------------------------------------------------
// Normal-form grammar
// ---------------------------------------------------------------------------

struct NormalFormReport {
  bool conforms = false;
  std::string grammar_case;  // clause that matched (or was expected)
  std::string witness;       // path to the offending subterm on failure
};

namespace detail {

struct GrammarChecker {
  const Signature& sig;
  NormalFormReport report;

  bool fail(const std::string& clause, const std::string& path) {
    report.conforms = false;
    report.grammar_case = clause;
    report.witness = path;
    return false;
  }

  // Neutral terms are typed structurally; the approximate system suffices
  // and does not insist that the wires be fully consumed.
  std::optional<Type> neutral_type(const TypedNeutralContext& psi, const Term& r) {
    CheckResult res = check_pqx(sig, psi.ctp(), r);
    if (!res.ok) return std::nullopt;
    return res.type;
  }

  bool match_clause(const TypedNeutralContext& psi, const Type& ty, const Term& v,
                    const std::string& path, const char* clause) {
    const Pattern& p = *v->pat;
    PatFamily expected = mode_of(ty) == Mode::Q ? PatFamily::QQ : PatFamily::QF;
    if (p.family != expected) return fail(clause, path + ".match-family");
    if (!is_neutral(psi.cneu(), v->a)) return fail(clause, path + ".scrutinee");
    auto rt = neutral_type(psi, v->a);
    if (!rt) return fail(clause, path + ".scrutinee-type");
    TypedNeutralContext inner = psi;
    if (p.kind == PatKind::Unit) {
      if ((*rt)->kind != TKind::UnitAt || (*rt)->mode != Mode::Q)
        return fail(clause, path + ".pattern");
    } else if (p.kind == PatKind::Pair) {
      if ((*rt)->kind != TKind::Tensor || (*rt)->mode != Mode::Q)
        return fail(clause, path + ".pattern");
      inner.entries.push_back({p.x, (*rt)->a});
      inner.entries.push_back({p.y, (*rt)->b});
    } else {
      return fail(clause, path + ".pattern");
    }
    return conforms(inner, ty, p.body, path + ".body");
  }

  bool neutral_clause(const TypedNeutralContext& psi, const Type& ty, const Term& v,
                      const std::string& path, const char* clause) {
    if (!is_neutral(psi.cneu(), v)) return fail(clause, path);
    auto rt = neutral_type(psi, v);
    if (!rt || !type_eq(*rt, ty)) return fail(clause, path + ".neutral-type");
    report.grammar_case = clause;
    return true;
  }

  bool ok(const char* clause) {
    report.conforms = true;
    report.grammar_case = clause;
    return true;
  }

  bool conforms(const TypedNeutralContext& full_psi, const Type& ty, const Term& v,
                const std::string& path) {
    // Narrow to the wires the term actually mentions: that is the context
    // slice its own typing judgment carries.
    std::set<std::string> fw = free_vars(v, Color::Circuit);
    TypedNeutralContext psi;
    for (auto& e : full_psi.entries)
      if (fw.count(e.name)) psi.entries.push_back(e);

    Mode m = mode_of(ty);
    // Unrestricted normal forms are closed: no free wires survive.
    if ((m == Mode::U || ty->kind == TKind::Down) && !psi.entries.empty())
      return fail("closed-at-mode-u", path + ".psi-nonempty");

    switch (ty->kind) {
      case TKind::UnitAt:
        if (m == Mode::U)
          return v->kind == Kind::Unit ? ok("unit-u/triv") : fail("unit-u/triv", path);
        if (m == Mode::L) {
          if (v->kind == Kind::Unit) return ok("unit-l/triv");
          if (v->kind == Kind::Match) return match_clause(psi, ty, v, path, "unit-l/match");
          return fail("unit-l", path);
        }
        if (v->kind == Kind::Unit && v->color == Color::Circuit) return ok("unit-q/triv");
        if (is_neutral(psi.cneu(), v)) return neutral_clause(psi, ty, v, path, "unit-q/neutral");
        if (v->kind == Kind::Match) return match_clause(psi, ty, v, path, "unit-q/match");
        return fail("unit-q", path);

      case TKind::Qubit:
        if (is_neutral(psi.cneu(), v)) return neutral_clause(psi, ty, v, path, "qubit/neutral");
        if (v->kind == Kind::Match) return match_clause(psi, ty, v, path, "qubit/match");
        return fail("qubit", path);

      case TKind::Tensor: {
        if (v->kind == Kind::Pair)
          return conforms(psi, ty->a, v->a, path + ".fst") &&
                 conforms(psi, ty->b, v->b, path + ".snd");
        if (m == Mode::Q && is_neutral(psi.cneu(), v))
          return neutral_clause(psi, ty, v, path, "tensor-q/neutral");
        if (m != Mode::U && v->kind == Kind::Match)
          return match_clause(psi, ty, v, path, "tensor/match");
        return fail("tensor", path);
      }

      case TKind::Arrow: {
        if (m == Mode::Q) {
          if (v->kind == Kind::Lam && v->color == Color::Circuit) {
            TypedNeutralContext inner = psi;
            inner.entries.push_back({v->name, ty->a});
            return conforms(inner, ty->b, v->a, path + ".lam-body");
          }
          if (v->kind == Kind::Gate) return neutral_clause(psi, ty, v, path, "arrow-q/gate");
          if (v->kind == Kind::Match) return match_clause(psi, ty, v, path, "arrow-q/match");
          return fail("arrow-q", path);
        }
        if (v->kind == Kind::Lam && v->color == Color::Functional) return ok("arrow-f/lam");
        if (m == Mode::L && v->kind == Kind::Match)
          return match_clause(psi, ty, v, path, "arrow-l/match");
        return fail("arrow-f", path);
      }

      case TKind::Up: {
        if (m == Mode::U)  // suspensions of functional terms
          return v->kind == Kind::SuspTerm ? ok("up-u/susp") : fail("up-u/susp", path);
        if (v->kind == Kind::SuspCirc) return ok("up-l/susp");
        if (v->kind == Kind::Match) return match_clause(psi, ty, v, path, "up-l/match");
        return fail("up-l", path);
      }

      case TKind::Down: {
        if (v->kind == Kind::DownIntro) return conforms(psi, ty->a, v->a, path + ".payload");
        return fail("down/intro", path);
      }
    }
    return fail("unknown-type", path);
  }
};

}  // namespace detail

// Checks a normal form against the clause of the normal-form grammar for its
// type. The caller guarantees the program classifies as normal. At the top
// level the supplied context is taken literally: unrestricted results demand
// that no wires are in scope at all.
inline NormalFormReport check_normal_grammar(const Signature& sig, const Type& ty,
                                             const TypedNeutralContext& psi, const Term& v) {
  detail::GrammarChecker g{sig, {}};
  Mode m = mode_of(ty);
  if ((m == Mode::U || ty->kind == TKind::Down) && !psi.entries.empty()) {
    g.report.conforms = false;
    g.report.grammar_case = "closed-at-mode-u";
    g.report.witness = "v.psi-nonempty";
    return g.report;
  }
  bool c = g.conforms(psi, ty, v, "v");
  g.report.conforms = c;
  if (c) g.report.witness.clear();
  return g.report;
}

// ---------------------------------------------------------------------------
// Diagram extraction
// ---------------------------------------------------------------------------

struct WireTree {
  enum class K : uint8_t { Nil, Leaf, Pair };
  K kind = K::Nil;
  std::string wire;             // Leaf
  std::vector<WireTree> kids;   // Pair

  static WireTree nil() { return {}; }
  static WireTree leaf(std::string w) {
    WireTree t;
    t.kind = K::Leaf;
    t.wire = std::move(w);
    return t;
  }
  static WireTree pair(WireTree l, WireTree r) {
    WireTree t;
    t.kind = K::Pair;
    t.kids = {std::move(l), std::move(r)};
    return t;
  }
  void flatten(std::vector<std::string>& out) const {
    if (kind == K::Leaf) out.push_back(wire);
    for (auto& k : kids) k.flatten(out);
  }
  std::string show() const {
    switch (kind) {
      case K::Nil: return "()";
      case K::Leaf: return wire;
      case K::Pair: return "(" + kids[0].show() + ", " + kids[1].show() + ")";
    }
    return "()";
  }
};

struct DiagBox {
  std::string gate;
  std::vector<std::string> inputs, outputs;
};

struct Diagram {
  std::vector<std::string> inputs;  // external wires, flattened in order
  std::vector<DiagBox> boxes;       // emission order is topological
  WireTree outputs;
};

namespace detail {

struct DiagramBuilder {
  const Signature& sig;
  Diagram diag;
  std::map<std::string, WireTree> env;
  std::set<std::string> used_names;
  std::set<std::string> consumed;
  int next_wire = 0;
  std::optional<Diag> error;

  std::string fresh_wire() {
    std::string w;
    do {
      w = "w" + std::to_string(next_wire++);
    } while (used_names.count(w));
    used_names.insert(w);
    return w;
  }

  [[noreturn]] void fail(std::string msg, Loc loc) { throw CheckError{Diag{"diagram", std::move(msg), loc, ""}}; }

  // Builds the wire bundle for a simple type, naming leaves after `base`.
  WireTree ports(const Type& s, const std::string& base) {
    switch (s->kind) {
      case TKind::Qubit: {
        used_names.insert(base);
        return WireTree::leaf(base);
      }
      case TKind::UnitAt: return WireTree::nil();
      case TKind::Tensor: return WireTree::pair(ports(s->a, base + ".1"), ports(s->b, base + ".2"));
      default: fail("not a wire type: " + print_type(s), {});
    }
  }

  WireTree ports_fresh(const Type& s) {
    switch (s->kind) {
      case TKind::Qubit: return WireTree::leaf(fresh_wire());
      case TKind::UnitAt: return WireTree::nil();
      case TKind::Tensor: {
        WireTree l = ports_fresh(s->a);  // names flow left to right
        WireTree r = ports_fresh(s->b);
        return WireTree::pair(std::move(l), std::move(r));
      }
      default: fail("not a wire type: " + print_type(s), {});
    }
  }

  WireTree lookup(const Term& v) {
    auto it = env.find(v->name);
    if (it == env.end()) fail("unknown wire '" + v->name + "'", v->loc);
    if (!consumed.insert(v->name).second)
      fail("wire '" + v->name + "' consumed twice", v->loc);
    return it->second;
  }

  // A gate application becomes a box; output wires are named by the match
  // binders when available and freshly otherwise.
  WireTree emit_box(const Term& app, const Pattern* hint) {
    const Term& g = app->a;
    const Type* gt = sig.find(g->name);
    if (!gt) fail("gate '" + g->name + "' is not in the signature", g->loc);
    WireTree in = value(app->b);
    WireTree out;
    if (hint && hint->kind == PatKind::Pair && (*gt)->b->kind == TKind::Tensor) {
      out = WireTree::pair(ports((*gt)->b->a, hint->x), ports((*gt)->b->b, hint->y));
    } else if (hint && hint->kind == PatKind::Unit) {
      out = WireTree::nil();
    } else {
      out = ports_fresh((*gt)->b);
    }
    DiagBox box;
    box.gate = g->name;
    in.flatten(box.inputs);
    out.flatten(box.outputs);
    diag.boxes.push_back(std::move(box));
    return out;
  }

  WireTree value(const Term& v) {
    switch (v->kind) {
      case Kind::Var: return lookup(v);
      case Kind::Unit: return WireTree::nil();
      case Kind::Pair: {
        WireTree l = value(v->a);
        WireTree r = value(v->b);
        return WireTree::pair(std::move(l), std::move(r));
      }
      case Kind::App:
        if (v->a->kind != Kind::Gate) fail("only gates can head applications", v->loc);
        return emit_box(v, nullptr);
      case Kind::Match: return match(v);
      default: fail("unexpected circuit form: " + print_term(v), v->loc);
    }
  }

  void bind(const std::string& x, WireTree w) {
    env[x] = std::move(w);
    used_names.insert(x);
  }

  WireTree match(const Term& m) {
    const Pattern& p = *m->pat;
    const Term& scrut = m->a;
    WireTree bundle;
    if (scrut->kind == Kind::App && scrut->a->kind == Kind::Gate) {
      bundle = emit_box(scrut, &p);
    } else {
      bundle = value(scrut);
    }
    if (p.kind == PatKind::Pair) {
      if (bundle.kind != WireTree::K::Pair) fail("pair pattern over a non-pair bundle", m->loc);
      bind(p.x, bundle.kids[0]);
      bind(p.y, bundle.kids[1]);
    }
    return value(p.body);
  }

  void run(const TypedNeutralContext& psi, const Type& ty, const Term& v) {
    for (auto& e : psi.entries) {
      WireTree w = ports(e.type, e.name);
      bind(e.name, w);
      w.flatten(diag.inputs);
    }
    Term cur = v;
    if (ty->kind == TKind::Arrow) {
      if (cur->kind == Kind::Lam) {
        WireTree w = ports(ty->a, cur->name);
        bind(cur->name, w);
        w.flatten(diag.inputs);
        cur = cur->a;
      } else if (cur->kind == Kind::Gate) {
        // A bare gate: synthesize its input ports.
        const Type* gt = sig.find(cur->name);
        if (!gt) fail("gate '" + cur->name + "' is not in the signature", cur->loc);
        WireTree in = ports((*gt)->a, "a");
        in.flatten(diag.inputs);
        Term arg = bundle_term(in);
        diag.outputs = emit_box(app_c(gate(cur->name), arg), nullptr);
        return;
      } else {
        fail("arrow-typed diagrams start with a circuit function", cur->loc);
      }
    }
    diag.outputs = value(cur);
  }

  static Term bundle_term(const WireTree& w) {
    switch (w.kind) {
      case WireTree::K::Nil: return unit_c();
      case WireTree::K::Leaf: return var_c(w.wire);
      case WireTree::K::Pair: return pair_c(bundle_term(w.kids[0]), bundle_term(w.kids[1]));
    }
    return unit_c();
  }
};

}  // namespace detail

// Reads the box-and-wire diagram off a conforming circuit normal form. The
// type must be a simple type or a circuit function type.
inline std::variant<Diagram, Diag> extract_diagram(const Signature& sig,
                                                   const TypedNeutralContext& psi, const Type& ty,
                                                   const Term& v) {
  if (mode_of(ty) != Mode::Q)
    return Diag{"diagram", "not a circuit type: " + print_type(ty), v->loc, ""};
  detail::DiagramBuilder b{sig, {}, {}, {}, {}, 0, std::nullopt};
  try {
    b.run(psi, ty, v);
    return std::move(b.diag);
  } catch (const detail::CheckError& e) {
    return e.diag;
  }
}

// Each wire must be produced exactly once and consumed at most once.
inline std::optional<std::string> diagram_linearity_violation(const Diagram& d) {
  std::map<std::string, int> produced, consumed;
  for (auto& w : d.inputs) produced[w]++;
  for (auto& b : d.boxes) {
    for (auto& w : b.outputs) produced[w]++;
    for (auto& w : b.inputs) consumed[w]++;
  }
  std::vector<std::string> outs;
  d.outputs.flatten(outs);
  for (auto& w : outs) consumed[w]++;
  for (auto& [w, n] : produced)
    if (n != 1) return "wire '" + w + "' produced " + std::to_string(n) + " times";
  for (auto& [w, n] : consumed) {
    if (n > 1) return "wire '" + w + "' consumed " + std::to_string(n) + " times";
    if (!produced.count(w)) return "wire '" + w + "' consumed but never produced";
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Renderers
// ---------------------------------------------------------------------------

// Fixed-width drawing: one row per wire track, boxes left-aligned in columns
// by topological depth.
inline std::string render_ascii(const Diagram& d) {
  if (d.boxes.empty() && d.inputs.empty()) {
    return "(empty circuit)\noutputs: " + d.outputs.show() + "\n";
  }

  std::map<std::string, int> depth_of_wire;  // producer depth
  for (auto& w : d.inputs) depth_of_wire[w] = 0;
  std::vector<int> box_depth(d.boxes.size(), 1);
  int max_depth = 0;
  for (size_t i = 0; i < d.boxes.size(); ++i) {
    int dep = 0;
    for (auto& w : d.boxes[i].inputs) dep = std::max(dep, depth_of_wire.count(w) ? depth_of_wire[w] : 0);
    box_depth[i] = dep + 1;
    max_depth = std::max(max_depth, dep + 1);
    for (auto& w : d.boxes[i].outputs) depth_of_wire[w] = dep + 1;
  }

  // Track assignment: inputs first, box outputs inherit their input tracks.
  std::map<std::string, int> track_of;
  int tracks = 0;
  for (auto& w : d.inputs) track_of[w] = tracks++;
  for (size_t i = 0; i < d.boxes.size(); ++i) {
    auto& b = d.boxes[i];
    for (size_t j = 0; j < b.outputs.size(); ++j) {
      if (j < b.inputs.size() && track_of.count(b.inputs[j]))
        track_of[b.outputs[j]] = track_of[b.inputs[j]];
      else
        track_of[b.outputs[j]] = tracks++;
    }
  }

  // Column widths per depth.
  std::vector<size_t> width(static_cast<size_t>(max_depth) + 1, 0);
  for (size_t i = 0; i < d.boxes.size(); ++i)
    width[static_cast<size_t>(box_depth[i])] =
        std::max(width[static_cast<size_t>(box_depth[i])], d.boxes[i].gate.size() + 2);

  size_t name_w = 0;
  for (auto& w : d.inputs) name_w = std::max(name_w, w.size());

  std::vector<std::string> final_wire(static_cast<size_t>(tracks));
  for (auto& [w, t] : track_of) {
    bool consumed = false;
    for (auto& b : d.boxes)
      for (auto& in : b.inputs)
        if (in == w) consumed = true;
    if (!consumed) final_wire[static_cast<size_t>(t)] = w;
  }

  std::ostringstream os;
  for (int t = 0; t < tracks; ++t) {
    std::string name = static_cast<size_t>(t) < d.inputs.size() ? d.inputs[static_cast<size_t>(t)] : "";
    os << name << std::string(name_w - name.size(), ' ') << ' ';
    for (int dep = 1; dep <= max_depth; ++dep) {
      std::string cell;
      for (size_t i = 0; i < d.boxes.size(); ++i) {
        if (box_depth[i] != dep) continue;
        bool covers = false;
        for (auto& in : d.boxes[i].inputs)
          if (track_of.count(in) && track_of[in] == t) covers = true;
        for (auto& out : d.boxes[i].outputs)
          if (track_of[out] == t) covers = true;
        if (covers) {
          cell = "[" + d.boxes[i].gate + "]";
          break;
        }
      }
      os << "--" << cell << std::string(width[static_cast<size_t>(dep)] - cell.size(), '-');
    }
    os << "--";
    if (!final_wire[static_cast<size_t>(t)].empty()) os << " " << final_wire[static_cast<size_t>(t)];
    os << "\n";
  }
  os << "outputs: " << d.outputs.show() << "\n";
  return os.str();
}

// DOT output, bit-stable: boxes in emission order, inputs and outputs as
// plaintext pseudo-nodes, edges labelled with wire names.
inline std::string render_dot(const Diagram& d) {
  std::ostringstream os;
  os << "digraph circuit {\n";
  os << "  rankdir=LR;\n";
  os << "  node [shape=box];\n";
  std::map<std::string, std::string> producer;
  for (size_t i = 0; i < d.inputs.size(); ++i) {
    std::string id = "in" + std::to_string(i);
    os << "  " << id << " [shape=plaintext, label=\"" << d.inputs[i] << "\"];\n";
    producer[d.inputs[i]] = id;
  }
  for (size_t i = 0; i < d.boxes.size(); ++i) {
    std::string id = "b" + std::to_string(i);
    os << "  " << id << " [label=\"" << d.boxes[i].gate << "\"];\n";
  }
  for (size_t i = 0; i < d.boxes.size(); ++i) {
    std::string id = "b" + std::to_string(i);
    for (auto& in : d.boxes[i].inputs) {
      auto it = producer.find(in);
      if (it != producer.end())
        os << "  " << it->second << " -> " << id << " [label=\"" << in << "\"];\n";
    }
    for (auto& out : d.boxes[i].outputs) producer[out] = id;
  }
  std::vector<std::string> outs;
  d.outputs.flatten(outs);
  for (size_t i = 0; i < outs.size(); ++i) {
    std::string id = "out" + std::to_string(i);
    os << "  " << id << " [shape=plaintext, label=\"" << outs[i] << "\"];\n";
    auto it = producer.find(outs[i]);
    if (it != producer.end())
      os << "  " << it->second << " -> " << id << " [label=\"" << outs[i] << "\"];\n";
  }
  os << "}\n";
  return os.str();
}

}  // namespace pqa
