#pragma once

#include <memory>
#include <string>
#include <variant>

#include "pqa/parse.hpp"
#include "pqa/syntax.hpp"

namespace pqa {

// ---------------------------------------------------------------------------
// Host-language types for the reconstructed surface abstractions
// ---------------------------------------------------------------------------

enum class PQKind : uint8_t { I, Q, Tensor, Lolli, Circ, Bang };

struct PQTypeNode;
using PQType = std::shared_ptr<const PQTypeNode>;

struct PQTypeNode {
  PQKind kind;
  PQType a, b;
};

inline PQType pq_i() { return std::make_shared<PQTypeNode>(PQTypeNode{PQKind::I, nullptr, nullptr}); }
inline PQType pq_q() { return std::make_shared<PQTypeNode>(PQTypeNode{PQKind::Q, nullptr, nullptr}); }
inline PQType pq_tensor(PQType l, PQType r) {
  return std::make_shared<PQTypeNode>(PQTypeNode{PQKind::Tensor, std::move(l), std::move(r)});
}
inline PQType pq_lolli(PQType l, PQType r) {
  return std::make_shared<PQTypeNode>(PQTypeNode{PQKind::Lolli, std::move(l), std::move(r)});
}
inline PQType pq_circ(PQType s, PQType u) {
  return std::make_shared<PQTypeNode>(PQTypeNode{PQKind::Circ, std::move(s), std::move(u)});
}
inline PQType pq_bang(PQType a) {
  return std::make_shared<PQTypeNode>(PQTypeNode{PQKind::Bang, std::move(a), nullptr});
}

inline bool pq_is_simple(const PQType& t) {
  switch (t->kind) {
    case PQKind::I:
    case PQKind::Q: return true;
    case PQKind::Tensor: return pq_is_simple(t->a) && pq_is_simple(t->b);
    default: return false;
  }
}

// The circuit-layer image of a simple type.
inline Type simple_type(const PQType& s) {
  switch (s->kind) {
    case PQKind::I: return t_unit(Mode::Q);
    case PQKind::Q: return t_qubit();
    case PQKind::Tensor: return t_tensor(simple_type(s->a), simple_type(s->b), Mode::Q);
    default: return nullptr;
  }
}

// Type encoding: wires become suspensions, shifts distribute over tensors,
// boxed circuits embed the circuit function space directly, and the bang
// decomposes into a downshift after an upshift.
inline Type enc_type(const PQType& a) {
  switch (a->kind) {
    case PQKind::I: return t_up(t_unit(Mode::Q));
    case PQKind::Q: return t_up(t_qubit());
    case PQKind::Tensor: return t_tensor(enc_type(a->a), enc_type(a->b), Mode::L);
    case PQKind::Lolli: return t_arrow(enc_type(a->a), enc_type(a->b), Mode::L);
    case PQKind::Circ: return t_up(t_arrow(simple_type(a->a), simple_type(a->b), Mode::Q));
    case PQKind::Bang: return t_down(t_up(enc_type(a->a)));
  }
  return nullptr;
}

// ---------------------------------------------------------------------------
// Combinators
// ---------------------------------------------------------------------------

// lax: undistributes a pair of suspended wires into a suspended pair.
//   lax_{S,U} : (Up S * Up U @l) -o Up (S * U @q) @l
inline Term mk_lax(const PQType& s, const PQType& u) {
  Type dom = t_tensor(t_up(simple_type(s)), t_up(simple_type(u)), Mode::L);
  Term body = susp_circ(pair_c(force_c(var_f("a")), force_c(var_f("b"))));
  return lam_f("x", dom, match_term(var_f("x"), pat_pair(PatFamily::FF, "a", "b", body)));
}

// oplax: distributes a suspended pair of wires into a pair of suspensions.
//   oplax_{S,U} : Up (S * U @q) -o (Up S * Up U @l) @l
inline Term mk_oplax(const PQType& s, const PQType& u) {
  Type dom = t_up(t_tensor(simple_type(s), simple_type(u), Mode::Q));
  Term body = pair_f(susp_circ(var_c("a")), susp_circ(var_c("b")));
  return lam_f("x", dom,
               match_term(force_c(var_f("x")), pat_pair(PatFamily::QF, "a", "b", body)));
}

// n-ary variants assembled over the tensor tree, right-nested.
//   lax_S : enc S -o Up S @l        oplax_S : Up S -o enc S @l
inline Term mk_lax_simple(const PQType& s) {
  if (s->kind == PQKind::Tensor) {
    Term inner = app_f(mk_lax(s->a, s->b),
                       pair_f(app_f(mk_lax_simple(s->a), var_f("a")),
                              app_f(mk_lax_simple(s->b), var_f("b"))));
    return lam_f("x", enc_type(s), match_term(var_f("x"), pat_pair(PatFamily::FF, "a", "b", inner)));
  }
  return lam_f("x", enc_type(s), var_f("x"));
}

inline Term mk_oplax_simple(const PQType& s) {
  if (s->kind == PQKind::Tensor) {
    Term split = app_f(mk_oplax(s->a, s->b), var_f("x"));
    Term body = pair_f(app_f(mk_oplax_simple(s->a), var_f("a")),
                       app_f(mk_oplax_simple(s->b), var_f("b")));
    return lam_f("x", t_up(simple_type(s)),
                 match_term(split, pat_pair(PatFamily::FF, "a", "b", body)));
  }
  return lam_f("x", t_up(simple_type(s)), var_f("x"));
}

// BOX: boxes a linear function on encoded wires as a suspended circuit.
//   BOX_{S,U} : (enc S -o enc U @l) -o Up (S -o U @q) @l
inline Term mk_BOX(const PQType& s, const PQType& u) {
  Type dom = t_arrow(enc_type(s), enc_type(u), Mode::L);
  Term inner = app_f(mk_lax_simple(u),
                     app_f(var_f("f"), app_f(mk_oplax_simple(s), susp_circ(var_c("w")))));
  Term circuit = lam_c("w", simple_type(s), force_c(inner));
  return lam_f("f", dom, susp_circ(circuit));
}

// box: strips the duplicability shifts before boxing.
//   box_{S,U} : Down Up (enc S -o enc U @l) -o Up (S -o U @q) @l
inline Term mk_box(const PQType& s, const PQType& u) {
  Type dom = t_down(t_up(t_arrow(enc_type(s), enc_type(u), Mode::L)));
  Term body = match_term(var_f("x"), pat_down("f", app_f(mk_BOX(s, u), force_f(var_f("f")))));
  return lam_f("x", dom, body);
}

// apply: appends a boxed circuit to encoded wires.
//   apply_{S,U} : Up (S -o U @q) -o (enc S -o enc U @l) @l
inline Term mk_apply(const PQType& s, const PQType& u) {
  Type fdom = t_up(t_arrow(simple_type(s), simple_type(u), Mode::Q));
  Term appended = susp_circ(
      app_c(force_c(var_f("f")), force_c(app_f(mk_lax_simple(s), var_f("w")))));
  Term inner = lam_f("w", enc_type(s), app_f(mk_oplax_simple(u), appended));
  return lam_f("f", fdom, inner);
}

// ---------------------------------------------------------------------------
// Gate library
// ---------------------------------------------------------------------------

inline const char* stdlib_signature_text() {
  return "-- standard gate library\n"
         "gate H : qubit -o qubit\n"
         "gate Z : qubit -o qubit\n"
         "gate X : qubit -o qubit\n"
         "gate Y : qubit -o qubit\n"
         "gate S : qubit -o qubit\n"
         "gate T : qubit -o qubit\n"
         "gate CNOT : qubit * qubit -o qubit * qubit\n";
}

inline std::variant<Signature, Diag> load_stdlib(std::string_view text, const std::string& file = "") {
  return parse_signature(text, file);
}

inline const Signature& stdlib_signature() {
  static Signature sig = std::get<Signature>(parse_signature(stdlib_signature_text(), "<stdlib>"));
  return sig;
}

}  // namespace pqa
