#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "test_util.hpp"

using namespace pqa;
using pqa::test::sig;

TEST_CASE("type encoding clauses") {
  CHECK(type_eq(enc_type(pq_i()), must_parse_type("Up unit@q")));
  CHECK(type_eq(enc_type(pq_q()), must_parse_type("Up qubit")));
  CHECK(type_eq(enc_type(pq_tensor(pq_q(), pq_q())),
                must_parse_type("Up qubit * Up qubit @l")));
  CHECK(type_eq(enc_type(pq_lolli(pq_q(), pq_q())),
                must_parse_type("Up qubit -o Up qubit @l")));
  CHECK(type_eq(enc_type(pq_circ(pq_q(), pq_q())),
                must_parse_type("Up (qubit -o qubit @q)")));
  CHECK(type_eq(enc_type(pq_bang(pq_i())), must_parse_type("Down Up Up unit@q")));
}

TEST_CASE("the encoding lands at mode l") {
  detail::Generator gen(sig(), 3);
  std::vector<PQType> pool = {pq_i(), pq_q(), pq_tensor(pq_q(), pq_i()),
                              pq_lolli(pq_q(), pq_q()), pq_circ(pq_q(), pq_q()),
                              pq_bang(pq_q()), pq_tensor(pq_tensor(pq_q(), pq_q()), pq_q())};
  for (auto& a : pool) {
    Type t = enc_type(a);
    CHECK(mode_of(t) == Mode::L);
    CHECK_FALSE(type_violation(t).has_value());
  }
}

TEST_CASE("lax and oplax have their displayed types") {
  CheckResult lax = check_pqa(sig(), {}, mk_lax(pq_q(), pq_q()));
  REQUIRE(lax.ok);
  CHECK(type_eq(lax.type,
                must_parse_type("Up qubit * Up qubit @l -o Up (qubit * qubit @q) @l")));

  CheckResult oplax = check_pqa(sig(), {}, mk_oplax(pq_q(), pq_q()));
  REQUIRE(oplax.ok);
  CHECK(type_eq(oplax.type,
                must_parse_type("Up (qubit * qubit @q) -o Up qubit * Up qubit @l @l")));
}

TEST_CASE("oplax pattern matches on a circuit from the functional layer") {
  Term oplax = mk_oplax(pq_q(), pq_q());
  // body shape: fn x => match circval force{x} with { (a, b) => (circ{a}, circ{b}) }
  REQUIRE(oplax->kind == Kind::Lam);
  const Term& body = oplax->a;
  REQUIRE(body->kind == Kind::Match);
  CHECK(body->pat->family == PatFamily::QF);
  CHECK(body->a->kind == Kind::Force);
  CHECK(body->a->color == Color::Circuit);
}

TEST_CASE("n-ary lax and oplax assemble over the tensor tree") {
  PQType s3 = pq_tensor(pq_q(), pq_tensor(pq_q(), pq_q()));
  CheckResult lax = check_pqa(sig(), {}, mk_lax_simple(s3));
  REQUIRE(lax.ok);
  CHECK(type_eq(lax.type, t_arrow(enc_type(s3), t_up(simple_type(s3)), Mode::L)));

  CheckResult oplax = check_pqa(sig(), {}, mk_oplax_simple(s3));
  REQUIRE(oplax.ok);
  CHECK(type_eq(oplax.type, t_arrow(t_up(simple_type(s3)), enc_type(s3), Mode::L)));
}

TEST_CASE("identity lax normalizes away") {
  Term applied = app_f(mk_lax_simple(pq_i()), susp_circ(unit_c()));
  StepTrace tr = normalize({}, applied, 1000);
  REQUIRE(tr.terminal == Terminal::Normal);
  CHECK(alpha_eq(tr.final_term, must_parse("circ { () }")));
}

TEST_CASE("BOX, box and apply have their displayed types") {
  CheckResult box_f = check_pqa(sig(), {}, mk_BOX(pq_q(), pq_q()));
  REQUIRE(box_f.ok);
  CHECK(type_eq(box_f.type,
                must_parse_type("(Up qubit -o Up qubit @l) -o Up (qubit -o qubit @q) @l")));

  CheckResult box_l = check_pqa(sig(), {}, mk_box(pq_q(), pq_q()));
  REQUIRE(box_l.ok);
  CHECK(type_eq(
      box_l.type,
      must_parse_type("Down Up (Up qubit -o Up qubit @l) -o Up (qubit -o qubit @q) @l")));

  CheckResult ap = check_pqa(sig(), {}, mk_apply(pq_q(), pq_q()));
  REQUIRE(ap.ok);
  CHECK(type_eq(ap.type,
                must_parse_type("Up (qubit -o qubit @q) -o Up qubit -o Up qubit @l @l")));
}

TEST_CASE("apply appends a boxed gate to a wire") {
  // apply (circ{#H}) (circ{x}) under one free wire
  Term applied = app_f(app_f(mk_apply(pq_q(), pq_q()), susp_circ(gate("H"))),
                       susp_circ(var_c("x")));
  NeutralContext pi{"x"};
  StepTrace tr = normalize(pi, applied, 1000);
  REQUIRE(tr.terminal == Terminal::Normal);
  REQUIRE(tr.final_term->kind == Kind::SuspCirc);
  // the suspension denotes #H x: forcing it exposes the gate application
  StepTrace forced = normalize(pi, force_c(tr.final_term), 1000);
  REQUIRE(forced.terminal == Terminal::Normal);
  CHECK(alpha_eq(forced.final_term, must_parse_circ("#H x")));
}

TEST_CASE("BOX of the identity is the eta-expanded identity circuit") {
  Term id = lam_f("w", enc_type(pq_q()), var_f("w"));
  Term boxed = app_f(mk_BOX(pq_q(), pq_q()), id);
  CheckResult r = check_pqa(sig(), {}, boxed);
  REQUIRE(r.ok);
  CHECK(type_eq(r.type, must_parse_type("Up (qubit -o qubit @q)")));

  StepTrace tr = normalize({}, force_c(boxed), 1000);
  REQUIRE(tr.terminal == Terminal::Normal);
  CHECK(alpha_eq(tr.final_term, must_parse_circ("lam s => s")));
}

TEST_CASE("box strips the duplicability shifts") {
  Term id = lam_f("w", enc_type(pq_q()), var_f("w"));
  Term arg = down_intro(susp_term(id));
  Term boxed = app_f(mk_box(pq_q(), pq_q()), arg);
  CheckResult r = check_pqa(sig(), {}, boxed);
  REQUIRE(r.ok);
  StepTrace tr = normalize({}, force_c(boxed), 2000);
  REQUIRE(tr.terminal == Terminal::Normal);
  CHECK(alpha_eq(tr.final_term, must_parse_circ("lam s => s")));
}

TEST_CASE("stdlib signature") {
  auto r = load_stdlib(stdlib_signature_text());
  REQUIRE(std::holds_alternative<Signature>(r));
  const Signature& s = std::get<Signature>(r);
  for (const char* g : {"H", "Z", "X", "Y", "S", "T", "CNOT"}) CHECK(s.find(g) != nullptr);
  CHECK(type_eq(*s.find("H"), must_parse_type("qubit -o qubit @q")));
  CHECK(type_eq(*s.find("CNOT"),
                must_parse_type("qubit * qubit @q -o qubit * qubit @q @q")));
}

TEST_CASE("signature rejects non-simple gates and duplicates") {
  auto bad = parse_signature("gate BAD : (qubit -o qubit) -o qubit\n");
  REQUIRE(std::holds_alternative<Diag>(bad));

  auto dup = parse_signature("gate H : qubit -o qubit\ngate H : qubit -o qubit\n");
  REQUIRE(std::holds_alternative<Diag>(dup));
  CHECK(std::get<Diag>(dup).message.find("duplicate") != std::string::npos);

  auto malformed = parse_signature("gate X qubit\n");
  CHECK(std::holds_alternative<Diag>(malformed));
}
