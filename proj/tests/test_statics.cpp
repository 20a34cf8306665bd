#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "test_util.hpp"

using namespace pqa;
using pqa::test::sig;

namespace {
std::string err_code(const CheckResult& r) { return r.ok ? "" : r.error->code; }
}  // namespace

TEST_CASE("unit synthesizes at mode l") {
  CheckResult r = check_pqa(sig(), {}, must_parse("()"));
  REQUIRE(r.ok);
  CHECK(type_eq(r.type, must_parse_type("unit@l")));
  CHECK(r.consumed.empty());
}

TEST_CASE("variables consume their linear binding") {
  TypingContext ctx;
  ctx.add("x", must_parse_type("Up qubit"));
  CheckResult r = check_pqa(sig(), ctx, must_parse("x"));
  REQUIRE(r.ok);
  CHECK(r.consumed == std::set<std::string>{"x"});
}

TEST_CASE("linear variable used twice") {
  CheckResult r = check_pqa(sig(), {}, must_parse("fn (x : Up qubit) => (x, x)"));
  REQUIRE_FALSE(r.ok);
  CHECK(err_code(r) == "linear-reuse");
}

TEST_CASE("linear variable never used") {
  CheckResult r = check_pqa(sig(), {}, must_parse("fn (x : Up qubit) => ()"));
  REQUIRE_FALSE(r.ok);
  CHECK(err_code(r) == "linear-unused");

  TypingContext ctx;
  ctx.add("x", must_parse_type("Up qubit"));
  CheckResult top = check_pqa(sig(), ctx, must_parse("()"));
  REQUIRE_FALSE(top.ok);
  CHECK(err_code(top) == "linear-unused");
}

TEST_CASE("suspension enforces independence") {
  TypingContext ctx;
  ctx.add("y", must_parse_type("Up qubit"));
  CheckResult r = check_pqa(sig(), ctx, must_parse("susp y"));
  REQUIRE_FALSE(r.ok);
  CHECK(err_code(r) == "independence");

  // a closed suspension is fine
  CheckResult ok = check_pqa(sig(), {}, must_parse("susp ()"));
  REQUIRE(ok.ok);
  CHECK(type_eq(ok.type, must_parse_type("Up unit@l")));
}

TEST_CASE("unused unrestricted variables are fine") {
  TypingContext ctx;
  ctx.add("u", must_parse_type("Up unit@l"));
  CheckResult r = check_pqa(sig(), ctx, must_parse("()"));
  CHECK(r.ok);
}

TEST_CASE("gates") {
  CheckResult r = check_pqa(sig(), {}, must_parse_circ("#H"));
  REQUIRE(r.ok);
  CHECK(type_eq(r.type, must_parse_type("qubit -o qubit @q")));

  CheckResult bad = check_pqa(sig(), {}, must_parse_circ("#BOGUS"));
  REQUIRE_FALSE(bad.ok);
  CHECK(err_code(bad) == "unknown-gate");
}

TEST_CASE("quantum variables are restricted to simple types") {
  CheckResult r = check_pqa(sig(), {}, must_parse_circ("lam (f : qubit -o qubit @q) => f"));
  REQUIRE_FALSE(r.ok);
  CHECK(err_code(r) == "nonsimple-quantum");
}

TEST_CASE("binder annotations are required") {
  CheckResult r = check_pqa(sig(), {}, must_parse("fn x => x"));
  REQUIRE_FALSE(r.ok);
  CHECK(err_code(r) == "annotation-required");
}

TEST_CASE("application shape errors") {
  CheckResult r = check_pqa(sig(), {}, must_parse("() ()"));
  REQUIRE_FALSE(r.ok);
  CHECK(err_code(r) == "type-mismatch");
}

TEST_CASE("match on a circuit pair types the oplax body") {
  // pattern (a, b) => (circ{a}, circ{b}) against qubit * qubit @q
  Pattern p = pat_pair(PatFamily::QF, "a", "b",
                       pair_f(susp_circ(var_c("a")), susp_circ(var_c("b"))));
  CheckResult r = check_pattern_pqa(sig(), {}, p, must_parse_type("qubit * qubit @q"));
  REQUIRE(r.ok);
  CHECK(type_eq(r.type, must_parse_type("Up qubit * Up qubit @l")));
}

TEST_CASE("down pattern eliminates into the linear layer") {
  Type down_a = must_parse_type("Down Up unit@l");
  // down x => down x is fine: the body sits at mode l
  Pattern ok = pat_down("x", down_intro(var_f("x")));
  CheckResult r1 = check_pattern_pqa(sig(), {}, ok, down_a);
  REQUIRE(r1.ok);
  CHECK(type_eq(r1.type, down_a));

  // down x => x would put the result at mode u, above the scrutinee's mode
  Pattern bad = pat_down("x", var_f("x"));
  CheckResult r2 = check_pattern_pqa(sig(), {}, bad, down_a);
  REQUIRE_FALSE(r2.ok);
  CHECK(err_code(r2) == "independence");
}

TEST_CASE("unit pattern at an unrestricted result respects independence") {
  TypingContext ctx;
  ctx.add("y", must_parse_type("Up qubit"));
  // body mentions the linear y while the result would live at mode u
  Pattern p = pat_unit(PatFamily::FF, susp_term(var_f("y")));
  CheckResult r = check_pattern_pqa(sig(), ctx, p, must_parse_type("unit@u"));
  REQUIRE_FALSE(r.ok);
  CHECK(err_code(r) == "independence");
}

TEST_CASE("unit pattern cannot raise the mode") {
  // eliminating unit@l into a mode-u body is ruled out even with nothing consumed
  Pattern p = pat_unit(PatFamily::FF, susp_term(unit_f()));
  CheckResult r = check_pattern_pqa(sig(), {}, p, must_parse_type("unit@l"));
  REQUIRE_FALSE(r.ok);
  CHECK(err_code(r) == "independence");

  CheckResult ok = check_pattern_pqa(sig(), {}, p, must_parse_type("unit@u"));
  CHECK(ok.ok);
}

TEST_CASE("pqx erases the substructural discipline") {
  // contraction
  CheckResult dup = check_pqx(sig(), {}, must_parse("fn (x : Up qubit) => (x, x)"));
  REQUIRE(dup.ok);
  CHECK(type_eq(dup.type, must_parse_type("Up qubit -o Up qubit * Up qubit @l @l")));

  // weakening
  CheckResult weak = check_pqx(sig(), {}, must_parse("fn (x : Up qubit) => ()"));
  REQUIRE(weak.ok);

  // independence erased: a suspension may close over a linear variable
  TypingContext ctx;
  ctx.add("y", must_parse_type("Up qubit"));
  CHECK(check_pqx(sig(), ctx, must_parse("susp y")).ok);

  // structural errors remain
  CHECK(err_code(check_pqx(sig(), {}, must_parse_circ("#BOGUS"))) == "unknown-gate");
  CHECK(err_code(check_pqx(sig(), {}, must_parse("z"))) == "unbound-variable");
  CHECK(err_code(check_pqx(sig(), {}, must_parse_circ("lam (f : qubit -o qubit @q) => f"))) ==
        "nonsimple-quantum");
}

TEST_CASE("gate rule in pqx") {
  CheckResult r = check_pqx(sig(), {}, must_parse_circ("#H"));
  REQUIRE(r.ok);
  CHECK(type_eq(r.type, must_parse_type("qubit -o qubit @q")));
}

TEST_CASE("checking is deterministic") {
  Term t = must_parse("fn (p : Up qubit * Up qubit @l) => match p with { (a, b) => (b, a) }");
  CheckResult r1 = check_pqa(sig(), {}, t);
  CheckResult r2 = check_pqa(sig(), {}, t);
  REQUIRE(r1.ok);
  REQUIRE(r2.ok);
  CHECK(type_eq(r1.type, r2.type));
  CHECK(r1.consumed == r2.consumed);
}

TEST_CASE("independence holds on every acceptance") {
  pqa::test::TermStream stream(29);
  int done = 0;
  for (int i = 0; i < 80; ++i) {
    auto inst = stream.next();
    if (!inst) continue;
    CheckResult r = check_pqa(sig(), inst->ctx, inst->term);
    REQUIRE(r.ok);
    CHECK(geq_mode(inst->ctx, mode_of(r.type)));
    ++done;
  }
  CHECK(done > 40);
}

TEST_CASE("every pqa acceptance is a pqx acceptance at the same type") {
  pqa::test::TermStream stream(31);
  int done = 0;
  for (int i = 0; i < 80; ++i) {
    auto inst = stream.next();
    if (!inst) continue;
    CheckResult ra = check_pqa(sig(), inst->ctx, inst->term);
    REQUIRE(ra.ok);
    CheckResult rx = check_pqx(sig(), inst->ctx, inst->term);
    REQUIRE(rx.ok);
    CHECK(type_eq(ra.type, rx.type));
    ++done;
  }
  CHECK(done > 40);
}

TEST_CASE("duplicate context names are rejected") {
  TypingContext ctx;
  ctx.add("x", must_parse_type("unit@l")).add("x", must_parse_type("unit@l"));
  CheckResult r = check_pqa(sig(), ctx, must_parse("x"));
  REQUIRE_FALSE(r.ok);
  CHECK(err_code(r) == "duplicate-binding");
}
