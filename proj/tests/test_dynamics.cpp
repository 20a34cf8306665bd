#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "test_util.hpp"

using namespace pqa;
using pqa::test::sig;

TEST_CASE("classification basics") {
  CHECK(classify({}, must_parse("()")) == FormClass::Canonical);
  CHECK(classify({}, must_parse_circ("#H")) == FormClass::Neutral);
  CHECK(classify({"x"}, must_parse_circ("x")) == FormClass::Neutral);
  CHECK(classify({}, must_parse("fn x => x")) == FormClass::Canonical);
  CHECK(classify({}, must_parse("circ { lam x => #H x }")) == FormClass::Canonical);
  CHECK(classify({}, must_parse("force (susp ())")) == FormClass::Reducible);
  // a gate applied to a canonical pair of wires is neutral
  CHECK(classify({"x", "y"}, must_parse_circ("#CNOT (x, y)")) == FormClass::Neutral);
}

TEST_CASE("the three-wire normal circuit classifies as a neutral match") {
  Term w = must_parse_circ("match #CNOT (x1, x2) with { (y1, y2) => (y1, #CNOT (y2, #H x3)) }");
  CHECK(classify({"x1", "x2", "x3"}, w) == FormClass::NormalMatch);
  // without its wires in scope it is not even normal
  CHECK(classify({}, w) == FormClass::Reducible);
}

TEST_CASE("circuit lambdas are canonical only when their body is normal") {
  CHECK(classify({}, must_parse_circ("lam x => x")) == FormClass::Canonical);
  CHECK(classify({}, must_parse_circ("lam x => (lam y => y) x")) == FormClass::Reducible);
}

TEST_CASE("canonical elimination") {
  NameSupply supply;
  auto r1 = eliminate_canonical(must_parse("()"), pat_unit(PatFamily::FF, must_parse("down ()")));
  REQUIRE(r1.has_value());
  CHECK(alpha_eq(*r1, must_parse("down ()")));

  auto r2 = eliminate_canonical(must_parse("(susp (), susp ((), ()))"),
                                pat_pair(PatFamily::FF, "x", "y", must_parse("(y, x)")));
  REQUIRE(r2.has_value());
  CHECK(alpha_eq(*r2, must_parse("(susp ((), ()), susp ())")));

  // down (fn z => z) eliminated by down f => force (susp f)
  auto r3 = eliminate_canonical(must_parse("down (fn z => z)"),
                                pat_down("f", must_parse("force (susp f)")));
  REQUIRE(r3.has_value());
  CHECK(alpha_eq(*r3, must_parse("force (susp (fn z => z))")));

  // shape mismatch
  CHECK_FALSE(eliminate_canonical(must_parse("()"),
                                  pat_pair(PatFamily::FF, "x", "y", must_parse("x")))
                  .has_value());
}

TEST_CASE("simultaneous pair elimination does not confuse components") {
  // [V1/x][V2/y](x, y) where V1 mentions the name y freely
  auto r = eliminate_canonical(pair_c(var_c("y"), gate("H")),
                               pat_pair(PatFamily::QQ, "x", "y", must_parse_circ("(x, y)")));
  REQUIRE(r.has_value());
  CHECK(alpha_eq(*r, must_parse_circ("(y, #H)")));
}

TEST_CASE("beta reduction") {
  auto s = step({}, must_parse("(fn (x : unit@l) => x) ()"));
  REQUIRE(s.has_value());
  CHECK(s->rule == "fstep/app/beta");
  CHECK(alpha_eq(s->term, must_parse("()")));
}

TEST_CASE("force of a suspension") {
  auto s = step({}, must_parse("force (susp ())"));
  REQUIRE(s.has_value());
  CHECK(s->rule == "fstep/force");
  CHECK(alpha_eq(s->term, must_parse("()")));
}

TEST_CASE("the two-swap circuit normalizes by a commuting conversion") {
  Term v = must_parse_circ("match #CNOT (x1, x2) with { (u, v) => (v, u) }");
  Term two = match_term(v, pat_pair(PatFamily::QQ, "y", "z", must_parse_circ("(z, y)")));
  NeutralContext pi{"x1", "x2"};

  auto first = step(pi, two);
  REQUIRE(first.has_value());
  CHECK(first->rule == "cstep/m/cc");

  StepTrace tr = normalize(pi, two, 100);
  REQUIRE(tr.terminal == Terminal::Normal);
  CHECK(alpha_eq(tr.final_term, must_parse_circ("match #CNOT (x1, x2) with { (u, v) => (u, v) }")));
  // the trace is the deterministic reduction sequence
  Term prev = two;
  NameSupply replay_supply = supply_for({two});
  for (auto& e : tr.steps) {
    auto s = step(pi, prev, replay_supply);
    REQUIRE(s.has_value());
    CHECK(alpha_eq(s->term, e.term));
    prev = e.term;
  }
}

TEST_CASE("normalize a composition of boxed gates") {
  Term comp = must_parse(
      "force { (fn (g : Up (qubit -o qubit @q)) => fn (f : Up (qubit -o qubit @q)) => "
      "circ { lam (x : qubit) => force { g } (force { f } x) }) (circ { #Z }) (circ { #H }) }");
  StepTrace tr = normalize({}, comp, 1000);
  REQUIRE(tr.terminal == Terminal::Normal);
  CHECK(alpha_eq(tr.final_term, must_parse_circ("lam x => #Z (#H x)")));
}

TEST_CASE("normal inputs terminate immediately") {
  StepTrace tr = normalize({}, must_parse("()"), 1);
  CHECK(tr.terminal == Terminal::Normal);
  CHECK(tr.steps.empty());
}

TEST_CASE("fuel exhaustion is reported") {
  Term comp = must_parse(
      "force { (fn (g : Up (qubit -o qubit @q)) => fn (f : Up (qubit -o qubit @q)) => "
      "circ { lam (x : qubit) => force { g } (force { f } x) }) (circ { #Z }) (circ { #H }) }");
  StepTrace tr = normalize({}, comp, 2);
  CHECK(tr.terminal == Terminal::FuelExhausted);
  CHECK(tr.steps.size() == 2);
}

TEST_CASE("ill-typed stuck terms are reported distinctly") {
  // applying a unit
  StepTrace tr1 = normalize({}, must_parse("() ()"), 10);
  CHECK(tr1.terminal == Terminal::Stuck);
  REQUIRE(tr1.diag.has_value());

  // functional force of a suspended circuit
  StepTrace tr2 = normalize({}, must_parse("force (circ { #H })"), 10);
  CHECK(tr2.terminal == Terminal::Stuck);

  // free functional variables are a scope error
  StepTrace tr3 = normalize({}, must_parse("x"), 10);
  CHECK(tr3.terminal == Terminal::Stuck);
  REQUIRE(tr3.diag.has_value());
  CHECK(tr3.diag->code == "scope");
}

TEST_CASE("reduction under binders renames apart from the context") {
  // the inner binder shadows the outer one; reduction keeps them separate
  Term t = must_parse_circ("lam x => (lam x => x) x");
  StepTrace tr = normalize({}, t, 100);
  REQUIRE(tr.terminal == Terminal::Normal);
  CHECK(alpha_eq(tr.final_term, must_parse_circ("lam x => x")));
}

TEST_CASE("commuting conversions avoid capturing the pushed argument") {
  // applying (match ... with {(u,v) => body}) to an argument mentioning u
  Term m = must_parse_circ("match #CNOT (u, x2) with { (u, v) => lam w => (u, (v, w)) }");
  Term app = app_c(m, var_c("u"));
  NeutralContext pi{"u", "x2"};
  auto s = step(pi, app);
  REQUIRE(s.has_value());
  CHECK(s->rule == "cstep/app/cc/1");
  // the binder u must have been renamed: the argument u stays free
  auto fv = free_vars(s->term, Color::Circuit);
  CHECK(fv.count("u"));
  StepTrace tr = normalize(pi, app, 1000);
  CHECK(tr.terminal == Terminal::Normal);
}

TEST_CASE("gate applications commute into neutral matches") {
  Term m = must_parse_circ("match #CNOT (x1, x2) with { (u, v) => (u, v) }");
  Term app = app_c(gate("CNOT"), m);
  NeutralContext pi{"x1", "x2"};
  auto s = step(pi, app);
  REQUIRE(s.has_value());
  CHECK(s->rule == "cstep/app/cc/2");
  StepTrace tr = normalize(pi, app, 1000);
  REQUIRE(tr.terminal == Terminal::Normal);
  CHECK(alpha_eq(tr.final_term,
                 must_parse_circ("match #CNOT (x1, x2) with { (u, v) => #CNOT (u, v) }")));
}

TEST_CASE("force commutes into functional neutral matches") {
  // force of a match on a circuit scrutinee pushes inside and recolours
  Term m = match_term(app_c(gate("CNOT"), pair_c(var_c("x1"), var_c("x2"))),
                      pat_pair(PatFamily::QF, "a", "b", susp_circ(pair_c(var_c("a"), var_c("b")))));
  Term f = force_c(m);
  NeutralContext pi{"x1", "x2"};
  StepTrace tr = normalize(pi, f, 100);
  REQUIRE(tr.terminal == Terminal::Normal);
  CHECK(alpha_eq(tr.final_term,
                 must_parse_circ("match #CNOT (x1, x2) with { (a, b) => (a, b) }")));
}

TEST_CASE("finality and determinism on generated terms") {
  pqa::test::TermStream stream(41);
  int done = 0;
  for (int i = 0; i < 60; ++i) {
    auto inst = stream.next();
    if (!inst) continue;
    NeutralContext pi = inst->psi.cneu();
    StepTrace tr = normalize(pi, inst->term, kDefaultFuel);
    REQUIRE(tr.terminal == Terminal::Normal);
    CHECK(is_normal(pi, tr.final_term));
    CHECK(applicable_rules(pi, tr.final_term).empty());
    Term prev = inst->term;
    for (auto& e : tr.steps) {
      CHECK(applicable_rules(pi, prev).size() == 1);
      prev = e.term;
    }
    ++done;
  }
  CHECK(done > 30);
}

TEST_CASE("neutral substitution") {
  Term m = must_parse_circ("match #CNOT (x, x2) with { (u, v) => (u, v) }");
  NeutralContext pi{"x", "x2"};
  REQUIRE(classify(pi, m) == FormClass::NormalMatch);

  // identity
  auto same = apply_neutral_subst(pi, NeutralSubst{}, m);
  REQUIRE(std::holds_alternative<Term>(same));
  CHECK(alpha_eq(std::get<Term>(same), m));

  // x |-> #H y keeps the term a normal match
  NeutralContext target{"y", "x2"};
  NeutralSubst sigma;
  sigma.map.push_back({"x", app_c(gate("H"), var_c("y"))});
  auto mapped = apply_neutral_subst(target, sigma, m);
  REQUIRE(std::holds_alternative<Term>(mapped));
  CHECK(classify(target, std::get<Term>(mapped)) == FormClass::NormalMatch);

  // canonical images are rejected
  NeutralSubst bad;
  bad.map.push_back({"x", unit_c()});
  auto rejected = apply_neutral_subst(target, bad, m);
  REQUIRE(std::holds_alternative<Diag>(rejected));
  CHECK(std::get<Diag>(rejected).code == "non-neutral");
}

TEST_CASE("single steps commute with neutral substitution") {
  // a reducible functional match over a neutral scrutinee
  Term t = match_term(app_c(gate("CNOT"), pair_c(var_c("x1"), var_c("x2"))),
                      pat_pair(PatFamily::QF, "a", "b",
                               pair_f(force_f(susp_term(susp_circ(var_c("a")))),
                                      susp_circ(var_c("b")))));
  NeutralContext pi{"x1", "x2"};
  NeutralContext target{"z1", "x2"};
  NeutralSubst sigma;
  sigma.map.push_back({"x1", app_c(gate("Z"), var_c("z1"))});

  auto mapped = apply_neutral_subst(target, sigma, t);
  REQUIRE(std::holds_alternative<Term>(mapped));
  Term mt = std::get<Term>(mapped);
  CHECK(classify(pi, t) == classify(target, mt));

  auto s1 = step(pi, t);
  auto s2 = step(target, mt);
  REQUIRE(s1.has_value());
  REQUIRE(s2.has_value());
  auto pushed = apply_neutral_subst(target, sigma, s1->term);
  REQUIRE(std::holds_alternative<Term>(pushed));
  CHECK(alpha_eq(std::get<Term>(pushed), s2->term));
}

TEST_CASE("trace serialization format") {
  Term t = must_parse("force (susp ())");
  StepTrace tr = normalize({}, t, 10);
  REQUIRE(tr.steps.size() == 1);
  CHECK(tr.steps[0].rule == "fstep/force");
}
