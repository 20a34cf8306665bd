#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "test_util.hpp"

using namespace pqa;
using pqa::test::sig;

namespace {

TypedNeutralContext wires(std::initializer_list<std::string> names) {
  TypedNeutralContext psi;
  for (auto& n : names) psi.entries.push_back({n, t_qubit()});
  return psi;
}

Term w_circuit() {
  return must_parse_circ("match #CNOT (x1, x2) with { (y1, y2) => (y1, #CNOT (y2, #H x3)) }");
}

}  // namespace

TEST_CASE("grammar: neutral wires conform at qubit") {
  NormalFormReport r = check_normal_grammar(sig(), t_qubit(), wires({"x"}), must_parse_circ("x"));
  CHECK(r.conforms);
  CHECK(r.grammar_case == "qubit/neutral");
}

TEST_CASE("grammar: a normal match around a pair") {
  Term v = must_parse_circ("match #CNOT (x1, x2) with { (u, v) => (u, v) }");
  NormalFormReport r = check_normal_grammar(sig(), must_parse_type("qubit * qubit @q"),
                                            wires({"x1", "x2"}), v);
  CHECK(r.conforms);
}

TEST_CASE("grammar: unrestricted results demand an empty wire context") {
  NormalFormReport r =
      check_normal_grammar(sig(), must_parse_type("unit@u"), wires({"x"}), must_parse("()"));
  CHECK_FALSE(r.conforms);
  CHECK(r.witness.find("psi-nonempty") != std::string::npos);

  NormalFormReport ok = check_normal_grammar(sig(), must_parse_type("unit@u"), {}, must_parse("()"));
  CHECK(ok.conforms);
}

TEST_CASE("grammar: clause per type") {
  CHECK(check_normal_grammar(sig(), must_parse_type("unit@l"), {}, must_parse("()")).conforms);
  CHECK(check_normal_grammar(sig(), must_parse_type("Up qubit -o Up qubit @l"), {},
                             must_parse("fn (x : Up qubit) => x"))
            .conforms);
  CHECK(check_normal_grammar(sig(), must_parse_type("Up (qubit -o qubit @q)"), {},
                             must_parse("circ { #H }"))
            .conforms);
  CHECK(check_normal_grammar(sig(), must_parse_type("Down Up unit@l"), {},
                             must_parse("down (susp ())"))
            .conforms);
  // gates are the only bare neutrals at circuit function type
  CHECK(check_normal_grammar(sig(), must_parse_type("qubit -o qubit @q"), {},
                             must_parse_circ("#H"))
            .conforms);
  CHECK(check_normal_grammar(sig(), must_parse_type("qubit -o qubit @q"), {},
                             must_parse_circ("lam (x : qubit) => #H x"))
            .conforms);
  // a reducible term does not conform
  CHECK_FALSE(check_normal_grammar(sig(), must_parse_type("unit@l"), {},
                                   must_parse("force (susp ())"))
                  .conforms);
}

TEST_CASE("grammar: the full three-wire circuit") {
  Type s3 = must_parse_type("qubit * (qubit * qubit @q) @q");
  NormalFormReport r = check_normal_grammar(sig(), s3, wires({"x1", "x2", "x3"}), w_circuit());
  CHECK(r.conforms);
}

TEST_CASE("diagram of the three-wire circuit") {
  Type s3 = must_parse_type("qubit * (qubit * qubit @q) @q");
  auto d = extract_diagram(sig(), wires({"x1", "x2", "x3"}), s3, w_circuit());
  REQUIRE(std::holds_alternative<Diagram>(d));
  const Diagram& dg = std::get<Diagram>(d);

  REQUIRE(dg.boxes.size() == 3);
  CHECK(dg.boxes[0].gate == "CNOT");
  CHECK(dg.boxes[0].inputs == std::vector<std::string>{"x1", "x2"});
  CHECK(dg.boxes[0].outputs == std::vector<std::string>{"y1", "y2"});
  CHECK(dg.boxes[1].gate == "H");
  CHECK(dg.boxes[1].inputs == std::vector<std::string>{"x3"});
  REQUIRE(dg.boxes[1].outputs.size() == 1);
  CHECK(dg.boxes[2].gate == "CNOT");
  REQUIRE(dg.boxes[2].inputs.size() == 2);
  CHECK(dg.boxes[2].inputs[0] == "y2");
  CHECK(dg.boxes[2].inputs[1] == dg.boxes[1].outputs[0]);

  std::vector<std::string> outs;
  dg.outputs.flatten(outs);
  REQUIRE(outs.size() == 3);
  CHECK(outs[0] == "y1");
  CHECK(outs[1] == dg.boxes[2].outputs[0]);
  CHECK(outs[2] == dg.boxes[2].outputs[1]);

  CHECK_FALSE(diagram_linearity_violation(dg).has_value());
}

TEST_CASE("diagram of a single gate application") {
  auto d = extract_diagram(sig(), wires({"x"}), t_qubit(), must_parse_circ("#H x"));
  REQUIRE(std::holds_alternative<Diagram>(d));
  const Diagram& dg = std::get<Diagram>(d);
  REQUIRE(dg.boxes.size() == 1);
  CHECK(dg.boxes[0].gate == "H");
  CHECK(dg.boxes[0].inputs == std::vector<std::string>{"x"});
  CHECK_FALSE(diagram_linearity_violation(dg).has_value());
}

TEST_CASE("empty diagram") {
  auto d = extract_diagram(sig(), {}, t_unit(Mode::Q), must_parse_circ("()"));
  REQUIRE(std::holds_alternative<Diagram>(d));
  const Diagram& dg = std::get<Diagram>(d);
  CHECK(dg.boxes.empty());
  CHECK(dg.inputs.empty());
  std::string ascii = render_ascii(dg);
  CHECK(ascii.find("(empty circuit)") != std::string::npos);
  std::string dot = render_dot(dg);
  CHECK(dot.find("digraph circuit {") == 0);
}

TEST_CASE("diagram of a circuit function binds input wires") {
  Type ty = must_parse_type("qubit * qubit @q -o qubit * qubit @q @q");
  Term v = must_parse_circ(
      "lam (p : qubit * qubit @q) => match p with { (a, b) => match #CNOT (a, b) with { (u, v) => (u, v) } }");
  auto d = extract_diagram(sig(), {}, ty, v);
  REQUIRE(std::holds_alternative<Diagram>(d));
  const Diagram& dg = std::get<Diagram>(d);
  CHECK(dg.inputs.size() == 2);
  REQUIRE(dg.boxes.size() == 1);
  CHECK(dg.boxes[0].gate == "CNOT");
  CHECK_FALSE(diagram_linearity_violation(dg).has_value());
}

TEST_CASE("ascii rendering is stable") {
  Type s3 = must_parse_type("qubit * (qubit * qubit @q) @q");
  auto d = extract_diagram(sig(), wires({"x1", "x2", "x3"}), s3, w_circuit());
  REQUIRE(std::holds_alternative<Diagram>(d));
  std::string ascii = render_ascii(std::get<Diagram>(d));
  // three tracks plus the outputs footer
  CHECK(ascii ==
        "x1 --[CNOT]---------- y1\n"
        "x2 --[CNOT]--[CNOT]-- w1\n"
        "x3 --[H]-----[CNOT]-- w2\n"
        "outputs: (y1, (w1, w2))\n");
}

namespace {

// Minimal DOT well-formedness: a digraph wrapper of node and edge statements.
bool dot_syntax_ok(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "digraph circuit {") return false;
  bool closed = false;
  while (std::getline(in, line)) {
    if (line == "}") {
      closed = true;
      continue;
    }
    if (closed && !line.empty()) return false;
    if (line.empty()) continue;
    if (line.rfind("  ", 0) != 0) return false;
    if (line.back() != ';') return false;
    std::string stmt = line.substr(2, line.size() - 3);
    if (stmt == "rankdir=LR") continue;
    bool has_arrow = stmt.find(" -> ") != std::string::npos;
    bool has_attrs = stmt.find('[') != std::string::npos;
    if (has_attrs && stmt.back() != ']') return false;
    if (!has_arrow && !has_attrs) return false;
  }
  return closed;
}

}  // namespace

TEST_CASE("dot rendering parses") {
  Type s3 = must_parse_type("qubit * (qubit * qubit @q) @q");
  auto d = extract_diagram(sig(), wires({"x1", "x2", "x3"}), s3, w_circuit());
  REQUIRE(std::holds_alternative<Diagram>(d));
  std::string dot = render_dot(std::get<Diagram>(d));
  CHECK(dot_syntax_ok(dot));
  // one node per box labelled by its gate
  CHECK(dot.find("b0 [label=\"CNOT\"];") != std::string::npos);
  CHECK(dot.find("b1 [label=\"H\"];") != std::string::npos);
  CHECK(dot.find("b2 [label=\"CNOT\"];") != std::string::npos);
  // the wire y2 connects the two CNOT boxes
  CHECK(dot.find("b0 -> b2 [label=\"y2\"];") != std::string::npos);
}

TEST_CASE("normal forms of typed programs conform to the grammar") {
  pqa::test::TermStream stream(53);
  int done = 0;
  for (int i = 0; i < 60; ++i) {
    auto inst = stream.next();
    if (!inst) continue;
    CheckResult r = check_pqa(sig(), inst->ctx, inst->term);
    REQUIRE(r.ok);
    StepTrace tr = normalize(inst->psi.cneu(), inst->term, kDefaultFuel);
    REQUIRE(tr.terminal == Terminal::Normal);
    NormalFormReport rep = check_normal_grammar(sig(), r.type, inst->psi, tr.final_term);
    CAPTURE(print_term(tr.final_term));
    CAPTURE(rep.witness);
    CHECK(rep.conforms);
    ++done;
  }
  CHECK(done > 30);
}
