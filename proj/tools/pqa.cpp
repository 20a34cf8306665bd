#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "pqa/pqa.hpp"

namespace {

// Exit statuses are a stable contract: 0 success, 1 static error, 2 fuel
// exhausted, 3 usage error.
constexpr int kOk = 0;
constexpr int kStaticError = 1;
constexpr int kFuelExhausted = 2;
constexpr int kUsageError = 3;

std::optional<std::string> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Signature resolution: --sig, then PQA_STDLIB, then ./stdlib.sig, then the
// built-in library.
std::variant<pqa::Signature, pqa::Diag> resolve_signature(const std::string& sig_flag) {
  std::string path = sig_flag;
  if (path.empty()) {
    if (const char* env = std::getenv("PQA_STDLIB")) path = env;
  }
  if (path.empty()) {
    if (auto text = read_file("stdlib.sig")) return pqa::parse_signature(*text, "stdlib.sig");
    return pqa::stdlib_signature();
  }
  auto text = read_file(path);
  if (!text) return pqa::Diag{"io", "cannot read signature file", {}, path};
  return pqa::parse_signature(*text, path);
}

struct Loaded {
  pqa::Signature sig;
  pqa::Term term;
};

std::variant<Loaded, pqa::Diag> load(const std::string& file, const std::string& sig_flag) {
  auto sig = resolve_signature(sig_flag);
  if (auto* d = std::get_if<pqa::Diag>(&sig)) return *d;
  auto text = read_file(file);
  if (!text) return pqa::Diag{"io", "cannot read input file", {}, file};
  auto term = pqa::parse_program(*text, file);
  if (auto* d = std::get_if<pqa::Diag>(&term)) return *d;
  return Loaded{std::get<pqa::Signature>(sig), std::get<pqa::Term>(term)};
}

int report(const pqa::Diag& d, const std::string& file) {
  pqa::Diag out = d;
  if (out.file.empty()) out.file = file;
  std::cerr << out.render() << "\n";
  return kStaticError;
}

int cmd_check(const std::string& file, const std::string& sig_flag, const std::string& system) {
  auto loaded = load(file, sig_flag);
  if (auto* d = std::get_if<pqa::Diag>(&loaded)) return report(*d, file);
  auto& [sig, term] = std::get<Loaded>(loaded);
  pqa::System sys = system == "pqx" ? pqa::System::PQX : pqa::System::PQA;
  pqa::CheckResult r = pqa::check_system(sig, {}, term, sys);
  if (!r.ok) return report(*r.error, file);
  std::cout << "TYPE: " << pqa::print_type(r.type) << "\n";
  return kOk;
}

int cmd_normalize(const std::string& file, const std::string& sig_flag, long fuel, bool trace,
                  bool unsafe) {
  auto loaded = load(file, sig_flag);
  if (auto* d = std::get_if<pqa::Diag>(&loaded)) return report(*d, file);
  auto& [sig, term] = std::get<Loaded>(loaded);
  if (!unsafe) {
    pqa::CheckResult r = pqa::check_pqa(sig, {}, term);
    if (!r.ok) return report(*r.error, file);
  }
  pqa::StepTrace tr = pqa::normalize({}, term, fuel);
  if (trace) {
    long n = 1;
    for (auto& s : tr.steps)
      std::cout << "STEP " << n++ << " " << s.rule << ": " << pqa::print_term(s.term) << "\n";
  }
  switch (tr.terminal) {
    case pqa::Terminal::Normal:
      std::cout << pqa::print_term(tr.final_term) << "\n";
      return kOk;
    case pqa::Terminal::FuelExhausted:
      std::cout << pqa::print_term(tr.final_term) << "\n";
      std::cerr << file << ": fuel exhausted after " << tr.steps.size() << " steps\n";
      return kFuelExhausted;
    case pqa::Terminal::Stuck:
      return report(tr.diag ? *tr.diag : pqa::Diag{"stuck", "stuck term", {}, file}, file);
  }
  return kStaticError;
}

int cmd_circuit(const std::string& file, const std::string& sig_flag, long fuel,
                const std::string& emit) {
  auto loaded = load(file, sig_flag);
  if (auto* d = std::get_if<pqa::Diag>(&loaded)) return report(*d, file);
  auto& [sig, term] = std::get<Loaded>(loaded);
  pqa::CheckResult r = pqa::check_pqa(sig, {}, term);
  if (!r.ok) return report(*r.error, file);
  if (pqa::mode_of(r.type) != pqa::Mode::Q)
    return report(pqa::Diag{"diagram",
                            "result type " + pqa::print_type(r.type) +
                                " is not a circuit type; wrap the program in force { - }",
                            {},
                            file},
                  file);
  pqa::StepTrace tr = pqa::normalize({}, term, fuel);
  if (tr.terminal == pqa::Terminal::FuelExhausted) {
    std::cerr << file << ": fuel exhausted\n";
    return kFuelExhausted;
  }
  if (tr.terminal == pqa::Terminal::Stuck)
    return report(tr.diag ? *tr.diag : pqa::Diag{"stuck", "stuck term", {}, file}, file);
  auto diag = pqa::extract_diagram(sig, {}, r.type, tr.final_term);
  if (auto* d = std::get_if<pqa::Diag>(&diag)) return report(*d, file);
  auto& dg = std::get<pqa::Diagram>(diag);
  std::cout << (emit == "dot" ? pqa::render_dot(dg) : pqa::render_ascii(dg));
  return kOk;
}

nlohmann::json report_to_json(const pqa::SuiteReport& rep) {
  nlohmann::json j;
  j["seed"] = rep.seed;
  j["count"] = rep.count;
  j["seconds"] = rep.seconds;
  j["generation_misses"] = rep.generation_misses;
  nlohmann::json props = nlohmann::json::object();
  for (auto& [name, stat] : rep.props)
    props[name] = {{"attempts", stat.attempts}, {"failures", stat.failures}};
  j["properties"] = props;
  nlohmann::json exs = nlohmann::json::array();
  for (auto& e : rep.examples)
    exs.push_back({{"property", e.property},
                   {"index", e.index},
                   {"source", e.source},
                   {"detail", e.detail},
                   {"shrink_steps", e.shrink_steps}});
  j["counterexamples"] = exs;
  return j;
}

int cmd_fuzz(const std::string& sig_flag, long count, int depth, uint64_t seed,
             const std::string& report_path) {
  auto sig = resolve_signature(sig_flag);
  if (auto* d = std::get_if<pqa::Diag>(&sig)) return report(*d, "");
  pqa::GenConfig cfg;
  cfg.seed = seed;
  cfg.max_depth = depth;
  cfg.gate_pool = std::get<pqa::Signature>(sig);
  pqa::SuiteReport rep = pqa::run_suite(cfg.gate_pool, cfg, count);
  for (auto& [name, stat] : rep.props)
    std::cout << (stat.failures == 0 ? "ok   " : "FAIL ") << name << ": " << stat.attempts
              << " checks, " << stat.failures << " failures\n";
  for (auto& e : rep.examples)
    std::cout << "counterexample [" << e.property << "] index " << e.index << " ("
              << e.shrink_steps << " shrink steps): " << e.source << "\n  " << e.detail << "\n";
  std::cout << "elapsed: " << rep.seconds << "s, generation misses: " << rep.generation_misses
            << "\n";
  if (!report_path.empty()) {
    std::ofstream out(report_path);
    if (!out) {
      std::cerr << report_path << ": cannot write report\n";
      return kUsageError;
    }
    out << report_to_json(rep).dump(2) << "\n";
  }
  return rep.all_passed() ? kOk : kStaticError;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pqa: a typed two-layer circuit-description calculus"};
  app.require_subcommand(1);

  std::string file, sig_flag, system = "pqa", emit = "ascii", report_path;
  long fuel = pqa::kDefaultFuel;
  bool trace = false, unsafe = false;
  long count = 1000;
  int depth = 8;
  uint64_t seed = 0;

  auto* check = app.add_subcommand("check", "typecheck a program and print its type");
  check->add_option("file", file, "program file")->required();
  check->add_option("--sig", sig_flag, "gate signature file");
  check->add_option("--system", system, "type system: pqa or pqx")
      ->check(CLI::IsMember({"pqa", "pqx"}));

  auto* norm = app.add_subcommand("normalize", "reduce a program to normal form");
  norm->add_option("file", file, "program file")->required();
  norm->add_option("--sig", sig_flag, "gate signature file");
  norm->add_option("--fuel", fuel, "step budget")->check(CLI::PositiveNumber);
  norm->add_flag("--trace", trace, "print one line per reduction step");
  norm->add_flag("--unsafe", unsafe, "skip the typecheck before running");

  auto* circ = app.add_subcommand("circuit", "normalize and render a circuit");
  circ->add_option("file", file, "program file")->required();
  circ->add_option("--sig", sig_flag, "gate signature file");
  circ->add_option("--fuel", fuel, "step budget")->check(CLI::PositiveNumber);
  circ->add_option("--emit", emit, "output format: ascii or dot")
      ->check(CLI::IsMember({"ascii", "dot"}));

  auto* fuzz = app.add_subcommand("fuzz", "run the property suite on random terms");
  fuzz->add_option("--count", count, "number of generated terms")->check(CLI::PositiveNumber);
  fuzz->add_option("--depth", depth, "generation depth bound")->check(CLI::PositiveNumber);
  fuzz->add_option("--seed", seed, "generator seed");
  fuzz->add_option("--report", report_path, "write a JSON report here");
  fuzz->add_option("--sig", sig_flag, "gate signature file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? kOk : kUsageError;
  }

  try {
    if (check->parsed()) return cmd_check(file, sig_flag, system);
    if (norm->parsed()) return cmd_normalize(file, sig_flag, fuel, trace, unsafe);
    if (circ->parsed()) return cmd_circuit(file, sig_flag, fuel, emit);
    if (fuzz->parsed()) return cmd_fuzz(sig_flag, count, depth, seed, report_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kStaticError;
  }
  return kUsageError;
}
