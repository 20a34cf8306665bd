#pragma once

#include "pqa/pqa.hpp"

namespace pqa::test {

inline const Signature& sig() { return stdlib_signature(); }

// A small stream of well-typed terms for property checks in the unit suites.
struct TermStream {
  GenConfig cfg;
  detail::SuiteRunner runner;

  explicit TermStream(uint64_t seed, int depth = 5)
      : cfg{seed, depth, {1.0, 3.0, 3.0}, stdlib_signature()}, runner(stdlib_signature(), cfg) {}

  std::optional<detail::SuiteRunner::Instance> next() { return runner.make_instance(); }
};

}  // namespace pqa::test
