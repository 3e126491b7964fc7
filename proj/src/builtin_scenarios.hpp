#pragma once

#include <span>

namespace dcdyn::detail {

struct BuiltinScenario {
  const char* name;
  const char* text;
};

/// Table generated at build time from the scenarios/ directory.
std::span<const BuiltinScenario> builtin_scenarios();

}  // namespace dcdyn::detail
