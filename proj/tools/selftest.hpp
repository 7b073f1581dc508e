#pragma once

#include <ostream>

namespace jit::tools {

/// Quick invariant sweep; prints one PASS/FAIL line per check.
bool run_selftest(std::ostream& out);

} // namespace jit::tools
