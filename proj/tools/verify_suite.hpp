#pragma once

// Built-in property suite behind `gapcount verify`: re-checks the library's
// numerical invariants on freshly generated rows and prints one pass/fail
// line per invariant.

namespace gapcount::cli {

/// Returns the number of failed checks (0 = all invariants hold).
int run_verify_suite();

}  // namespace gapcount::cli
