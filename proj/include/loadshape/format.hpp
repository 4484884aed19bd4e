#pragma once

#include <string>

namespace loadshape {

// Shortest round-trip decimal form via to_chars; locale-independent and
// byte-stable across runs, which artifact determinism depends on.
std::string format_double(double v);

}  // namespace loadshape
