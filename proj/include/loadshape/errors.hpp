#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace loadshape {

// Input problems: unreadable files, malformed rows, datasets that filter down
// to nothing. Mapped to exit code 2 by the CLI.
class data_error : public std::runtime_error {
public:
  explicit data_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Degenerate numerical situations: flat elbow curves, coincident centroids,
// CVI preconditions, merge exhaustion. Mapped to exit code 3 by the CLI.
class numeric_error : public std::runtime_error {
public:
  explicit numeric_error(const std::string& msg) : std::runtime_error(msg) {}
};

// The merge loop ran out of admissible pairs before reaching the target K.
class merge_exhausted : public numeric_error {
public:
  merge_exhausted(const std::string& msg, std::size_t k_reached)
      : numeric_error(msg), k_reached_(k_reached) {}

  std::size_t k_reached() const { return k_reached_; }

private:
  std::size_t k_reached_;
};

}  // namespace loadshape
