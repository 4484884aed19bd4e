#include "loadshape/format.hpp"

#include <charconv>

namespace loadshape {

std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace loadshape
