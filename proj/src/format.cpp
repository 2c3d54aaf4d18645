#include "pwlu/format.hpp"

#include <fmt/format.h>

namespace pwlu {

std::string fmt_double(double value) { return fmt::format("{}", value); }

}  // namespace pwlu
