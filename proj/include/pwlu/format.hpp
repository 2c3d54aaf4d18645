#pragma once

#include <string>

namespace pwlu {

// Shortest decimal text that parses back to the identical double.
std::string fmt_double(double value);

}  // namespace pwlu
