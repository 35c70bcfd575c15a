#pragma once

#include <string>

namespace mchain {

/// Shortest decimal representation that round-trips to the same double.
std::string format_double(double v);

}  // namespace mchain
