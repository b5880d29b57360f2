#pragma once

#include <string>

namespace isentrope {

// Shortest decimal form that round-trips to the same double; "nan", "inf",
// "-inf" for non-finite values.
std::string format_double(double x);

}  // namespace isentrope
