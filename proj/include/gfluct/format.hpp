#pragma once

#include <string>

namespace gfluct {

// %.17g, with "inf", "-inf" and "nan" spelled out.
std::string fmt(double x);

}  // namespace gfluct
