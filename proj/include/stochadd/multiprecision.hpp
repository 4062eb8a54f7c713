#pragma once

// Wide binary floating point for certifying deep orbits of points of E.

#include <boost/multiprecision/cpp_bin_float.hpp>

namespace stochadd {

/// 200 decimal digits: enough for depth-200 orbits when the average log10(d_r / p_r) stays below 0.9.
using Wide = boost::multiprecision::number<boost::multiprecision::cpp_bin_float<200>,
                                           boost::multiprecision::et_off>;

}  // namespace stochadd
