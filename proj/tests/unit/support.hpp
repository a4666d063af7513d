#pragma once

#include <algorithm>
#include <cmath>

#include "bdre/model.hpp"

namespace bdre::test_support {

/// Central finite-difference jet of f(z, s). Steps scale with the point so
/// that derivatives of rapidly varying functions keep ~6 significant digits.
template <class F>
Jet finite_difference_jet(F&& f, double z, double s) {
    const double hz = 1e-4 * std::max(1.0, std::abs(z));
    const double hs = 1e-4 * std::max(1.0, std::abs(s));
    Jet j;
    j.f = f(z, s);
    j.f_z = (f(z + hz, s) - f(z - hz, s)) / (2.0 * hz);
    j.f_s = (f(z, s + hs) - f(z, s - hs)) / (2.0 * hs);
    j.f_zz = (f(z + hz, s) - 2.0 * j.f + f(z - hz, s)) / (hz * hz);
    j.f_ss = (f(z, s + hs) - 2.0 * j.f + f(z, s - hs)) / (hs * hs);
    j.f_zs = (f(z + hz, s + hs) - f(z + hz, s - hs) - f(z - hz, s + hs) + f(z - hz, s - hs)) /
             (4.0 * hz * hs);
    return j;
}

}  // namespace bdre::test_support
