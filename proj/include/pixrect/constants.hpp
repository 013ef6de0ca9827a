// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <complex>
#include <numbers>

namespace pixrect {

using cplx = std::complex<double>;

inline constexpr double kSpeedOfLight = 299792458.0;            // m/s
inline constexpr double kMu0 = 1.25663706212e-6;                // H/m
inline constexpr double kEps0 = 1.0 / (kMu0 * kSpeedOfLight * kSpeedOfLight);
inline constexpr double kEta0 = kMu0 * kSpeedOfLight;           // ohm
inline constexpr double kPi = std::numbers::pi;
inline constexpr double kBoltzmann = 1.380649e-23;
inline constexpr double kElectronCharge = 1.602176634e-19;

/// Wavelength in metres for a medium of relative permittivity eps_eff.
inline double wavelength(double freq_hz, double eps_eff = 1.0)
{
    return kSpeedOfLight / (freq_hz * std::sqrt(eps_eff));
}

} // namespace pixrect
