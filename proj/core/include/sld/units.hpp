#pragma once

#include <numbers>

// Boundary unit conversions. Everything inside the library is SI; file formats
// and the CLI speak mm, MPa, GPa, Hz and rpm. Convert exactly once, here.
namespace sld::units {

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

constexpr double mm_to_m(double mm) { return mm * 1e-3; }
constexpr double m_to_mm(double m) { return m * 1e3; }
constexpr double mpa_to_pa(double mpa) { return mpa * 1e6; }
constexpr double pa_to_mpa(double pa) { return pa * 1e-6; }
constexpr double gpa_to_pa(double gpa) { return gpa * 1e9; }
constexpr double hz_to_rad_s(double hz) { return hz * two_pi; }
constexpr double rad_s_to_hz(double w) { return w / two_pi; }
constexpr double deg_to_rad(double deg) { return deg * pi / 180.0; }

/// Tooth passing period [s] for spindle speed `rpm` and `n_teeth` teeth.
constexpr double tooth_period(double rpm, int n_teeth) { return 60.0 / (rpm * n_teeth); }

/// Tooth passing frequency [Hz].
constexpr double tooth_passing_hz(double rpm, int n_teeth) { return rpm * n_teeth / 60.0; }

}  // namespace sld::units
