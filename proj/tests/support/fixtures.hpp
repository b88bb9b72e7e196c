#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "sld/cutting_mechanics.hpp"
#include "sld/stability.hpp"
#include "sld/tool_model.hpp"
#include "sld/units.hpp"

#ifndef SLD_SOURCE_DIR
#define SLD_SOURCE_DIR "."
#endif

namespace sld::test {

inline std::filesystem::path source_dir() { return SLD_SOURCE_DIR; }
inline std::filesystem::path jobs_dir() { return source_dir() / "jobs"; }
inline std::filesystem::path docs_dir() { return source_dir() / "docs"; }

// Symmetric tip dynamics used across the suite: 800 Hz, zeta 0.02, k 2e7 N/m.
inline tool::Mode canonical_mode(tool::Direction d) {
    tool::Mode m;
    m.natural_frequency = 800.0;
    m.damping_ratio = 0.02;
    m.modal_stiffness = 2.0e7;
    m.direction = d;
    m.source = tool::ModeSource::Ema;
    return m;
}

inline tool::ModeSet canonical_modes() {
    return {canonical_mode(tool::Direction::X), canonical_mode(tool::Direction::Y)};
}

inline cutting::CoefficientSet canonical_coefficients(double kt_scale = 1.0) {
    cutting::CoefficientSet c;
    c.kt = 600e6 * kt_scale;
    c.kr = 0.3;
    c.kt_uncertainty = uq::Fixed{c.kt};
    c.kr_uncertainty = uq::Fixed{c.kr};
    return c;
}

inline cutting::CutSpec slot_cut(int n_teeth = 2) { return {cutting::MillingMode::Slot, 1.0, n_teeth}; }

inline stability::SweepConfig canonical_sweep() {
    stability::SweepConfig s;
    s.f_min_hz = 400.0;
    s.f_max_hz = 1200.0;
    s.n_freq = 2000;
    s.k_max = 5;
    return s;
}

inline tool::FRF canonical_frf(const stability::SweepConfig& sweep = canonical_sweep()) {
    const auto grid = stability::linspace(sweep.f_min_hz, sweep.f_max_hz, sweep.n_freq);
    return tool::synthesize_frf(canonical_modes(), grid);
}

inline tool::ToolGeometry uniform_rod(double d_mm, double l_mm) {
    tool::ToolGeometry g;
    g.segments = {{units::mm_to_m(l_mm), units::mm_to_m(d_mm), tool::SegmentKind::Shank}};
    g.overhang_length = units::mm_to_m(l_mm);
    return g;
}

inline tool::ToolMaterial steel() { return {210e9, 7800.0, "steel"}; }

// Analytic first bending frequency of a clamped-free uniform beam.
inline double cantilever_f1(double d, double len, double e, double rho) {
    const double area = units::pi * d * d / 4.0;
    const double inertia = units::pi * d * d * d * d / 64.0;
    const double beta = 1.8751040687119611;
    return beta * beta / units::two_pi * std::sqrt(e * inertia / (rho * area)) / (len * len);
}

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

}  // namespace sld::test
