#pragma once

#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "sld/cutting_mechanics.hpp"
#include "sld/tool_model.hpp"

namespace sld::stability {

struct OperatingPoint {
    double spindle_speed = 0.0;  // rpm
    double axial_depth = 0.0;    // m

    void validate() const;
};

struct LobePoint {
    double chatter_frequency = 0.0;  // rad/s
    double spindle_speed = 0.0;      // rpm
    double depth_limit = 0.0;        // m
    std::size_t sweep_index = 0;     // position in the chatter-frequency sweep
};

struct LobeCurve {
    int lobe_index = 0;
    std::vector<LobePoint> points;
};

/// Piecewise-linear stability boundary on a uniform speed grid.
struct Envelope {
    std::vector<double> speeds;  // rpm, strictly increasing
    std::vector<double> depths;  // m

    double min_speed() const { return speeds.front(); }
    double max_speed() const { return speeds.back(); }
    bool contains(double rpm) const;
    /// Linear interpolation; out-of-range error outside [min_speed, max_speed].
    double at(double rpm) const;
};

enum class Zone { A, B, C, D };

struct ZoneRange {
    double n_lo = 0.0;  // rpm
    double n_hi = 0.0;  // rpm
    Zone zone = Zone::C;
};

struct SldResult {
    std::vector<LobeCurve> lobes;
    Envelope envelope;
    std::vector<ZoneRange> zones;
    double depth_cap = 0.0;               // m; lobe points above it are omitted
    double dominant_frequency_hz = 0.0;   // basis of the zone labels
};

struct ChatterEigenvalue {
    double lambda_re = 0.0;  // N/m
    double lambda_im = 0.0;  // N/m
    double kappa = 0.0;      // lambda_im / lambda_re
};

struct SweepConfig {
    double f_min_hz = 0.0;
    double f_max_hz = 0.0;
    int n_freq = 2000;
    int k_max = 5;
    double depth_cap_factor = 10.0;
    int envelope_points = 1000;
    std::optional<double> speed_min_rpm;
    std::optional<double> speed_max_rpm;

    void validate() const;
};

/// Default sweep: 0.5x to 1.5x the highest modal frequency.
SweepConfig default_sweep(std::span<const tool::Mode> modes);

std::vector<double> linspace(double lo, double hi, int n);

/// Both roots of a0*L^2 + a1*L + 1 = 0 (one root when a0 is negligible).
std::vector<ChatterEigenvalue> chatter_eigenvalue(std::complex<double> g_xx, std::complex<double> g_yy,
                                                  const cutting::AlphaMatrix& alpha);

/// Limiting axial depth [m] for a root with negative real part.
double critical_depth(const ChatterEigenvalue& ev, int n_teeth, double kt);

/// Spindle speed [rpm] of lobe `k` for chatter frequency `omega_c` [rad/s].
double spindle_speed(double omega_c, double kappa, int n_teeth, int k);

/// Speeds for lobes 0..k_max, strictly decreasing in k.
std::vector<double> spindle_speeds(double omega_c, double kappa, int n_teeth, int k_max);

/// Pointwise minimum of the lobes on `speeds`. Interpolation only bridges points
/// that are neighbours in the frequency sweep; uncovered speeds get `cap`.
Envelope envelope_on_grid(std::span<const LobeCurve> lobes, std::vector<double> speeds, double cap);

/// Zero-order (averaged directional factor) stability lobes.
/// `dominant` drives the zone labels; when absent the FRF peak in the sweep is used.
SldResult zoa_lobes(const tool::FRF& frf, const cutting::CutSpec& cut,
                    const cutting::CoefficientSet& coeffs, const SweepConfig& sweep,
                    std::optional<tool::Mode> dominant = std::nullopt);

/// Spectral radius of the full-discretization Floquet transition matrix over
/// one tooth period, using the lowest-stiffness mode in each direction.
double fdm_spectral_radius(const OperatingPoint& point, std::span<const tool::Mode> modes,
                           const cutting::CutSpec& cut, const cutting::CoefficientSet& coeffs,
                           int m_intervals = 40);

enum class Stability { Stable, Unstable };

/// Stable iff a_p < envelope(n); a_p exactly on the boundary counts as unstable.
Stability classify_deterministic(const OperatingPoint& point, const Envelope& envelope);
Stability classify_deterministic(const OperatingPoint& point, const SldResult& sld);

/// Heuristic zone labels from the tooth passing frequency f_tp = n*N/60 and the
/// dominant frequency f_d: D above f_d, C in (f_d/4, f_d], B in (f_d/10, f_d/4],
/// A at or below f_d/10.
std::vector<ZoneRange> zone_annotate(double n_lo, double n_hi, double dominant_hz, int n_teeth);
std::vector<ZoneRange> zone_annotate(const SldResult& sld, const tool::Mode& dominant_mode, int n_teeth);

std::string_view to_string(Zone z);
std::string_view to_string(Stability s);

}  // namespace sld::stability
