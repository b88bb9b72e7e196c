#include "sld/stability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "sld/errors.hpp"
#include "sld/units.hpp"

namespace sld::stability {

using cplx = std::complex<double>;

void OperatingPoint::validate() const {
    if (!(std::isfinite(spindle_speed) && spindle_speed > 0.0))
        throw Error(ErrorCode::InvalidInput, "spindle speed must be > 0", "/n_rpm");
    if (!(std::isfinite(axial_depth) && axial_depth > 0.0))
        throw Error(ErrorCode::InvalidInput, "axial depth must be > 0", "/ap_mm");
}

bool Envelope::contains(double rpm) const {
    return !speeds.empty() && rpm >= speeds.front() && rpm <= speeds.back();
}

double Envelope::at(double rpm) const {
    if (!contains(rpm)) {
        std::ostringstream os;
        os << "spindle speed " << rpm << " rpm outside window [" << (speeds.empty() ? 0.0 : speeds.front())
           << ", " << (speeds.empty() ? 0.0 : speeds.back()) << "]";
        throw Error(ErrorCode::OutOfRange, os.str());
    }
    auto it = std::lower_bound(speeds.begin(), speeds.end(), rpm);
    const auto hi = static_cast<std::size_t>(it - speeds.begin());
    if (speeds[hi] == rpm) return depths[hi];
    const std::size_t lo = hi - 1;
    const double t = (rpm - speeds[lo]) / (speeds[hi] - speeds[lo]);
    return (1.0 - t) * depths[lo] + t * depths[hi];
}

void SweepConfig::validate() const {
    if (!(std::isfinite(f_min_hz) && f_min_hz > 0.0 && f_max_hz > f_min_hz && std::isfinite(f_max_hz)))
        throw Error(ErrorCode::InvalidInput, "sweep window must satisfy 0 < f_min < f_max", "/sweep");
    if (n_freq < 2) throw Error(ErrorCode::InvalidInput, "n_freq must be >= 2", "/sweep/n_freq");
    if (k_max < 0) throw Error(ErrorCode::InvalidInput, "k_max must be >= 0", "/sweep/k_max");
    if (!(depth_cap_factor >= 1.0))
        throw Error(ErrorCode::InvalidInput, "depth_cap_factor must be >= 1", "/sweep/depth_cap_factor");
    if (envelope_points < 2)
        throw Error(ErrorCode::InvalidInput, "envelope_points must be >= 2", "/sweep/envelope_points");
    if (speed_min_rpm && speed_max_rpm && !(*speed_min_rpm < *speed_max_rpm))
        throw Error(ErrorCode::InvalidInput, "speed window must satisfy min < max", "/sweep");
}

SweepConfig default_sweep(std::span<const tool::Mode> modes) {
    if (modes.empty()) throw Error(ErrorCode::InvalidInput, "default sweep needs at least one mode");
    double f_hi = 0.0;
    for (const auto& m : modes) f_hi = std::max(f_hi, m.natural_frequency);
    SweepConfig s;
    s.f_min_hz = 0.5 * f_hi;
    s.f_max_hz = 1.5 * f_hi;
    return s;
}

std::vector<double> linspace(double lo, double hi, int n) {
    std::vector<double> out(static_cast<std::size_t>(n));
    if (n == 1) {
        out[0] = lo;
        return out;
    }
    const double step = (hi - lo) / (n - 1);
    for (int i = 0; i < n; ++i) out[i] = lo + step * i;
    out.back() = hi;
    return out;
}

std::vector<ChatterEigenvalue> chatter_eigenvalue(cplx g_xx, cplx g_yy, const cutting::AlphaMatrix& alpha) {
    if (g_xx == 0.0 && g_yy == 0.0) throw Error(ErrorCode::Singular, "both direct FRFs are zero");

    const cplx a0 = g_xx * g_yy * (alpha.axx * alpha.ayy - alpha.axy * alpha.ayx);
    const cplx a1 = alpha.axx * g_xx + alpha.ayy * g_yy;

    std::vector<cplx> roots;
    if (std::abs(4.0 * a0) <= 1e-14 * std::norm(a1)) {
        if (a1 == 0.0) throw Error(ErrorCode::Singular, "characteristic equation is degenerate");
        roots.push_back(-1.0 / a1);
    } else {
        // q = -(a1 + sgn*sqrt(disc))/2 with the sign that avoids cancellation;
        // roots are q/a0 and 1/q.
        cplx disc = std::sqrt(a1 * a1 - 4.0 * a0);
        if (std::real(std::conj(a1) * disc) < 0.0) disc = -disc;
        const cplx q = -0.5 * (a1 + disc);
        if (q == 0.0) {
            roots.push_back(std::sqrt(-1.0 / a0));
            roots.push_back(-roots.front());
        } else {
            roots.push_back(q / a0);
            roots.push_back(1.0 / q);
        }
    }

    std::vector<ChatterEigenvalue> out;
    out.reserve(roots.size());
    for (const cplx& r : roots) {
        ChatterEigenvalue ev;
        ev.lambda_re = r.real();
        ev.lambda_im = r.imag();
        ev.kappa = r.real() != 0.0 ? r.imag() / r.real() : std::numeric_limits<double>::infinity();
        out.push_back(ev);
    }
    return out;
}

double critical_depth(const ChatterEigenvalue& ev, int n_teeth, double kt) {
    if (!(ev.lambda_re < 0.0))
        throw Error(ErrorCode::InvalidInput, "eigenvalue real part must be negative for a positive depth");
    if (!(kt > 0.0)) throw Error(ErrorCode::InvalidInput, "kt must be > 0");
    if (n_teeth < 1) throw Error(ErrorCode::InvalidInput, "n_teeth must be >= 1");
    return -(units::two_pi * ev.lambda_re / (n_teeth * kt)) * (1.0 + ev.kappa * ev.kappa);
}

double spindle_speed(double omega_c, double kappa, int n_teeth, int k) {
    const double psi = std::atan(kappa);
    const double eps = units::pi - 2.0 * psi;
    const double phase = eps + units::two_pi * k;
    if (!(omega_c > 0.0) || !(phase > 0.0))
        throw Error(ErrorCode::InvalidInput, "spindle speed needs omega_c > 0 and a positive phase");
    const double period = phase / omega_c;
    return 60.0 / (n_teeth * period);
}

std::vector<double> spindle_speeds(double omega_c, double kappa, int n_teeth, int k_max) {
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(k_max) + 1);
    for (int k = 0; k <= k_max; ++k) out.push_back(spindle_speed(omega_c, kappa, n_teeth, k));
    return out;
}

Envelope envelope_on_grid(std::span<const LobeCurve> lobes, std::vector<double> speeds, double cap) {
    Envelope env;
    env.depths.assign(speeds.size(), cap);
    env.speeds = std::move(speeds);
    const auto& grid = env.speeds;

    for (const auto& lobe : lobes) {
        for (std::size_t p = 0; p + 1 < lobe.points.size(); ++p) {
            const LobePoint& a = lobe.points[p];
            const LobePoint& b = lobe.points[p + 1];
            if (b.sweep_index != a.sweep_index + 1) continue;
            const double lo = std::min(a.spindle_speed, b.spindle_speed);
            const double hi = std::max(a.spindle_speed, b.spindle_speed);
            auto first = std::lower_bound(grid.begin(), grid.end(), lo);
            for (auto it = first; it != grid.end() && *it <= hi; ++it) {
                const auto j = static_cast<std::size_t>(it - grid.begin());
                double depth;
                if (hi == lo) {
                    depth = std::min(a.depth_limit, b.depth_limit);
                } else {
                    const double t = (*it - a.spindle_speed) / (b.spindle_speed - a.spindle_speed);
                    depth = (1.0 - t) * a.depth_limit + t * b.depth_limit;
                }
                env.depths[j] = std::min(env.depths[j], depth);
            }
        }
    }
    return env;
}

SldResult zoa_lobes(const tool::FRF& frf, const cutting::CutSpec& cut,
                    const cutting::CoefficientSet& coeffs, const SweepConfig& sweep,
                    std::optional<tool::Mode> dominant) {
    sweep.validate();
    coeffs.validate();
    const auto [phi_st, phi_ex] = cutting::engagement_angles(cut);
    const cutting::AlphaMatrix alpha = cutting::directional_factors(phi_st, phi_ex, coeffs.kr);
    const std::vector<double> freqs = linspace(sweep.f_min_hz, sweep.f_max_hz, sweep.n_freq);

    struct Critical {
        std::size_t index;
        double omega_c;
        double kappa;
        double depth;
    };
    std::vector<Critical> found;
    found.reserve(freqs.size());
    double peak = -1.0;
    double peak_hz = freqs.front();

    for (std::size_t i = 0; i < freqs.size(); ++i) {
        const auto [gxx, gyy] = frf.at(freqs[i]);
        const double mag = std::max(std::abs(gxx), std::abs(gyy));
        if (mag > peak) {
            peak = mag;
            peak_hz = freqs[i];
        }
        std::vector<ChatterEigenvalue> roots;
        try {
            roots = chatter_eigenvalue(gxx, gyy, alpha);
        } catch (const Error& e) {
            if (e.code() == ErrorCode::Singular) continue;
            throw;
        }
        double best = std::numeric_limits<double>::infinity();
        double best_kappa = 0.0;
        for (const auto& ev : roots) {
            if (!(ev.lambda_re < 0.0)) continue;
            const double a = critical_depth(ev, cut.n_teeth, coeffs.kt);
            if (std::isfinite(a) && a > 0.0 && a < best) {
                best = a;
                best_kappa = ev.kappa;
            }
        }
        if (std::isfinite(best)) found.push_back({i, units::hz_to_rad_s(freqs[i]), best_kappa, best});
    }
    if (found.empty()) {
        std::ostringstream os;
        os << "no chatter eigenvalue with negative real part in " << sweep.f_min_hz << "-" << sweep.f_max_hz
           << " Hz; widen the frequency sweep around the dominant modes";
        throw Error(ErrorCode::Numeric, os.str());
    }

    double a_min = std::numeric_limits<double>::infinity();
    for (const auto& c : found) a_min = std::min(a_min, c.depth);

    SldResult sld;
    sld.depth_cap = sweep.depth_cap_factor * a_min;
    double n_lo = std::numeric_limits<double>::infinity();
    double n_hi = 0.0;
    for (int k = 0; k <= sweep.k_max; ++k) {
        LobeCurve lobe;
        lobe.lobe_index = k;
        for (const auto& c : found) {
            if (c.depth > sld.depth_cap) continue;
            const double n = spindle_speed(c.omega_c, c.kappa, cut.n_teeth, k);
            lobe.points.push_back({c.omega_c, n, c.depth, c.index});
            n_lo = std::min(n_lo, n);
            n_hi = std::max(n_hi, n);
        }
        sld.lobes.push_back(std::move(lobe));
    }

    if (sweep.speed_min_rpm) n_lo = std::max(n_lo, *sweep.speed_min_rpm);
    if (sweep.speed_max_rpm) n_hi = std::min(n_hi, *sweep.speed_max_rpm);
    if (!(n_lo < n_hi))
        throw Error(ErrorCode::Numeric, "lobes do not cover the requested spindle speed window");

    sld.envelope = envelope_on_grid(sld.lobes, linspace(n_lo, n_hi, sweep.envelope_points), sld.depth_cap);
    sld.dominant_frequency_hz = dominant ? dominant->natural_frequency : peak_hz;
    sld.zones = zone_annotate(n_lo, n_hi, sld.dominant_frequency_hz, cut.n_teeth);
    return sld;
}

Stability classify_deterministic(const OperatingPoint& point, const Envelope& envelope) {
    point.validate();
    return point.axial_depth < envelope.at(point.spindle_speed) ? Stability::Stable : Stability::Unstable;
}

Stability classify_deterministic(const OperatingPoint& point, const SldResult& sld) {
    return classify_deterministic(point, sld.envelope);
}

std::vector<ZoneRange> zone_annotate(double n_lo, double n_hi, double dominant_hz, int n_teeth) {
    if (!(dominant_hz > 0.0)) throw Error(ErrorCode::InvalidInput, "dominant frequency must be > 0");
    if (!(n_lo < n_hi)) throw Error(ErrorCode::InvalidInput, "zone window must satisfy lo < hi");
    // Speeds at which f_tp crosses f_d/10, f_d/4 and f_d.
    const double to_rpm = 60.0 / n_teeth;
    const double bounds[3] = {dominant_hz / 10.0 * to_rpm, dominant_hz / 4.0 * to_rpm, dominant_hz * to_rpm};
    const Zone zones[4] = {Zone::A, Zone::B, Zone::C, Zone::D};

    std::vector<ZoneRange> out;
    double lo = n_lo;
    for (int z = 0; z < 4; ++z) {
        const double hi = z < 3 ? std::min(bounds[z], n_hi) : n_hi;
        if (hi > lo) {
            out.push_back({lo, hi, zones[z]});
            lo = hi;
        }
        if (lo >= n_hi) break;
    }
    return out;
}

std::vector<ZoneRange> zone_annotate(const SldResult& sld, const tool::Mode& dominant_mode, int n_teeth) {
    return zone_annotate(sld.envelope.min_speed(), sld.envelope.max_speed(), dominant_mode.natural_frequency,
                         n_teeth);
}

std::string_view to_string(Zone z) {
    switch (z) {
        case Zone::A: return "A";
        case Zone::B: return "B";
        case Zone::C: return "C";
        case Zone::D: return "D";
    }
    return "C";
}

std::string_view to_string(Stability s) { return s == Stability::Stable ? "stable" : "unstable"; }

}  // namespace sld::stability
