#include "sld/uncertainty.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "sld/errors.hpp"
#include "sld/parallel.hpp"

namespace sld::uq {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::mt19937_64 substream(std::uint64_t seed, int index, std::string_view key) {
    const std::uint64_t k = fnv1a(key);
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(k),
                      static_cast<std::uint32_t>(k >> 32)};
    return std::mt19937_64(seq);
}

struct Bounds {
    double lo;
    double hi;
};

double sample(const Distribution& d, std::mt19937_64& rng, Bounds bounds, const std::string& key) {
    constexpr int kMaxTries = 10000;
    for (int attempt = 0; attempt < kMaxTries; ++attempt) {
        const double v = std::visit(
            overloaded{[](const Fixed& f) { return f.value; },
                       [&](const Uniform& u) {
                           const double unit = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
                           return u.lo + unit * (u.hi - u.lo);
                       },
                       [&](const Normal& n) {
                           if (n.std == 0.0) return n.mean;
                           return n.mean + n.std * std::normal_distribution<double>(0.0, 1.0)(rng);
                       }},
            d);
        if (v > bounds.lo && v < bounds.hi) return v;
        if (std::holds_alternative<Fixed>(d)) break;
    }
    throw Error(ErrorCode::InvalidInput, key + ": distribution " + describe(d) +
                                             " cannot produce values in the admissible range");
}

double realize(const std::optional<Distribution>& d, double nominal, std::mt19937_64 rng, Bounds bounds,
               const std::string& key) {
    if (!d) return nominal;
    return sample(*d, rng, bounds, key);
}

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr Bounds kPositive{0.0, kInf};
constexpr Bounds kRatioBounds{0.0, 2.0};
constexpr Bounds kDampingBounds{0.0, 1.0};

// Linear interpolation on a uniform-or-not grid, written as (1-t)a + t b so
// that pointwise orderings between curves survive interpolation.
double interpolate(const std::vector<double>& grid, const std::vector<double>& values, double x) {
    auto it = std::lower_bound(grid.begin(), grid.end(), x);
    const auto hi = static_cast<std::size_t>(it - grid.begin());
    if (grid[hi] == x) return values[hi];
    const std::size_t lo = hi - 1;
    const double t = (x - grid[lo]) / (grid[hi] - grid[lo]);
    return (1.0 - t) * values[lo] + t * values[hi];
}

double quantile_sorted(const std::vector<double>& sorted, double q) {
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return (1.0 - frac) * sorted[lo] + frac * sorted[hi];
}

}  // namespace

void UncertaintySpec::validate() const {
    if (kt) uq::validate(*kt, "kt");
    if (kr) uq::validate(*kr, "kr");
    for (std::size_t i = 0; i < modes.size(); ++i) {
        const std::string base = "modes[" + std::to_string(i) + "].";
        if (modes[i].natural_frequency) uq::validate(*modes[i].natural_frequency, base + "f");
        if (modes[i].damping_ratio) uq::validate(*modes[i].damping_ratio, base + "zeta");
        if (modes[i].modal_stiffness) uq::validate(*modes[i].modal_stiffness, base + "k");
    }
}

UncertaintySpec merge_spec(const cutting::CoefficientSet& coefficients, const UncertaintySpec& overrides) {
    UncertaintySpec out = overrides;
    if (!out.kt) out.kt = coefficients.kt_uncertainty;
    if (!out.kr) out.kr = coefficients.kr_uncertainty;
    return out;
}

std::vector<Scenario> draw_scenarios(const NominalInputs& nominal, const UncertaintySpec& spec, int n_samples,
                                     std::uint64_t seed) {
    if (n_samples < 1) throw Error(ErrorCode::InvalidInput, "n_samples must be >= 1");
    spec.validate();
    if (spec.modes.size() > nominal.modes.size())
        throw Error(ErrorCode::InvalidInput, "uncertainty given for more modes than the nominal mode set has");

    std::vector<Scenario> out;
    out.reserve(static_cast<std::size_t>(n_samples));
    out.push_back({0, nominal.coefficients, nominal.modes});

    for (int i = 1; i < n_samples; ++i) {
        Scenario s{i, nominal.coefficients, nominal.modes};
        s.coefficients.kt = realize(spec.kt, nominal.coefficients.kt, substream(seed, i, "kt"), kPositive, "kt");
        s.coefficients.kr = realize(spec.kr, nominal.coefficients.kr, substream(seed, i, "kr"), kRatioBounds, "kr");
        for (std::size_t m = 0; m < spec.modes.size(); ++m) {
            const std::string base = "mode/" + std::to_string(m) + "/";
            auto& mode = s.modes[m];
            const auto& mu = spec.modes[m];
            mode.natural_frequency = realize(mu.natural_frequency, mode.natural_frequency,
                                             substream(seed, i, base + "f"), kPositive, base + "f");
            mode.damping_ratio = realize(mu.damping_ratio, mode.damping_ratio, substream(seed, i, base + "zeta"),
                                         kDampingBounds, base + "zeta");
            mode.modal_stiffness = realize(mu.modal_stiffness, mode.modal_stiffness,
                                           substream(seed, i, base + "k"), kPositive, base + "k");
        }
        out.push_back(std::move(s));
    }
    return out;
}

bool UncertaintyBand::contains(double rpm) const {
    return !speeds.empty() && rpm >= speeds.front() && rpm <= speeds.back();
}

std::pair<double, double> UncertaintyBand::at(double rpm) const {
    if (!contains(rpm)) {
        std::ostringstream os;
        os << "spindle speed " << rpm << " rpm outside band window [" << (speeds.empty() ? 0.0 : speeds.front())
           << ", " << (speeds.empty() ? 0.0 : speeds.back()) << "]";
        throw Error(ErrorCode::OutOfRange, os.str());
    }
    return {interpolate(speeds, a_low, rpm), interpolate(speeds, a_high, rpm)};
}

UncertaintyBand compute_band(const std::vector<Scenario>& scenarios, const cutting::CutSpec& cut,
                             const FrfBuilder& frf_builder, const BandConfig& config) {
    if (scenarios.empty()) throw Error(ErrorCode::InvalidInput, "compute_band needs at least one scenario");
    config.sweep.validate();

    const std::size_t n = scenarios.size();
    std::vector<std::optional<stability::SldResult>> slds(n);
    std::vector<std::string> reasons(n);
    std::vector<std::optional<Error>> nominal_error(1);

    parallel_for(n, config.threads, [&](std::size_t i) {
        const Scenario& s = scenarios[i];
        try {
            const tool::FRF frf = frf_builder(s);
            std::optional<tool::Mode> dominant;
            if (const tool::Mode* m = tool::dominant_mode(s.modes, tool::Direction::X)) dominant = *m;
            slds[i] = stability::zoa_lobes(frf, cut, s.coefficients, config.sweep, dominant);
        } catch (const Error& e) {
            reasons[i] = e.what();
            if (i == 0) nominal_error[0] = e;
        }
    });
    if (nominal_error[0]) throw nominal_error[0]->with_context("nominal scenario");

    UncertaintyBand band;
    band.quantiles = config.quantiles;
    for (std::size_t i = 0; i < n; ++i)
        if (!slds[i]) band.failed.push_back({scenarios[i].index, reasons[i]});
    if (static_cast<double>(band.failed.size()) > config.max_failure_fraction * static_cast<double>(n)) {
        std::ostringstream os;
        os << band.failed.size() << " of " << n << " scenarios produced no stability boundary (limit "
           << config.max_failure_fraction * 100.0 << "%); first failure: scenario " << band.failed.front().index
           << ": " << band.failed.front().reason;
        throw Error(ErrorCode::Numeric, os.str());
    }

    double lo = 0.0;
    double hi = std::numeric_limits<double>::infinity();
    for (const auto& s : slds) {
        if (!s) continue;
        lo = std::max(lo, s->envelope.min_speed());
        hi = std::min(hi, s->envelope.max_speed());
    }
    if (!(lo < hi))
        throw Error(ErrorCode::Numeric, "scenario speed windows do not overlap; narrow the uncertainty");

    band.speeds = stability::linspace(lo, hi, config.sweep.envelope_points);
    std::vector<std::size_t> ok;
    for (std::size_t i = 0; i < n; ++i)
        if (slds[i]) ok.push_back(i);

    band.scenario_envelopes.resize(ok.size());
    parallel_for(ok.size(), config.threads, [&](std::size_t j) {
        const auto& sld = *slds[ok[j]];
        band.scenario_envelopes[j] = stability::envelope_on_grid(sld.lobes, band.speeds, sld.depth_cap).depths;
    });
    for (std::size_t i : ok) band.scenario_indices.push_back(scenarios[i].index);

    const std::size_t g = band.speeds.size();
    band.a_nominal = band.scenario_envelopes.front();
    band.a_low.resize(g);
    band.a_high.resize(g);
    std::vector<double> column(ok.size());
    for (std::size_t p = 0; p < g; ++p) {
        for (std::size_t j = 0; j < ok.size(); ++j) column[j] = band.scenario_envelopes[j][p];
        if (config.quantiles == BandQuantiles::MinMax) {
            const auto [mn, mx] = std::minmax_element(column.begin(), column.end());
            band.a_low[p] = *mn;
            band.a_high[p] = *mx;
        } else {
            std::sort(column.begin(), column.end());
            band.a_low[p] = std::min(quantile_sorted(column, 0.05), band.a_nominal[p]);
            band.a_high[p] = std::max(quantile_sorted(column, 0.95), band.a_nominal[p]);
        }
    }
    band.nominal = std::move(*slds[0]);
    return band;
}

RegionClass classify_region(const UncertaintyBand& band, double rpm, double depth) {
    const auto [low, high] = band.at(rpm);
    if (depth < low) return RegionClass::UnconditionallyStable;
    if (depth >= high) return RegionClass::UnconditionallyUnstable;
    return RegionClass::Conditional;
}

RegionGrid build_region_grid(const UncertaintyBand& band, int n_depth, int n_speed, std::optional<double> depth_max) {
    if (n_depth < 1 || n_speed < 2)
        throw Error(ErrorCode::InvalidInput, "region grid needs n_depth >= 1 and n_speed >= 2");
    if (band.speeds.empty()) throw Error(ErrorCode::InvalidInput, "empty band");
    const double top = depth_max.value_or(1.25 * *std::max_element(band.a_high.begin(), band.a_high.end()));
    if (!(top > 0.0)) throw Error(ErrorCode::InvalidInput, "depth_max must be > 0");

    RegionGrid grid;
    grid.speeds = stability::linspace(band.speeds.front(), band.speeds.back(), n_speed);
    const double step = top / n_depth;
    grid.depths = stability::linspace(step, top, n_depth);
    grid.cells.reserve(static_cast<std::size_t>(n_depth) * n_speed);
    for (double d : grid.depths)
        for (double n : grid.speeds) grid.cells.push_back(classify_region(band, n, d));
    return grid;
}

StabilityVerdict classify_probabilistic(const stability::OperatingPoint& point, const UncertaintyBand& band) {
    point.validate();
    const double n = point.spindle_speed;
    const double ap = point.axial_depth;
    const auto [low, high] = band.at(n);

    StabilityVerdict v;
    v.region = classify_region(band, n, ap);
    std::size_t stable = 0;
    for (const auto& env : band.scenario_envelopes)
        if (ap < interpolate(band.speeds, env, n)) ++stable;
    v.p_stable = band.scenario_envelopes.empty()
                     ? 0.0
                     : static_cast<double>(stable) / static_cast<double>(band.scenario_envelopes.size());

    switch (v.region) {
        case RegionClass::UnconditionallyStable: v.margin = low - ap; break;
        case RegionClass::UnconditionallyUnstable: v.margin = high - ap; break;
        case RegionClass::Conditional:
            v.margin = (ap - low) <= (high - ap) ? low - ap : high - ap;
            break;
    }
    return v;
}

std::string_view to_string(RegionClass c) {
    switch (c) {
        case RegionClass::UnconditionallyStable: return "unconditionally_stable";
        case RegionClass::Conditional: return "conditional";
        case RegionClass::UnconditionallyUnstable: return "unconditionally_unstable";
    }
    return "conditional";
}

std::string_view to_string(BandQuantiles q) { return q == BandQuantiles::MinMax ? "min_max" : "q05_q95"; }

}  // namespace sld::uq
