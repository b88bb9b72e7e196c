#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sld/cutting_mechanics.hpp"
#include "sld/distribution.hpp"
#include "sld/stability.hpp"
#include "sld/tool_model.hpp"

namespace sld::uq {

struct ModeUncertainty {
    std::optional<Distribution> natural_frequency;  // Hz
    std::optional<Distribution> damping_ratio;
    std::optional<Distribution> modal_stiffness;    // N/m
};

/// Per-parameter distributions; an absent entry keeps the nominal value.
/// `modes[i]` applies to the i-th nominal mode.
struct UncertaintySpec {
    std::optional<Distribution> kt;  // Pa
    std::optional<Distribution> kr;
    std::vector<ModeUncertainty> modes;

    void validate() const;
};

struct NominalInputs {
    cutting::CoefficientSet coefficients;
    tool::ModeSet modes;  // empty when dynamics come from a measured FRF
};

struct Scenario {
    int index = 0;
    cutting::CoefficientSet coefficients;
    tool::ModeSet modes;
};

/// Scenario 0 is the nominal input set. Scenario i >= 1 draws each parameter
/// from its own substream keyed by (seed, i, parameter name), so the draws are
/// independent of evaluation order and shared across re-runs that change
/// other parameters.
std::vector<Scenario> draw_scenarios(const NominalInputs& nominal, const UncertaintySpec& spec, int n_samples,
                                     std::uint64_t seed);

/// Coefficient distributions carried by the coefficient set, overridden by
/// whatever `overrides` specifies.
UncertaintySpec merge_spec(const cutting::CoefficientSet& coefficients, const UncertaintySpec& overrides);

enum class BandQuantiles { MinMax, Q05Q95 };

struct BandConfig {
    stability::SweepConfig sweep;
    BandQuantiles quantiles = BandQuantiles::MinMax;
    unsigned threads = 1;  // 0 = hardware concurrency
    double max_failure_fraction = 0.10;
};

struct FailedScenario {
    int index = 0;
    std::string reason;
};

struct UncertaintyBand {
    std::vector<double> speeds;     // rpm
    std::vector<double> a_low;      // m
    std::vector<double> a_high;     // m
    std::vector<double> a_nominal;  // m, scenario 0 on the band grid
    BandQuantiles quantiles = BandQuantiles::MinMax;
    std::vector<int> scenario_indices;                    // successful scenarios
    std::vector<std::vector<double>> scenario_envelopes;  // aligned with scenario_indices
    std::vector<FailedScenario> failed;
    stability::SldResult nominal;

    bool contains(double rpm) const;
    /// Band edges at `rpm` by linear interpolation.
    std::pair<double, double> at(double rpm) const;
};

using FrfBuilder = std::function<tool::FRF(const Scenario&)>;

UncertaintyBand compute_band(const std::vector<Scenario>& scenarios, const cutting::CutSpec& cut,
                             const FrfBuilder& frf_builder, const BandConfig& config);

enum class RegionClass { UnconditionallyStable, Conditional, UnconditionallyUnstable };

/// Stable iff depth < a_low(n), unstable iff depth >= a_high(n).
RegionClass classify_region(const UncertaintyBand& band, double rpm, double depth);

struct RegionGrid {
    std::vector<double> speeds;  // rpm
    std::vector<double> depths;  // m, lower edge of each cell
    std::vector<RegionClass> cells;  // row-major: cells[j * speeds.size() + i]

    RegionClass at(std::size_t speed_index, std::size_t depth_index) const {
        return cells[depth_index * speeds.size() + speed_index];
    }
};

/// `depth_max` defaults to 1.25x the largest a_high.
RegionGrid build_region_grid(const UncertaintyBand& band, int n_depth, int n_speed,
                             std::optional<double> depth_max = std::nullopt);

struct StabilityVerdict {
    RegionClass region = RegionClass::Conditional;
    double p_stable = 0.0;
    double margin = 0.0;  // m
};

StabilityVerdict classify_probabilistic(const stability::OperatingPoint& point, const UncertaintyBand& band);

std::string_view to_string(RegionClass c);
std::string_view to_string(BandQuantiles q);

}  // namespace sld::uq
