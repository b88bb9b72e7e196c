#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sld/cutting_mechanics.hpp"
#include "sld/stability.hpp"
#include "sld/tool_model.hpp"
#include "sld/uncertainty.hpp"

namespace sld::io {

inline constexpr const char* kSoftwareVersion = "sld 0.3.0";

enum class DynamicsSource { Fem, Ema, Frf };

struct FemConfig {
    int elements_per_segment = 8;
    int n_modes = 3;
    double default_damping = 0.02;
};

struct MonteCarloConfig {
    int n_samples = 200;
    std::uint64_t seed = 1;
    uq::BandQuantiles quantiles = uq::BandQuantiles::MinMax;
    unsigned threads = 1;
};

struct RegionGridConfig {
    int n_speed = 200;
    int n_depth = 100;
    std::optional<double> depth_max;  // m
};

struct OutputSelection {
    std::optional<std::string> json;
    std::optional<std::string> csv;
    std::optional<std::string> svg;
};

/// Fully resolved job: files read, coefficients looked up, dynamics source chosen.
struct JobSpec {
    std::string name;
    tool::Tool tool;
    DynamicsSource dynamics_source = DynamicsSource::Fem;
    tool::ModeSet modes;                    // FEM or EMA modes; empty for FRF
    std::optional<tool::FRF> measured_frf;  // set iff dynamics_source == Frf
    FemConfig fem;
    std::string material;
    cutting::CoefficientSet coefficients;
    std::string coefficient_origin;  // "db:<material>" or "inline"
    cutting::CutSpec cut;
    stability::SweepConfig sweep;
    uq::UncertaintySpec uncertainty;  // merged with the coefficient defaults
    MonteCarloConfig mc;
    RegionGridConfig grid;
    std::vector<stability::OperatingPoint> points;
    OutputSelection outputs;
    std::vector<std::string> provenance_notes;
};

/// Parses a job document. Relative file references resolve against `base_dir`;
/// `default_db` is used when the job names a material without its own database.
JobSpec parse_job(const nlohmann::json& document, const std::filesystem::path& base_dir,
                  const cutting::CoefficientDatabase* default_db = nullptr);

JobSpec load_job(const std::filesystem::path& path, const cutting::CoefficientDatabase* default_db = nullptr);

struct PointVerdict {
    stability::OperatingPoint point;
    uq::StabilityVerdict verdict;
};

struct JobResult {
    uq::UncertaintyBand band;  // band.nominal holds the deterministic SLD
    uq::RegionGrid grid;
    std::vector<PointVerdict> verdicts;
    nlohmann::json metadata;
};

/// Modes or FRF -> coefficients -> scenarios -> SLD band -> region grid -> verdicts.
JobResult run_job(const JobSpec& job);

/// Verdict for an extra point against an existing result.
PointVerdict classify_point(const JobResult& result, double n_rpm, double ap_mm);

std::string read_text_file(const std::filesystem::path& path);
std::string_view to_string(DynamicsSource s);

}  // namespace sld::io
