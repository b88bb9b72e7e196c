#pragma once

#include <array>
#include <complex>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace sld::tool {

enum class SegmentKind { Shank, Fluted };

struct ToolSegment {
    double length = 0.0;          // m
    double outer_diameter = 0.0;  // m
    SegmentKind kind = SegmentKind::Shank;
};

/// CAM-style tool description. Segments are ordered from the shank end toward
/// the tip; only the last `overhang_length` metres (the part sticking out of
/// the holder) are meshed.
struct ToolGeometry {
    std::vector<ToolSegment> segments;
    double overhang_length = 0.0;  // m, holder face to tip
    int n_flutes = 2;
    double helix_angle_deg = 30.0;  // carried as metadata
    double d_eff_factor = 0.8;      // fluted section diameter reduction

    double total_length() const;
    void validate() const;
};

struct ToolMaterial {
    double youngs_modulus = 0.0;  // Pa
    double density = 0.0;         // kg/m^3
    std::string name;

    void validate() const;
};

struct Tool {
    std::string name;
    ToolGeometry geometry;
    ToolMaterial material;
};

struct BeamElement {
    int node_a = 0;
    int node_b = 1;
    double area = 0.0;           // m^2
    double second_moment = 0.0;  // m^4
};

struct BeamMesh {
    std::vector<double> nodes;  // axial positions from the holder face, m
    std::vector<BeamElement> elements;
    int clamped_node = 0;
};

/// Reduced (clamped DOFs removed) mass and stiffness of the planar bending model.
struct SystemMatrices {
    Eigen::MatrixXd mass;
    Eigen::MatrixXd stiffness;
    /// node -> {translation, rotation} index in the reduced system; -1 when clamped.
    std::vector<std::array<int, 2>> dof_map;
    int tip_translation_dof = -1;
};

enum class Direction { X, Y };
enum class ModeSource { Fem, Ema, Assumed };

struct Mode {
    double natural_frequency = 0.0;  // Hz
    double damping_ratio = 0.0;
    double modal_stiffness = 0.0;    // N/m at the tool tip
    Direction direction = Direction::X;
    ModeSource source = ModeSource::Assumed;

    void validate() const;
};

using ModeSet = std::vector<Mode>;

enum class FrfProvenance { Synthesized, Measured };

/// Tool-tip direct compliances on a frequency grid (Hz, m/N).
struct FRF {
    std::vector<double> frequencies;
    std::vector<std::complex<double>> g_xx;
    std::vector<std::complex<double>> g_yy;
    FrfProvenance provenance = FrfProvenance::Synthesized;

    std::size_t size() const { return frequencies.size(); }

    /// Linear interpolation of (g_xx, g_yy) at `hz`; out-of-range error outside the grid.
    std::pair<std::complex<double>, std::complex<double>> at(double hz) const;

    void validate() const;
};

double circle_area(double diameter);
double circle_second_moment(double diameter);

BeamMesh build_beam_mesh(const ToolGeometry& geometry, int elements_per_segment);

SystemMatrices assemble_system(const BeamMesh& mesh, const ToolMaterial& material);

/// Lowest `n_modes` bending modes, replicated to X and Y, ordered by frequency.
ModeSet solve_modes(const SystemMatrices& system, int n_modes, double default_damping = 0.02);

/// Modal superposition of the modes acting in `direction` at `hz`.
std::complex<double> modal_compliance(std::span<const Mode> modes, Direction direction, double hz);

FRF synthesize_frf(std::span<const Mode> modes, std::span<const double> frequencies_hz);

ModeSet import_modal_table(std::string_view document);
FRF import_frf_table(std::string_view document);

/// Parse a tool file (JSON, boundary units mm/GPa). Invalid values raise
/// invalid-geometry errors carrying the JSON pointer of the offending field.
Tool parse_tool(std::string_view document);

/// Lowest-stiffness mode acting in `direction`, or nullptr when there is none.
const Mode* dominant_mode(std::span<const Mode> modes, Direction direction);

std::string_view to_string(Direction d);
std::string_view to_string(ModeSource s);
std::string_view to_string(SegmentKind k);
std::string_view to_string(FrfProvenance p);

}  // namespace sld::tool
