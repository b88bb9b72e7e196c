#include "sld/tool_model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "sld/errors.hpp"
#include "sld/units.hpp"

namespace sld::tool {

using nlohmann::json;

namespace {

constexpr int kDofPerNode = 2;

bool positive_finite(double v) { return std::isfinite(v) && v > 0.0; }

// Euler-Bernoulli bending element, DOF order (w_a, theta_a, w_b, theta_b).
Eigen::Matrix4d element_stiffness(double ei, double len) {
    const double l2 = len * len;
    Eigen::Matrix4d k;
    k << 12.0, 6.0 * len, -12.0, 6.0 * len,
         6.0 * len, 4.0 * l2, -6.0 * len, 2.0 * l2,
         -12.0, -6.0 * len, 12.0, -6.0 * len,
         6.0 * len, 2.0 * l2, -6.0 * len, 4.0 * l2;
    return k * (ei / (l2 * len));
}

Eigen::Matrix4d element_consistent_mass(double rho_a, double len) {
    const double l2 = len * len;
    Eigen::Matrix4d m;
    m << 156.0, 22.0 * len, 54.0, -13.0 * len,
         22.0 * len, 4.0 * l2, 13.0 * len, -3.0 * l2,
         54.0, 13.0 * len, 156.0, -22.0 * len,
         -13.0 * len, -3.0 * l2, -22.0 * len, 4.0 * l2;
    return m * (rho_a * len / 420.0);
}

std::string row_path(std::size_t row, std::string_view field) {
    std::ostringstream os;
    os << "row " << row << ", field " << field;
    return os.str();
}

}  // namespace

double circle_area(double diameter) { return units::pi * diameter * diameter / 4.0; }

double circle_second_moment(double diameter) {
    const double d2 = diameter * diameter;
    return units::pi * d2 * d2 / 64.0;
}

double ToolGeometry::total_length() const {
    double sum = 0.0;
    for (const auto& s : segments) sum += s.length;
    return sum;
}

void ToolGeometry::validate() const {
    if (segments.empty())
        throw Error(ErrorCode::InvalidGeometry, "tool has no segments", "/segments");
    for (std::size_t i = 0; i < segments.size(); ++i) {
        const std::string base = "/segments/" + std::to_string(i);
        if (!positive_finite(segments[i].length))
            throw Error(ErrorCode::InvalidGeometry, "segment length must be > 0", base + "/length_mm");
        if (!positive_finite(segments[i].outer_diameter))
            throw Error(ErrorCode::InvalidGeometry, "segment diameter must be > 0",
                        base + "/diameter_mm");
    }
    if (!positive_finite(overhang_length))
        throw Error(ErrorCode::InvalidGeometry, "overhang must be > 0", "/overhang_mm");
    const double total = total_length();
    if (overhang_length > total * (1.0 + 1e-12))
        throw Error(ErrorCode::InvalidGeometry, "overhang exceeds total tool length", "/overhang_mm");
    if (n_flutes < 1)
        throw Error(ErrorCode::InvalidGeometry, "n_flutes must be a positive integer", "/n_flutes");
    if (!(d_eff_factor > 0.0 && d_eff_factor <= 1.0))
        throw Error(ErrorCode::InvalidGeometry, "d_eff_factor must lie in (0, 1]", "/d_eff_factor");
}

void ToolMaterial::validate() const {
    if (!positive_finite(youngs_modulus))
        throw Error(ErrorCode::InvalidGeometry, "youngs_modulus must be > 0",
                    "/material/youngs_modulus_gpa");
    if (!positive_finite(density))
        throw Error(ErrorCode::InvalidGeometry, "density must be > 0", "/material/density_kg_m3");
}

void Mode::validate() const {
    if (!positive_finite(natural_frequency))
        throw Error(ErrorCode::InvalidInput, "natural_frequency must be > 0");
    if (!(damping_ratio > 0.0 && damping_ratio < 1.0))
        throw Error(ErrorCode::InvalidInput, "damping_ratio out of range");
    if (!positive_finite(modal_stiffness))
        throw Error(ErrorCode::InvalidInput, "modal_stiffness must be > 0");
}

void FRF::validate() const {
    if (frequencies.empty()) throw Error(ErrorCode::InvalidInput, "no samples");
    if (g_xx.size() != frequencies.size() || g_yy.size() != frequencies.size())
        throw Error(ErrorCode::InvalidInput, "FRF column lengths differ");
    for (std::size_t i = 1; i < frequencies.size(); ++i)
        if (!(frequencies[i] > frequencies[i - 1]))
            throw Error(ErrorCode::InvalidInput, "frequencies not strictly increasing");
}

std::pair<std::complex<double>, std::complex<double>> FRF::at(double hz) const {
    if (frequencies.empty()) throw Error(ErrorCode::InvalidInput, "no samples");
    if (!(hz >= frequencies.front() && hz <= frequencies.back()))
        throw Error(ErrorCode::OutOfRange, "frequency " + std::to_string(hz) + " Hz outside FRF grid");
    auto it = std::lower_bound(frequencies.begin(), frequencies.end(), hz);
    auto hi = static_cast<std::size_t>(it - frequencies.begin());
    if (frequencies[hi] == hz) return {g_xx[hi], g_yy[hi]};
    const std::size_t lo = hi - 1;
    const double t = (hz - frequencies[lo]) / (frequencies[hi] - frequencies[lo]);
    return {(1.0 - t) * g_xx[lo] + t * g_xx[hi], (1.0 - t) * g_yy[lo] + t * g_yy[hi]};
}

BeamMesh build_beam_mesh(const ToolGeometry& geometry, int elements_per_segment) {
    geometry.validate();
    if (elements_per_segment < 1)
        throw Error(ErrorCode::InvalidInput, "elements_per_segment must be >= 1");

    const double total = geometry.total_length();
    const double holder_face = std::max(0.0, total - geometry.overhang_length);
    // Slivers below this length are numerical leftovers of the overhang cut.
    const double min_portion = 1e-9 * total;

    BeamMesh mesh;
    mesh.nodes.push_back(0.0);
    mesh.clamped_node = 0;

    double seg_start = 0.0;
    for (const auto& seg : geometry.segments) {
        const double seg_end = seg_start + seg.length;
        const double a = std::max(seg_start, holder_face);
        seg_start = seg_end;
        if (seg_end - a <= min_portion) continue;

        const double diameter =
            seg.kind == SegmentKind::Fluted ? geometry.d_eff_factor * seg.outer_diameter
                                            : seg.outer_diameter;
        const double area = circle_area(diameter);
        const double inertia = circle_second_moment(diameter);

        const double x0 = a - holder_face;
        const double x1 = seg_end - holder_face;
        for (int j = 1; j <= elements_per_segment; ++j) {
            const double x = j == elements_per_segment
                                 ? x1
                                 : x0 + (x1 - x0) * static_cast<double>(j) / elements_per_segment;
            const int prev = static_cast<int>(mesh.nodes.size()) - 1;
            mesh.nodes.push_back(x);
            mesh.elements.push_back({prev, prev + 1, area, inertia});
        }
    }
    // Snap the tip onto the overhang length so sums of segment lengths do not
    // leave a rounding residue.
    mesh.nodes.back() = geometry.overhang_length;
    return mesh;
}

SystemMatrices assemble_system(const BeamMesh& mesh, const ToolMaterial& material) {
    material.validate();
    const int n_nodes = static_cast<int>(mesh.nodes.size());
    if (n_nodes < 2 || mesh.elements.empty())
        throw Error(ErrorCode::InvalidGeometry, "mesh needs at least one element");
    for (int i = 1; i < n_nodes; ++i)
        if (!(mesh.nodes[i] > mesh.nodes[i - 1]))
            throw Error(ErrorCode::InvalidGeometry, "mesh nodes must be strictly increasing");

    SystemMatrices sys;
    sys.dof_map.assign(n_nodes, {-1, -1});
    int next = 0;
    for (int i = 0; i < n_nodes; ++i) {
        if (i == mesh.clamped_node) continue;
        sys.dof_map[i] = {next, next + 1};
        next += kDofPerNode;
    }
    sys.mass = Eigen::MatrixXd::Zero(next, next);
    sys.stiffness = Eigen::MatrixXd::Zero(next, next);

    for (const auto& el : mesh.elements) {
        if (el.node_b != el.node_a + 1)
            throw Error(ErrorCode::InvalidGeometry, "element endpoints must be adjacent nodes");
        const double len = mesh.nodes[el.node_b] - mesh.nodes[el.node_a];
        const Eigen::Matrix4d ke = element_stiffness(material.youngs_modulus * el.second_moment, len);
        const Eigen::Matrix4d me = element_consistent_mass(material.density * el.area, len);
        const std::array<int, 4> g{sys.dof_map[el.node_a][0], sys.dof_map[el.node_a][1],
                                   sys.dof_map[el.node_b][0], sys.dof_map[el.node_b][1]};
        for (int r = 0; r < 4; ++r) {
            if (g[r] < 0) continue;
            for (int c = 0; c < 4; ++c) {
                if (g[c] < 0) continue;
                sys.stiffness(g[r], g[c]) += ke(r, c);
                sys.mass(g[r], g[c]) += me(r, c);
            }
        }
    }
    sys.tip_translation_dof = sys.dof_map.back()[0];
    return sys;
}

ModeSet solve_modes(const SystemMatrices& system, int n_modes, double default_damping) {
    const auto n_dof = static_cast<int>(system.stiffness.rows());
    if (n_modes < 1 || n_modes > n_dof)
        throw Error(ErrorCode::InvalidInput,
                    "n_modes must be in [1, " + std::to_string(n_dof) + "]");
    if (!(default_damping > 0.0 && default_damping < 1.0))
        throw Error(ErrorCode::InvalidInput, "default_damping out of range");
    if (system.tip_translation_dof < 0)
        throw Error(ErrorCode::InvalidInput, "system has no free tip translation");

    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> solver(
        system.stiffness, system.mass, Eigen::ComputeEigenvectors | Eigen::Ax_lBx);
    if (solver.info() != Eigen::Success)
        throw Error(ErrorCode::Numeric, "generalized eigensolver did not converge");

    ModeSet modes;
    modes.reserve(2 * static_cast<std::size_t>(n_modes));
    for (int i = 0; i < n_modes; ++i) {
        const double lambda = solver.eigenvalues()(i);
        Eigen::VectorXd phi = solver.eigenvectors().col(i);
        const Eigen::VectorXd kphi = system.stiffness * phi;
        const double residual = (kphi - lambda * (system.mass * phi)).norm();
        if (!(lambda > 0.0) || residual > 1e-8 * kphi.norm()) {
            std::ostringstream os;
            os << "mode " << i << " failed residual check: residual " << residual << " vs "
               << 1e-8 * kphi.norm() << ", eigenvalue " << lambda;
            throw Error(ErrorCode::Numeric, os.str());
        }
        const double tip = phi(system.tip_translation_dof);
        if (std::abs(tip) < 1e-12 * phi.cwiseAbs().maxCoeff())
            throw Error(ErrorCode::Numeric, "mode " + std::to_string(i) + " has no tip translation");
        phi /= tip;
        const double modal_mass = phi.dot(system.mass * phi);
        const double omega = std::sqrt(lambda);
        Mode m;
        m.natural_frequency = units::rad_s_to_hz(omega);
        m.damping_ratio = default_damping;
        m.modal_stiffness = lambda * modal_mass;
        m.source = ModeSource::Assumed;
        m.direction = Direction::X;
        modes.push_back(m);
        m.direction = Direction::Y;
        modes.push_back(m);
    }
    return modes;
}

std::complex<double> modal_compliance(std::span<const Mode> modes, Direction direction, double hz) {
    const double w = units::hz_to_rad_s(hz);
    std::complex<double> g{0.0, 0.0};
    for (const auto& m : modes) {
        if (m.direction != direction) continue;
        const double wn = units::hz_to_rad_s(m.natural_frequency);
        const std::complex<double> den{wn * wn - w * w, 2.0 * m.damping_ratio * wn * w};
        g += (wn * wn / m.modal_stiffness) / den;
    }
    return g;
}

FRF synthesize_frf(std::span<const Mode> modes, std::span<const double> frequencies_hz) {
    if (modes.empty()) throw Error(ErrorCode::InvalidInput, "no modes to synthesize from");
    for (const auto& m : modes) m.validate();
    FRF frf;
    frf.provenance = FrfProvenance::Synthesized;
    frf.frequencies.assign(frequencies_hz.begin(), frequencies_hz.end());
    if (frf.frequencies.empty()) throw Error(ErrorCode::InvalidInput, "empty frequency grid");
    if (frf.frequencies.front() < 0.0)
        throw Error(ErrorCode::InvalidInput, "frequency grid must be non-negative");
    frf.g_xx.reserve(frf.size());
    frf.g_yy.reserve(frf.size());
    for (double f : frf.frequencies) {
        frf.g_xx.push_back(modal_compliance(modes, Direction::X, f));
        frf.g_yy.push_back(modal_compliance(modes, Direction::Y, f));
    }
    frf.validate();
    return frf;
}

ModeSet import_modal_table(std::string_view document) {
    json doc;
    try {
        doc = json::parse(document);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::Parse, std::string("modal file is not valid JSON: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("modes") || !doc["modes"].is_array())
        throw Error(ErrorCode::Parse, "modal file needs a 'modes' array", "/modes");
    const auto& rows = doc["modes"];
    if (rows.empty()) throw Error(ErrorCode::InvalidInput, "no modes", "/modes");

    ModeSet modes;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& row = rows[i];
        auto number = [&](const char* field) {
            if (!row.is_object() || !row.contains(field))
                throw Error(ErrorCode::Parse, "missing field", row_path(i, field));
            if (!row[field].is_number())
                throw Error(ErrorCode::Parse, "field is not a number", row_path(i, field));
            return row[field].get<double>();
        };
        if (!row.is_object() || !row.contains("direction"))
            throw Error(ErrorCode::Parse, "missing field", row_path(i, "direction"));
        const auto& dir = row["direction"];
        Mode m;
        if (dir == "X") m.direction = Direction::X;
        else if (dir == "Y") m.direction = Direction::Y;
        else throw Error(ErrorCode::Parse, "direction must be \"X\" or \"Y\"", row_path(i, "direction"));
        m.natural_frequency = number("f_hz");
        m.damping_ratio = number("zeta");
        m.modal_stiffness = number("k_n_per_m");
        m.source = ModeSource::Ema;
        if (!positive_finite(m.natural_frequency))
            throw Error(ErrorCode::Parse, "natural_frequency must be > 0", row_path(i, "f_hz"));
        if (!(m.damping_ratio > 0.0 && m.damping_ratio < 1.0))
            throw Error(ErrorCode::Parse, "damping_ratio out of range", row_path(i, "zeta"));
        if (!positive_finite(m.modal_stiffness))
            throw Error(ErrorCode::Parse, "modal_stiffness must be > 0", row_path(i, "k_n_per_m"));
        modes.push_back(m);
    }
    return modes;
}

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_csv(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        out.push_back(trim(line.substr(start, comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

}  // namespace

FRF import_frf_table(std::string_view document) {
    static constexpr std::array<std::string_view, 5> kColumns{"freq_hz", "re_gxx", "im_gxx",
                                                              "re_gyy", "im_gyy"};
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start <= document.size()) {
        auto nl = document.find('\n', start);
        if (nl == std::string_view::npos) nl = document.size();
        auto line = trim(document.substr(start, nl - start));
        if (!line.empty()) lines.push_back(line);
        start = nl + 1;
    }
    if (lines.empty()) throw Error(ErrorCode::Parse, "FRF file is empty: missing header");

    const auto header = split_csv(lines.front());
    std::array<std::size_t, 5> col{};
    for (std::size_t c = 0; c < kColumns.size(); ++c) {
        auto it = std::find(header.begin(), header.end(), kColumns[c]);
        if (it == header.end())
            throw Error(ErrorCode::Parse, "missing column '" + std::string(kColumns[c]) + "'",
                        "header");
        col[c] = static_cast<std::size_t>(it - header.begin());
    }
    if (lines.size() == 1) throw Error(ErrorCode::InvalidInput, "no samples");

    FRF frf;
    frf.provenance = FrfProvenance::Measured;
    for (std::size_t r = 1; r < lines.size(); ++r) {
        const auto cells = split_csv(lines[r]);
        std::array<double, 5> v{};
        for (std::size_t c = 0; c < kColumns.size(); ++c) {
            if (col[c] >= cells.size())
                throw Error(ErrorCode::Parse, "missing value", row_path(r, kColumns[c]));
            const auto cell = cells[col[c]];
            auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v[c]);
            if (ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(v[c]))
                throw Error(ErrorCode::Parse, "not a finite number", row_path(r, kColumns[c]));
        }
        if (!frf.frequencies.empty() && !(v[0] > frf.frequencies.back()))
            throw Error(ErrorCode::Parse, "frequencies not strictly increasing", row_path(r, "freq_hz"));
        if (v[0] < 0.0)
            throw Error(ErrorCode::Parse, "frequency must be non-negative", row_path(r, "freq_hz"));
        frf.frequencies.push_back(v[0]);
        frf.g_xx.emplace_back(v[1], v[2]);
        frf.g_yy.emplace_back(v[3], v[4]);
    }
    return frf;
}

Tool parse_tool(std::string_view document) {
    json doc;
    try {
        doc = json::parse(document);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::Parse, std::string("tool file is not valid JSON: ") + e.what());
    }
    auto need = [](const json& obj, const char* key, const std::string& path) -> const json& {
        if (!obj.is_object() || !obj.contains(key))
            throw Error(ErrorCode::Parse, std::string("missing field '") + key + "'", path + "/" + key);
        return obj[key];
    };
    auto num = [&](const json& obj, const char* key, const std::string& path) {
        const auto& v = need(obj, key, path);
        if (!v.is_number())
            throw Error(ErrorCode::Parse, std::string("'") + key + "' must be a number", path + "/" + key);
        return v.get<double>();
    };

    Tool tool;
    const auto& name = need(doc, "name", "");
    if (!name.is_string()) throw Error(ErrorCode::Parse, "'name' must be a string", "/name");
    tool.name = name.get<std::string>();

    auto& g = tool.geometry;
    const auto& flutes = need(doc, "n_flutes", "");
    if (!flutes.is_number_integer())
        throw Error(ErrorCode::Parse, "'n_flutes' must be an integer", "/n_flutes");
    g.n_flutes = flutes.get<int>();
    g.helix_angle_deg = doc.contains("helix_angle_deg") ? num(doc, "helix_angle_deg", "") : 0.0;
    g.overhang_length = units::mm_to_m(num(doc, "overhang_mm", ""));
    if (doc.contains("d_eff_factor")) g.d_eff_factor = num(doc, "d_eff_factor", "");

    const auto& segs = need(doc, "segments", "");
    if (!segs.is_array()) throw Error(ErrorCode::Parse, "'segments' must be an array", "/segments");
    for (std::size_t i = 0; i < segs.size(); ++i) {
        const std::string base = "/segments/" + std::to_string(i);
        ToolSegment s;
        s.length = units::mm_to_m(num(segs[i], "length_mm", base));
        s.outer_diameter = units::mm_to_m(num(segs[i], "diameter_mm", base));
        const auto& kind = need(segs[i], "kind", base);
        if (kind == "shank") s.kind = SegmentKind::Shank;
        else if (kind == "fluted") s.kind = SegmentKind::Fluted;
        else throw Error(ErrorCode::Parse, "kind must be 'shank' or 'fluted'", base + "/kind");
        g.segments.push_back(s);
    }

    const auto& mat = need(doc, "material", "");
    tool.material.name = mat.contains("name") && mat["name"].is_string() ? mat["name"].get<std::string>()
                                                                         : std::string{};
    tool.material.youngs_modulus = units::gpa_to_pa(num(mat, "youngs_modulus_gpa", "/material"));
    tool.material.density = num(mat, "density_kg_m3", "/material");

    g.validate();
    tool.material.validate();
    return tool;
}

const Mode* dominant_mode(std::span<const Mode> modes, Direction direction) {
    const Mode* best = nullptr;
    for (const auto& m : modes)
        if (m.direction == direction && (!best || m.modal_stiffness < best->modal_stiffness)) best = &m;
    return best;
}

std::string_view to_string(Direction d) { return d == Direction::X ? "X" : "Y"; }

std::string_view to_string(ModeSource s) {
    switch (s) {
        case ModeSource::Fem: return "fem";
        case ModeSource::Ema: return "ema";
        case ModeSource::Assumed: return "assumed";
    }
    return "assumed";
}

std::string_view to_string(SegmentKind k) { return k == SegmentKind::Fluted ? "fluted" : "shank"; }

std::string_view to_string(FrfProvenance p) {
    return p == FrfProvenance::Measured ? "measured" : "synthesized";
}

}  // namespace sld::tool
