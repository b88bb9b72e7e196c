#include "sld/job.hpp"

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "sld/errors.hpp"
#include "sld/units.hpp"

namespace sld::io {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Field access with JSON-pointer error paths.
class Node {
public:
    Node(const json& value, std::string path) : value_(value), path_(std::move(path)) {}

    const json& value() const { return value_; }
    const std::string& path() const { return path_; }
    bool has(const char* key) const { return value_.is_object() && value_.contains(key); }

    Node child(const char* key) const {
        if (!has(key)) fail(std::string("missing required field '") + key + "'", path_ + "/" + key);
        return {value_.at(key), path_ + "/" + key};
    }
    Node at(std::size_t i) const { return {value_.at(i), path_ + "/" + std::to_string(i)}; }

    double number() const {
        if (!value_.is_number()) fail("expected a number", path_);
        return value_.get<double>();
    }
    double positive() const {
        const double v = number();
        if (!(v > 0.0)) fail("must be > 0", path_);
        return v;
    }
    int integer() const {
        if (!value_.is_number_integer()) fail("expected an integer", path_);
        return value_.get<int>();
    }
    std::string string() const {
        if (!value_.is_string()) fail("expected a string", path_);
        return value_.get<std::string>();
    }
    const json& object() const {
        if (!value_.is_object()) fail("expected an object", path_);
        return value_;
    }
    std::size_t array_size() const {
        if (!value_.is_array()) fail("expected an array", path_);
        return value_.size();
    }

    [[noreturn]] static void fail(const std::string& message, const std::string& path) {
        throw Error(ErrorCode::Parse, message + " at " + (path.empty() ? "/" : path), path);
    }

private:
    const json& value_;
    std::string path_;
};

void reject_unknown_keys(const Node& node, std::initializer_list<const char*> allowed) {
    for (const auto& [key, _] : node.object().items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || key == a;
        if (!ok) Node::fail("unknown field '" + key + "'", node.path() + "/" + key);
    }
}

// Table readers locate errors as "row N, field F"; inline tables map that onto a pointer.
std::string join_path(const std::string& pointer, const std::string& inner, bool inline_table) {
    if (inner.empty() || inner.front() == '/') return pointer + inner;
    std::size_t row = 0;
    char field[64] = {};
    if (inline_table && std::sscanf(inner.c_str(), "row %zu, field %63s", &row, field) == 2)
        return pointer + "/" + std::to_string(row) + "/" + field;
    return pointer + " (" + inner + ")";
}

// Re-tags an error from a nested document with the job pointer of the reference.
template <class Fn>
auto nested(const std::string& pointer, Fn&& fn, bool inline_table = false) {
    try {
        return fn();
    } catch (const Error& e) {
        throw Error(e.code(), e.what(), join_path(pointer, e.path(), inline_table));
    }
}

fs::path resolve(const fs::path& base, const std::string& ref) {
    fs::path p(ref);
    return p.is_absolute() ? p : base / p;
}

std::string read_reference(const fs::path& base, const Node& ref) {
    const fs::path p = resolve(base, ref.string());
    if (!fs::exists(p)) throw Error(ErrorCode::FileNotFound, "referenced file not found: " + p.string(), ref.path());
    return read_text_file(p);
}

// `scale` converts the boundary unit into SI; relative forms scale the nominal.
uq::Distribution parse_distribution(const Node& node, double nominal_si, double scale) {
    reject_unknown_keys(node, {"dist", "value", "lo", "hi", "rel", "mean", "std", "rel_std"});
    const std::string kind = node.child("dist").string();
    uq::Distribution d;
    if (kind == "fixed") {
        d = uq::Fixed{node.child("value").number() * scale};
    } else if (kind == "uniform") {
        if (node.has("rel")) {
            const double rel = node.child("rel").number();
            if (!(rel >= 0.0 && rel < 1.0)) Node::fail("rel must lie in [0, 1)", node.path() + "/rel");
            d = uq::relative_uniform(nominal_si, rel);
        } else {
            d = uq::Uniform{node.child("lo").number() * scale, node.child("hi").number() * scale};
        }
    } else if (kind == "normal") {
        if (node.has("rel_std")) {
            const double rel = node.child("rel_std").number();
            d = uq::Normal{nominal_si, rel * nominal_si};
        } else {
            d = uq::Normal{node.child("mean").number() * scale, node.child("std").number() * scale};
        }
    } else {
        Node::fail("dist must be fixed, uniform or normal", node.path() + "/dist");
    }
    try {
        uq::validate(d, node.path());
    } catch (const Error& e) {
        throw Error(ErrorCode::Parse, e.what(), node.path());
    }
    return d;
}

stability::SweepConfig parse_sweep(const Node* node, const tool::ModeSet& modes, const std::optional<tool::FRF>& frf) {
    stability::SweepConfig s;
    if (!modes.empty()) {
        s = stability::default_sweep(modes);
    } else if (frf) {
        s.f_min_hz = std::max(frf->frequencies.front(), frf->frequencies.back() * 1e-6);
        s.f_max_hz = frf->frequencies.back();
    }
    if (node) {
        reject_unknown_keys(*node, {"f_min_hz", "f_max_hz", "n_freq", "k_max", "depth_cap_factor",
                                    "envelope_points", "speed_min_rpm", "speed_max_rpm"});
        if (node->has("f_min_hz")) s.f_min_hz = node->child("f_min_hz").positive();
        if (node->has("f_max_hz")) s.f_max_hz = node->child("f_max_hz").positive();
        if (node->has("n_freq")) s.n_freq = node->child("n_freq").integer();
        if (node->has("k_max")) s.k_max = node->child("k_max").integer();
        if (node->has("depth_cap_factor")) s.depth_cap_factor = node->child("depth_cap_factor").number();
        if (node->has("envelope_points")) s.envelope_points = node->child("envelope_points").integer();
        if (node->has("speed_min_rpm")) s.speed_min_rpm = node->child("speed_min_rpm").positive();
        if (node->has("speed_max_rpm")) s.speed_max_rpm = node->child("speed_max_rpm").positive();
    }
    try {
        s.validate();
    } catch (const Error& e) {
        throw Error(ErrorCode::Parse, e.what(), e.path());
    }
    if (frf && (s.f_min_hz < frf->frequencies.front() || s.f_max_hz > frf->frequencies.back()))
        Node::fail("sweep window exceeds the measured FRF grid", "/sweep");
    return s;
}

}  // namespace

std::string read_text_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        if (!fs::exists(path)) throw Error(ErrorCode::FileNotFound, "file not found: " + path.string());
        throw Error(ErrorCode::Io, "cannot read " + path.string());
    }
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

std::string_view to_string(DynamicsSource s) {
    switch (s) {
        case DynamicsSource::Fem: return "fem";
        case DynamicsSource::Ema: return "ema";
        case DynamicsSource::Frf: return "frf";
    }
    return "fem";
}

JobSpec parse_job(const json& document, const fs::path& base_dir, const cutting::CoefficientDatabase* default_db) {
    const Node root(document, "");
    root.object();
    reject_unknown_keys(root, {"name", "tool", "tool_file", "modal_file", "modes", "frf_file", "fem", "material",
                               "coefficient_source", "coefficient_db", "coefficients", "cut", "sweep",
                               "uncertainty", "monte_carlo", "region_grid", "points", "outputs"});
    JobSpec job;
    job.name = root.has("name") ? root.child("name").string() : std::string("unnamed");

    // Tool.
    if (root.has("tool") == root.has("tool_file"))
        Node::fail("exactly one of 'tool' or 'tool_file' is required", "/tool");
    if (root.has("tool")) {
        const Node t = root.child("tool");
        job.tool = nested("/tool", [&] { return tool::parse_tool(t.object().dump()); });
    } else {
        const Node ref = root.child("tool_file");
        const std::string text = read_reference(base_dir, ref);
        job.tool = nested("/tool_file", [&] { return tool::parse_tool(text); });
    }

    // FEM settings are read even when another dynamics source wins.
    if (root.has("fem")) {
        const Node f = root.child("fem");
        reject_unknown_keys(f, {"elements_per_segment", "n_modes", "default_damping"});
        if (f.has("elements_per_segment")) job.fem.elements_per_segment = f.child("elements_per_segment").integer();
        if (f.has("n_modes")) job.fem.n_modes = f.child("n_modes").integer();
        if (f.has("default_damping")) job.fem.default_damping = f.child("default_damping").number();
        if (!(job.fem.default_damping > 0.0 && job.fem.default_damping < 1.0))
            Node::fail("default_damping must lie in (0, 1)", "/fem/default_damping");
        if (job.fem.elements_per_segment < 1) Node::fail("must be >= 1", "/fem/elements_per_segment");
        if (job.fem.n_modes < 1) Node::fail("must be >= 1", "/fem/n_modes");
    }

    // Dynamics precedence: FRF > EMA modes > FEM.
    const bool has_modal = root.has("modal_file") || root.has("modes");
    if (root.has("modal_file") && root.has("modes"))
        Node::fail("give either 'modal_file' or inline 'modes', not both", "/modes");
    tool::ModeSet ema;
    if (root.has("modal_file")) {
        const std::string text = read_reference(base_dir, root.child("modal_file"));
        ema = nested("/modal_file", [&] { return tool::import_modal_table(text); });
    } else if (root.has("modes")) {
        const json doc{{"modes", root.child("modes").value()}};
        ema = nested("/modes", [&] { return tool::import_modal_table(doc.dump()); }, true);
    }
    if (root.has("frf_file")) {
        const std::string text = read_reference(base_dir, root.child("frf_file"));
        job.measured_frf = nested("/frf_file", [&] { return tool::import_frf_table(text); });
        job.dynamics_source = DynamicsSource::Frf;
        job.provenance_notes.push_back(has_modal ? "dynamics: measured FRF (overrides the supplied modal data)"
                                                 : "dynamics: measured FRF");
        job.provenance_notes.push_back("damping: embedded in the measured FRF");
    } else if (has_modal) {
        job.modes = std::move(ema);
        job.dynamics_source = DynamicsSource::Ema;
        job.provenance_notes.push_back("dynamics: experimental modal data (overrides the FEM tool model)");
        job.provenance_notes.push_back("damping: measured (EMA)");
    } else {
        job.modes = nested("/tool", [&] {
            const auto mesh = tool::build_beam_mesh(job.tool.geometry, job.fem.elements_per_segment);
            const auto system = tool::assemble_system(mesh, job.tool.material);
            return tool::solve_modes(system, job.fem.n_modes, job.fem.default_damping);
        });
        job.dynamics_source = DynamicsSource::Fem;
        job.provenance_notes.push_back("dynamics: FEM beam model of the tool, clamped at the holder face");
        std::ostringstream os;
        os << "damping: assumed default zeta = " << job.fem.default_damping << " (not derivable from the FEM model)";
        job.provenance_notes.push_back(os.str());
    }

    // Coefficients.
    if (root.has("coefficients")) {
        const Node c = root.child("coefficients");
        reject_unknown_keys(c, {"kt_mpa", "kr", "provenance", "kt_rel_unc", "kr_rel_unc"});
        job.coefficients.kt = units::mpa_to_pa(c.child("kt_mpa").positive());
        job.coefficients.kr = c.child("kr").number();
        if (!(job.coefficients.kr > 0.0 && job.coefficients.kr < 2.0))
            Node::fail("kr must lie in (0, 2)", "/coefficients/kr");
        job.coefficients.provenance = c.has("provenance")
                                          ? nested("/coefficients", [&] {
                                                return cutting::parse_provenance(c.child("provenance").string());
                                            })
                                          : cutting::CoefficientProvenance::Catalog;
        const double kt_rel = c.has("kt_rel_unc") ? c.child("kt_rel_unc").number() : 0.0;
        const double kr_rel = c.has("kr_rel_unc") ? c.child("kr_rel_unc").number() : 0.0;
        if (!(kt_rel >= 0.0 && kt_rel < 1.0)) Node::fail("must lie in [0, 1)", "/coefficients/kt_rel_unc");
        if (!(kr_rel >= 0.0 && kr_rel < 1.0)) Node::fail("must lie in [0, 1)", "/coefficients/kr_rel_unc");
        job.coefficients.kt_uncertainty = uq::relative_uniform(job.coefficients.kt, kt_rel);
        job.coefficients.kr_uncertainty = uq::relative_uniform(job.coefficients.kr, kr_rel);
        job.material = root.has("material") ? root.child("material").string() : std::string{};
        job.coefficient_origin = "inline";
        job.provenance_notes.push_back("coefficients: given inline in the job (" +
                                       std::string(cutting::to_string(job.coefficients.provenance)) + ")");
    } else {
        job.material = root.child("material").string();
        const auto source = root.has("coefficient_source")
                                ? nested("", [&] {
                                      return cutting::parse_provenance(root.child("coefficient_source").string());
                                  })
                                : cutting::CoefficientProvenance::Catalog;
        cutting::CoefficientDatabase local;
        const cutting::CoefficientDatabase* db = default_db;
        if (root.has("coefficient_db")) {
            const std::string text = read_reference(base_dir, root.child("coefficient_db"));
            local = nested("/coefficient_db", [&] { return cutting::CoefficientDatabase::parse(text); });
            db = &local;
        }
        if (!db) Node::fail("no coefficient database available for material lookup", "/coefficient_db");
        try {
            job.coefficients = cutting::resolve_coefficients(job.material, source, *db);
        } catch (const Error& e) {
            throw Error(e.code(), e.what(), "/material");
        }
        job.coefficient_origin = "db:" + job.material;
        job.provenance_notes.push_back("coefficients: " + std::string(cutting::to_string(source)) +
                                       " entry for " + job.material);
    }

    // Cut.
    {
        const Node c = root.child("cut");
        reject_unknown_keys(c, {"mode", "radial_immersion"});
        job.cut.mode = nested("", [&] { return cutting::parse_milling_mode(c.child("mode").string()); });
        job.cut.radial_immersion = c.has("radial_immersion") ? c.child("radial_immersion").number() : 1.0;
        job.cut.n_teeth = job.tool.geometry.n_flutes;
        try {
            job.cut.validate();
        } catch (const Error& e) {
            throw Error(ErrorCode::Parse, e.what(), e.path());
        }
    }

    if (root.has("sweep")) {
        const Node s = root.child("sweep");
        job.sweep = parse_sweep(&s, job.modes, job.measured_frf);
    } else {
        job.sweep = parse_sweep(nullptr, job.modes, job.measured_frf);
    }

    // Uncertainty overrides.
    uq::UncertaintySpec overrides;
    if (root.has("uncertainty")) {
        const Node u = root.child("uncertainty");
        reject_unknown_keys(u, {"kt", "kr", "modes"});
        if (u.has("kt")) overrides.kt = parse_distribution(u.child("kt"), job.coefficients.kt, 1e6);
        if (u.has("kr")) overrides.kr = parse_distribution(u.child("kr"), job.coefficients.kr, 1.0);
        if (u.has("modes")) {
            const Node ms = u.child("modes");
            const std::size_t n = ms.array_size();
            if (n > job.modes.size())
                Node::fail("more mode uncertainties than modes in the effective dynamics", ms.path());
            for (std::size_t i = 0; i < n; ++i) {
                const Node m = ms.at(i);
                reject_unknown_keys(m, {"f_hz", "zeta", "k_n_per_m"});
                uq::ModeUncertainty mu;
                const auto& nominal = job.modes[i];
                if (m.has("f_hz")) mu.natural_frequency = parse_distribution(m.child("f_hz"), nominal.natural_frequency, 1.0);
                if (m.has("zeta")) mu.damping_ratio = parse_distribution(m.child("zeta"), nominal.damping_ratio, 1.0);
                if (m.has("k_n_per_m"))
                    mu.modal_stiffness = parse_distribution(m.child("k_n_per_m"), nominal.modal_stiffness, 1.0);
                overrides.modes.push_back(mu);
            }
        }
    }
    job.uncertainty = uq::merge_spec(job.coefficients, overrides);

    if (root.has("monte_carlo")) {
        const Node mc = root.child("monte_carlo");
        reject_unknown_keys(mc, {"n_samples", "seed", "quantiles", "threads"});
        if (mc.has("n_samples")) job.mc.n_samples = mc.child("n_samples").integer();
        if (job.mc.n_samples < 1) Node::fail("n_samples must be >= 1", "/monte_carlo/n_samples");
        if (mc.has("seed")) {
            const Node s = mc.child("seed");
            if (!s.value().is_number_integer() || s.value().get<std::int64_t>() < 0)
                Node::fail("seed must be a non-negative integer", s.path());
            job.mc.seed = s.value().get<std::uint64_t>();
        }
        if (mc.has("quantiles")) {
            const std::string q = mc.child("quantiles").string();
            if (q == "min_max") job.mc.quantiles = uq::BandQuantiles::MinMax;
            else if (q == "q05_q95") job.mc.quantiles = uq::BandQuantiles::Q05Q95;
            else Node::fail("quantiles must be min_max or q05_q95", "/monte_carlo/quantiles");
        }
        if (mc.has("threads")) {
            const int t = mc.child("threads").integer();
            if (t < 0) Node::fail("threads must be >= 0", "/monte_carlo/threads");
            job.mc.threads = static_cast<unsigned>(t);
        }
    }

    if (root.has("region_grid")) {
        const Node g = root.child("region_grid");
        reject_unknown_keys(g, {"n_speed", "n_depth", "depth_max_mm"});
        if (g.has("n_speed")) job.grid.n_speed = g.child("n_speed").integer();
        if (g.has("n_depth")) job.grid.n_depth = g.child("n_depth").integer();
        if (g.has("depth_max_mm")) job.grid.depth_max = units::mm_to_m(g.child("depth_max_mm").positive());
        if (job.grid.n_speed < 2) Node::fail("n_speed must be >= 2", "/region_grid/n_speed");
        if (job.grid.n_depth < 1) Node::fail("n_depth must be >= 1", "/region_grid/n_depth");
    }

    if (root.has("points")) {
        const Node pts = root.child("points");
        for (std::size_t i = 0; i < pts.array_size(); ++i) {
            const Node p = pts.at(i);
            reject_unknown_keys(p, {"n_rpm", "ap_mm"});
            job.points.push_back({p.child("n_rpm").positive(), units::mm_to_m(p.child("ap_mm").positive())});
        }
    }

    if (root.has("outputs")) {
        const Node o = root.child("outputs");
        reject_unknown_keys(o, {"json", "csv", "svg"});
        if (o.has("json")) job.outputs.json = o.child("json").string();
        if (o.has("csv")) job.outputs.csv = o.child("csv").string();
        if (o.has("svg")) job.outputs.svg = o.child("svg").string();
    }
    return job;
}

JobSpec load_job(const fs::path& path, const cutting::CoefficientDatabase* default_db) {
    const std::string text = read_text_file(path);
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::Parse, std::string("job file is not valid JSON: ") + e.what());
    }
    return parse_job(doc, path.parent_path(), default_db);
}

JobResult run_job(const JobSpec& job) {
    uq::NominalInputs nominal{job.coefficients, job.modes};
    const auto scenarios = [&] {
        try {
            return uq::draw_scenarios(nominal, job.uncertainty, job.mc.n_samples, job.mc.seed);
        } catch (const Error& e) {
            throw e.with_context("uncertainty");
        }
    }();

    const std::vector<double> sweep_grid =
        stability::linspace(job.sweep.f_min_hz, job.sweep.f_max_hz, job.sweep.n_freq);
    uq::FrfBuilder builder;
    if (job.measured_frf) {
        builder = [&](const uq::Scenario&) { return *job.measured_frf; };
    } else {
        builder = [&](const uq::Scenario& s) { return tool::synthesize_frf(s.modes, sweep_grid); };
    }

    uq::BandConfig config;
    config.sweep = job.sweep;
    config.quantiles = job.mc.quantiles;
    config.threads = job.mc.threads;

    JobResult result;
    try {
        result.band = uq::compute_band(scenarios, job.cut, builder, config);
        result.grid = uq::build_region_grid(result.band, job.grid.n_depth, job.grid.n_speed, job.grid.depth_max);
    } catch (const Error& e) {
        throw e.with_context("stability");
    }
    for (const auto& p : job.points) {
        try {
            result.verdicts.push_back({p, uq::classify_probabilistic(p, result.band)});
        } catch (const Error& e) {
            throw e.with_context("classify");
        }
    }

    json damping = json::array();
    for (const auto& m : job.modes) damping.push_back(std::string(tool::to_string(m.source)));
    json failed = json::array();
    for (const auto& f : result.band.failed) failed.push_back({{"index", f.index}, {"reason", f.reason}});
    const char* damping_source = job.dynamics_source == DynamicsSource::Fem   ? "assumed"
                                 : job.dynamics_source == DynamicsSource::Ema ? "ema"
                                                                               : "measured_frf";
    result.metadata = {
        {"job_name", job.name},
        {"tool_name", job.tool.name},
        {"software", kSoftwareVersion},
        {"dynamics_source", to_string(job.dynamics_source)},
        {"damping_source", damping_source},
        {"mode_damping_flags", damping},
        {"material", job.material},
        {"coefficient_provenance", cutting::to_string(job.coefficients.provenance)},
        {"coefficient_origin", job.coefficient_origin},
        {"kt_mpa", units::pa_to_mpa(job.coefficients.kt)},
        {"kr", job.coefficients.kr},
        {"kt_uncertainty_pa", uq::describe(job.uncertainty.kt.value_or(uq::Fixed{job.coefficients.kt}))},
        {"kr_uncertainty", uq::describe(job.uncertainty.kr.value_or(uq::Fixed{job.coefficients.kr}))},
        {"n_teeth", job.cut.n_teeth},
        {"milling_mode", cutting::to_string(job.cut.mode)},
        {"radial_immersion", job.cut.radial_immersion},
        {"seed", job.mc.seed},
        {"n_samples", job.mc.n_samples},
        {"quantiles", uq::to_string(job.mc.quantiles)},
        {"failed_scenarios", failed},
        {"depth_cap_mm", units::m_to_mm(result.band.nominal.depth_cap)},
        {"dominant_frequency_hz", result.band.nominal.dominant_frequency_hz},
        {"zone_thresholds", "heuristic: D f_tp > f_d, C f_d/4 < f_tp <= f_d, B f_d/10 < f_tp <= f_d/4, A f_tp <= f_d/10"},
        {"provenance", job.provenance_notes},
    };
    return result;
}

PointVerdict classify_point(const JobResult& result, double n_rpm, double ap_mm) {
    const stability::OperatingPoint p{n_rpm, units::mm_to_m(ap_mm)};
    return {p, uq::classify_probabilistic(p, result.band)};
}

}  // namespace sld::io
