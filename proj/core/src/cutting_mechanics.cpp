#include "sld/cutting_mechanics.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "sld/errors.hpp"
#include "sld/units.hpp"

namespace sld::cutting {

using nlohmann::json;

void CoefficientSet::validate() const {
    if (!(std::isfinite(kt) && kt > 0.0)) throw Error(ErrorCode::InvalidInput, "kt must be > 0");
    if (!(kr > 0.0 && kr < 2.0)) throw Error(ErrorCode::InvalidInput, "kr must lie in (0, 2)");
    uq::validate(kt_uncertainty, "kt");
    uq::validate(kr_uncertainty, "kr");
}

void CutSpec::validate() const {
    if (!(radial_immersion > 0.0 && radial_immersion <= 1.0))
        throw Error(ErrorCode::InvalidInput, "radial_immersion must lie in (0, 1]", "/cut/radial_immersion");
    if (mode == MillingMode::Slot && radial_immersion != 1.0)
        throw Error(ErrorCode::InvalidInput, "slot milling requires radial_immersion = 1",
                    "/cut/radial_immersion");
    if (n_teeth < 1) throw Error(ErrorCode::InvalidInput, "n_teeth must be >= 1", "/cut/n_teeth");
}

std::pair<double, double> engagement_angles(const CutSpec& cut) {
    cut.validate();
    const double r = cut.radial_immersion;
    switch (cut.mode) {
        case MillingMode::Slot: return {0.0, units::pi};
        case MillingMode::Up: return {0.0, std::acos(1.0 - 2.0 * r)};
        case MillingMode::Down: return {std::acos(2.0 * r - 1.0), units::pi};
    }
    return {0.0, units::pi};
}

namespace {

// Primitives of the directional coefficient integrands; alpha = P(exit) - P(start).
AlphaMatrix primitives(double phi, double kr) {
    const double c2 = std::cos(2.0 * phi);
    const double s2 = std::sin(2.0 * phi);
    return {0.5 * (c2 - 2.0 * kr * phi + kr * s2),
            0.5 * (-s2 - 2.0 * phi + kr * c2),
            0.5 * (-s2 + 2.0 * phi + kr * c2),
            0.5 * (-c2 - 2.0 * kr * phi - kr * s2)};
}

}  // namespace

AlphaMatrix directional_factors(double phi_start, double phi_exit, double kr) {
    if (!(phi_start >= 0.0 && phi_start < phi_exit && phi_exit <= units::pi))
        throw Error(ErrorCode::InvalidInput, "engagement angles must satisfy 0 <= start < exit <= pi");
    const AlphaMatrix a = primitives(phi_exit, kr);
    const AlphaMatrix b = primitives(phi_start, kr);
    return {a.axx - b.axx, a.axy - b.axy, a.ayx - b.ayx, a.ayy - b.ayy};
}

CoefficientDatabase::CoefficientDatabase(std::vector<MaterialEntry> materials)
    : materials_(std::move(materials)) {}

CoefficientDatabase CoefficientDatabase::parse(std::string_view document) {
    json doc;
    try {
        doc = json::parse(document);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::Parse, std::string("coefficient DB is not valid JSON: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("materials") || !doc["materials"].is_array())
        throw Error(ErrorCode::Parse, "coefficient DB needs a 'materials' array", "/materials");

    auto num = [](const json& obj, const char* key, const std::string& path) {
        if (!obj.is_object() || !obj.contains(key) || !obj[key].is_number())
            throw Error(ErrorCode::Parse, std::string("missing numeric field '") + key + "'",
                        path + "/" + key);
        return obj[key].get<double>();
    };

    std::vector<MaterialEntry> out;
    const auto& mats = doc["materials"];
    for (std::size_t i = 0; i < mats.size(); ++i) {
        const std::string base = "/materials/" + std::to_string(i);
        const auto& m = mats[i];
        if (!m.is_object() || !m.contains("name") || !m["name"].is_string())
            throw Error(ErrorCode::Parse, "material needs a name", base + "/name");
        MaterialEntry e;
        e.name = m["name"].get<std::string>();
        if (m.contains("catalog")) {
            const auto& c = m["catalog"];
            CatalogEntry ce;
            ce.kt_mpa = num(c, "kt_mpa", base + "/catalog");
            ce.kr = num(c, "kr", base + "/catalog");
            if (c.contains("kt_rel_unc")) ce.kt_rel_unc = num(c, "kt_rel_unc", base + "/catalog");
            if (c.contains("kr_rel_unc")) ce.kr_rel_unc = num(c, "kr_rel_unc", base + "/catalog");
            e.catalog = ce;
        }
        if (m.contains("tests")) {
            if (!m["tests"].is_array())
                throw Error(ErrorCode::Parse, "'tests' must be an array", base + "/tests");
            for (std::size_t t = 0; t < m["tests"].size(); ++t) {
                const auto& row = m["tests"][t];
                const std::string tb = base + "/tests/" + std::to_string(t);
                TestEntry te;
                te.kt_mpa_mean = num(row, "kt_mpa_mean", tb);
                te.kt_mpa_std = num(row, "kt_mpa_std", tb);
                te.kr_mean = num(row, "kr_mean", tb);
                te.kr_std = num(row, "kr_std", tb);
                if (row.contains("note") && row["note"].is_string()) te.note = row["note"].get<std::string>();
                e.tests.push_back(std::move(te));
            }
        }
        out.push_back(std::move(e));
    }
    return CoefficientDatabase(std::move(out));
}

const MaterialEntry* CoefficientDatabase::find(std::string_view name) const {
    for (const auto& m : materials_)
        if (m.name == name) return &m;
    return nullptr;
}

std::vector<std::string> CoefficientDatabase::names() const {
    std::vector<std::string> out;
    out.reserve(materials_.size());
    for (const auto& m : materials_) out.push_back(m.name);
    std::sort(out.begin(), out.end());
    return out;
}

CoefficientSet resolve_coefficients(std::string_view material_name, CoefficientProvenance source,
                                    const CoefficientDatabase& database) {
    const MaterialEntry* entry = database.find(material_name);
    auto not_found = [&](const std::string& what) {
        std::string available;
        for (const auto& n : database.names()) available += (available.empty() ? "" : ", ") + n;
        return Error(ErrorCode::NotFound, what + "; available materials: [" + available + "]");
    };
    if (!entry) throw not_found("unknown material '" + std::string(material_name) + "'");

    CoefficientSet set;
    set.provenance = source;
    if (source == CoefficientProvenance::Catalog) {
        if (!entry->catalog) throw not_found("material '" + entry->name + "' has no catalog entry");
        const auto& c = *entry->catalog;
        set.kt = units::mpa_to_pa(c.kt_mpa);
        set.kr = c.kr;
        set.kt_uncertainty = uq::relative_uniform(set.kt, c.kt_rel_unc.value_or(kDefaultCatalogRelUncertainty));
        set.kr_uncertainty = uq::relative_uniform(set.kr, c.kr_rel_unc.value_or(kDefaultCatalogRelUncertainty));
    } else {
        if (entry->tests.empty()) throw not_found("material '" + entry->name + "' has no cutting tests");
        // Most recent record wins.
        const auto& t = entry->tests.back();
        set.kt = units::mpa_to_pa(t.kt_mpa_mean);
        set.kr = t.kr_mean;
        set.kt_uncertainty = uq::Normal{set.kt, units::mpa_to_pa(t.kt_mpa_std)};
        set.kr_uncertainty = uq::Normal{set.kr, t.kr_std};
    }
    set.validate();
    return set;
}

std::string_view to_string(MillingMode m) {
    switch (m) {
        case MillingMode::Up: return "up";
        case MillingMode::Down: return "down";
        case MillingMode::Slot: return "slot";
    }
    return "slot";
}

std::string_view to_string(CoefficientProvenance p) {
    return p == CoefficientProvenance::Test ? "test" : "catalog";
}

MillingMode parse_milling_mode(std::string_view s) {
    if (s == "up") return MillingMode::Up;
    if (s == "down") return MillingMode::Down;
    if (s == "slot") return MillingMode::Slot;
    throw Error(ErrorCode::Parse, "milling mode must be up, down or slot", "/cut/mode");
}

CoefficientProvenance parse_provenance(std::string_view s) {
    if (s == "catalog") return CoefficientProvenance::Catalog;
    if (s == "test") return CoefficientProvenance::Test;
    throw Error(ErrorCode::Parse, "coefficient source must be catalog or test", "/coefficient_source");
}

}  // namespace sld::cutting
