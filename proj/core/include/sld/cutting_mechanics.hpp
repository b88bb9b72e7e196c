#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sld/distribution.hpp"

namespace sld::cutting {

enum class CoefficientProvenance { Catalog, Test };

/// Linear-edge cutting force coefficients. kt in Pa, kr dimensionless.
struct CoefficientSet {
    double kt = 0.0;
    double kr = 0.0;
    CoefficientProvenance provenance = CoefficientProvenance::Catalog;
    uq::Distribution kt_uncertainty = uq::Fixed{};
    uq::Distribution kr_uncertainty = uq::Fixed{};

    void validate() const;
};

enum class MillingMode { Up, Down, Slot };

struct CutSpec {
    MillingMode mode = MillingMode::Slot;
    double radial_immersion = 1.0;  // a_r / D
    int n_teeth = 2;

    void validate() const;
};

/// Averaged (zero-order) directional factors, i.e. the integrals of the
/// instantaneous directional coefficients over the engagement arc.
struct AlphaMatrix {
    double axx = 0.0;
    double axy = 0.0;
    double ayx = 0.0;
    double ayy = 0.0;
};

/// Entry and exit angles [rad]. Angles are measured from the +Y axis toward the
/// cut, so up-milling enters at 0 and down-milling exits at pi.
std::pair<double, double> engagement_angles(const CutSpec& cut);

AlphaMatrix directional_factors(double phi_start, double phi_exit, double kr);

struct CatalogEntry {
    double kt_mpa = 0.0;
    double kr = 0.0;
    std::optional<double> kt_rel_unc;
    std::optional<double> kr_rel_unc;
};

struct TestEntry {
    double kt_mpa_mean = 0.0;
    double kt_mpa_std = 0.0;
    double kr_mean = 0.0;
    double kr_std = 0.0;
    std::string note;
};

struct MaterialEntry {
    std::string name;
    std::optional<CatalogEntry> catalog;
    std::vector<TestEntry> tests;
};

/// Immutable after parsing.
class CoefficientDatabase {
public:
    CoefficientDatabase() = default;
    explicit CoefficientDatabase(std::vector<MaterialEntry> materials);

    static CoefficientDatabase parse(std::string_view document);

    const std::vector<MaterialEntry>& materials() const { return materials_; }
    const MaterialEntry* find(std::string_view name) const;
    /// Material names in lexicographic order.
    std::vector<std::string> names() const;

private:
    std::vector<MaterialEntry> materials_;
};

inline constexpr double kDefaultCatalogRelUncertainty = 0.30;

CoefficientSet resolve_coefficients(std::string_view material_name, CoefficientProvenance source,
                                    const CoefficientDatabase& database);

std::string_view to_string(MillingMode m);
std::string_view to_string(CoefficientProvenance p);
MillingMode parse_milling_mode(std::string_view s);
CoefficientProvenance parse_provenance(std::string_view s);

}  // namespace sld::cutting
