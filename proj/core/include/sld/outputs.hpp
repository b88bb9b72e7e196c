#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "sld/job.hpp"

namespace sld::io {

/// Result document in boundary units (rpm, mm, rad/s).
nlohmann::json result_document(const JobResult& result);

/// Serialized result document. Doubles are written in shortest round-trip form.
std::string result_json(const JobResult& result);

std::string band_csv(const uq::UncertaintyBand& band);

/// Standalone SVG: three region fills, one polyline per lobe, probed points.
std::string render_svg(const JobResult& result);

/// Numeric content of a result document, as read back from its text.
struct ResultArrays {
    nlohmann::json metadata;
    std::vector<std::vector<std::array<double, 3>>> lobes;  // (omega_c, n_rpm, a_lim_mm)
    std::vector<double> envelope_rpm;
    std::vector<double> envelope_mm;
    std::vector<double> band_rpm;
    std::vector<double> a_low_mm;
    std::vector<double> a_high_mm;
    std::vector<double> a_nominal_mm;
};

ResultArrays parse_result(std::string_view document);

void write_text_file(const std::filesystem::path& path, std::string_view content);

struct WrittenFiles {
    std::filesystem::path json;
    std::filesystem::path csv;
    std::filesystem::path svg;
};

/// Writes the selected outputs. Unset selections default to `<job name>.{json,csv,svg}`
/// inside `out_dir`; relative selections resolve against `out_dir`.
WrittenFiles emit_outputs(const JobResult& result, const OutputSelection& selection, const std::string& job_name,
                          const std::filesystem::path& out_dir);

}  // namespace sld::io
