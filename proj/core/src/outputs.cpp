#include "sld/outputs.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>

#include "sld/errors.hpp"
#include "sld/units.hpp"

namespace sld::io {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::vector<double> to_mm(const std::vector<double>& metres) {
    std::vector<double> out(metres.size());
    std::transform(metres.begin(), metres.end(), out.begin(), units::m_to_mm);
    return out;
}

void append_number(std::string& out, double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, res.ptr);
}

// Fixed precision keeps the SVG text stable across platforms.
std::string fixed(double v, int digits = 2) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::vector<double> read_array(const json& doc, const char* object, const char* field) {
    try {
        return doc.at(object).at(field).get<std::vector<double>>();
    } catch (const json::exception&) {
        throw Error(ErrorCode::Parse, std::string("result document lacks numeric array ") + object + "." + field,
                    std::string("/") + object + "/" + field);
    }
}

}  // namespace

json result_document(const JobResult& result) {
    const auto& sld = result.band.nominal;
    json lobes = json::array();
    for (const auto& lobe : sld.lobes) {
        json points = json::array();
        for (const auto& p : lobe.points)
            points.push_back({{"omega_c_rad_s", p.chatter_frequency},
                              {"n_rpm", p.spindle_speed},
                              {"a_lim_mm", units::m_to_mm(p.depth_limit)}});
        lobes.push_back({{"k", lobe.lobe_index}, {"points", std::move(points)}});
    }
    json zones = json::array();
    for (const auto& z : sld.zones)
        zones.push_back({{"n_lo", z.n_lo}, {"n_hi", z.n_hi}, {"label", stability::to_string(z.zone)}});
    json verdicts = json::array();
    for (const auto& v : result.verdicts)
        verdicts.push_back({{"n_rpm", v.point.spindle_speed},
                            {"ap_mm", units::m_to_mm(v.point.axial_depth)},
                            {"class", uq::to_string(v.verdict.region)},
                            {"p_stable", v.verdict.p_stable},
                            {"margin_mm", units::m_to_mm(v.verdict.margin)}});
    return {
        {"metadata", result.metadata},
        {"lobes", std::move(lobes)},
        {"envelope", {{"n_rpm", sld.envelope.speeds}, {"a_mm", to_mm(sld.envelope.depths)}}},
        {"band",
         {{"n_rpm", result.band.speeds},
          {"a_low_mm", to_mm(result.band.a_low)},
          {"a_high_mm", to_mm(result.band.a_high)},
          {"a_nominal_mm", to_mm(result.band.a_nominal)}}},
        {"zones", std::move(zones)},
        {"verdicts", std::move(verdicts)},
    };
}

std::string result_json(const JobResult& result) { return result_document(result).dump(2) + "\n"; }

std::string band_csv(const uq::UncertaintyBand& band) {
    std::string out = "speed_rpm,a_nominal_mm,a_low_mm,a_high_mm\n";
    out.reserve(out.size() + band.speeds.size() * 80);
    for (std::size_t i = 0; i < band.speeds.size(); ++i) {
        append_number(out, band.speeds[i]);
        out += ',';
        append_number(out, units::m_to_mm(band.a_nominal[i]));
        out += ',';
        append_number(out, units::m_to_mm(band.a_low[i]));
        out += ',';
        append_number(out, units::m_to_mm(band.a_high[i]));
        out += '\n';
    }
    return out;
}

std::string render_svg(const JobResult& result) {
    const auto& band = result.band;
    constexpr double width = 900.0, height = 540.0;
    constexpr double left = 80.0, right = 20.0, top = 20.0, bottom = 70.0;
    const double plot_w = width - left - right;
    const double plot_h = height - top - bottom;

    const double n_lo = band.speeds.front();
    const double n_hi = band.speeds.back();
    double depth_top = 0.0;
    for (double a : band.a_high) depth_top = std::max(depth_top, a);
    for (const auto& v : result.verdicts) depth_top = std::max(depth_top, v.point.axial_depth);
    depth_top = units::m_to_mm(depth_top) * 1.25;
    if (!(depth_top > 0.0)) depth_top = 1.0;

    auto sx = [&](double rpm) { return left + (rpm - n_lo) / (n_hi - n_lo) * plot_w; };
    auto sy = [&](double mm) { return top + plot_h - std::clamp(mm, 0.0, depth_top) / depth_top * plot_h; };
    auto pt = [&](double rpm, double mm) { return fixed(sx(rpm)) + "," + fixed(sy(mm)); };

    const auto low = to_mm(band.a_low);
    const auto high = to_mm(band.a_high);
    const std::size_t n = band.speeds.size();

    std::string s;
    s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fixed(width, 0) + "\" height=\"" +
         fixed(height, 0) + "\" viewBox=\"0 0 " + fixed(width, 0) + " " + fixed(height, 0) + "\">\n";
    s += "<defs><clipPath id=\"plot\"><rect x=\"" + fixed(left) + "\" y=\"" + fixed(top) + "\" width=\"" +
         fixed(plot_w) + "\" height=\"" + fixed(plot_h) + "\"/></clipPath></defs>\n";
    s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

    // Region fills: below a_low, between the edges, above a_high.
    std::string stable, conditional, unstable;
    for (std::size_t i = 0; i < n; ++i) stable += pt(band.speeds[i], low[i]) + " ";
    stable += pt(n_hi, 0.0) + " " + pt(n_lo, 0.0);
    for (std::size_t i = 0; i < n; ++i) conditional += pt(band.speeds[i], high[i]) + " ";
    for (std::size_t i = n; i-- > 0;) conditional += pt(band.speeds[i], low[i]) + (i ? " " : "");
    for (std::size_t i = 0; i < n; ++i) unstable += pt(band.speeds[i], high[i]) + " ";
    unstable += pt(n_hi, depth_top) + " " + pt(n_lo, depth_top);
    s += "<g class=\"region\" id=\"region-stable\" fill=\"#4caf50\" fill-opacity=\"0.55\">"
         "<polygon points=\"" + stable + "\"/></g>\n";
    s += "<g class=\"region\" id=\"region-conditional\" fill=\"#ff9800\" fill-opacity=\"0.55\">"
         "<polygon points=\"" + conditional + "\"/></g>\n";
    s += "<g class=\"region\" id=\"region-unstable\" fill=\"#f44336\" fill-opacity=\"0.55\">"
         "<polygon points=\"" + unstable + "\"/></g>\n";

    s += "<g id=\"lobes\" fill=\"none\" stroke=\"#1a237e\" stroke-width=\"1.2\" clip-path=\"url(#plot)\">\n";
    for (const auto& lobe : band.nominal.lobes) {
        s += "<polyline class=\"lobe\" data-k=\"" + std::to_string(lobe.lobe_index) + "\" points=\"";
        for (std::size_t i = 0; i < lobe.points.size(); ++i) {
            if (i) s += ' ';
            s += pt(lobe.points[i].spindle_speed, units::m_to_mm(lobe.points[i].depth_limit));
        }
        s += "\"/>\n";
    }
    s += "</g>\n";

    s += "<g id=\"zones\" font-family=\"sans-serif\" font-size=\"12\" fill=\"#333\">\n";
    for (const auto& z : band.nominal.zones) {
        const double a = std::max(z.n_lo, n_lo), b = std::min(z.n_hi, n_hi);
        if (!(b > a)) continue;
        s += "<text x=\"" + fixed(0.5 * (sx(a) + sx(b))) + "\" y=\"" + fixed(top + 14.0) +
             "\" text-anchor=\"middle\">Zone " + std::string(stability::to_string(z.zone)) + "</text>\n";
    }
    s += "</g>\n";

    s += "<g id=\"points\" stroke=\"black\" stroke-width=\"1\">\n";
    for (const auto& v : result.verdicts) {
        const char* fill = v.verdict.region == uq::RegionClass::UnconditionallyStable ? "#1b5e20"
                           : v.verdict.region == uq::RegionClass::Conditional         ? "#e65100"
                                                                                       : "#b71c1c";
        s += "<circle cx=\"" + fixed(sx(v.point.spindle_speed)) + "\" cy=\"" +
             fixed(sy(units::m_to_mm(v.point.axial_depth))) + "\" r=\"4\" fill=\"" + fill + "\"><title>" +
             std::string(uq::to_string(v.verdict.region)) + ", p=" + fixed(v.verdict.p_stable) + "</title></circle>\n";
    }
    s += "</g>\n";

    // Axes with five ticks each.
    s += "<g id=\"axes\" stroke=\"black\" font-family=\"sans-serif\" font-size=\"12\">\n";
    s += "<rect x=\"" + fixed(left) + "\" y=\"" + fixed(top) + "\" width=\"" + fixed(plot_w) + "\" height=\"" +
         fixed(plot_h) + "\" fill=\"none\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double rpm = n_lo + (n_hi - n_lo) * i / 4.0;
        const double mm = depth_top * i / 4.0;
        s += "<text stroke=\"none\" x=\"" + fixed(sx(rpm)) + "\" y=\"" + fixed(top + plot_h + 18.0) +
             "\" text-anchor=\"middle\">" + fixed(rpm, 0) + "</text>\n";
        s += "<text stroke=\"none\" x=\"" + fixed(left - 6.0) + "\" y=\"" + fixed(sy(mm) + 4.0) +
             "\" text-anchor=\"end\">" + fixed(mm, 2) + "</text>\n";
    }
    s += "<text stroke=\"none\" x=\"" + fixed(left + plot_w / 2.0) + "\" y=\"" + fixed(height - 20.0) +
         "\" text-anchor=\"middle\">Spindle speed [rpm]</text>\n";
    s += "<text stroke=\"none\" x=\"20\" y=\"" + fixed(top + plot_h / 2.0) + "\" text-anchor=\"middle\" "
         "transform=\"rotate(-90 20 " + fixed(top + plot_h / 2.0) + ")\">Axial depth of cut [mm]</text>\n";
    s += "</g>\n</svg>\n";
    return s;
}

ResultArrays parse_result(std::string_view document) {
    json doc;
    try {
        doc = json::parse(document);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::Parse, std::string("result document is not valid JSON: ") + e.what());
    }
    ResultArrays r;
    r.metadata = doc.value("metadata", json::object());
    try {
        for (const auto& lobe : doc.at("lobes")) {
            auto& pts = r.lobes.emplace_back();
            for (const auto& p : lobe.at("points"))
                pts.push_back({p.at("omega_c_rad_s").get<double>(), p.at("n_rpm").get<double>(),
                               p.at("a_lim_mm").get<double>()});
        }
    } catch (const json::exception&) {
        throw Error(ErrorCode::Parse, "malformed lobes array", "/lobes");
    }
    r.envelope_rpm = read_array(doc, "envelope", "n_rpm");
    r.envelope_mm = read_array(doc, "envelope", "a_mm");
    r.band_rpm = read_array(doc, "band", "n_rpm");
    r.a_low_mm = read_array(doc, "band", "a_low_mm");
    r.a_high_mm = read_array(doc, "band", "a_high_mm");
    r.a_nominal_mm = read_array(doc, "band", "a_nominal_mm");
    return r;
}

void write_text_file(const fs::path& path, std::string_view content) {
    if (path.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot open " + path.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

WrittenFiles emit_outputs(const JobResult& result, const OutputSelection& selection, const std::string& job_name,
                          const fs::path& out_dir) {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw Error(ErrorCode::Io, "cannot create output directory " + out_dir.string() + ": " + ec.message());
    auto target = [&](const std::optional<std::string>& chosen, const char* ext) {
        const fs::path p = chosen ? fs::path(*chosen) : fs::path(job_name + ext);
        return p.is_absolute() ? p : out_dir / p;
    };
    WrittenFiles files{target(selection.json, ".json"), target(selection.csv, ".csv"), target(selection.svg, ".svg")};
    write_text_file(files.json, result_json(result));
    write_text_file(files.csv, band_csv(result.band));
    write_text_file(files.svg, render_svg(result));
    return files;
}

}  // namespace sld::io
