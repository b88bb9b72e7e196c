// Acceptance checks: one PASS/FAIL line per criterion, non-zero exit on any failure.
#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <memory>
#include <sstream>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <nlohmann/json.hpp>

#include "fixtures.hpp"
#include "schema_check.hpp"
#include "sld/cutting_mechanics.hpp"
#include "sld/job.hpp"
#include "sld/outputs.hpp"
#include "sld/stability.hpp"
#include "sld/tool_model.hpp"
#include "sld/uncertainty.hpp"

namespace {

namespace fs = std::filesystem;
using namespace sld;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail << " [failed: " << what << "]";
        }
    }
};

using Check = std::function<void(Outcome&)>;

void fem_oracle(Outcome& out) {
    const auto t0 = Clock::now();
    const auto mesh = tool::build_beam_mesh(test::uniform_rod(12.0, 80.0), 16);
    const auto modes = tool::solve_modes(tool::assemble_system(mesh, test::steel()), 1);
    const double elapsed = seconds_since(t0);
    const double analytic = test::cantilever_f1(0.012, 0.080, 210e9, 7800.0);
    const double rel = std::abs(modes.front().natural_frequency / analytic - 1.0);
    out.detail << "f1 = " << modes.front().natural_frequency << " Hz, analytic " << analytic << " Hz, rel err " << rel
               << ", " << elapsed << " s";
    out.require(rel <= 0.01, "within 1%");
    out.require(elapsed < 1.0, "runtime < 1 s");
}

double integrand(int which, double phi, double kr) {
    const double s2 = std::sin(2.0 * phi), c2 = std::cos(2.0 * phi);
    switch (which) {
        case 0: return -s2 - kr * (1.0 - c2);
        case 1: return -(1.0 + c2) - kr * s2;
        case 2: return (1.0 - c2) - kr * s2;
        default: return s2 - kr * (1.0 + c2);
    }
}

void directional_oracle(Outcome& out) {
    test::Rng rng(20240601);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        double a = test::uniform(rng, 0.0, units::pi);
        double b = test::uniform(rng, 0.0, units::pi);
        if (a > b) std::swap(a, b);
        const double kr = test::uniform(rng, 0.0, 2.0);
        const auto f = cutting::directional_factors(a, b, kr);
        const double closed[4] = {f.axx, f.axy, f.ayx, f.ayy};
        for (int w = 0; w < 4; ++w) {
            const double q = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
                [&](double phi) { return integrand(w, phi, kr); }, a, b, 15, 1e-14);
            worst = std::max(worst, std::abs(closed[w] - q));
        }
    }
    double slot_worst = 0.0;
    for (double kr : {0.0, 0.1, 0.3, 0.7, 1.5}) {
        const auto f = cutting::directional_factors(0.0, units::pi, kr);
        slot_worst = std::max({slot_worst, std::abs(f.axx + units::pi * kr), std::abs(f.ayy + units::pi * kr),
                               std::abs(f.axy + units::pi), std::abs(f.ayx - units::pi)});
    }
    out.detail << "max |closed - quadrature| = " << worst << ", slot max err = " << slot_worst;
    out.require(worst <= 1e-9, "quadrature within 1e-9");
    out.require(slot_worst <= 1e-12, "slot forms within 1e-12");
}

void zoa_consistency(Outcome& out) {
    const auto sweep = test::canonical_sweep();
    const auto frf = test::canonical_frf(sweep);
    const auto t0 = Clock::now();
    const auto sld = stability::zoa_lobes(frf, test::slot_cut(), test::canonical_coefficients(), sweep);
    const double elapsed = seconds_since(t0);
    const auto doubled = stability::zoa_lobes(frf, test::slot_cut(), test::canonical_coefficients(2.0), sweep);

    bool positive = true, decreasing = true;
    double worst_ratio = 0.0;
    std::size_t points = 0;
    out.require(sld.lobes.size() == 6, "six lobes k = 0..5");
    for (std::size_t k = 0; k < sld.lobes.size(); ++k) {
        const auto& lobe = sld.lobes[k].points;
        const auto& twin = doubled.lobes.at(k).points;
        out.require(lobe.size() == twin.size(), "same lobe support under kt doubling");
        for (std::size_t i = 0; i < lobe.size(); ++i) {
            ++points;
            positive &= lobe[i].depth_limit > 0.0;
            worst_ratio = std::max(worst_ratio, std::abs(twin[i].depth_limit / lobe[i].depth_limit - 0.5) / 0.5);
        }
    }
    // n_k at a common chatter frequency must fall as k grows.
    for (std::size_t i = 0; i < sld.lobes.front().points.size(); ++i) {
        const auto& p = sld.lobes.front().points[i];
        double prev = p.spindle_speed;
        for (std::size_t k = 1; k < sld.lobes.size(); ++k) {
            const auto& other = sld.lobes[k].points;
            auto it = std::find_if(other.begin(), other.end(),
                                   [&](const stability::LobePoint& q) { return q.sweep_index == p.sweep_index; });
            if (it == other.end()) continue;
            decreasing &= it->spindle_speed < prev;
            prev = it->spindle_speed;
        }
    }
    out.detail << points << " lobe points, max rel dev of kt-doubling ratio " << worst_ratio << ", " << elapsed << " s";
    out.require(positive, "all depths positive");
    out.require(decreasing, "n_k strictly decreasing in k");
    out.require(worst_ratio <= 1e-12, "depth halves within 1e-12");
    out.require(elapsed < 2.0, "runtime < 2 s");
}

void zoa_vs_fdm(Outcome& out) {
    const auto t0 = Clock::now();
    const auto sweep = test::canonical_sweep();
    const auto modes = test::canonical_modes();
    const auto coeffs = test::canonical_coefficients();
    const auto sld = stability::zoa_lobes(test::canonical_frf(sweep), test::slot_cut(), coeffs, sweep, modes.front());
    const auto zone = std::find_if(sld.zones.begin(), sld.zones.end(),
                                   [](const stability::ZoneRange& z) { return z.zone == stability::Zone::C; });
    if (zone == sld.zones.end()) {
        out.require(false, "zone C present in the window");
        return;
    }
    const int n_speeds = 15;
    int probes = 0, agree = 0;
    for (int i = 0; i < n_speeds; ++i) {
        const double n = zone->n_lo + (zone->n_hi - zone->n_lo) * (i + 0.5) / n_speeds;
        const double a = sld.envelope.at(n);
        for (double factor : {0.7, 1.3}) {
            const double rho = stability::fdm_spectral_radius({n, factor * a}, modes, test::slot_cut(), coeffs, 40);
            ++probes;
            agree += (factor < 1.0) == (rho < 1.0);
        }
    }
    const double period = 60.0 / (9600.0 * 2);
    const double rho0 = stability::fdm_spectral_radius({9600.0, 0.0}, modes, test::slot_cut(), coeffs, 40);
    const double expected = std::exp(-0.02 * units::two_pi * 800.0 * period);
    const double free_err = std::abs(rho0 - expected) / expected;
    const double elapsed = seconds_since(t0);
    const double rate = static_cast<double>(agree) / probes;
    out.detail << agree << "/" << probes << " probes agree across " << n_speeds << " zone-C speeds ["
               << zone->n_lo << ", " << zone->n_hi << "] rpm, free-vibration rel err " << free_err << ", " << elapsed
               << " s";
    out.require(probes >= 25, ">= 25 probes");
    out.require(rate >= 0.8, ">= 80% agreement");
    out.require(free_err <= 0.005, "free vibration within 0.5%");
    out.require(elapsed < 60.0, "runtime < 60 s");
}

uq::FrfBuilder synthesizing_builder(const stability::SweepConfig& sweep) {
    auto grid = std::make_shared<std::vector<double>>(stability::linspace(sweep.f_min_hz, sweep.f_max_hz, sweep.n_freq));
    return [grid](const uq::Scenario& s) { return tool::synthesize_frf(s.modes, *grid); };
}

uq::UncertaintySpec canonical_spec() {
    uq::UncertaintySpec spec;
    spec.kt = uq::relative_uniform(600e6, 0.2);
    spec.kr = uq::relative_uniform(0.3, 0.1);
    spec.modes = {{std::nullopt, uq::relative_uniform(0.02, 0.25), std::nullopt},
                  {std::nullopt, uq::relative_uniform(0.02, 0.25), std::nullopt}};
    return spec;
}

uq::BandConfig band_config(unsigned threads) {
    uq::BandConfig c;
    c.sweep = test::canonical_sweep();
    c.threads = threads;
    return c;
}

double max_rel(const std::vector<double>& a, const std::vector<double>& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] / b[i] - 1.0));
    return worst;
}

void band_properties(Outcome& out) {
    const uq::NominalInputs nominal{test::canonical_coefficients(), test::canonical_modes()};
    const auto cut = test::slot_cut();
    const auto builder = synthesizing_builder(test::canonical_sweep());

    const auto flat = uq::compute_band(uq::draw_scenarios(nominal, {}, 10, 1), cut, builder, band_config(1));
    double worst_width = 0.0;
    for (std::size_t i = 0; i < flat.speeds.size(); ++i)
        worst_width = std::max(worst_width, (flat.a_high[i] - flat.a_low[i]) / flat.a_nominal[i]);

    const std::vector<uq::Scenario> two{{0, test::canonical_coefficients(1.0), nominal.modes},
                                        {1, test::canonical_coefficients(0.5), nominal.modes}};
    const auto pair = uq::compute_band(two, cut, builder, band_config(1));
    const auto frf = builder(two[0]);
    const auto one_x = stability::envelope_on_grid(
        stability::zoa_lobes(frf, cut, two[0].coefficients, test::canonical_sweep()).lobes, pair.speeds,
        pair.nominal.depth_cap);
    std::vector<double> twice(one_x.depths);
    for (double& d : twice) d *= 2.0;
    const double low_err = max_rel(pair.a_low, one_x.depths);
    const double high_err = max_rel(pair.a_high, twice);

    const auto scenarios = uq::draw_scenarios(nominal, canonical_spec(), 200, 42);
    const auto t0 = Clock::now();
    const auto run1 = uq::compute_band(scenarios, cut, builder, band_config(1));
    const double elapsed = seconds_since(t0);
    const auto run2 = uq::compute_band(uq::draw_scenarios(nominal, canonical_spec(), 200, 42), cut, builder,
                                       band_config(1));
    const auto run4 = uq::compute_band(scenarios, cut, builder, band_config(4));
    const bool bitwise = run1.speeds == run2.speeds && run1.a_low == run2.a_low && run1.a_high == run2.a_high &&
                         run1.speeds == run4.speeds && run1.a_low == run4.a_low && run1.a_high == run4.a_high;

    out.detail << "zero-variance width " << worst_width << "·a, two-point low/high rel err " << low_err << "/"
               << high_err << ", bitwise " << (bitwise ? "yes" : "no") << ", 200x2000 band " << elapsed << " s";
    out.require(worst_width <= 1e-12, "zero-variance width <= 1e-12 a");
    out.require(low_err <= 1e-10 && high_err <= 1e-10, "two-point band within 1e-10");
    out.require(bitwise, "bitwise reproducible");
    out.require(elapsed < 30.0, "runtime < 30 s");
}

void region_semantics(Outcome& out) {
    const uq::NominalInputs nominal{test::canonical_coefficients(), test::canonical_modes()};
    const auto band = uq::compute_band(uq::draw_scenarios(nominal, canonical_spec(), 200, 42), test::slot_cut(),
                                       synthesizing_builder(test::canonical_sweep()), band_config(1));
    const auto grid = uq::build_region_grid(band, 100, 200);
    std::size_t nodes = 0, mismatches = 0;
    for (std::size_t j = 0; j < grid.depths.size(); ++j)
        for (std::size_t i = 0; i < grid.speeds.size(); ++i) {
            ++nodes;
            mismatches += grid.at(i, j) != uq::classify_probabilistic({grid.speeds[i], grid.depths[j]}, band).region;
        }
    test::Rng rng(606);
    const double top = 1.25 * *std::max_element(band.a_high.begin(), band.a_high.end());
    int violations = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const stability::OperatingPoint p{test::uniform(rng, band.speeds.front(), band.speeds.back()),
                                          test::uniform(rng, 0.0, top)};
        const auto v = uq::classify_probabilistic(p, band);
        if (v.region == uq::RegionClass::UnconditionallyStable && v.p_stable != 1.0) ++violations;
        if (v.region == uq::RegionClass::UnconditionallyUnstable && v.p_stable != 0.0) ++violations;
    }
    out.detail << nodes << " grid nodes, " << mismatches << " mismatches; 1000 probes, " << violations
               << " probability violations";
    out.require(mismatches == 0, "grid equals point classification");
    out.require(violations == 0, "class extremes pin p_stable");
}

int run_cli(const std::string& args) {
#ifdef SLD_CLI_PATH
    const std::string cmd = std::string("\"") + SLD_CLI_PATH + "\" " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
#else
    (void)args;
    return -1;
#endif
}

void end_to_end(Outcome& out) {
    const auto dir = fs::temp_directory_path() / "sld_acceptance";
    fs::remove_all(dir);
    const auto job = (test::jobs_dir() / "canonical.json").string();
    const int rc1 = run_cli("compute \"" + job + "\" --out-dir \"" + (dir / "run1").string() + "\"");
    const int rc2 = run_cli("compute \"" + job + "\" --out-dir \"" + (dir / "run2").string() + "\"");
    out.require(rc1 == 0 && rc2 == 0, "sld compute exits 0");
    if (!out.pass) return;
    const auto json1 = io::read_text_file(dir / "run1" / "canonical.json");
    const auto csv1 = io::read_text_file(dir / "run1" / "canonical.csv");
    const bool same = json1 == io::read_text_file(dir / "run2" / "canonical.json") &&
                      csv1 == io::read_text_file(dir / "run2" / "canonical.csv");
    const auto schema = nlohmann::json::parse(io::read_text_file(test::docs_dir() / "result.schema.json"));
    const auto errors = test::validate_schema(schema, nlohmann::json::parse(json1));
    const auto svg = io::read_text_file(dir / "run1" / "canonical.svg");
    std::size_t groups = 0;
    for (auto pos = svg.find("<g class=\"region\""); pos != std::string::npos;
         pos = svg.find("<g class=\"region\"", pos + 1))
        ++groups;
    out.detail << "JSON+CSV byte-identical " << (same ? "yes" : "no") << ", schema errors " << errors.size()
               << ", region groups " << groups;
    out.require(same, "byte-identical outputs");
    out.require(errors.empty(), "schema-valid result");
    out.require(groups == 3, "exactly three region groups");
}

}  // namespace

int main() {
    const std::pair<const char*, Check> criteria[] = {
        {"1 FEM cantilever oracle", fem_oracle},
        {"2 directional factor oracle", directional_oracle},
        {"3 ZOA self-consistency", zoa_consistency},
        {"4 ZOA vs FDM cross-oracle", zoa_vs_fdm},
        {"5 uncertainty band properties", band_properties},
        {"6 region semantics", region_semantics},
        {"7 end-to-end determinism", end_to_end},
    };
    int failures = 0;
    for (const auto& [name, check] : criteria) {
        Outcome out;
        try {
            check(out);
        } catch (const std::exception& e) {
            out.pass = false;
            out.detail << " [exception: " << e.what() << "]";
        }
        std::printf("%s criterion %s: %s\n", out.pass ? "PASS" : "FAIL", name, out.detail.str().c_str());
        std::fflush(stdout);
        failures += out.pass ? 0 : 1;
    }
    return failures == 0 ? 0 : 1;
}
