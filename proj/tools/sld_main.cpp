// sld: command-line front end.
//   sld compute <job> [--out-dir DIR] [--threads N]
//   sld classify <job> --n RPM --ap MM
//   sld tool-modes <toolfile>
//   sld serve --port P
#include <cstdlib>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "sld/errors.hpp"
#include "sld/job.hpp"
#include "sld/outputs.hpp"
#include "sld/service.hpp"
#include "sld/units.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

enum ExitCode { kOk = 0, kValidation = 2, kNumeric = 3, kIo = 4 };

int exit_code(sld::ErrorCode code) {
    using sld::ErrorCode;
    switch (code) {
        case ErrorCode::Numeric:
        case ErrorCode::Singular:
            return kNumeric;
        case ErrorCode::FileNotFound:
        case ErrorCode::Io:
            return kIo;
        default:
            return kValidation;
    }
}

std::optional<sld::cutting::CoefficientDatabase> load_db(const std::string& flag) {
    std::string path = flag;
    if (path.empty()) {
        if (const char* env = std::getenv("SLD_COEFFICIENT_DB")) path = env;
    }
    if (path.empty()) return std::nullopt;
    return sld::cutting::CoefficientDatabase::parse(sld::io::read_text_file(path));
}

sld::io::JobSpec load(const std::string& job_path, const std::string& db_flag, std::optional<unsigned> threads) {
    const auto db = load_db(db_flag);
    auto job = sld::io::load_job(job_path, db ? &*db : nullptr);
    if (threads) job.mc.threads = *threads;
    return job;
}

int run_compute(const std::string& job_path, const std::string& out_dir, const std::string& db,
                std::optional<unsigned> threads) {
    const auto job = load(job_path, db, threads);
    const auto result = sld::io::run_job(job);
    const auto files = sld::io::emit_outputs(result, job.outputs, job.name, out_dir);
    std::cout << "wrote " << files.json.string() << "\n"
              << "wrote " << files.csv.string() << "\n"
              << "wrote " << files.svg.string() << "\n";
    for (const auto& f : result.band.failed)
        std::cerr << "warning: scenario " << f.index << " failed: " << f.reason << "\n";
    return kOk;
}

int run_classify(const std::string& job_path, double n_rpm, double ap_mm, const std::string& db,
                 std::optional<unsigned> threads) {
    const auto job = load(job_path, db, threads);
    const auto result = sld::io::run_job(job);
    const auto v = sld::io::classify_point(result, n_rpm, ap_mm);
    std::cout << json{{"n_rpm", n_rpm},
                      {"ap_mm", ap_mm},
                      {"class", sld::uq::to_string(v.verdict.region)},
                      {"p_stable", v.verdict.p_stable},
                      {"margin_mm", sld::units::m_to_mm(v.verdict.margin)}}
                     .dump(2)
              << "\n";
    return kOk;
}

int run_tool_modes(const std::string& tool_path, int elements, int n_modes, double damping) {
    const auto tool = sld::tool::parse_tool(sld::io::read_text_file(tool_path));
    const auto mesh = sld::tool::build_beam_mesh(tool.geometry, elements);
    const auto system = sld::tool::assemble_system(mesh, tool.material);
    const auto modes = sld::tool::solve_modes(system, n_modes, damping);
    json rows = json::array();
    for (const auto& m : modes)
        rows.push_back({{"direction", sld::tool::to_string(m.direction)},
                        {"f_hz", m.natural_frequency},
                        {"zeta", m.damping_ratio},
                        {"k_n_per_m", m.modal_stiffness},
                        {"damping_source", sld::tool::to_string(m.source)}});
    std::cout << json{{"tool", tool.name}, {"modes", rows}}.dump(2) << "\n";
    return kOk;
}

int run_serve(sld::service::ServiceConfig cfg) {
    sld::cutting::CoefficientDatabase db;
    if (cfg.coefficient_db) db = sld::cutting::CoefficientDatabase::parse(sld::io::read_text_file(*cfg.coefficient_db));
    sld::service::Service service(std::move(db), cfg.cache_size, cfg.job_root);
    sld::service::HttpServer server(service, cfg);
    const int port = server.start();
    std::cerr << "listening on http://" << cfg.host << ":" << port << "\n";
    server.run();
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Stability lobe diagrams with uncertainty bands for milling"};
    app.require_subcommand(1);
    app.set_version_flag("--version", sld::io::kSoftwareVersion);

    std::string db_path;
    std::string job_path;
    std::string out_dir = ".";
    std::optional<unsigned> threads;
    double n_rpm = 0.0, ap_mm = 0.0;

    auto* compute = app.add_subcommand("compute", "Run a job and write JSON, CSV and SVG outputs");
    compute->add_option("job", job_path, "Job file")->required()->check(CLI::ExistingFile);
    compute->add_option("--out-dir", out_dir, "Output directory");
    compute->add_option("--threads", threads, "Monte Carlo worker threads (0 = all cores)");
    compute->add_option("--db", db_path, "Coefficient database (default $SLD_COEFFICIENT_DB)");

    auto* classify = app.add_subcommand("classify", "Classify one operating point against a job's band");
    classify->add_option("job", job_path, "Job file")->required()->check(CLI::ExistingFile);
    classify->add_option("--n", n_rpm, "Spindle speed [rpm]")->required();
    classify->add_option("--ap", ap_mm, "Axial depth of cut [mm]")->required();
    classify->add_option("--threads", threads, "Monte Carlo worker threads (0 = all cores)");
    classify->add_option("--db", db_path, "Coefficient database (default $SLD_COEFFICIENT_DB)");

    std::string tool_path;
    int elements = 8, n_modes = 3;
    double damping = 0.02;
    auto* tool_modes = app.add_subcommand("tool-modes", "FEM modes of a tool file");
    tool_modes->add_option("toolfile", tool_path, "Tool file")->required()->check(CLI::ExistingFile);
    tool_modes->add_option("--elements", elements, "Elements per segment")->check(CLI::PositiveNumber);
    tool_modes->add_option("--modes", n_modes, "Modes per direction")->check(CLI::PositiveNumber);
    tool_modes->add_option("--damping", damping, "Assumed damping ratio")->check(CLI::Range(0.0, 1.0));

    sld::service::ServiceConfig serve_cfg;
    std::optional<int> port;
    std::optional<std::size_t> cache_size;
    std::optional<std::string> origin, serve_db, host;
    std::optional<std::string> job_root;
    auto* serve = app.add_subcommand("serve", "Serve the HTTP API");
    serve->add_option("--port", port, "Listen port (default $SLD_PORT or 8080)");
    serve->add_option("--host", host, "Bind address");
    serve->add_option("--db", serve_db, "Coefficient database (default $SLD_COEFFICIENT_DB)");
    serve->add_option("--cache-size", cache_size, "Cached computations (default $SLD_CACHE_SIZE or 32)");
    serve->add_option("--allowed-origin", origin, "CORS origin (default $SLD_ALLOWED_ORIGIN or *)");
    serve->add_option("--job-root", job_root, "Base directory for file references in posted jobs");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kValidation;
    }

    try {
        if (*compute) return run_compute(job_path, out_dir, db_path, threads);
        if (*classify) return run_classify(job_path, n_rpm, ap_mm, db_path, threads);
        if (*tool_modes) return run_tool_modes(tool_path, elements, n_modes, damping);
        if (*serve) {
            serve_cfg = sld::service::config_from_environment(serve_cfg);
            if (port) serve_cfg.port = *port;
            if (host) serve_cfg.host = *host;
            if (serve_db) serve_cfg.coefficient_db = *serve_db;
            if (cache_size) serve_cfg.cache_size = *cache_size;
            if (origin) serve_cfg.allowed_origin = *origin;
            if (job_root) serve_cfg.job_root = *job_root;
            return run_serve(serve_cfg);
        }
    } catch (const sld::Error& e) {
        std::cerr << "error [" << sld::to_string(e.code()) << "]";
        if (!e.path().empty()) std::cerr << " at " << e.path();
        std::cerr << ": " << e.what() << "\n";
        return exit_code(e.code());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kIo;
    }
    return kOk;
}
