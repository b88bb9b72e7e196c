#include "sld/service.hpp"

#include <cstdio>
#include <cstdlib>
#include <thread>

#include <httplib.h>

#include "sld/errors.hpp"
#include "sld/outputs.hpp"
#include "sld/units.hpp"

namespace sld::service {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::uint64_t fnv1a(std::string_view text) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::optional<std::string> env(const char* name) {
    const char* v = std::getenv(name);
    if (!v || !*v) return std::nullopt;
    return std::string(v);
}

Response error_response(const Error& e) {
    return {http_status(e.code()), error_body(to_string(e.code()), e.what(), e.path())};
}

json parse_body(std::string_view body) {
    try {
        return json::parse(body);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::Parse, std::string("request body is not valid JSON: ") + e.what());
    }
}

}  // namespace

ServiceConfig config_from_environment(ServiceConfig base) {
    auto as_size = [](const std::string& s, const char* name) {
        char* end = nullptr;
        const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
        if (end == s.c_str() || *end != '\0')
            throw Error(ErrorCode::InvalidInput, std::string(name) + " must be a non-negative integer");
        return v;
    };
    if (auto v = env("SLD_PORT")) base.port = static_cast<int>(as_size(*v, "SLD_PORT"));
    if (auto v = env("SLD_COEFFICIENT_DB")) base.coefficient_db = *v;
    if (auto v = env("SLD_CACHE_SIZE")) base.cache_size = as_size(*v, "SLD_CACHE_SIZE");
    if (auto v = env("SLD_ALLOWED_ORIGIN")) base.allowed_origin = *v;
    return base;
}

json canonicalize(const json& value) {
    switch (value.type()) {
        case json::value_t::object: {
            json out = json::object();
            for (const auto& [k, v] : value.items()) out[k] = canonicalize(v);
            return out;
        }
        case json::value_t::array: {
            json out = json::array();
            for (const auto& v : value) out.push_back(canonicalize(v));
            return out;
        }
        case json::value_t::number_integer:
        case json::value_t::number_unsigned:
            return value.get<double>();
        default:
            return value;
    }
}

std::string request_hash(const json& job) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(canonicalize(job).dump())));
    return buf;
}

SessionCache::SessionCache(std::size_t capacity) : capacity_(capacity) {}

std::shared_ptr<const CachedComputation> SessionCache::find(const std::string& hash) {
    std::lock_guard lock(mutex_);
    auto it = slots_.find(hash);
    if (it == slots_.end()) return nullptr;
    order_.splice(order_.begin(), order_, it->second.position);
    return it->second.entry;
}

std::shared_ptr<const CachedComputation> SessionCache::insert(const std::string& hash,
                                                              std::shared_ptr<const CachedComputation> entry) {
    std::lock_guard lock(mutex_);
    if (auto it = slots_.find(hash); it != slots_.end()) {
        order_.splice(order_.begin(), order_, it->second.position);
        return it->second.entry;
    }
    if (capacity_ == 0) return entry;
    while (slots_.size() >= capacity_) {
        slots_.erase(order_.back());
        order_.pop_back();
    }
    order_.push_front(hash);
    slots_.emplace(hash, Slot{entry, order_.begin()});
    return entry;
}

std::size_t SessionCache::size() const {
    std::lock_guard lock(mutex_);
    return slots_.size();
}

int http_status(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidGeometry:
        case ErrorCode::InvalidInput:
        case ErrorCode::Parse:
        case ErrorCode::NotFound:
        case ErrorCode::FileNotFound:
        case ErrorCode::OutOfRange:
            return 400;
        case ErrorCode::Numeric:
        case ErrorCode::Singular:
            return 422;
        case ErrorCode::Io:
            return 500;
    }
    return 500;
}

std::string error_body(std::string_view code, std::string_view message, std::string_view path) {
    json err{{"code", code}, {"message", message}};
    if (!path.empty()) err["path"] = path;
    return json{{"error", err}}.dump();
}

Service::Service(cutting::CoefficientDatabase db, std::size_t cache_size, fs::path job_root,
                 std::vector<json> example_tools)
    : db_(std::move(db)), cache_(cache_size), job_root_(std::move(job_root)), example_tools_(std::move(example_tools)) {}

std::shared_ptr<const CachedComputation> Service::compute_cached(const json& job, const std::string& hash) {
    if (auto hit = cache_.find(hash)) return hit;
    const io::JobSpec spec = io::parse_job(job, job_root_, &db_);
    auto entry = std::make_shared<CachedComputation>();
    entry->result = io::run_job(spec);
    entry->result.metadata["request_hash"] = hash;
    entry->body = io::result_json(entry->result);
    return cache_.insert(hash, std::move(entry));
}

Response Service::compute(std::string_view body) {
    try {
        const json job = parse_body(body);
        if (!job.is_object()) throw Error(ErrorCode::Parse, "request body must be a job object", "");
        return {200, compute_cached(job, request_hash(job))->body};
    } catch (const Error& e) {
        return error_response(e);
    } catch (const std::exception& e) {
        return {500, error_body("internal", e.what())};
    }
}

Response Service::classify(std::string_view body) {
    try {
        const json req = parse_body(body);
        if (!req.is_object() || !req.contains("point") || !req["point"].is_object())
            throw Error(ErrorCode::Parse, "request needs a point object", "/point");
        const json& p = req["point"];
        if (!p.contains("n_rpm") || !p["n_rpm"].is_number())
            throw Error(ErrorCode::Parse, "point.n_rpm must be a number", "/point/n_rpm");
        if (!p.contains("ap_mm") || !p["ap_mm"].is_number())
            throw Error(ErrorCode::Parse, "point.ap_mm must be a number", "/point/ap_mm");

        std::shared_ptr<const CachedComputation> computed;
        std::string hash;
        if (req.contains("hash")) {
            if (!req["hash"].is_string()) throw Error(ErrorCode::Parse, "hash must be a string", "/hash");
            hash = req["hash"].get<std::string>();
            computed = cache_.find(hash);
            if (!computed)
                return {404, error_body("not_found", "no cached computation with hash " + hash, "/hash")};
        } else if (req.contains("job") && req["job"].is_object()) {
            hash = request_hash(req["job"]);
            computed = compute_cached(req["job"], hash);
        } else {
            throw Error(ErrorCode::Parse, "request needs either 'hash' or an inline 'job'", "/hash");
        }

        const double n_rpm = p["n_rpm"].get<double>();
        const double ap_mm = p["ap_mm"].get<double>();
        const auto& band = computed->result.band;
        if (!band.contains(n_rpm)) {
            return {400, error_body("out_of_range",
                                    "n_rpm outside the computed speed window [" + std::to_string(band.speeds.front()) +
                                        ", " + std::to_string(band.speeds.back()) + "]",
                                    "/point/n_rpm")};
        }
        const auto v = io::classify_point(computed->result, n_rpm, ap_mm);
        return {200, json{{"hash", hash},
                          {"n_rpm", n_rpm},
                          {"ap_mm", ap_mm},
                          {"class", uq::to_string(v.verdict.region)},
                          {"p_stable", v.verdict.p_stable},
                          {"margin_mm", units::m_to_mm(v.verdict.margin)}}
                         .dump()};
    } catch (const Error& e) {
        return error_response(e);
    } catch (const std::exception& e) {
        return {500, error_body("internal", e.what())};
    }
}

Response Service::catalog() const {
    json materials = json::array();
    for (const auto& name : db_.names()) {
        const auto* m = db_.find(name);
        json sources = json::array();
        if (m->catalog) sources.push_back("catalog");
        if (!m->tests.empty()) sources.push_back("test");
        materials.push_back({{"name", name}, {"sources", sources}});
    }
    return {200, json{{"materials", materials}, {"tools", example_tools_}}.dump()};
}

Response Service::health() const {
    return {200, json{{"status", "ok"}, {"version", io::kSoftwareVersion}, {"cached", cache_.size()}}.dump()};
}

struct HttpServer::Impl {
    Service& service;
    ServiceConfig config;
    httplib::Server server;
    std::thread thread;
    int port = -1;

    Impl(Service& s, ServiceConfig c) : service(s), config(std::move(c)) {}
};

HttpServer::HttpServer(Service& service, ServiceConfig config)
    : impl_(std::make_unique<Impl>(service, std::move(config))) {
    auto& srv = impl_->server;
    auto& cfg = impl_->config;
    srv.set_read_timeout(cfg.timeout_seconds, 0);
    srv.set_write_timeout(cfg.timeout_seconds, 0);
    srv.set_payload_max_length(cfg.max_payload_bytes);

    const std::string origin = cfg.allowed_origin;
    auto reply = [origin](httplib::Response& res, const Response& r) {
        res.status = r.status;
        res.set_header("Access-Control-Allow-Origin", origin);
        res.set_content(r.body, "application/json");
    };
    Service* svc = &service;
    srv.Post("/api/v1/compute", [=](const httplib::Request& req, httplib::Response& res) {
        reply(res, svc->compute(req.body));
    });
    srv.Post("/api/v1/classify", [=](const httplib::Request& req, httplib::Response& res) {
        reply(res, svc->classify(req.body));
    });
    srv.Get("/api/v1/catalog", [=](const httplib::Request&, httplib::Response& res) { reply(res, svc->catalog()); });
    srv.Get("/api/v1/health", [=](const httplib::Request&, httplib::Response& res) { reply(res, svc->health()); });
    srv.Options(R"(/api/v1/.*)", [origin](const httplib::Request&, httplib::Response& res) {
        res.status = 204;
        res.set_header("Access-Control-Allow-Origin", origin);
        res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
        res.set_header("Access-Control-Allow-Headers", "Content-Type");
    });
    srv.set_error_handler([origin](const httplib::Request&, httplib::Response& res) {
        if (!res.body.empty()) return;
        const char* code = res.status == 404 ? "not_found" : res.status == 413 ? "payload_too_large" : "http_error";
        res.set_header("Access-Control-Allow-Origin", origin);
        res.set_content(error_body(code, "HTTP " + std::to_string(res.status)), "application/json");
    });
    srv.set_exception_handler([origin](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
        std::string message = "unexpected failure";
        try {
            if (ep) std::rethrow_exception(ep);
        } catch (const std::exception& e) {
            message = e.what();
        } catch (...) {
        }
        res.status = 500;
        res.set_header("Access-Control-Allow-Origin", origin);
        res.set_content(error_body("internal", message), "application/json");
    });
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::start() {
    auto& cfg = impl_->config;
    if (cfg.port == 0) {
        impl_->port = impl_->server.bind_to_any_port(cfg.host);
    } else if (impl_->server.bind_to_port(cfg.host, cfg.port)) {
        impl_->port = cfg.port;
    }
    if (impl_->port <= 0)
        throw Error(ErrorCode::Io, "cannot bind " + cfg.host + ":" + std::to_string(cfg.port));
    impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
    return impl_->port;
}

void HttpServer::run() {
    if (impl_->thread.joinable()) impl_->thread.join();
}

void HttpServer::stop() {
    if (!impl_) return;
    impl_->server.stop();
    if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace sld::service
