#pragma once

#include <cstdint>
#include <filesystem>
#include <list>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "sld/cutting_mechanics.hpp"
#include "sld/errors.hpp"
#include "sld/job.hpp"

namespace sld::service {

struct ServiceConfig {
    std::string host = "127.0.0.1";
    int port = 8080;
    std::optional<std::filesystem::path> coefficient_db;
    std::filesystem::path job_root = ".";  // base for file references inside posted jobs
    std::size_t cache_size = 32;
    std::string allowed_origin = "*";
    int timeout_seconds = 120;
    std::size_t max_payload_bytes = 4u << 20;
};

/// Defaults overridden by SLD_PORT, SLD_COEFFICIENT_DB, SLD_CACHE_SIZE,
/// SLD_ALLOWED_ORIGIN. Command-line flags are applied on top by the caller.
ServiceConfig config_from_environment(ServiceConfig base = {});

struct Response {
    int status = 200;
    std::string body;
};

/// Key order is already canonical in nlohmann::json; integers are folded into
/// doubles so that 2 and 2.0 hash alike.
nlohmann::json canonicalize(const nlohmann::json& value);
std::string request_hash(const nlohmann::json& job);

struct CachedComputation {
    std::string body;
    io::JobResult result;
};

/// Bounded LRU map from request hash to computed result.
class SessionCache {
public:
    explicit SessionCache(std::size_t capacity);

    std::shared_ptr<const CachedComputation> find(const std::string& hash);
    /// Keeps the first stored entry when two requests race on the same hash.
    std::shared_ptr<const CachedComputation> insert(const std::string& hash,
                                                    std::shared_ptr<const CachedComputation> entry);
    std::size_t size() const;

private:
    using Order = std::list<std::string>;
    struct Slot {
        std::shared_ptr<const CachedComputation> entry;
        Order::iterator position;
    };
    mutable std::mutex mutex_;
    std::size_t capacity_;
    Order order_;  // most recent first
    std::unordered_map<std::string, Slot> slots_;
};

class Service {
public:
    Service(cutting::CoefficientDatabase db, std::size_t cache_size, std::filesystem::path job_root = ".",
            std::vector<nlohmann::json> example_tools = {});

    Response compute(std::string_view body);
    Response classify(std::string_view body);
    Response catalog() const;
    Response health() const;

    const SessionCache& cache() const { return cache_; }

private:
    std::shared_ptr<const CachedComputation> compute_cached(const nlohmann::json& job, const std::string& hash);

    cutting::CoefficientDatabase db_;
    SessionCache cache_;
    std::filesystem::path job_root_;
    std::vector<nlohmann::json> example_tools_;
};

int http_status(ErrorCode code);
std::string error_body(std::string_view code, std::string_view message, std::string_view path = {});

/// HTTP front end. `start` binds and serves on a background thread.
class HttpServer {
public:
    HttpServer(Service& service, ServiceConfig config);
    ~HttpServer();
    HttpServer(const HttpServer&) = delete;
    HttpServer& operator=(const HttpServer&) = delete;

    /// Returns the bound port (useful with port 0).
    int start();
    /// Blocks until `stop` is called or the listener fails.
    void run();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace sld::service
