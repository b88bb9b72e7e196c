#include "sld/errors.hpp"

namespace sld {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidGeometry: return "invalid_geometry";
        case ErrorCode::InvalidInput: return "invalid_input";
        case ErrorCode::Parse: return "parse_error";
        case ErrorCode::NotFound: return "not_found";
        case ErrorCode::FileNotFound: return "file_not_found";
        case ErrorCode::Numeric: return "numeric_error";
        case ErrorCode::OutOfRange: return "out_of_range";
        case ErrorCode::Singular: return "singular";
        case ErrorCode::Io: return "io_error";
    }
    return "unknown";
}

Error::Error(ErrorCode code, const std::string& message, std::string path)
    : std::runtime_error(message), code_(code), path_(std::move(path)) {}

Error Error::with_context(std::string_view module) const {
    return Error(code_, std::string(module) + ": " + what(), path_);
}

}  // namespace sld
