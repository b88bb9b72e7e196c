#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sld {

enum class ErrorCode {
    InvalidGeometry,
    InvalidInput,
    Parse,
    NotFound,
    FileNotFound,
    Numeric,
    OutOfRange,
    Singular,
    Io,
};

std::string_view to_string(ErrorCode code);

/// Single exception type for the whole toolkit. `path` is a JSON pointer or a
/// "row N, field F" locator when the failure came from parsing a document.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message, std::string path = {});

    ErrorCode code() const noexcept { return code_; }
    const std::string& path() const noexcept { return path_; }

    /// Copy of this error with `module` prefixed to the message.
    Error with_context(std::string_view module) const;

private:
    ErrorCode code_;
    std::string path_;
};

}  // namespace sld
