#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace silhar {

enum class ErrorCode {
    io,
    format,
    empty_silhouette,
    silhouette_too_small,
    parse,
    validation,
    parameter,
    render,
    md_undefined,
    degenerate_interval,
    metric_unavailable,
};

inline std::string_view to_string(ErrorCode code)
{
    switch (code) {
    case ErrorCode::io: return "io";
    case ErrorCode::format: return "format";
    case ErrorCode::empty_silhouette: return "empty-silhouette";
    case ErrorCode::silhouette_too_small: return "silhouette-too-small";
    case ErrorCode::parse: return "parse";
    case ErrorCode::validation: return "validation";
    case ErrorCode::parameter: return "parameter";
    case ErrorCode::render: return "render";
    case ErrorCode::md_undefined: return "md-undefined";
    case ErrorCode::degenerate_interval: return "degenerate-interval";
    case ErrorCode::metric_unavailable: return "metric-unavailable";
    }
    return "unknown";
}

// Every failure raised by the library carries one of the codes above so the
// CLI can map it onto an exit status without string matching.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code)
    {
    }

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

} // namespace silhar
