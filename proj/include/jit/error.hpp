#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace jit {

enum class ErrorKind {
    Dimension,
    Nesting,
    EmptyAnchor,
    Parameter,
    Budget,
    Schedule,
    Numerical,
    FieldContract,
    NoStage,
    Format,
    Config,
};

constexpr std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
    case ErrorKind::Dimension: return "dimension error";
    case ErrorKind::Nesting: return "nesting violation";
    case ErrorKind::EmptyAnchor: return "empty-anchor error";
    case ErrorKind::Parameter: return "parameter error";
    case ErrorKind::Budget: return "budget error";
    case ErrorKind::Schedule: return "schedule error";
    case ErrorKind::Numerical: return "numerical error";
    case ErrorKind::FieldContract: return "field-contract error";
    case ErrorKind::NoStage: return "no-stage error";
    case ErrorKind::Format: return "format error";
    case ErrorKind::Config: return "config error";
    }
    return "error";
}

/// Every failure raised by the engine. `kind()` names the category; `what()`
/// carries the category prefix plus the detail.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& detail)
        : std::runtime_error(std::string(to_string(kind)) + ": " + detail), kind_(kind), detail_(detail) {}

    ErrorKind kind() const noexcept { return kind_; }
    const std::string& detail() const noexcept { return detail_; }

private:
    ErrorKind kind_;
    std::string detail_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& detail) { throw Error(kind, detail); }

inline void require(bool cond, ErrorKind kind, std::string_view detail) {
    if (!cond) fail(kind, std::string(detail));
}

} // namespace jit
