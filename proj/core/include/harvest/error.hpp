#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

namespace harvest {

enum class Errc {
    InvalidArgument,
    InsufficientData,
    NoObservations,
    VarianceUndefined,
    InfeasibleAction,
    ConditionVacuous,
};

// Single exception type for the engine; callers switch on code() to map
// failures onto exit codes or HTTP statuses.
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what, std::string field = {})
        : std::runtime_error(what), code_(code), field_(std::move(field)) {}

    Errc code() const noexcept { return code_; }
    /// Dotted path of the offending input field, when known.
    const std::string& field() const noexcept { return field_; }

private:
    Errc code_;
    std::string field_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

[[noreturn]] inline void fail_field(const std::string& field, const std::string& what) {
    throw Error(Errc::InvalidArgument, field + ": " + what, field);
}

std::string_view to_string(Errc code) noexcept;

inline void require(bool cond, Errc code, const std::string& what) {
    if (!cond) fail(code, what);
}

}  // namespace harvest
