#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace masf {

enum class ErrorCode {
    dimension_too_small,
    inconsistent_dimensions,
    conservation_violation,
    missing_variable,
    bound_order,
    unbounded_variable,
    infeasible_bounds,
    too_many_binaries,
    backend_unavailable,
    parse_failure,
    threshold_order,
    empty_series,
    zero_denominator,
    zero_reference,
    incomplete_log,
    validation,
    unknown_mode,
    malformed_model,
    io,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string &what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace masf
