#include "masf/error.hpp"

namespace masf {

std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::dimension_too_small: return "dimension-too-small";
    case ErrorCode::inconsistent_dimensions: return "inconsistent-dimensions";
    case ErrorCode::conservation_violation: return "conservation-violation";
    case ErrorCode::missing_variable: return "missing-variable";
    case ErrorCode::bound_order: return "bound-order";
    case ErrorCode::unbounded_variable: return "unbounded-variable";
    case ErrorCode::infeasible_bounds: return "infeasible-bounds";
    case ErrorCode::too_many_binaries: return "too-many-binaries";
    case ErrorCode::backend_unavailable: return "backend-unavailable";
    case ErrorCode::parse_failure: return "parse-failure";
    case ErrorCode::threshold_order: return "threshold-order";
    case ErrorCode::empty_series: return "empty-series";
    case ErrorCode::zero_denominator: return "zero-denominator";
    case ErrorCode::zero_reference: return "zero-reference";
    case ErrorCode::incomplete_log: return "incomplete-log";
    case ErrorCode::validation: return "validation";
    case ErrorCode::unknown_mode: return "unknown-mode";
    case ErrorCode::malformed_model: return "malformed-model";
    case ErrorCode::io: return "io";
    }
    return "unknown";
}

}  // namespace masf
