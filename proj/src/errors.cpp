#include "opo/errors.hpp"

namespace opo
{
std::string_view to_string(ErrorCode code) noexcept
{
    switch (code) {
    case ErrorCode::domain: return "domain";
    case ErrorCode::above_threshold: return "above_threshold";
    case ErrorCode::infinite_threshold: return "infinite_threshold";
    case ErrorCode::protocol: return "protocol";
    case ErrorCode::fit: return "fit";
    case ErrorCode::calibration: return "calibration";
    case ErrorCode::unphysical: return "unphysical";
    case ErrorCode::insufficient_data: return "insufficient_data";
    case ErrorCode::config: return "config";
    case ErrorCode::lock_lost: return "lock_lost";
    case ErrorCode::optimization: return "optimization";
    case ErrorCode::simulation_fault: return "simulation_fault";
    }
    return "unknown";
}

int exit_code_for(ErrorCode code) noexcept
{
    switch (code) {
    case ErrorCode::lock_lost:
    case ErrorCode::simulation_fault:
    case ErrorCode::optimization:
        return 3;
    default:
        return 2;
    }
}
} // namespace opo
