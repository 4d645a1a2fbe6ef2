#ifndef OPO_ERRORS_HPP
#define OPO_ERRORS_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace opo
{
enum class ErrorCode
{
    domain,            // argument outside the mathematical domain
    above_threshold,   // pump at or above the oscillation threshold
    infinite_threshold,
    protocol,          // controller or session misuse
    fit,               // least-squares failure or invalid data
    calibration,       // shot-noise calibration without shot noise
    unphysical,        // measurement below the electronic floor
    insufficient_data,
    config,
    lock_lost,
    optimization,
    simulation_fault,  // NaN or other broken state
};

std::string_view to_string(ErrorCode code) noexcept;

// Precondition and configuration problems map to exit code 2, simulation
// faults (lost lock, broken state) to exit code 3.
int exit_code_for(ErrorCode code) noexcept;

class Error : public std::runtime_error
{
public:
    Error(ErrorCode code, const std::string &what) : std::runtime_error(what), code_(code) {}
    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string &what) { throw Error(code, what); }

inline void require(bool ok, ErrorCode code, const char *what)
{
    if (!ok)
        throw Error(code, what);
}
} // namespace opo

#endif
