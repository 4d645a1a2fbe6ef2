#include "opo/optics.hpp"

#include "opo/errors.hpp"

#include <cmath>
#include <limits>

namespace opo::optics
{
namespace
{
bool in_unit_open(double x) { return x > 0.0 && x < 1.0; }
bool in_unit_closed(double x) { return x >= 0.0 && x <= 1.0; }

double sinc(double x) { return x == 0.0 ? 1.0 : std::sin(x) / x; }
} // namespace

void CavityParams::validate() const
{
    require(in_unit_open(T_out) && in_unit_open(T_pump), ErrorCode::config,
            "cavity transmissions must lie in (0,1)");
    require(bandwidth_fwhm > 0.0, ErrorCode::config, "cavity bandwidth must be positive");
    require(d_per_cm >= 0.0, ErrorCode::config, "conversion efficiency must be non-negative");
    require(crystal_length_cm > 0.0, ErrorCode::config, "crystal length must be positive");
}

void EfficiencyBudget::validate() const
{
    require(in_unit_closed(eta_det) && in_unit_closed(eta_hom) && in_unit_closed(eta_loss) &&
                in_unit_closed(eta_cav),
            ErrorCode::config, "efficiency factors must lie in [0,1]");
}

void TuningResponse::validate() const
{
    require(w_A > 0.0 && w_S > 0.0 && lambda_D > 0.0, ErrorCode::config,
            "tuning widths and period must be positive");
}

double gain_from_minmax(double p_max, double p_min)
{
    require(p_min > 0.0 && p_max >= p_min, ErrorCode::domain,
            "gain_from_minmax needs p_max >= p_min > 0");
    const double r = std::sqrt(p_max / p_min) + 1.0;
    return 0.25 * r * r;
}

double pump_parameter(double pump_power, double p_th)
{
    require(p_th > 0.0, ErrorCode::domain, "threshold power must be positive");
    require(pump_power >= 0.0, ErrorCode::domain, "pump power must be non-negative");
    require(pump_power < p_th, ErrorCode::above_threshold,
            "pump power at or above threshold; the model is below threshold only");
    return std::sqrt(pump_power / p_th);
}

double parametric_gain(double pump_power, double p_th)
{
    return amplified_gain(pump_parameter(pump_power, p_th));
}

double pump_for_gain(double gain, double p_th)
{
    require(gain >= 1.0, ErrorCode::domain, "gain must be >= 1");
    require(p_th > 0.0, ErrorCode::domain, "threshold power must be positive");
    const double mu = 1.0 - 1.0 / std::sqrt(gain);
    return mu * mu * p_th;
}

double threshold_power(const CavityParams &params)
{
    params.validate();
    const double e_nl = params.nonlinear_efficiency();
    require(e_nl > 0.0, ErrorCode::infinite_threshold,
            "zero nonlinear efficiency gives an infinite threshold");
    const double tp = params.T_pump;
    const double b = (2.0 - 0.5 * tp) * (2.0 - 0.5 * tp);
    return tp / (1.0 - tp) * params.T_out * params.T_out / (4.0 * b * e_nl);
}

double quadrature_noise(double freq, double mu, double eta, Quadrature q, double halfwidth)
{
    require(mu >= 0.0, ErrorCode::domain, "mu must be non-negative");
    require(mu < 1.0, ErrorCode::above_threshold, "mu >= 1 is above threshold");
    require(in_unit_closed(eta), ErrorCode::domain, "eta must lie in [0,1]");
    require(freq >= 0.0 && halfwidth > 0.0, ErrorCode::domain, "invalid detection frequency");

    const double x = freq / halfwidth;
    const double num = 4.0 * eta * mu;
    if (q == Quadrature::squeezed)
        return 1.0 - num / ((1.0 + mu) * (1.0 + mu) + x * x);
    return 1.0 + num / ((1.0 - mu) * (1.0 - mu) + x * x);
}

double apply_passive_loss(double variance, double transmission)
{
    require(variance > 0.0, ErrorCode::domain, "variance must be positive");
    require(in_unit_closed(transmission), ErrorCode::domain, "transmission must lie in [0,1]");
    return transmission * variance + (1.0 - transmission);
}

double tuning_factor(const ThermalState &thermal, const TuningResponse &resp)
{
    using std::numbers::pi;
    const double phase_match = sinc(pi * (thermal.T_A - resp.T_A_opt) / resp.w_A);
    const double ds = (thermal.sum_coordinate() - resp.T_S_opt) / resp.w_S;
    const double interference = std::cos(pi * (thermal.diff_coordinate() - resp.T_D_opt) / resp.lambda_D);
    return phase_match * phase_match / (1.0 + ds * ds) * interference * interference;
}

KerrState kerr_step(KerrState state, double circulating_power, double dt)
{
    require(dt > 0.0, ErrorCode::domain, "kerr_step needs dt > 0");
    require(state.tau_s > 0.0, ErrorCode::domain, "kerr time constant must be positive");
    const double target = state.coupling * circulating_power;
    state.shift += (target - state.shift) * -std::expm1(-dt / state.tau_s);
    return state;
}
} // namespace opo::optics
