#ifndef OPO_OPTICS_HPP
#define OPO_OPTICS_HPP

// Closed-form optics of a below-threshold degenerate OPO: parametric gain,
// oscillation threshold, quadrature noise spectra, passive loss, thermal
// tuning response and the slow dispersive (Kerr-like) detuning.
//
// Units: pump power in W, frequencies in MHz, temperatures in degC,
// noise variances relative to the shot-noise level.

#include <cmath>
#include <numbers>

namespace opo::optics
{
struct CavityParams
{
    double T_out = 0.14;              // fundamental output-coupler transmission
    double T_pump = 0.31;             // pump input-coupler transmission
    double bandwidth_fwhm = 250.0;    // fundamental linewidth, MHz
    double d_per_cm = 0.00106;        // single-pass conversion, 1/(W cm)
    double crystal_length_cm = 0.70;  // effective nonlinear length

    // Single-pass nonlinear efficiency E_NL in 1/W.
    double nonlinear_efficiency() const { return d_per_cm * crystal_length_cm; }
    double halfwidth() const { return 0.5 * bandwidth_fwhm; }
    void validate() const;
};

struct EfficiencyBudget
{
    double eta_det = 0.90;
    double eta_hom = 0.98;  // visibility, enters squared
    double eta_loss = 0.95;
    double eta_cav = 0.95;

    double total() const { return eta_det * eta_hom * eta_hom * eta_loss * eta_cav; }
    void validate() const;
};

struct ThermalState
{
    double T_A = 0.0;
    double T_1 = 0.0;
    double T_2 = 0.0;

    double sum_coordinate() const { return 0.5 * (T_1 + T_2); }  // T_S
    double diff_coordinate() const { return T_1 - T_2; }        // T_D

    static ThermalState from_coordinates(double T_A, double T_S, double T_D)
    {
        return {T_A, T_S + 0.5 * T_D, T_S - 0.5 * T_D};
    }
};

struct TuningResponse
{
    double T_A_opt = 35.20;
    double T_S_opt = 36.50;
    double T_D_opt = 0.30;
    double w_A = 0.5;       // phase-matching sinc^2 first zero
    double w_S = 0.2;       // pump-resonance Lorentzian half width
    double lambda_D = 1.0;  // interference period in T_D

    ThermalState optimum() const { return ThermalState::from_coordinates(T_A_opt, T_S_opt, T_D_opt); }
    void validate() const;
};

struct KerrState
{
    double shift = 0.0;     // MHz
    double tau_s = 12.0;
    double coupling = 0.0;  // MHz per W of circulating fundamental power
};

enum class Quadrature
{
    squeezed,
    antisqueezed
};

// G = (sqrt(p_max/p_min) + 1)^2 / 4 from the extremes of an amplified seed.
double gain_from_minmax(double p_max, double p_min);

// Below-threshold gain (1 - mu)^-2 with mu = sqrt(P / P_th).
double parametric_gain(double pump_power, double p_th);

// Pump amplitude parameter mu = sqrt(P / P_th); throws at or above threshold.
double pump_parameter(double pump_power, double p_th);

// Inverse of parametric_gain: pump power producing `gain` (>= 1).
double pump_for_gain(double gain, double p_th);

// Seed amplification extremes for amplitude parameter mu: (1-mu)^-2 and (1+mu)^-2.
inline double amplified_gain(double mu) { return 1.0 / ((1.0 - mu) * (1.0 - mu)); }
inline double deamplified_gain(double mu) { return 1.0 / ((1.0 + mu) * (1.0 + mu)); }

double threshold_power(const CavityParams &params);

// Relative noise variance at detection frequency `freq` (MHz). The resonance
// factor uses freq / halfwidth with halfwidth the cavity HWHM in MHz.
double quadrature_noise(double freq, double mu, double eta, Quadrature q, double halfwidth = 125.0);

// Beam-splitter loss: V -> t V + (1 - t).
double apply_passive_loss(double variance, double transmission);

double tuning_factor(const ThermalState &thermal, const TuningResponse &resp);

KerrState kerr_step(KerrState state, double circulating_power, double dt);
} // namespace opo::optics

#endif
