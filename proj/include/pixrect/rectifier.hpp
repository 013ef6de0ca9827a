// SPDX-License-Identifier: Apache-2.0
//
// Voltage-doubler rectifier with package parasitics, solved to periodic
// steady state in the time domain.
//
//   source --R_src--X_src--+-- L_p --||C_in||--+--|>|-- D2 --+-- out
//                          |                   m             |      |
//                         C_p                  D1 (to gnd)  C_out  R_load
//                          |                   |             |      |
//   gnd -------------------+-------------------+-------------+------+
//
// The input port is the node after the source network; Z_in is the ratio of
// the fundamental voltage and current phasors there. D1 has its anode on
// ground, D2 its anode on node m. Each diode is a series resistance feeding a
// junction with Shockley conduction and depletion capacitance.
#pragma once

#include "pixrect/constants.hpp"

#include <array>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace pixrect {

struct DiodeParams {
    double I_s = 40e-9;     // A
    double n = 1.05;
    double R_s = 12.0;      // ohm
    double C_j0 = 0.10e-12; // F
    double V_j = 0.51;      // V
    double m = 0.35;
    double temperature = 300.0; // K
    double fc = 0.5;        // depletion capacitance is linearized above fc * V_j

    void validate() const;
    double thermal_voltage() const { return kBoltzmann * temperature / kElectronCharge; }
    double current(double v) const;
    double conductance(double v) const;
    double capacitance(double v) const;
    double capacitance_slope(double v) const;
};

struct RectifierSpec {
    DiodeParams diode;
    double C_in = 100e-12;
    double C_out = 100e-12;
    double L_p = 10e-9;
    double C_p = 0.1e-12;
    double R_load = 1750.0;

    void validate() const;
};

/// Datasheet-style SMS7621-like defaults, not measured values.
RectifierSpec sms7621_like();

struct SteadyStateOptions {
    int steps_per_period = 512;
    double start_phase = 0.0;    // radians, source is V_pk cos(wt + phase)
    int warmup_periods = 8;
    int max_shooting_iterations = 40;
    int max_periods = 20000;     // plain-integration fallback budget
    double rel_tol = 1e-8;
    int max_step_halvings = 12;
};

struct SteadyState {
    double frequency = 0.0;
    double p_avail_dbm = 0.0;
    cplx z_src;
    double v_source_peak = 0.0;
    std::vector<double> time;           // one period, steps_per_period samples
    std::vector<double> v_in;           // port voltage
    std::vector<double> i_in;           // port current into the rectifier
    std::vector<double> v_out;
    std::vector<double> i_d1;
    std::vector<double> i_d2;
    std::vector<double> v_j1;
    std::vector<double> v_j2;
    double v_dc = 0.0;
    cplx z_in{std::nan(""), std::nan("")}; // NaN when the drive is zero
    std::vector<double> i_in_harmonics; // |I_h|, h = 0..5
    double p_available = 0.0;           // W
    double p_delivered = 0.0;           // W, period mean of v_in * i_in
    double p_load = 0.0;                // W, period mean of v_out^2 / R_load
    double p_junction = 0.0;            // W, Shockley conduction loss
    double p_series = 0.0;              // W, R_s loss
    double periodicity_residual = 0.0;  // scaled, <= 1 when converged
    int shooting_iterations = 0;

    /// (delivered - dissipated) / delivered.
    double energy_imbalance() const;
};

/// Drive given by available power in dBm (-inf for zero drive) from a source
/// of impedance z_src. The source reactance is realised as a series inductor
/// or capacitor with that reactance at f.
SteadyState steady_state(const RectifierSpec& spec, double f, double p_avail_dbm, cplx z_src,
                         const SteadyStateOptions& opts = {});

/// Same with the Thevenin peak amplitude given directly.
SteadyState steady_state_vpk(const RectifierSpec& spec, double f, double v_peak, cplx z_src,
                             const SteadyStateOptions& opts = {});

struct ImpedancePoint {
    double p_dbm = 0.0;
    std::optional<SteadyState> state;
    std::string error; // non-empty when this point failed
};

std::vector<ImpedancePoint> impedance_sweep(const RectifierSpec& spec, double f,
                                            const std::vector<double>& p_dbm, cplx z_src,
                                            const SteadyStateOptions& opts = {});

enum class EfficiencyBasis { Delivered, Available };

struct DcTransfer {
    double v_dc = 0.0;
    double p_dc = 0.0;       // V_dc^2 / R_load
    double efficiency = 0.0;
};

DcTransfer dc_transfer(const RectifierSpec& spec, const SteadyState& ss,
                       EfficiencyBasis basis = EfficiencyBasis::Delivered);
DcTransfer dc_transfer(const RectifierSpec& spec, double f, double p_in_dbm, cplx z_src,
                       EfficiencyBasis basis = EfficiencyBasis::Delivered,
                       const SteadyStateOptions& opts = {});

/// Inclusive range start, start + step, ... <= stop.
std::vector<double> power_range(double start_dbm, double stop_dbm, double step_db);

/// "p_dbm,R_ohm,X_ohm,vdc_v,pdc_w,eff"; failed points are written with empty fields.
void write_rectifier_csv(std::ostream& os, const RectifierSpec& spec,
                         const std::vector<ImpedancePoint>& pts, EfficiencyBasis basis);

} // namespace pixrect
