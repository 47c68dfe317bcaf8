#pragma once

#include <optional>
#include <vector>

#include "kitwpa/linemodel.hpp"

namespace kitwpa {

// Pump drive settings. i_pump is the RMS current amplitude on the line;
// p_pump_dbm mirrors it through the loaded impedance when set from power.
struct PumpConfig {
  double f_pump = 0.0;      // Hz
  double i_pump = 0.0;      // A
  double p_pump_dbm = 0.0;  // dBm, informational echo of i_pump

  void validate(const DispersionTable& table, double i_star) const;
};

// i_rms = sqrt(P / z0). z0 is the loaded line impedance (50 ohm design).
double current_from_dbm(double p_dbm, double z0);
double dbm_from_current(double i_rms, double z0);

PumpConfig pump_from_dbm(double f_pump, double p_dbm, double z0);
PumpConfig pump_from_current(double f_pump, double i_rms, double z0);

// Frequency interval in Hz; empty() when unset.
struct Band {
  double f_low = 0.0;
  double f_high = 0.0;

  bool empty() const { return !(f_high > f_low); }
  double width() const { return empty() ? 0.0 : f_high - f_low; }
};

struct BandPrediction {
  Band signal_band;
  Band idler_band;        // mirror of signal_band through f_pump
  Band around_pump_band;  // between inner residual zeros; often empty
  double idler_gap_freq = 0.0;  // 2 f_pump - stopband center
  std::vector<double> residual_zeros;  // all zeros found below f_pump, Hz
};

// Energy conservation of degenerate four-wave mixing: 2 f_p = f_s + f_i.
double idler_freq(double f_pump, double f_signal);

// kappa_s + kappa_i - 2 kappa_p from the Bloch table (cubic interpolation).
double delta_beta(const DispersionTable& table, double f_signal,
                  double f_pump);

// delta_beta plus the pump's nonlinear phase kappa_p i_p^2 / (4 i_star^2).
// Zeros are the phase-matched signal frequencies.
double matching_residual(const DispersionTable& table, double f_signal,
                         const PumpConfig& pump, double i_star);

// Scans the residual below f_pump on a 1 MHz grid, bisects each bracketed
// zero to 1 kHz, and assembles the band picture: the signal band runs from
// the outermost zero up to where the idler image enters the stopband, the
// idler band is its mirror, and the around-pump band spans the innermost
// zero pair when more than one zero exists.
BandPrediction predict_bands(const DispersionTable& table,
                             const PumpConfig& pump, double i_star);

// Least-squares fit of stopband-center-vs-DC-current data to
// f(i) = f0 / sqrt(1 + i^2/I*^2); linear in (i^2, 1/f^2) space.
// Declared in linemodel.hpp: fit_istar.

}  // namespace kitwpa
