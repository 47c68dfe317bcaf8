#include "kitwpa/phasematch.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "kitwpa/constants.hpp"
#include "kitwpa/errors.hpp"

namespace kitwpa {

void PumpConfig::validate(const DispersionTable& table, double i_star) const {
  std::vector<std::string> problems;
  if (!(f_pump > 0.0)) problems.push_back("pump: f_pump must be positive");
  if (!(i_pump > 0.0)) problems.push_back("pump: i_pump must be positive");
  if (i_star > 0.0 && i_pump >= i_star)
    problems.push_back("pump: i_pump must stay below i_star");
  if (f_pump > 0.0 && table.in_stopband(f_pump))
    problems.push_back("pump: f_pump falls inside a stopband");
  if (!problems.empty()) throw ConfigError(problems);
}

double current_from_dbm(double p_dbm, double z0) {
  double watts = 1e-3 * std::pow(10.0, p_dbm / 10.0);
  return std::sqrt(watts / z0);
}

double dbm_from_current(double i_rms, double z0) {
  return 10.0 * std::log10(i_rms * i_rms * z0 / 1e-3);
}

PumpConfig pump_from_dbm(double f_pump, double p_dbm, double z0) {
  return PumpConfig{f_pump, current_from_dbm(p_dbm, z0), p_dbm};
}

PumpConfig pump_from_current(double f_pump, double i_rms, double z0) {
  return PumpConfig{f_pump, i_rms, dbm_from_current(i_rms, z0)};
}

double idler_freq(double f_pump, double f_signal) {
  if (!(f_signal > 0.0))
    throw std::domain_error("idler_freq: f_signal must be positive");
  double f_idler = 2.0 * f_pump - f_signal;
  if (!(f_idler > 0.0))
    throw std::domain_error("idler_freq: idler frequency is not positive");
  return f_idler;
}

double delta_beta(const DispersionTable& table, double f_signal,
                  double f_pump) {
  double f_idler = idler_freq(f_pump, f_signal);
  return table.k_at(f_signal, "signal") + table.k_at(f_idler, "idler") -
         2.0 * table.k_at(f_pump, "pump");
}

double matching_residual(const DispersionTable& table, double f_signal,
                         const PumpConfig& pump, double i_star) {
  double kp = table.k_at(pump.f_pump, "pump");
  double nonlinear = kp * pump.i_pump * pump.i_pump / (4.0 * i_star * i_star);
  return delta_beta(table, f_signal, pump.f_pump) + nonlinear;
}

namespace {

// Both the signal and its idler must propagate for the residual to exist.
bool residual_defined(const DispersionTable& table, double f_signal,
                      double f_pump) {
  double f_idler = 2.0 * f_pump - f_signal;
  return f_signal >= table.f_min() && f_idler <= table.f_max() &&
         f_idler > 0.0 && !table.in_stopband(f_signal) &&
         !table.in_stopband(f_idler);
}

double bisect_zero(const DispersionTable& table, const PumpConfig& pump,
                   double i_star, double lo, double hi, double r_lo) {
  while (hi - lo > 1e3) {
    double mid = 0.5 * (lo + hi);
    double r_mid = matching_residual(table, mid, pump, i_star);
    if (r_mid == 0.0) return mid;
    if ((r_lo < 0.0) == (r_mid < 0.0)) {
      lo = mid;
      r_lo = r_mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

BandPrediction predict_bands(const DispersionTable& table,
                             const PumpConfig& pump, double i_star) {
  pump.validate(table, i_star);
  BandPrediction out;
  out.idler_gap_freq = 0.0;
  if (!table.stopbands().empty())
    out.idler_gap_freq = 2.0 * pump.f_pump - table.stopbands()[0].center();

  // Zero scan below the pump. Sign changes across an evanescent window are
  // branch discontinuities, not roots, so the bracket resets there.
  const double step = 1e6;
  double prev_f = 0.0, prev_r = 0.0;
  bool have_prev = false;
  for (double f = table.f_min(); f < pump.f_pump - step; f += step) {
    if (!residual_defined(table, f, pump.f_pump)) {
      have_prev = false;
      continue;
    }
    double r = matching_residual(table, f, pump, i_star);
    if (have_prev && ((prev_r < 0.0) != (r < 0.0)))
      out.residual_zeros.push_back(
          bisect_zero(table, pump, i_star, prev_f, f, prev_r));
    prev_f = f;
    prev_r = r;
    have_prev = true;
  }

  if (out.residual_zeros.empty()) return out;

  // Signal band: outermost zero up to where the idler image hits the
  // stopband (or the pump, whichever comes first).
  double outer = out.residual_zeros.front();
  double upper = pump.f_pump;
  for (const Stopband& band : table.stopbands()) {
    double image = 2.0 * pump.f_pump - band.f_high;
    if (image > outer && image < upper) upper = image;
    if (band.f_low > outer && band.f_low < upper) upper = band.f_low;
  }
  out.signal_band = Band{outer, upper};
  out.idler_band =
      Band{2.0 * pump.f_pump - upper, 2.0 * pump.f_pump - outer};

  if (out.residual_zeros.size() > 1) {
    double inner = out.residual_zeros.back();
    out.around_pump_band = Band{inner, 2.0 * pump.f_pump - inner};
  }
  return out;
}

}  // namespace kitwpa
