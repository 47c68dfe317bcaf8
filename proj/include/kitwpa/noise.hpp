#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "kitwpa/trace.hpp"

namespace kitwpa {

// Receiver cascade: source -> loss l1 -> paramp -> loss l2 -> HEMT ->
// warm stage -> analyzer. Losses are power transmission factors in (0, 1].
struct NoiseChain {
  double l1 = 1.0;
  double l2 = 1.0;
  double g_pa = 1.0;    // linear power gain
  double n_a = 0.0;     // quanta added by the paramp
  double g_hemt = 1.0;
  double n_hemt = 0.0;
  double g_w = 1.0;     // warm stage; its noise is ignored in extraction
  double n_w = 0.0;
  double t_hot = 0.0;   // K
  double t_cold = 0.0;  // K

  void validate() const;
};

enum class PumpState { on, off, bypass };

// Planck occupation of a matched termination: (1/2) coth(hf / 2 kB T).
double occupation(double t_kelvin, double f_hz);

// Rayleigh-Jeans referral used for amplifier noise temperatures
// (T in K <-> quanta via kB T / h f); thermal terminations use occupation().
double quanta_from_kelvin_rj(double t_kelvin, double f_hz);
double kelvin_from_quanta_rj(double n_quanta, double f_hz);

// System noise from a hot/cold power ratio: (n_hot - y n_cold) / (y - 1).
double y_factor_nsys(double n_hot, double n_cold, double y);

// Analyzer-referred total noise for a source at t_source. pump on runs the
// full five-stage cascade; pump off treats the paramp as a lossless line;
// bypass removes everything between the source and the HEMT.
double cascade_forward(const NoiseChain& chain, double t_source, double f_hz,
                       PumpState state);

// Factored form of the pumped cascade (exact when n_w = 0).
struct EffectiveCascade {
  double g_eff = 1.0;
  double n_pa_eff = 0.0;
  double n_hemt_eff = 0.0;
  double n_sys() const { return n_pa_eff + n_hemt_eff; }
};
EffectiveCascade effective_cascade(const NoiseChain& chain);

struct AddedNoiseResult {
  double n_a = 0.0;
  bool below_vacuum = false;  // negative result: inconsistent inputs
};

// Inverts the cascade for the paramp's own added noise:
// n_a = l1 n_sys - n_qm (l2 g_pa (1 - l1) + (1 - l2)) / (l2 g_pa)
//       - n_hemt / (l2 g_pa).
AddedNoiseResult added_noise(double n_sys, const NoiseChain& chain,
                             double f_hz);

struct LossTraces {
  Trace loss_db;      // per-side insertion loss, dB (positive)
  Trace loss_linear;  // same as power transmission factor in (0, 1]
};

// Splits the bypass-minus-through difference evenly between the two sides
// (identical diplexers and cabling on both sides of the device).
LossTraces deembed_loss(const Trace& bypass_db, const Trace& pump_off_db);

struct HemtNoiseTrace {
  Trace quanta;             // NaN where invalid
  std::vector<std::uint8_t> valid;  // per-bin flag, 1 = usable
};

// Pump-off Y-factor referred to the HEMT input:
// n_hemt = n_sys_off l1 l2 - n_qm (1 - l1 l2).
HemtNoiseTrace hemt_noise_from_yfactor(const Trace& hot_linear,
                                       const Trace& cold_linear,
                                       const NoiseChain& chain);

// Synthetic analyzer dataset for closed-loop pipeline tests: pumped hot and
// cold noise (linear), pump-off hot and cold noise (linear), through and
// bypass transmissions (dB), and the device gain (dB). noise_frac adds
// seeded multiplicative Gaussian noise to the power traces.
struct SynthesizedMeasurement {
  Trace hot;        // pump on
  Trace cold;       // pump on
  Trace hot_off;    // pump off
  Trace cold_off;   // pump off
  Trace pump_off;   // transmission, dB
  Trace bypass;     // transmission, dB
  Trace gain;       // device gain, dB
};
SynthesizedMeasurement synth_measurement(const NoiseChain& chain,
                                         const std::vector<double>& freq_grid,
                                         std::uint64_t seed,
                                         double noise_frac = 0.0);

struct ExtractionResult {
  Trace n_sys;      // quanta
  Trace n_a;        // quanta
  Trace loss_db;    // per-side
  Trace n_hemt;     // quanta (scalar input broadcast, or per-bin Y-factor)
  std::vector<std::uint8_t> valid;  // per-bin
};

// Full pipeline: de-embed -> Y-factor -> added-noise inversion per bin.
// n_hemt comes from the scalar when given, otherwise from the pump-off
// hot/cold pair (one of the two must be present).
ExtractionResult extract_added_noise(
    const Trace& hot, const Trace& cold, const Trace& pump_off_db,
    const Trace& bypass_db, const Trace& gain_db, double t_hot, double t_cold,
    std::optional<double> n_hemt_quanta,
    const Trace* hot_off = nullptr, const Trace* cold_off = nullptr);

}  // namespace kitwpa
