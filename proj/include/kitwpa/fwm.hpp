#pragma once

#include <complex>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "kitwpa/linemodel.hpp"
#include "kitwpa/phasematch.hpp"
#include "kitwpa/rk45.hpp"
#include "kitwpa/trace.hpp"

namespace kitwpa {

enum class ToneRole { pump, signal, idler, harmonic };
enum class ToneSetMode { three_tone, six_tone };

struct Tone {
  std::string label;
  ToneRole role = ToneRole::harmonic;
  double freq_hz = 0.0;
  double k = 0.0;          // Bloch wavevector, mismatch phases only
  std::complex<double> amp;  // RMS current, A
  bool evanescent = false;   // excluded from propagation
};

// One cubic mixing contribution to tone `target`:
// i * gamma_target * multiplicity * A_a A_b conj(A_c) e^{i delta_k z},
// where f_target = f_a + f_b - f_c. Self- and cross-phase modulation are
// the a==target/c==b instances of the same pattern.
struct MixingTerm {
  int target = 0;
  int a = 0, b = 0, c = 0;  // tone indices, a <= b
  double multiplicity = 1.0;
  double delta_k = 0.0;  // k_a + k_b - k_c - k_target
};

struct ToneSet {
  std::vector<Tone> tones;
  std::vector<MixingTerm> terms;
  std::vector<std::string> warnings;

  int index_of(const std::string& label) const;
  const Tone& tone(const std::string& label) const;
};

// Assembles {pump, signal, idler} and, in six-tone mode, the higher
// products {3fp, 2fp+fs, 4fp-fs}. Wavevectors come from the table; tones
// inside a stopband (or beyond the table) are flagged evanescent, dropped
// from the mixing-term list, and reported in warnings.
ToneSet build_tone_set(double f_pump, double f_signal,
                       const DispersionTable& table, ToneSetMode mode);

// Per-tone coupling rate: gamma_j = (omega_j / v_loaded) / (8 i_star^2).
// The effective-medium wavevector (not the table value) keeps every mixing
// exchange photon-conserving; the table enters through delta_k only.
double gamma_of_tone(double freq_hz, const FilmLine& line);

// d(amp)/dz for every propagating tone at position z.
void cme_rhs(const ToneSet& set, const FilmLine& line, double z,
             const std::vector<std::complex<double>>& amps,
             std::vector<std::complex<double>>& deriv);

// Adaptive integration of cme_rhs over [0, z_span]. The returned set holds
// the final amplitudes; evanescent tones pass through untouched.
ToneSet integrate(const ToneSet& set, const FilmLine& line, double z_span,
                  double rtol = 1e-10);

// As integrate(), additionally invoking observer(z, amps) after every
// accepted step (amps ordered as set.tones). Used by conservation checks.
ToneSet integrate_observed(
    const ToneSet& set, const FilmLine& line, double z_span, double rtol,
    const std::function<void(double, const std::vector<std::complex<double>>&)>&
        observer);

struct GainCurve {
  std::vector<double> freq_hz;
  std::vector<double> gain_db;
  PumpConfig pump;
  ToneSetMode mode = ToneSetMode::three_tone;
  double probe_dbm = -90.0;
  std::vector<std::string> warnings;
};

// Small-signal gain (pumped over unpumped transmission) per grid frequency.
// Signal or idler evanescent -> the mixing process is inoperative, 0 dB.
GainCurve gain_curve(const FilmLine& line, const DispersionTable& table,
                     const PumpConfig& pump,
                     const std::vector<double>& freq_grid, ToneSetMode mode,
                     double probe_dbm = -90.0);

struct CompressionPoint {
  double p_in_dbm = 0.0;
  double gain_db = 0.0;
};

struct CompressionResult {
  std::optional<double> p1db_in_dbm;   // empty: no compression in grid
  std::optional<double> p1db_out_dbm;  // p1db_in + small-signal gain - 1
  double small_signal_gain_db = 0.0;
  std::vector<CompressionPoint> curve;
};

// Signal-power sweep with full pump depletion; the 1 dB point is linearly
// interpolated on the gain-vs-input-power curve.
CompressionResult compression_sweep(const FilmLine& line,
                                    const DispersionTable& table,
                                    const PumpConfig& pump, double f_signal,
                                    const std::vector<double>& p_in_dbm_grid,
                                    ToneSetMode mode = ToneSetMode::three_tone);

enum class RippleConvention { as_printed, round_trip };

// Weak standing-wave (Fabry-Perot) overlay on the amplified line: facet
// reflection r, transmission t (default sqrt(1 - r^2)), one-way amplitude
// gain g over length `length`, k(f) = 2 pi f / v_ph.
struct RippleModel {
  double r = 0.0;
  double t = 0.0;  // 0 = derive from r
  double g = 1.0;
  double v_ph = 0.0;  // m/s
  double length = 0.0;  // m

  double k_at(double freq_hz) const;
  void validate(RippleConvention convention) const;
};

// |S21| in dB over the grid. as_printed sums a one-way feedback series
// t^2 g e^{-ikL} / (1 - r^2 g e^{-ikL}); round_trip puts r^2 g^2 e^{-2ikL}
// in the denominator so successive echoes see gain both ways.
Trace ripple_s21(const RippleModel& model, const std::vector<double>& freq_grid,
                 RippleConvention convention);

}  // namespace kitwpa
