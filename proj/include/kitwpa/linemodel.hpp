#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "kitwpa/twoport.hpp"

namespace kitwpa {

// Effective (loaded) description of the nonlinear film transmission line.
// l_per_m / c_per_m describe the stub-loaded line as a uniform medium;
// z_target / v_target are the design goals the loaded line is calibrated to.
struct FilmLine {
  double l_per_m = 0.0;       // H/m
  double c_per_m = 0.0;       // F/m
  double i_star = 0.0;        // A, nonlinearity scale current
  double total_length = 0.0;  // m
  double z_target = 0.0;      // ohm (0 = unset)
  double v_target = 0.0;      // fraction of c (0 = unset)

  void validate() const;
};

// Periodic open-stub loading with sinusoidally modulated stub length.
struct StubPattern {
  double cell_pitch = 0.0;    // m, nominal stub-to-stub spacing
  double stub_len_avg = 0.0;  // m
  double stub_len_mod = 0.0;  // m, modulation amplitude
  double mod_period = 0.0;    // m, modulation period along the line
  double stub_z0 = 0.0;       // ohm; 0 = default to the bare-line value
  double stub_vph = 0.0;      // m/s; 0 = default to the bare-line value

  int cells_per_period() const;

  // Copy with the pitch snapped to mod_period / cells_per_period so one
  // modulation period holds an integer number of cells and spans exactly
  // mod_period. The quoted pitch and period are incommensurate roundings;
  // the period is what sets the stopband, so it wins.
  StubPattern resolved() const;

  void validate() const;
};

struct TelegrapherParams {
  double z0 = 0.0;    // ohm
  double v_ph = 0.0;  // m/s
};

// z0 = sqrt(L/C), v = 1/sqrt(LC) for the uniform-medium description.
TelegrapherParams telegrapher_params(const FilmLine& line);

// Current-dependent kinetic inductance: lk0 * (1 + i^2 / i_star^2).
double lk_of_current(double lk0, double i, double i_star);

// Bare center conductor plus stub electricals, recovered from the loaded
// description by removing the average stub capacitance per cell.
struct BareLine {
  double l0_per_m = 0.0;
  double c0_per_m = 0.0;
  double stub_z0 = 0.0;
  double stub_vph = 0.0;

  double z0() const;
  double v_ph() const;
};

BareLine derive_bare_line(const FilmLine& line, const StubPattern& pattern);

// One unit cell: half pitch of bare line, shunt open stub, half pitch.
TwoPort unit_cell_matrix(const FilmLine& line, double stub_len,
                         const StubPattern& pattern, double freq_hz);

// Chain matrix of one full modulation period (cells_per_period cells).
TwoPort supercell_matrix(const FilmLine& line, const StubPattern& pattern,
                         double freq_hz);

struct Stopband {
  double f_low = 0.0;   // Hz
  double f_high = 0.0;  // Hz
  double center() const { return 0.5 * (f_low + f_high); }
};

// Floquet-Bloch dispersion on a frequency grid. Re(k) is unwrapped to a
// continuous nondecreasing branch; inside stopbands Re(k) pins to the zone
// boundary and Im(k) > 0 carries the decay constant.
class DispersionTable {
 public:
  DispersionTable() = default;
  DispersionTable(std::vector<double> freq_hz, std::vector<double> re_k,
                  std::vector<double> im_k, std::vector<char> in_gap,
                  std::vector<Stopband> stopbands, double period_m);

  const std::vector<double>& freq_hz() const { return freq_hz_; }
  const std::vector<double>& re_k() const { return re_k_; }
  const std::vector<double>& im_k() const { return im_k_; }
  const std::vector<Stopband>& stopbands() const { return stopbands_; }
  double period_m() const { return period_m_; }
  std::size_t size() const { return freq_hz_.size(); }

  bool in_stopband(double freq_hz) const;

  // Re(k) by cubic interpolation restricted to one passband; throws
  // EvanescentToneError (with the caller's tone label) inside a stopband
  // and std::out_of_range beyond the tabulated grid.
  double k_at(double freq_hz, const std::string& tone_label = "") const;

  // Low-frequency phase velocity of the loaded line, 2*pi*f0 / k(f0).
  double phase_velocity_dc() const;

  double f_min() const { return freq_hz_.front(); }
  double f_max() const { return freq_hz_.back(); }

 private:
  std::vector<double> freq_hz_, re_k_, im_k_;
  std::vector<char> in_gap_;
  std::vector<Stopband> stopbands_;
  double period_m_ = 0.0;
};

// Bloch dispersion of the modulated stub-loaded line over freq_grid (Hz,
// strictly ascending). With stub_len_mod = 0 the cell itself is the period.
DispersionTable supercell_bloch(const FilmLine& line, const StubPattern& pattern,
                                const std::vector<double>& freq_grid);

// Dispersion of the unloaded (stub-free) line: k = 2*pi*f*sqrt(LC).
DispersionTable bare_dispersion(const FilmLine& line,
                                const std::vector<double>& freq_grid);

// Adjusts the loaded-line description so the DC limit of the Bloch phase
// velocity and image impedance hit v_target / z_target. Returns the
// calibrated description; throws CalibrationError when the targets cannot
// be reached (residual reported).
FilmLine calibrate_loaded_line(const FilmLine& line, const StubPattern& pattern);

// Resonance-shift data point: DC bias current vs measured center frequency.
struct IStarPoint {
  double i_dc = 0.0;      // A
  double f_center = 0.0;  // Hz
};

struct IStarFit {
  double i_star = 0.0;            // A; +inf when no shift is measurable
  double f0 = 0.0;                // Hz, zero-current center frequency
  double rms_rel_residual = 0.0;  // rms of (model - data)/data
  bool finite = false;            // false => i_star is a sentinel
  std::string note;
};

// Least-squares fit of f(i) = f0 / sqrt(1 + i^2/i_star^2); linear in 1/f^2
// against i^2, so the fit is closed-form.
IStarFit fit_istar(const std::vector<IStarPoint>& points);

}  // namespace kitwpa
