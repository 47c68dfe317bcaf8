#include "kitwpa/linemodel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "kitwpa/constants.hpp"
#include "kitwpa/errors.hpp"

namespace kitwpa {

namespace {

void check_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw std::domain_error(std::string(name) + " must be positive and finite");
  }
}

}  // namespace

void FilmLine::validate() const {
  check_positive(l_per_m, "l_per_m");
  check_positive(c_per_m, "c_per_m");
  check_positive(i_star, "i_star");
  check_positive(total_length, "total_length");
}

int StubPattern::cells_per_period() const {
  return static_cast<int>(std::lround(mod_period / cell_pitch));
}

StubPattern StubPattern::resolved() const {
  StubPattern r = *this;
  if (stub_len_mod > 0.0) {
    r.cell_pitch = mod_period / cells_per_period();
  }
  return r;
}

void StubPattern::validate() const {
  check_positive(cell_pitch, "cell_pitch");
  if (stub_len_avg < 0.0) throw std::domain_error("stub_len_avg must be >= 0");
  if (stub_len_mod < 0.0) throw std::domain_error("stub_len_mod must be >= 0");
  if (stub_len_mod > 0.0) {
    if (stub_len_mod > stub_len_avg) {
      throw std::domain_error("stub_len_mod exceeds stub_len_avg (negative stub length)");
    }
    if (!(mod_period >= cell_pitch)) {
      throw std::domain_error("mod_period must be >= cell_pitch");
    }
    if (cells_per_period() < 2) {
      throw std::domain_error("modulation needs at least 2 cells per period");
    }
  }
}

TelegrapherParams telegrapher_params(const FilmLine& line) {
  check_positive(line.l_per_m, "l_per_m");
  check_positive(line.c_per_m, "c_per_m");
  return {std::sqrt(line.l_per_m / line.c_per_m),
          1.0 / std::sqrt(line.l_per_m * line.c_per_m)};
}

double lk_of_current(double lk0, double i, double i_star) {
  check_positive(lk0, "lk0");
  check_positive(i_star, "i_star");
  const double r = i / i_star;
  return lk0 * (1.0 + r * r);
}

double BareLine::z0() const { return std::sqrt(l0_per_m / c0_per_m); }
double BareLine::v_ph() const { return 1.0 / std::sqrt(l0_per_m * c0_per_m); }

// Inverse of the DC loading relations. The loaded medium satisfies
//   L_eff = l0,  C_eff = c0 + (stub_len_avg / pitch) * c_stub,
// with c_stub = 1/(stub_z0 * stub_vph). When the stub electricals default
// to the bare line (same film, same width), c_stub = c0 and the split is
// closed-form; an explicit stub_z0/stub_vph fixes c_stub instead.
BareLine derive_bare_line(const FilmLine& line, const StubPattern& pattern) {
  line.validate();
  pattern.validate();
  const StubPattern pat = pattern.resolved();
  const double l_eff = line.l_per_m;
  const double c_eff = line.c_per_m;
  const double load = pat.stub_len_avg / pat.cell_pitch;

  BareLine bare;
  bare.l0_per_m = l_eff;
  const bool explicit_stub = pat.stub_z0 > 0.0 && pat.stub_vph > 0.0;
  if (explicit_stub) {
    const double c_stub = 1.0 / (pat.stub_z0 * pat.stub_vph);
    bare.c0_per_m = c_eff - load * c_stub;
    bare.stub_z0 = pat.stub_z0;
    bare.stub_vph = pat.stub_vph;
    if (!(bare.c0_per_m > 0.0)) {
      throw CalibrationError(
          "stub loading exceeds the loaded capacitance; no bare line exists",
          bare.c0_per_m);
    }
  } else {
    bare.c0_per_m = c_eff / (1.0 + load);
    bare.stub_z0 = std::sqrt(bare.l0_per_m / bare.c0_per_m);
    bare.stub_vph = 1.0 / std::sqrt(bare.l0_per_m * bare.c0_per_m);
  }
  return bare;
}

namespace {

TwoPort stub_shunt(const BareLine& bare, double stub_len, double freq_hz) {
  if (stub_len == 0.0) return TwoPort{};
  const double theta = 2.0 * kPi * freq_hz * stub_len / bare.stub_vph;
  const double t = std::tan(theta);
  if (!std::isfinite(t)) {
    throw SingularFrequencyError("open stub resonance at " +
                                 std::to_string(freq_hz) + " Hz");
  }
  return shunt_admittance(complex(0.0, t / bare.stub_z0));
}

TwoPort cell_matrix(const BareLine& bare, double stub_len, double pitch,
                    double freq_hz) {
  const double beta = 2.0 * kPi * freq_hz / bare.v_ph();
  const TwoPort half = line_segment(bare.z0(), beta, 0.5 * pitch);
  return half * stub_shunt(bare, stub_len, freq_hz) * half;
}

}  // namespace

TwoPort unit_cell_matrix(const FilmLine& line, double stub_len,
                         const StubPattern& pattern, double freq_hz) {
  if (stub_len < 0.0) throw std::domain_error("stub_len must be >= 0");
  check_positive(freq_hz, "freq_hz");
  const BareLine bare = derive_bare_line(line, pattern);
  return cell_matrix(bare, stub_len, pattern.resolved().cell_pitch, freq_hz);
}

TwoPort supercell_matrix(const FilmLine& line, const StubPattern& pattern,
                         double freq_hz) {
  check_positive(freq_hz, "freq_hz");
  const BareLine bare = derive_bare_line(line, pattern);
  const StubPattern pat = pattern.resolved();
  if (pat.stub_len_mod == 0.0) {
    return cell_matrix(bare, pat.stub_len_avg, pat.cell_pitch, freq_hz);
  }
  const int n_cells = pat.cells_per_period();
  const double beta = 2.0 * kPi * freq_hz / bare.v_ph();
  const TwoPort half = line_segment(bare.z0(), beta, 0.5 * pat.cell_pitch);
  TwoPort m;
  for (int n = 0; n < n_cells; ++n) {
    const double len =
        pat.stub_len_avg + pat.stub_len_mod * std::cos(2.0 * kPi * n / n_cells);
    m *= half * stub_shunt(bare, len, freq_hz) * half;
  }
  return m;
}

DispersionTable::DispersionTable(std::vector<double> freq_hz,
                                 std::vector<double> re_k,
                                 std::vector<double> im_k,
                                 std::vector<char> in_gap,
                                 std::vector<Stopband> stopbands,
                                 double period_m)
    : freq_hz_(std::move(freq_hz)),
      re_k_(std::move(re_k)),
      im_k_(std::move(im_k)),
      in_gap_(std::move(in_gap)),
      stopbands_(std::move(stopbands)),
      period_m_(period_m) {}

bool DispersionTable::in_stopband(double freq_hz) const {
  for (const auto& b : stopbands_) {
    if (freq_hz >= b.f_low && freq_hz <= b.f_high) return true;
  }
  return false;
}

double DispersionTable::k_at(double freq_hz, const std::string& tone_label) const {
  if (freq_hz_.size() < 2) throw std::domain_error("dispersion table is empty");
  if (freq_hz < freq_hz_.front() || freq_hz > freq_hz_.back()) {
    throw std::out_of_range("frequency " + std::to_string(freq_hz) +
                            " Hz outside the tabulated dispersion grid");
  }
  if (in_stopband(freq_hz)) throw EvanescentToneError(tone_label, freq_hz);

  const auto it = std::upper_bound(freq_hz_.begin(), freq_hz_.end(), freq_hz);
  std::size_t hi = static_cast<std::size_t>(it - freq_hz_.begin());
  if (hi == 0) hi = 1;
  if (hi >= freq_hz_.size()) hi = freq_hz_.size() - 1;
  std::size_t lo = hi - 1;

  // Restrict the interpolation stencil to the passband segment holding f,
  // so a stopband edge never leaks through the polynomial.
  std::size_t seg_lo = lo, seg_hi = hi;
  while (in_gap_[seg_lo] && seg_lo + 1 < freq_hz_.size()) ++seg_lo;
  while (in_gap_[seg_hi] && seg_hi > 0) --seg_hi;
  if (seg_lo > seg_hi) {
    // f sits between a gap edge and the first passband point.
    const std::size_t p = in_gap_[lo] ? hi : lo;
    return re_k_[p];
  }
  std::size_t a = seg_lo, b = seg_hi;
  while (a > 0 && !in_gap_[a - 1] && b - a < 3) --a;
  while (b + 1 < freq_hz_.size() && !in_gap_[b + 1] && b - a < 3) ++b;

  // Lagrange polynomial through the (up to 4) stencil points.
  double acc = 0.0;
  for (std::size_t i = a; i <= b; ++i) {
    double w = 1.0;
    for (std::size_t j = a; j <= b; ++j) {
      if (j != i) w *= (freq_hz - freq_hz_[j]) / (freq_hz_[i] - freq_hz_[j]);
    }
    acc += w * re_k_[i];
  }
  return acc;
}

double DispersionTable::phase_velocity_dc() const {
  if (freq_hz_.empty()) throw std::domain_error("dispersion table is empty");
  for (std::size_t i = 0; i < freq_hz_.size(); ++i) {
    if (!in_gap_[i] && re_k_[i] > 0.0) {
      return 2.0 * kPi * freq_hz_[i] / re_k_[i];
    }
  }
  throw std::domain_error("no passband point in dispersion table");
}

namespace {

void check_grid(const std::vector<double>& grid) {
  if (grid.empty()) throw std::domain_error("frequency grid is empty");
  double prev = 0.0;
  for (double f : grid) {
    if (!(f > prev)) {
      throw std::domain_error("frequency grid must be positive and strictly ascending");
    }
    prev = f;
  }
}

// Unwraps cos(kD) samples into a continuous nondecreasing Re(k) branch and
// collects stopband intervals. chi must be sampled densely enough that kD
// advances by well under one zone per step (1 MHz grids give ~1e-4 rad).
DispersionTable build_table(const std::vector<double>& grid,
                            const std::vector<double>& chi, double period) {
  const std::size_t n = grid.size();
  std::vector<double> re_k(n), im_k(n, 0.0);
  std::vector<char> gap(n, 0);

  long zone = 0;
  double prev_kd = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = chi[i];
    if (std::abs(x) > 1.0 + kStopbandGuard) {
      gap[i] = 1;
      // Re(k) pins to the zone boundary the gap opened at: an odd multiple
      // of pi where chi < -1, an even multiple where chi > +1.
      const long parity = x < 0.0 ? 1 : 0;
      long m = static_cast<long>(std::ceil(prev_kd / kPi - 1e-9));
      if ((m & 1L) != parity) ++m;
      const double kd = m * kPi;
      re_k[i] = kd / period;
      im_k[i] = std::acosh(std::abs(x)) / period;
      prev_kd = kd;
      zone = m;
      continue;
    }
    const double theta = std::acos(std::clamp(x, -1.0, 1.0));
    double kd = (zone % 2 == 0) ? zone * kPi + theta : (zone + 1) * kPi - theta;
    while (kd < prev_kd - 1e-9) {
      ++zone;
      kd = (zone % 2 == 0) ? zone * kPi + theta : (zone + 1) * kPi - theta;
    }
    if (kd < prev_kd) kd = prev_kd;  // clamp sub-tolerance wiggle
    re_k[i] = kd / period;
    prev_kd = kd;
  }

  std::vector<Stopband> bands;
  for (std::size_t i = 0; i < n;) {
    if (!gap[i]) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j + 1 < n && gap[j + 1]) ++j;
    bands.push_back({grid[i], grid[j]});
    i = j + 1;
  }
  return DispersionTable(grid, std::move(re_k), std::move(im_k), std::move(gap),
                         std::move(bands), period);
}

}  // namespace

DispersionTable supercell_bloch(const FilmLine& line, const StubPattern& pattern,
                                const std::vector<double>& freq_grid) {
  check_grid(freq_grid);
  const BareLine bare = derive_bare_line(line, pattern);
  const StubPattern pat = pattern.resolved();
  const bool modulated = pat.stub_len_mod > 0.0;
  const int n_cells = modulated ? pat.cells_per_period() : 1;
  const double period = n_cells * pat.cell_pitch;

  const double z0 = bare.z0();
  const double v = bare.v_ph();
  std::vector<double> stub_len(n_cells);
  for (int c = 0; c < n_cells; ++c) {
    stub_len[c] = modulated ? pat.stub_len_avg +
                                  pat.stub_len_mod * std::cos(2.0 * kPi * c / n_cells)
                            : pat.stub_len_avg;
  }

  std::vector<double> chi(freq_grid.size());
  for (std::size_t i = 0; i < freq_grid.size(); ++i) {
    const double f = freq_grid[i];
    const TwoPort half = line_segment(z0, 2.0 * kPi * f / v, 0.5 * pat.cell_pitch);
    TwoPort m;
    for (int c = 0; c < n_cells; ++c) {
      m *= half * stub_shunt(bare, stub_len[c], f) * half;
    }
    chi[i] = 0.5 * (m.a + m.d).real();
  }
  return build_table(freq_grid, chi, period);
}

DispersionTable bare_dispersion(const FilmLine& line,
                                const std::vector<double>& freq_grid) {
  line.validate();
  check_grid(freq_grid);
  const double slow = std::sqrt(line.l_per_m * line.c_per_m);
  const std::size_t n = freq_grid.size();
  std::vector<double> re_k(n), im_k(n, 0.0);
  std::vector<char> gap(n, 0);
  for (std::size_t i = 0; i < n; ++i) re_k[i] = 2.0 * kPi * freq_grid[i] * slow;
  return DispersionTable(freq_grid, std::move(re_k), std::move(im_k),
                         std::move(gap), {}, line.total_length);
}

FilmLine calibrate_loaded_line(const FilmLine& line, const StubPattern& pattern) {
  line.validate();
  pattern.validate();
  if (!(line.z_target > 0.0) || !(line.v_target > 0.0)) {
    throw CalibrationError("calibration targets (z_target, v_target) are not set", 1.0);
  }
  const double v_t = line.v_target * kSpeedOfLight;
  const double z_t = line.z_target;

  // Loaded targets fix the effective medium exactly in the DC limit.
  FilmLine cal = line;
  cal.l_per_m = z_t / v_t;
  cal.c_per_m = 1.0 / (z_t * v_t);

  // Verify against the realized Bloch cell at a frequency low enough that
  // stub dispersion is negligible but high enough to be numerically clean.
  const double f_lo = 50e6;
  const TwoPort m = supercell_matrix(cal, pattern, f_lo);  // also validates split
  const double n_cells = pattern.resolved().stub_len_mod > 0.0
                             ? pattern.cells_per_period()
                             : 1;
  const double period = n_cells * pattern.resolved().cell_pitch;
  const double chi = 0.5 * (m.a + m.d).real();
  if (std::abs(chi) >= 1.0) {
    throw CalibrationError("calibration frequency fell in a stopband", std::abs(chi));
  }
  const double k = std::acos(chi) / period;
  const double v_got = 2.0 * kPi * f_lo / k;
  const complex zi2 = m.b / m.c;
  const double z_got = std::sqrt(std::abs(zi2));

  const double res = std::max(std::abs(v_got - v_t) / v_t, std::abs(z_got - z_t) / z_t);
  if (res > 0.01) {
    throw CalibrationError("loaded-line calibration missed its targets", res);
  }
  return cal;
}

IStarFit fit_istar(const std::vector<IStarPoint>& points) {
  if (points.size() < 3) {
    throw std::invalid_argument("fit_istar needs at least 3 data points");
  }
  for (const auto& p : points) {
    if (!(p.f_center > 0.0) || p.i_dc < 0.0) {
      throw std::invalid_argument("fit_istar: currents must be >= 0 and frequencies > 0");
    }
  }
  const double i_ref = points.front().i_dc;
  bool distinct = false;
  for (const auto& p : points) {
    if (p.i_dc != i_ref) distinct = true;
  }
  if (!distinct) {
    throw std::invalid_argument("fit_istar: all data points share one current");
  }

  // f = f0 / sqrt(1 + (i/i_star)^2)  <=>  1/f^2 = a + b i^2 with
  // a = 1/f0^2, b = 1/(f0^2 i_star^2).
  const std::size_t n = points.size();
  double sx = 0.0, su = 0.0, sxx = 0.0, sxu = 0.0;
  for (const auto& p : points) {
    const double x = p.i_dc * p.i_dc;
    const double u = 1.0 / (p.f_center * p.f_center);
    sx += x;
    su += u;
    sxx += x * x;
    sxu += x * u;
  }
  const double denom = n * sxx - sx * sx;
  const double b = (n * sxu - sx * su) / denom;
  const double a = (su - b * sx) / n;

  IStarFit fit;
  fit.f0 = 1.0 / std::sqrt(a);
  if (!(b > 0.0)) {
    fit.i_star = std::numeric_limits<double>::infinity();
    fit.finite = false;
    fit.note = "no downward frequency shift with current; i_star is unbounded";
  } else {
    fit.i_star = std::sqrt(a / b);
    fit.finite = true;
  }

  double ss = 0.0;
  for (const auto& p : points) {
    const double r = p.i_dc / (fit.finite ? fit.i_star
                                          : std::numeric_limits<double>::infinity());
    const double model = fit.f0 / std::sqrt(1.0 + r * r);
    const double rel = (model - p.f_center) / p.f_center;
    ss += rel * rel;
  }
  fit.rms_rel_residual = std::sqrt(ss / n);
  return fit;
}

}  // namespace kitwpa
