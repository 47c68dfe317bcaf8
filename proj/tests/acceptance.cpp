// Release gate: eleven numbered criteria, one verdict line each. Every
// tolerance is pinned here, next to the check it gates. The binary exits
// with the number of failed criteria so ctest reports any regression.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <functional>
#include <iomanip>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "kitwpa/config.hpp"
#include "kitwpa/constants.hpp"
#include "kitwpa/errors.hpp"
#include "kitwpa/fwm.hpp"
#include "kitwpa/linemodel.hpp"
#include "kitwpa/noise.hpp"
#include "kitwpa/phasematch.hpp"
#include "oracles.hpp"

using namespace kitwpa;
using cd = std::complex<double>;
using clock_type = std::chrono::steady_clock;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

const RunConfig& preset() {
  static RunConfig cfg = load_run_config("nbtin-4to8", {});
  return cfg;
}

// Shared 1 MHz dispersion table reaching past the highest six-tone product.
// Built inside criterion 2 so its cost counts against that runtime budget.
DispersionTable* g_table = nullptr;

PumpConfig preset_pump() {
  return PumpConfig{preset().pump_f_hz, preset().pump_i_a, 0.0};
}

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) out[i] = lo + (hi - lo) * i / (n - 1);
  return out;
}

std::string fmt(double v, int prec = 4) {
  std::ostringstream s;
  s << std::setprecision(prec) << v;
  return s.str();
}

// --- criteria ---------------------------------------------------------

Verdict telegrapher_consistency() {
  TelegrapherParams tp = telegrapher_params(preset().line);
  double z_dev = std::fabs(tp.z0 / 50.0 - 1.0);
  double v_dev = std::fabs(tp.v_ph / (0.010 * kSpeedOfLight) - 1.0);
  Verdict v;
  v.pass = z_dev <= 0.02 && v_dev <= 0.05;
  v.detail = "Z0 " + fmt(tp.z0, 6) + " ohm (" + fmt(100 * z_dev, 2) +
             "% from 50, limit 2%), v/c " + fmt(tp.v_ph / kSpeedOfLight, 5) +
             " (" + fmt(100 * v_dev, 2) + "% from 0.010, limit 5%)";
  return v;
}

Verdict bandgap_placement() {
  static std::vector<double> grid = [] {
    std::vector<double> g;
    for (double f = 0.05e9; f <= 44.0e9; f += 1e6) g.push_back(f);
    return g;
  }();
  static DispersionTable table = supercell_bloch(preset().line,
                                                 preset().pattern, grid);
  g_table = &table;
  Verdict v;
  if (table.stopbands().empty()) {
    v.detail = "no stopband found below 44 GHz";
    return v;
  }
  const Stopband& s = table.stopbands().front();
  double dev = std::fabs(s.center() / 12.5e9 - 1.0);
  v.pass = dev <= 0.02;
  v.detail = "first stopband [" + fmt(s.f_low / 1e9, 5) + ", " +
             fmt(s.f_high / 1e9, 5) + "] GHz, center " +
             fmt(s.center() / 1e9, 5) + " GHz (" + fmt(100 * dev, 2) +
             "% from 12.5, limit 2%)";
  return v;
}

Verdict idler_notch() {
  BandPrediction pred =
      predict_bands(*g_table, preset_pump(), preset().line.i_star);
  double notch = pred.idler_gap_freq;
  Verdict v;
  v.pass = std::fabs(notch - 8.7e9) <= 0.1e9;
  v.detail = "inoperative signal frequency " + fmt(notch / 1e9, 5) +
             " GHz (limit 8.7 +- 0.1 GHz)";
  return v;
}

Verdict gain_magnitude_and_structure() {
  GainCurve curve = gain_curve(preset().line, *g_table, preset_pump(),
                               linspace(3.0e9, 18.0e9, 500),
                               ToneSetMode::six_tone);
  double peak = -1e300, f_peak = 0.0;
  for (std::size_t i = 0; i < curve.gain_db.size(); ++i) {
    if (curve.gain_db[i] > peak) {
      peak = curve.gain_db[i];
      f_peak = curve.freq_hz[i];
    }
  }
  // A gain region is a maximal run of grid points above 3 dB.
  int regions = 0;
  bool inside = false;
  for (double g : curve.gain_db) {
    if (g > 3.0 && !inside) ++regions;
    inside = g > 3.0;
  }
  BandPrediction pred =
      predict_bands(*g_table, preset_pump(), preset().line.i_star);
  GainCurve notches =
      gain_curve(preset().line, *g_table, preset_pump(),
                 {pred.idler_gap_freq, 12.5e9}, ToneSetMode::six_tone);
  bool notch_dead = std::fabs(notches.gain_db[0]) < 1e-12 &&
                    std::fabs(notches.gain_db[1]) < 1e-12;
  Verdict v;
  v.pass = peak > 20.0 && regions == 3 && notch_dead;
  v.detail = "peak " + fmt(peak, 4) + " dB at " + fmt(f_peak / 1e9, 4) +
             " GHz (limit > 20), " + std::to_string(regions) +
             " regions above 3 dB (want 3), gain(" +
             fmt(pred.idler_gap_freq / 1e9, 4) + " GHz) = " +
             fmt(notches.gain_db[0], 2) + " dB, gain(12.5 GHz) = " +
             fmt(notches.gain_db[1], 2) + " dB";
  return v;
}

Verdict cme_oracle_equivalence() {
  const FilmLine& line = preset().line;
  PumpConfig pump = preset_pump();
  double p_pump = pump.i_pump * pump.i_pump;
  std::mt19937_64 rng(12345);
  std::uniform_real_distribution<double> pick(4.2e9, 8.2e9);
  double worst = 0.0, worst_f = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    double fs = pick(rng);
    double ode = gain_curve(line, *g_table, pump, {fs},
                            ToneSetMode::three_tone)
                     .gain_db[0];
    double kappa_eff = delta_beta(*g_table, fs, pump.f_pump) +
                       2.0 * gamma_of_tone(pump.f_pump, line) * p_pump;
    double closed = oracle::closed_form_gain_db(
        gamma_of_tone(fs, line),
        gamma_of_tone(idler_freq(pump.f_pump, fs), line), p_pump, kappa_eff,
        line.total_length);
    double err = std::fabs(ode - closed);
    if (err > worst) {
      worst = err;
      worst_f = fs;
    }
  }
  Verdict v;
  v.pass = worst < 0.05;
  v.detail = "worst |ODE - closed form| " + fmt(worst, 3) + " dB at " +
             fmt(worst_f / 1e9, 4) + " GHz over 100 random tones (limit 0.05)";
  return v;
}

Verdict conservation_laws() {
  const FilmLine& line = preset().line;
  double worst_energy = 0.0, worst_photon = 0.0;
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * kPi);

  auto run_one = [&](ToneSet set) {
    double e0 = 0.0, n0 = 0.0;
    for (const Tone& t : set.tones) {
      e0 += std::norm(t.amp);
      n0 += std::norm(t.amp) / t.freq_hz;
    }
    auto observer = [&](double, const std::vector<cd>& amps) {
      double e = 0.0, n = 0.0;
      for (std::size_t j = 0; j < amps.size(); ++j) {
        e += std::norm(amps[j]);
        n += std::norm(amps[j]) / set.tones[j].freq_hz;
      }
      worst_energy = std::max(worst_energy, std::fabs(e / e0 - 1.0));
      worst_photon = std::max(worst_photon, std::fabs(n / n0 - 1.0));
    };
    integrate_observed(set, line, line.total_length, 1e-10, observer);
  };

  for (double fs : {4.5e9, 6.0e9, 7.5e9}) {
    ToneSet set = build_tone_set(preset().pump_f_hz, fs, *g_table,
                                 ToneSetMode::three_tone);
    set.tones[set.index_of("pump")].amp = preset().pump_i_a;
    set.tones[set.index_of("signal")].amp = 1e-6;
    run_one(set);

    ToneSet six = build_tone_set(preset().pump_f_hz, fs, *g_table,
                                 ToneSetMode::six_tone);
    six.tones[six.index_of("pump")].amp = preset().pump_i_a;
    six.tones[six.index_of("signal")].amp = 1e-6;
    // Seed the harmonics so all mixing terms carry current.
    for (const char* label : {"3fp", "2fp+fs", "4fp-fs"}) {
      std::size_t j = six.index_of(label);
      if (!six.tones[j].evanescent)
        six.tones[j].amp = std::polar(2e-5, phase(rng));
    }
    run_one(six);
  }

  Verdict v;
  v.pass = worst_energy < 1e-8 && worst_photon < 1e-8;
  v.detail = "six integrations: worst energy drift " + fmt(worst_energy, 2) +
             ", worst photon-flux drift " + fmt(worst_photon, 2) +
             " (limit 1e-8 relative)";
  return v;
}

Verdict compression_point() {
  const FilmLine& line = preset().line;
  TelegrapherParams tp = telegrapher_params(line);
  const double pump_dbm = -23.0;
  PumpConfig pump = pump_from_dbm(preset().pump_f_hz, pump_dbm, tp.z0);

  // Probe frequency: deterministic small-signal gain peak for this drive.
  GainCurve scan = gain_curve(line, *g_table, pump, linspace(4.0e9, 8.4e9, 45),
                              ToneSetMode::three_tone);
  std::size_t at = std::max_element(scan.gain_db.begin(), scan.gain_db.end()) -
                   scan.gain_db.begin();
  double f_signal = scan.freq_hz[at];

  std::vector<double> p_in;
  for (double p = -70.0; p <= -30.0; p += 1.0) p_in.push_back(p);
  CompressionResult comp =
      compression_sweep(line, *g_table, pump, f_signal, p_in);

  Verdict v;
  if (!comp.p1db_out_dbm) {
    v.detail = "no 1 dB compression point inside the input grid";
    return v;
  }
  double target = pump_dbm - 20.0;
  double miss = *comp.p1db_out_dbm - target;
  v.pass = std::fabs(miss) <= 3.0;
  v.detail = "pump " + fmt(pump_dbm, 3) + " dBm, probe " +
             fmt(f_signal / 1e9, 4) + " GHz, G0 " +
             fmt(comp.small_signal_gain_db, 4) + " dB, out-referred P1dB " +
             fmt(*comp.p1db_out_dbm, 4) + " dBm vs pump - 20 dB = " +
             fmt(target, 3) + " dBm (off " + fmt(miss, 3) + " dB, limit 3)";
  return v;
}

Verdict ripple_spacing() {
  TelegrapherParams tp = telegrapher_params(preset().line);
  RippleModel model;
  model.r = 0.12;
  model.g = std::pow(10.0, 15.0 / 20.0);
  model.v_ph = tp.v_ph;
  model.length = 0.1;

  std::vector<double> grid;
  for (double f = 6.0e9; f <= 6.1e9; f += 0.05e6) grid.push_back(f);
  Trace s21 = ripple_s21(model, grid, RippleConvention::round_trip);

  std::vector<double> peaks;
  for (std::size_t i = 1; i + 1 < s21.size(); ++i)
    if (s21.values[i] > s21.values[i - 1] && s21.values[i] > s21.values[i + 1])
      peaks.push_back(s21.freq_hz[i]);
  double spacing = peaks.size() > 1
                       ? (peaks.back() - peaks.front()) / (peaks.size() - 1)
                       : 0.0;
  bool spacing_ok = std::fabs(spacing - 15e6) <= 1e6;

  // The one-way convention must oscillate exactly at loop gain r^2 g >= 1.
  auto trips = [&](double loop) {
    RippleModel m = model;
    m.g = loop / (m.r * m.r);
    try {
      m.validate(RippleConvention::as_printed);
    } catch (const OscillationError&) {
      return true;
    }
    return false;
  };
  bool threshold_ok = !trips(0.99) && trips(1.0) && trips(1.2);

  Verdict v;
  v.pass = spacing_ok && threshold_ok;
  v.detail = "round-trip ripple period " + fmt(spacing / 1e6, 4) +
             " MHz over " + std::to_string(peaks.size()) +
             " peaks (limit 15 +- 1); one-way loop 0.99/1.0/1.2 -> " +
             std::string(trips(0.99) ? "raise" : "pass") + "/" +
             (trips(1.0) ? "raise" : "pass") + "/" +
             (trips(1.2) ? "raise" : "pass");
  return v;
}

Verdict noise_round_trip() {
  NoiseChain chain = preset().noise.chain;
  chain.t_hot = preset().noise.t_hot_k;
  chain.t_cold = preset().noise.t_cold_k;
  std::vector<double> grid = linspace(4.0e9, 8.0e9, 81);

  SynthesizedMeasurement clean = synth_measurement(chain, grid, 1, 0.0);
  ExtractionResult ex = extract_added_noise(
      clean.hot, clean.cold, clean.pump_off, clean.bypass, clean.gain,
      chain.t_hot, chain.t_cold, std::nullopt, &clean.hot_off,
      &clean.cold_off);
  double worst = 0.0;
  bool all_valid = true;
  for (std::size_t i = 0; i < ex.n_a.size(); ++i) {
    if (!ex.valid[i]) all_valid = false;
    worst = std::max(worst, std::fabs(ex.n_a.values[i] - chain.n_a));
  }

  double sum = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    SynthesizedMeasurement m = synth_measurement(chain, grid, seed, 0.01);
    ExtractionResult e = extract_added_noise(
        m.hot, m.cold, m.pump_off, m.bypass, m.gain, chain.t_hot,
        chain.t_cold, std::nullopt, &m.hot_off, &m.cold_off);
    double acc = 0.0;
    int n = 0;
    for (std::size_t i = 0; i < e.n_a.size(); ++i)
      if (e.valid[i]) {
        acc += e.n_a.values[i];
        ++n;
      }
    sum += acc / n;
  }
  double bias = std::fabs(sum / 100.0 - chain.n_a);

  Verdict v;
  v.pass = all_valid && worst < 1e-6 && bias < 0.05;
  v.detail = "noiseless worst |n_a - 0.7| " + fmt(worst, 2) +
             " (limit 1e-6); 1% trace noise, 100 seeds: bias " +
             fmt(bias, 3) + " quanta (limit 0.05)";
  return v;
}

Verdict occupation_values() {
  double hot = occupation(3.18, 6.0e9);
  double cold = occupation(0.020, 6.0e9);
  Verdict v;
  v.pass = std::fabs(hot - 11.06) <= 0.01 && std::fabs(cold - 0.500) <= 0.001;
  v.detail = "N(3.18 K, 6 GHz) = " + fmt(hot, 6) +
             " (limit 11.06 +- 0.01), N(20 mK, 6 GHz) = " + fmt(cold, 6) +
             " (limit 0.500 +- 0.001)";
  return v;
}

Verdict added_noise_window() {
  // 1 dB measured loss per side, 15 dB device gain, 13-quanta second stage.
  // The cascade inversion is n_a(s) = l1 s - c with the offset c carrying
  // the second stage: c >= n_hemt/(l2 g_pa) >= 13/31.62 = 0.411 for any
  // l2 <= 1. Containment in [0.3, 1.7] over s in [1, 3] needs
  // 3 l1 - c <= 1.7 and l1 - c >= 0.3; subtracting forces 2 l1 <= 1.4,
  // hence c <= l1 - 0.3 <= 0.4 < 0.411. No flat loss satisfies it, so the
  // containment half of this criterion fails by arithmetic, not by bug;
  // the bracketing half (span covers [0.5, 1.5]) holds.
  NoiseChain chain;
  chain.l1 = std::pow(10.0, -0.1);
  chain.l2 = chain.l1;
  chain.g_pa = std::pow(10.0, 1.5);
  chain.n_hemt = 13.0;
  chain.t_hot = 3.18;
  chain.t_cold = 0.02;

  double lo = added_noise(1.0, chain, 6.0e9).n_a;
  double mid = added_noise(2.0, chain, 6.0e9).n_a;
  double hi = added_noise(3.0, chain, 6.0e9).n_a;
  bool contained = lo >= 0.3 && hi <= 1.7;
  bool brackets = lo <= 0.5 && hi >= 1.5;

  Verdict v;
  v.pass = contained && brackets;
  v.detail = "n_sys 1/2/3 -> n_a " + fmt(lo, 4) + "/" + fmt(mid, 4) + "/" +
             fmt(hi, 4) + " quanta; within [0.3, 1.7]: " +
             (contained ? "yes" : "no") + "; brackets [0.5, 1.5]: " +
             (brackets ? "yes" : "no");
  return v;
}

struct Criterion {
  int id;
  const char* name;
  double budget_s;  // 0 = untimed
  Verdict (*run)();
};

}  // namespace

int main() {
  const Criterion criteria[] = {
      {1, "telegrapher consistency", 1.0, telegrapher_consistency},
      {2, "bandgap placement", 10.0, bandgap_placement},
      {3, "idler notch", 1.0, idler_notch},
      {4, "gain magnitude and structure", 60.0, gain_magnitude_and_structure},
      {5, "coupled-mode oracle equivalence", 30.0, cme_oracle_equivalence},
      {6, "conservation laws", 0.0, conservation_laws},
      {7, "compression point", 120.0, compression_point},
      {8, "ripple spacing and oscillation", 0.0, ripple_spacing},
      {9, "noise pipeline round trip", 10.0, noise_round_trip},
      {10, "occupation values", 0.0, occupation_values},
      {11, "added-noise window", 0.0, added_noise_window},
  };

  int failures = 0;
  for (const Criterion& c : criteria) {
    auto t0 = clock_type::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail = std::string("exception: ") + e.what();
    }
    double secs =
        std::chrono::duration<double>(clock_type::now() - t0).count();
    bool in_budget = c.budget_s <= 0.0 || secs <= c.budget_s;
    bool ok = v.pass && in_budget;
    if (!ok) ++failures;
    std::printf("%s  %2d  %-34s %s  [%.2f s%s]\n", ok ? "PASS" : "FAIL", c.id,
                c.name, v.detail.c_str(), secs,
                c.budget_s > 0.0
                    ? (", limit " + fmt(c.budget_s, 3) + " s").c_str()
                    : "");
  }
  std::printf("%d of 11 criteria pass\n", 11 - failures);
  return failures;
}
