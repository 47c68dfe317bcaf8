#include "kitwpa/fwm.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "kitwpa/constants.hpp"
#include "kitwpa/errors.hpp"

namespace kitwpa {

int ToneSet::index_of(const std::string& label) const {
  for (std::size_t i = 0; i < tones.size(); ++i)
    if (tones[i].label == label) return static_cast<int>(i);
  return -1;
}

const Tone& ToneSet::tone(const std::string& label) const {
  int i = index_of(label);
  if (i < 0) throw std::out_of_range("ToneSet: no tone labeled " + label);
  return tones[static_cast<std::size_t>(i)];
}

namespace {

constexpr double kFreqMatchTol = 1.0;  // Hz, mixing-term frequency matching

void place_tone(ToneSet& set, const DispersionTable& table, std::string label,
                ToneRole role, double freq, std::complex<double> amp) {
  Tone tone;
  tone.label = std::move(label);
  tone.role = role;
  tone.freq_hz = freq;
  tone.amp = amp;
  if (freq < table.f_min() || freq > table.f_max()) {
    tone.evanescent = true;
    set.warnings.push_back("tone '" + tone.label + "' at " +
                           std::to_string(freq) +
                           " Hz lies outside the dispersion table; excluded");
  } else if (table.in_stopband(freq)) {
    tone.evanescent = true;
    set.warnings.push_back("tone '" + tone.label + "' at " +
                           std::to_string(freq) +
                           " Hz is evanescent (inside a stopband); excluded");
  } else {
    tone.k = table.k_at(freq, tone.label);
  }
  set.tones.push_back(std::move(tone));
}

// Every cubic combination a + b - c that lands on a set member, enumerated
// over unordered pairs so each distinct product appears exactly once.
void enumerate_terms(ToneSet& set) {
  const int n = static_cast<int>(set.tones.size());
  for (int j = 0; j < n; ++j) {
    if (set.tones[j].evanescent) continue;
    for (int a = 0; a < n; ++a) {
      if (set.tones[a].evanescent) continue;
      for (int b = a; b < n; ++b) {
        if (set.tones[b].evanescent) continue;
        for (int c = 0; c < n; ++c) {
          if (set.tones[c].evanescent) continue;
          double f = set.tones[a].freq_hz + set.tones[b].freq_hz -
                     set.tones[c].freq_hz;
          if (std::abs(f - set.tones[j].freq_hz) > kFreqMatchTol) continue;
          MixingTerm term;
          term.target = j;
          term.a = a;
          term.b = b;
          term.c = c;
          term.multiplicity = (a == b) ? 1.0 : 2.0;
          term.delta_k = set.tones[a].k + set.tones[b].k - set.tones[c].k -
                         set.tones[j].k;
          set.terms.push_back(term);
        }
      }
    }
  }
}

}  // namespace

ToneSet build_tone_set(double f_pump, double f_signal,
                       const DispersionTable& table, ToneSetMode mode) {
  if (!(f_pump > 0.0) || !(f_signal > 0.0))
    throw std::domain_error("build_tone_set: frequencies must be positive");
  if (std::abs(f_signal - f_pump) <= kFreqMatchTol)
    throw DegenerateToneError("signal at " + std::to_string(f_signal) +
                              " Hz coincides with the pump");

  ToneSet set;
  place_tone(set, table, "pump", ToneRole::pump, f_pump, 0.0);
  place_tone(set, table, "signal", ToneRole::signal, f_signal, 0.0);
  place_tone(set, table, "idler", ToneRole::idler, 2.0 * f_pump - f_signal,
             0.0);
  if (mode == ToneSetMode::six_tone) {
    place_tone(set, table, "3fp", ToneRole::harmonic, 3.0 * f_pump, 0.0);
    place_tone(set, table, "2fp+fs", ToneRole::harmonic, 2.0 * f_pump + f_signal,
               0.0);
    place_tone(set, table, "4fp-fs", ToneRole::harmonic,
               4.0 * f_pump - f_signal, 0.0);
  }
  enumerate_terms(set);
  return set;
}

double gamma_of_tone(double freq_hz, const FilmLine& line) {
  double v = telegrapher_params(line).v_ph;
  return (2.0 * kPi * freq_hz / v) / (8.0 * line.i_star * line.i_star);
}

void cme_rhs(const ToneSet& set, const FilmLine& line, double z,
             const std::vector<std::complex<double>>& amps,
             std::vector<std::complex<double>>& deriv) {
  deriv.assign(amps.size(), 0.0);
  for (const MixingTerm& term : set.terms) {
    std::complex<double> prod = amps[static_cast<std::size_t>(term.a)] *
                                amps[static_cast<std::size_t>(term.b)] *
                                std::conj(amps[static_cast<std::size_t>(term.c)]);
    double phase = term.delta_k * z;
    deriv[static_cast<std::size_t>(term.target)] +=
        term.multiplicity * prod *
        std::complex<double>(std::cos(phase), std::sin(phase));
  }
  for (std::size_t j = 0; j < deriv.size(); ++j) {
    double gamma = gamma_of_tone(set.tones[j].freq_hz, line);
    deriv[j] *= std::complex<double>(0.0, gamma);
  }
}

ToneSet integrate_observed(
    const ToneSet& set, const FilmLine& line, double z_span, double rtol,
    const std::function<void(double, const std::vector<std::complex<double>>&)>&
        observer) {
  if (!(rtol > 0.0)) throw std::domain_error("integrate: rtol must be > 0");
  std::vector<std::complex<double>> amps(set.tones.size());
  for (std::size_t j = 0; j < amps.size(); ++j) amps[j] = set.tones[j].amp;

  IntegratorOptions opt;
  opt.rtol = rtol;
  auto rhs = [&](double z, const std::vector<std::complex<double>>& y,
                 std::vector<std::complex<double>>& dy) {
    cme_rhs(set, line, z, y, dy);
  };
  if (observer) {
    integrate_rk45(rhs, amps, 0.0, z_span, opt,
                   [&](double z, const std::vector<std::complex<double>>& y) {
                     observer(z, y);
                   });
  } else {
    integrate_rk45(rhs, amps, 0.0, z_span, opt,
                   [](double, const std::vector<std::complex<double>>&) {});
  }

  ToneSet out = set;
  for (std::size_t j = 0; j < amps.size(); ++j)
    if (!out.tones[j].evanescent) out.tones[j].amp = amps[j];
  return out;
}

ToneSet integrate(const ToneSet& set, const FilmLine& line, double z_span,
                  double rtol) {
  return integrate_observed(set, line, z_span, rtol, nullptr);
}

namespace {

// Chunked deterministic parallel map: results land by index regardless of
// scheduling. The first worker exception is rethrown on the calling thread.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn) {
  unsigned workers = std::max(1u, std::thread::hardware_concurrency());
  if (workers == 1 || count < 2) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next.store(count);
          return;
        }
      }
    });
  for (std::thread& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

double gain_at(const FilmLine& line, const DispersionTable& table,
               const PumpConfig& pump, double f_signal, ToneSetMode mode,
               double probe_dbm, std::vector<std::string>* warnings) {
  double z0 = telegrapher_params(line).z0;
  ToneSet set = build_tone_set(pump.f_pump, f_signal, table, mode);
  if (warnings)
    warnings->insert(warnings->end(), set.warnings.begin(),
                     set.warnings.end());
  // Inoperative process: no propagating signal or idler, unity ratio.
  if (set.tone("signal").evanescent || set.tone("idler").evanescent)
    return 0.0;

  double probe = current_from_dbm(probe_dbm, z0);
  for (Tone& tone : set.tones) {
    if (tone.role == ToneRole::pump) tone.amp = pump.i_pump;
    if (tone.role == ToneRole::signal) tone.amp = probe;
  }
  ToneSet out = integrate(set, line, line.total_length);
  double ratio = std::norm(out.tone("signal").amp) / (probe * probe);
  return 10.0 * std::log10(ratio);
}

}  // namespace

GainCurve gain_curve(const FilmLine& line, const DispersionTable& table,
                     const PumpConfig& pump,
                     const std::vector<double>& freq_grid, ToneSetMode mode,
                     double probe_dbm) {
  GainCurve curve;
  curve.freq_hz = freq_grid;
  curve.gain_db.assign(freq_grid.size(), 0.0);
  curve.pump = pump;
  curve.mode = mode;
  curve.probe_dbm = probe_dbm;

  // A grid point landing on the pump has no distinct signal tone; nudge it
  // off by twice the matching tolerance rather than abort the sweep.
  for (double& f : curve.freq_hz) {
    if (std::abs(f - pump.f_pump) <= kFreqMatchTol) {
      f += 2.0 * kFreqMatchTol;
      curve.warnings.push_back(
          "grid point at the pump frequency moved by 2 Hz to keep the signal "
          "tone distinct");
    }
  }

  std::vector<std::vector<std::string>> warn(freq_grid.size());
  parallel_for(curve.freq_hz.size(), [&](std::size_t i) {
    curve.gain_db[i] =
        gain_at(line, table, pump, curve.freq_hz[i], mode, probe_dbm, &warn[i]);
  });
  for (const auto& w : warn)
    for (const std::string& msg : w)
      if (std::find(curve.warnings.begin(), curve.warnings.end(), msg) ==
          curve.warnings.end())
        curve.warnings.push_back(msg);
  return curve;
}

CompressionResult compression_sweep(const FilmLine& line,
                                    const DispersionTable& table,
                                    const PumpConfig& pump, double f_signal,
                                    const std::vector<double>& p_in_dbm_grid,
                                    ToneSetMode mode) {
  CompressionResult result;
  result.small_signal_gain_db =
      gain_at(line, table, pump, f_signal, mode, -90.0, nullptr);
  if (result.small_signal_gain_db < 10.0)
    throw std::domain_error(
        "compression_sweep: small-signal gain below 10 dB at f_signal");

  result.curve.resize(p_in_dbm_grid.size());
  parallel_for(p_in_dbm_grid.size(), [&](std::size_t i) {
    result.curve[i] = CompressionPoint{
        p_in_dbm_grid[i],
        gain_at(line, table, pump, f_signal, mode, p_in_dbm_grid[i], nullptr)};
  });

  double target = result.small_signal_gain_db - 1.0;
  for (std::size_t i = 1; i < result.curve.size(); ++i) {
    double g0 = result.curve[i - 1].gain_db;
    double g1 = result.curve[i].gain_db;
    if (g0 > target && g1 <= target) {
      double frac = (g0 - target) / (g0 - g1);
      double p1 = result.curve[i - 1].p_in_dbm +
                  frac * (result.curve[i].p_in_dbm - result.curve[i - 1].p_in_dbm);
      result.p1db_in_dbm = p1;
      result.p1db_out_dbm = p1 + result.small_signal_gain_db - 1.0;
      break;
    }
  }
  return result;
}

double RippleModel::k_at(double freq_hz) const {
  return 2.0 * kPi * freq_hz / v_ph;
}

void RippleModel::validate(RippleConvention convention) const {
  if (!(r >= 0.0 && r < 1.0))
    throw std::domain_error("ripple: need 0 <= r < 1");
  if (!(g > 0.0)) throw std::domain_error("ripple: need g > 0");
  if (!(v_ph > 0.0) || !(length > 0.0))
    throw std::domain_error("ripple: need positive v_ph and length");
  double t_eff = t > 0.0 ? t : std::sqrt(1.0 - r * r);
  if (r * r + t_eff * t_eff > 1.0 + 1e-12)
    throw std::domain_error("ripple: r^2 + t^2 exceeds 1");
  // Feedback pole guard; 0.999 keeps the evaluated series finite.
  double loop = convention == RippleConvention::as_printed ? r * r * g
                                                           : r * r * g * g;
  if (loop >= 0.999) throw OscillationError(loop);
}

Trace ripple_s21(const RippleModel& model, const std::vector<double>& freq_grid,
                 RippleConvention convention) {
  model.validate(convention);
  double t_eff = model.t > 0.0 ? model.t : std::sqrt(1.0 - model.r * model.r);

  Trace trace;
  trace.freq_hz = freq_grid;
  trace.values.resize(freq_grid.size());
  trace.unit = TraceUnit::db;
  for (std::size_t i = 0; i < freq_grid.size(); ++i) {
    double phase = model.k_at(freq_grid[i]) * model.length;
    std::complex<double> one_way(std::cos(phase), -std::sin(phase));
    std::complex<double> s21;
    if (convention == RippleConvention::as_printed) {
      s21 = t_eff * t_eff * model.g * one_way /
            (1.0 - model.r * model.r * model.g * one_way);
    } else {
      s21 = t_eff * t_eff * model.g * one_way /
            (1.0 - model.r * model.r * model.g * model.g * one_way * one_way);
    }
    trace.values[i] = 20.0 * std::log10(std::abs(s21));
  }
  return trace;
}

}  // namespace kitwpa
