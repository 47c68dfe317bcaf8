#include "kitwpa/noise.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "kitwpa/constants.hpp"
#include "kitwpa/errors.hpp"

namespace kitwpa {

namespace {

constexpr double kNqm = 0.5;  // quantum noise floor, kB T << h f regime

void require_same_grid(const Trace& a, const Trace& b, const char* what) {
  if (a.freq_hz == b.freq_hz) return;
  throw GridMismatchError(what);
}

}  // namespace

void NoiseChain::validate() const {
  std::vector<std::string> problems;
  if (!(l1 > 0.0 && l1 <= 1.0))
    problems.push_back("noise: l1 must lie in (0, 1]");
  if (!(l2 > 0.0 && l2 <= 1.0))
    problems.push_back("noise: l2 must lie in (0, 1]");
  if (!(g_pa >= 1.0)) problems.push_back("noise: g_pa must be >= 1");
  if (!(g_hemt >= 1.0)) problems.push_back("noise: g_hemt must be >= 1");
  if (!(g_w >= 1.0)) problems.push_back("noise: g_w must be >= 1");
  if (n_a < 0.0 || n_hemt < 0.0 || n_w < 0.0)
    problems.push_back("noise: added-noise terms must be non-negative");
  if (!(t_hot > t_cold && t_cold > 0.0))
    problems.push_back("noise: need t_hot > t_cold > 0");
  if (!problems.empty()) throw ConfigError(problems);
}

double occupation(double t_kelvin, double f_hz) {
  if (!(t_kelvin > 0.0))
    throw std::domain_error("occupation: temperature must be positive");
  if (!(f_hz > 0.0))
    throw std::domain_error("occupation: frequency must be positive");
  double x = kPlanck * f_hz / (2.0 * kBoltzmann * t_kelvin);
  return 0.5 / std::tanh(x);
}

double quanta_from_kelvin_rj(double t_kelvin, double f_hz) {
  return t_kelvin * kBoltzmann / (kPlanck * f_hz);
}

double kelvin_from_quanta_rj(double n_quanta, double f_hz) {
  return n_quanta * kPlanck * f_hz / kBoltzmann;
}

double y_factor_nsys(double n_hot, double n_cold, double y) {
  if (!(y > 1.0))
    throw std::domain_error(
        "y_factor_nsys: Y must exceed 1 (hot/cold indistinguishable or "
        "inverted)");
  return (n_hot - y * n_cold) / (y - 1.0);
}

double cascade_forward(const NoiseChain& chain, double t_source, double f_hz,
                       PumpState state) {
  double n_in = occupation(t_source, f_hz);
  if (state == PumpState::bypass)
    return chain.g_w * (chain.g_hemt * (n_in + chain.n_hemt) + chain.n_w);

  double g_pa = state == PumpState::on ? chain.g_pa : 1.0;
  double n_a = state == PumpState::on ? chain.n_a : 0.0;
  double n1 = chain.l1 * n_in + kNqm * (1.0 - chain.l1);
  double n2 = g_pa * (n1 + n_a);
  double n3 = chain.l2 * n2 + kNqm * (1.0 - chain.l2);
  double n4 = chain.g_hemt * (n3 + chain.n_hemt);
  return chain.g_w * (n4 + chain.n_w);
}

EffectiveCascade effective_cascade(const NoiseChain& chain) {
  EffectiveCascade out;
  out.g_eff = chain.g_w * chain.g_hemt * chain.l2 * chain.g_pa * chain.l1;
  out.n_pa_eff = kNqm * (1.0 - chain.l1) / chain.l1 + chain.n_a / chain.l1;
  out.n_hemt_eff =
      (kNqm * (1.0 - chain.l2) + chain.n_hemt) /
      (chain.l2 * chain.g_pa * chain.l1);
  return out;
}

AddedNoiseResult added_noise(double n_sys, const NoiseChain& chain,
                             double /*f_hz*/) {
  if (!(chain.g_pa > 1.0))
    throw std::domain_error("added_noise: device gain must exceed 1");
  double denom = chain.l2 * chain.g_pa;
  double n_a = chain.l1 * n_sys -
               kNqm * (chain.l2 * chain.g_pa * (1.0 - chain.l1) +
                       (1.0 - chain.l2)) /
                   denom -
               chain.n_hemt / denom;
  return AddedNoiseResult{n_a, n_a < 0.0};
}

LossTraces deembed_loss(const Trace& bypass_db, const Trace& pump_off_db) {
  require_same_grid(bypass_db, pump_off_db, "deembed_loss");
  if (bypass_db.unit != TraceUnit::db || pump_off_db.unit != TraceUnit::db)
    throw std::domain_error("deembed_loss: both traces must be in dB");

  LossTraces out;
  out.loss_db.freq_hz = bypass_db.freq_hz;
  out.loss_db.unit = TraceUnit::db;
  out.loss_linear.freq_hz = bypass_db.freq_hz;
  out.loss_linear.unit = TraceUnit::linear;
  out.loss_db.values.resize(bypass_db.size());
  out.loss_linear.values.resize(bypass_db.size());
  for (std::size_t i = 0; i < bypass_db.size(); ++i) {
    double per_side = 0.5 * (bypass_db.values[i] - pump_off_db.values[i]);
    out.loss_db.values[i] = per_side;
    out.loss_linear.values[i] = std::pow(10.0, -per_side / 10.0);
  }
  return out;
}

HemtNoiseTrace hemt_noise_from_yfactor(const Trace& hot_linear,
                                       const Trace& cold_linear,
                                       const NoiseChain& chain) {
  require_same_grid(hot_linear, cold_linear, "hemt_noise_from_yfactor");
  if (hot_linear.unit != TraceUnit::linear ||
      cold_linear.unit != TraceUnit::linear)
    throw std::domain_error(
        "hemt_noise_from_yfactor: traces must be linear power");

  HemtNoiseTrace out;
  out.quanta.freq_hz = hot_linear.freq_hz;
  out.quanta.unit = TraceUnit::quanta;
  out.quanta.values.resize(hot_linear.size());
  out.valid.assign(hot_linear.size(), 1);
  double l12 = chain.l1 * chain.l2;
  for (std::size_t i = 0; i < hot_linear.size(); ++i) {
    double f = hot_linear.freq_hz[i];
    double y = hot_linear.values[i] / cold_linear.values[i];
    if (!(y > 1.0)) {
      out.quanta.values[i] = std::numeric_limits<double>::quiet_NaN();
      out.valid[i] = 0;
      continue;
    }
    double n_sys_off = y_factor_nsys(occupation(chain.t_hot, f),
                                     occupation(chain.t_cold, f), y);
    out.quanta.values[i] = n_sys_off * l12 - kNqm * (1.0 - l12);
  }
  return out;
}

SynthesizedMeasurement synth_measurement(const NoiseChain& chain,
                                         const std::vector<double>& freq_grid,
                                         std::uint64_t seed,
                                         double noise_frac) {
  chain.validate();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto jitter = [&](double v) {
    return noise_frac > 0.0 ? v * (1.0 + noise_frac * gauss(rng)) : v;
  };

  SynthesizedMeasurement out;
  auto init = [&](Trace& t, TraceUnit unit, TraceState state) {
    t.freq_hz = freq_grid;
    t.values.resize(freq_grid.size());
    t.unit = unit;
    t.state = state;
  };
  init(out.hot, TraceUnit::linear, TraceState::hot);
  init(out.cold, TraceUnit::linear, TraceState::cold);
  init(out.hot_off, TraceUnit::linear, TraceState::hot);
  init(out.cold_off, TraceUnit::linear, TraceState::cold);
  init(out.pump_off, TraceUnit::db, TraceState::pump_off);
  init(out.bypass, TraceUnit::db, TraceState::bypass);
  init(out.gain, TraceUnit::db, TraceState::pump_on);

  double through_db = 10.0 * std::log10(chain.l1 * chain.l2);
  for (std::size_t i = 0; i < freq_grid.size(); ++i) {
    double f = freq_grid[i];
    out.hot.values[i] =
        jitter(cascade_forward(chain, chain.t_hot, f, PumpState::on));
    out.cold.values[i] =
        jitter(cascade_forward(chain, chain.t_cold, f, PumpState::on));
    out.hot_off.values[i] =
        jitter(cascade_forward(chain, chain.t_hot, f, PumpState::off));
    out.cold_off.values[i] =
        jitter(cascade_forward(chain, chain.t_cold, f, PumpState::off));
    out.pump_off.values[i] = through_db;
    out.bypass.values[i] = 0.0;
    out.gain.values[i] = 10.0 * std::log10(chain.g_pa);
  }
  return out;
}

ExtractionResult extract_added_noise(
    const Trace& hot, const Trace& cold, const Trace& pump_off_db,
    const Trace& bypass_db, const Trace& gain_db, double t_hot, double t_cold,
    std::optional<double> n_hemt_quanta, const Trace* hot_off,
    const Trace* cold_off) {
  require_same_grid(hot, cold, "extract: hot/cold");
  require_same_grid(hot, gain_db, "extract: gain");
  require_same_grid(hot, pump_off_db, "extract: pump_off");
  if (!n_hemt_quanta && !(hot_off && cold_off))
    throw std::domain_error(
        "extract_added_noise: need either an n_hemt value or pump-off "
        "hot/cold traces");

  LossTraces loss = deembed_loss(bypass_db, pump_off_db);

  ExtractionResult out;
  auto init = [&](Trace& t, TraceUnit unit) {
    t.freq_hz = hot.freq_hz;
    t.values.assign(hot.size(), std::numeric_limits<double>::quiet_NaN());
    t.unit = unit;
  };
  init(out.n_sys, TraceUnit::quanta);
  init(out.n_a, TraceUnit::quanta);
  init(out.n_hemt, TraceUnit::quanta);
  out.loss_db = loss.loss_db;
  out.valid.assign(hot.size(), 0);

  NoiseChain bin_chain;
  bin_chain.t_hot = t_hot;
  bin_chain.t_cold = t_cold;

  HemtNoiseTrace hemt;
  if (!n_hemt_quanta) {
    require_same_grid(hot, *hot_off, "extract: hot_off");
    NoiseChain off_chain = bin_chain;
    // The pump-off referral only uses the loss product; fill per bin below.
    hemt.quanta.freq_hz = hot.freq_hz;
    hemt.quanta.values.resize(hot.size());
    hemt.valid.assign(hot.size(), 1);
    for (std::size_t i = 0; i < hot.size(); ++i) {
      off_chain.l1 = loss.loss_linear.values[i];
      off_chain.l2 = loss.loss_linear.values[i];
      Trace h1, c1;
      h1.freq_hz = {hot.freq_hz[i]};
      h1.values = {hot_off->values[i]};
      h1.unit = TraceUnit::linear;
      c1.freq_hz = {hot.freq_hz[i]};
      c1.values = {cold_off->values[i]};
      c1.unit = TraceUnit::linear;
      HemtNoiseTrace one = hemt_noise_from_yfactor(h1, c1, off_chain);
      hemt.quanta.values[i] = one.quanta.values[0];
      hemt.valid[i] = one.valid[0];
    }
  }

  for (std::size_t i = 0; i < hot.size(); ++i) {
    double f = hot.freq_hz[i];
    double y = hot.values[i] / cold.values[i];
    if (!(y > 1.0)) continue;
    double n_hemt =
        n_hemt_quanta ? *n_hemt_quanta : hemt.quanta.values[i];
    if (!std::isfinite(n_hemt)) continue;

    bin_chain.l1 = loss.loss_linear.values[i];
    bin_chain.l2 = loss.loss_linear.values[i];
    bin_chain.g_pa = std::pow(10.0, gain_db.values[i] / 10.0);
    bin_chain.n_hemt = n_hemt;
    double n_sys = y_factor_nsys(occupation(t_hot, f), occupation(t_cold, f), y);
    out.n_sys.values[i] = n_sys;
    out.n_hemt.values[i] = n_hemt;
    out.n_a.values[i] = added_noise(n_sys, bin_chain, f).n_a;
    out.valid[i] = 1;
  }
  return out;
}

}  // namespace kitwpa
