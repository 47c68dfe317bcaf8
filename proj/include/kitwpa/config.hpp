#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "kitwpa/fwm.hpp"
#include "kitwpa/linemodel.hpp"
#include "kitwpa/noise.hpp"
#include "kitwpa/phasematch.hpp"

namespace kitwpa {

struct SweepConfig {
  double f_min_hz = 2e9;
  double f_max_hz = 19e9;
  int n_points = 401;
  double f_signal_hz = 0.0;     // compress: probe frequency (0 = auto peak)
  double p_in_min_dbm = -90.0;  // compress: input power grid
  double p_in_max_dbm = -30.0;
  double p_in_step_db = 1.0;

  std::vector<double> frequency_grid() const;
  std::vector<double> power_grid() const;
};

struct GridConfig {
  double f_min_hz = 5e7;
  double f_max_hz = 0.0;  // 0 = sized to the requested computation
  double f_step_hz = 1e6;
};

struct RippleConfig {
  double r = 0.1;
  double t = 0.0;     // 0 = sqrt(1 - r^2)
  double g_db = 15.0; // one-way gain, 20 log10(g)
  double v_ph = 0.0;  // 0 = calibrated line value
  double length = 0.0;  // 0 = device length
};

struct NoiseConfig {
  double t_hot_k = 3.18;
  double t_cold_k = 0.02;
  std::optional<double> n_hemt_quanta;
  NoiseChain chain;  // synth source; extraction fills losses/gain per bin
  std::map<std::string, std::filesystem::path> traces;
  std::uint64_t seed = 1;
  double noise_frac = 0.0;
  double f_min_hz = 4e9;
  double f_max_hz = 8e9;
  int n_points = 81;
};

struct RunConfig {
  FilmLine line;
  StubPattern pattern;
  bool has_pattern = false;
  double pump_f_hz = 0.0;
  double pump_i_a = 0.0;        // resolved from ratio/power/current
  double pump_p_dbm = 0.0;
  ToneSetMode mode = ToneSetMode::six_tone;
  SweepConfig sweep;
  GridConfig grid;
  RippleConfig ripple;
  NoiseConfig noise;
  std::filesystem::path out_dir = "out";
  std::string preset_name;      // empty when fully explicit
  std::string resolved_json;    // echoed into the manifest

  PumpConfig pump(const DispersionTable& table) const;
};

std::vector<std::string> preset_names();

// Builds the run configuration from a named preset, a JSON file, or both
// (file keys override preset keys). Collects every problem before failing.
RunConfig load_run_config(const std::string& preset,
                          const std::filesystem::path& config_path);

}  // namespace kitwpa
