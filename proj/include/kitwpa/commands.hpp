#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "kitwpa/config.hpp"
#include "kitwpa/fwm.hpp"

namespace kitwpa {

struct CommandOptions {
  std::string command;                     // manifest label, e.g. "gain"
  std::filesystem::path config_path;       // digested when non-empty
  std::vector<double> pump_sweep_hz;       // extra pump frequencies
  RippleConvention ripple_convention = RippleConvention::round_trip;
  std::filesystem::path istar_data;        // fit-istar sample file
};

struct CommandResult {
  std::vector<std::filesystem::path> outputs;  // files written, out_dir-relative
  std::vector<std::filesystem::path> inputs;   // files read beyond the config
  std::vector<std::string> warnings;
};

CommandResult cmd_dispersion(const RunConfig& cfg);
CommandResult cmd_bands(const RunConfig& cfg, const std::vector<double>& pump_sweep_hz);
CommandResult cmd_gain(const RunConfig& cfg, const std::vector<double>& pump_sweep_hz);
CommandResult cmd_compress(const RunConfig& cfg);
CommandResult cmd_ripple(const RunConfig& cfg, RippleConvention convention);
CommandResult cmd_noise_synth(const RunConfig& cfg);
CommandResult cmd_noise_extract(const RunConfig& cfg);
CommandResult cmd_noise_hemt(const RunConfig& cfg);
CommandResult cmd_fit_istar(const RunConfig& cfg, const std::filesystem::path& data);

// Dispatches on opt.command, times the run, and writes manifest.json next to
// the outputs. Returns 0; failures surface as exceptions.
int run_command(const RunConfig& cfg, const CommandOptions& opt);

}  // namespace kitwpa
