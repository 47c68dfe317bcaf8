#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "kitwpa/commands.hpp"
#include "kitwpa/config.hpp"
#include "kitwpa/errors.hpp"
#include "kitwpa/version.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

struct CliArgs {
  std::string preset;
  std::string config_path;
  std::string out_dir;
  std::string mode;
  std::string ripple_convention = "roundtrip";
  std::string istar_data;
  std::vector<double> pump_sweep_hz;
};

int run(const std::string& command, const CliArgs& args) {
  kitwpa::RunConfig cfg = kitwpa::load_run_config(args.preset, args.config_path);
  if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
  if (args.mode == "three") cfg.mode = kitwpa::ToneSetMode::three_tone;
  if (args.mode == "six") cfg.mode = kitwpa::ToneSetMode::six_tone;

  kitwpa::CommandOptions opt;
  opt.command = command;
  opt.config_path = args.config_path;
  opt.pump_sweep_hz = args.pump_sweep_hz;
  opt.ripple_convention = args.ripple_convention == "printed"
                              ? kitwpa::RippleConvention::as_printed
                              : kitwpa::RippleConvention::round_trip;
  opt.istar_data = args.istar_data;
  return kitwpa::run_command(cfg, opt);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kinetic-inductance traveling-wave amplifier toolkit"};
  app.set_version_flag("--version", kitwpa::kVersion);
  app.require_subcommand(1);

  CliArgs args;
  app.add_option("--config", args.config_path, "JSON run configuration")
      ->envname("KITWPA_CONFIG");
  app.add_option("--preset", args.preset,
                 "built-in device preset (nbtin-4to8, nbtin-4to8-sec2)");
  app.add_option("--out-dir", args.out_dir, "output directory override");
  app.fallthrough();

  app.add_subcommand("dispersion",
                     "Bloch dispersion table and stopband edges");
  app.add_subcommand("bands", "phase-matched gain band prediction")
      ->add_option("--pump-sweep", args.pump_sweep_hz,
                   "pump frequencies in Hz, comma separated")
      ->delimiter(',');
  CLI::App* gain = app.add_subcommand("gain", "coupled-mode gain sweep");
  gain->add_option("--pump-sweep", args.pump_sweep_hz,
                   "pump frequencies in Hz, comma separated")
      ->delimiter(',');
  gain->add_option("--mode", args.mode, "tone set: three or six")
      ->check(CLI::IsMember({"three", "six"}));
  CLI::App* compress =
      app.add_subcommand("compress", "gain compression vs input power");
  compress->add_option("--mode", args.mode, "tone set: three or six")
      ->check(CLI::IsMember({"three", "six"}));
  app.add_subcommand("ripple", "standing-wave gain ripple model")
      ->add_option("--ripple-convention", args.ripple_convention,
                   "printed or roundtrip feedback phase")
      ->check(CLI::IsMember({"printed", "roundtrip"}));
  CLI::App* noise = app.add_subcommand("noise", "noise calibration pipeline");
  noise->require_subcommand(1);
  noise->add_subcommand("extract", "added noise from measured traces");
  noise->add_subcommand("synth", "synthesize a closed-loop test dataset");
  noise->add_subcommand("hemt", "HEMT noise from the pump-off Y-factor");
  app.add_subcommand("fit-istar", "scale current from resonance shifts")
      ->add_option("--data", args.istar_data, "CSV of i_a,f_hz samples");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  std::string command = app.get_subcommands().front()->get_name();
  if (command == "noise")
    command += " " + noise->get_subcommands().front()->get_name();

  try {
    return run(command, args);
  } catch (const kitwpa::ConfigError& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return kExitConfig;
  } catch (const kitwpa::TraceError& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return kExitConfig;
  } catch (const kitwpa::GridMismatchError& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return kExitNumerical;
  }
}
