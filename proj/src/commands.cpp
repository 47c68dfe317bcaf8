#include "kitwpa/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "kitwpa/constants.hpp"
#include "kitwpa/errors.hpp"
#include "kitwpa/trace_io.hpp"
#include "kitwpa/version.hpp"

namespace kitwpa {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> x(n);
  double step = (hi - lo) / (n - 1);
  for (int i = 0; i < n; ++i) x[i] = lo + step * i;
  return x;
}

std::vector<double> step_grid(double lo, double hi, double step) {
  std::vector<double> x;
  long n = std::lround(std::floor((hi - lo) / step)) + 1;
  x.reserve(static_cast<std::size_t>(std::max(n, 2L)));
  for (long i = 0; i < n; ++i) x.push_back(lo + step * static_cast<double>(i));
  if (x.size() < 2) throw ConfigError("grid: fewer than 2 frequency points");
  return x;
}

// Bloch table sized to cover every tone the command will evaluate.
DispersionTable build_table(const RunConfig& cfg, double f_max_needed) {
  double f_max = cfg.grid.f_max_hz > 0 ? cfg.grid.f_max_hz : f_max_needed;
  if (f_max <= cfg.grid.f_min_hz)
    throw ConfigError("grid: resolved f_max does not exceed f_min");
  auto grid = step_grid(cfg.grid.f_min_hz, f_max, cfg.grid.f_step_hz);
  if (cfg.has_pattern) return supercell_bloch(cfg.line, cfg.pattern, grid);
  return bare_dispersion(cfg.line, grid);
}

double six_tone_f_max(double f_pump, double fs_min, double fs_max) {
  double top = std::max({3.0 * f_pump, 2.0 * f_pump + fs_max,
                         4.0 * f_pump - fs_min, 2.0 * f_pump - fs_min});
  return 1.02 * top;
}

double f_max_for_mode(const RunConfig& cfg, double fs_min, double fs_max) {
  if (cfg.mode == ToneSetMode::six_tone)
    return six_tone_f_max(cfg.pump_f_hz, fs_min, fs_max);
  return 1.02 * std::max(2.0 * cfg.pump_f_hz - fs_min, fs_max);
}

void require_pump(const RunConfig& cfg) {
  if (cfg.pump_f_hz <= 0 || cfg.pump_i_a <= 0)
    throw ConfigError("pump: this command needs a pump section");
}

fs::path out_path(const RunConfig& cfg, const std::string& name) {
  return cfg.out_dir / name;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << text;
}

void write_json(const fs::path& path, const json& j) {
  write_text(path, j.dump(2) + "\n");
}

json band_json(const Band& b) {
  if (b.empty()) return nullptr;
  return json{{"f_low_hz", b.f_low}, {"f_high_hz", b.f_high}};
}

json pump_json(const RunConfig& cfg, double f_pump) {
  return json{{"f_pump_hz", f_pump},
              {"i_pump_a", cfg.pump_i_a},
              {"p_pump_dbm", cfg.pump_p_dbm},
              {"i_pump_over_i_star", cfg.pump_i_a / cfg.line.i_star}};
}

json prediction_json(const RunConfig& cfg, const DispersionTable& table,
                     double f_pump) {
  PumpConfig pump{f_pump, cfg.pump_i_a, cfg.pump_p_dbm};
  pump.validate(table, cfg.line.i_star);
  BandPrediction pred = predict_bands(table, pump, cfg.line.i_star);
  json stop = json::array();
  for (const Stopband& s : table.stopbands())
    stop.push_back({{"f_low_hz", s.f_low},
                    {"f_high_hz", s.f_high},
                    {"center_hz", s.center()}});
  return json{{"pump", pump_json(cfg, f_pump)},
              {"signal_band_hz", band_json(pred.signal_band)},
              {"idler_band_hz", band_json(pred.idler_band)},
              {"around_pump_band_hz", band_json(pred.around_pump_band)},
              {"idler_gap_freq_hz", pred.idler_gap_freq},
              {"residual_zeros_hz", pred.residual_zeros},
              {"stopbands_hz", stop}};
}

std::string mhz_name(const std::string& stem, double f_hz) {
  return stem + "_p" + std::to_string(std::llround(f_hz / 1e6)) + "MHz.csv";
}

void write_gain_csv(const fs::path& path, const GainCurve& curve) {
  std::ostringstream out;
  out << "freq_hz,gain_db\n";
  for (std::size_t i = 0; i < curve.freq_hz.size(); ++i)
    out << std::llround(curve.freq_hz[i]) << ',' << format_value(curve.gain_db[i])
        << '\n';
  write_text(path, out.str());
}

NoiseChain chain_from_config(const NoiseConfig& n) {
  NoiseChain chain = n.chain;
  chain.t_hot = n.t_hot_k;
  chain.t_cold = n.t_cold_k;
  return chain;
}

// Missing measurement files are a configuration fault; report all of them
// before touching any.
void require_trace_files(const NoiseConfig& n,
                         const std::vector<std::string>& keys,
                         std::vector<fs::path>& inputs) {
  std::vector<std::string> problems;
  for (const std::string& key : keys) {
    auto it = n.traces.find(key);
    if (it == n.traces.end()) {
      problems.push_back("noise.traces." + key + ": required trace path is missing");
      continue;
    }
    if (!fs::exists(it->second)) {
      problems.push_back("noise.traces." + key + ": file '" + it->second.string() +
                         "' does not exist");
      continue;
    }
    inputs.push_back(it->second);
  }
  if (!problems.empty()) throw ConfigError(problems);
}

// Drops bins flagged invalid so the CSV stays finite; the manifest warns.
Trace keep_valid(const Trace& t, const std::vector<std::uint8_t>& valid) {
  Trace out;
  out.unit = t.unit;
  out.state = t.state;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (i < valid.size() && !valid[i]) continue;
    out.freq_hz.push_back(t.freq_hz[i]);
    out.values.push_back(t.values[i]);
  }
  return out;
}

double band_mean(const Trace& t) {
  if (t.values.empty()) return 0.0;
  double sum = 0.0;
  for (double v : t.values) sum += v;
  return sum / static_cast<double>(t.values.size());
}

}  // namespace

CommandResult cmd_dispersion(const RunConfig& cfg) {
  CommandResult res;
  double f_auto = cfg.pump_f_hz > 0 ? std::max(40e9, 3.8 * cfg.pump_f_hz) : 40e9;
  DispersionTable table = build_table(cfg, f_auto);
  double v_dc = table.phase_velocity_dc();

  std::ostringstream csv;
  csv << "freq_hz,re_k,im_k,in_stopband,k_minus_linear\n";
  for (std::size_t i = 0; i < table.size(); ++i) {
    double f = table.freq_hz()[i];
    double linear = 2.0 * kPi * f / v_dc;
    csv << std::llround(f) << ',' << format_value(table.re_k()[i]) << ','
        << format_value(table.im_k()[i]) << ','
        << (table.in_stopband(f) ? 1 : 0) << ','
        << format_value(table.re_k()[i] - linear) << '\n';
  }
  write_text(out_path(cfg, "dispersion.csv"), csv.str());
  res.outputs.push_back("dispersion.csv");

  json stop = json::array();
  for (const Stopband& s : table.stopbands())
    stop.push_back({{"f_low_hz", s.f_low},
                    {"f_high_hz", s.f_high},
                    {"center_hz", s.center()},
                    {"width_hz", s.f_high - s.f_low}});
  TelegrapherParams tp = telegrapher_params(cfg.line);
  write_json(out_path(cfg, "stopbands.json"),
             json{{"stopbands", stop},
                  {"phase_velocity_dc_m_per_s", v_dc},
                  {"phase_velocity_dc_over_c", v_dc / kSpeedOfLight},
                  {"impedance_ohm", tp.z0}});
  res.outputs.push_back("stopbands.json");
  return res;
}

CommandResult cmd_bands(const RunConfig& cfg,
                        const std::vector<double>& pump_sweep_hz) {
  require_pump(cfg);
  CommandResult res;
  std::vector<double> pumps =
      pump_sweep_hz.empty() ? std::vector<double>{cfg.pump_f_hz} : pump_sweep_hz;
  double top = *std::max_element(pumps.begin(), pumps.end());
  RunConfig sized = cfg;
  sized.pump_f_hz = top;
  DispersionTable table = build_table(sized, 2.1 * top);

  if (pump_sweep_hz.empty()) {
    write_json(out_path(cfg, "bands.json"),
               prediction_json(cfg, table, cfg.pump_f_hz));
    res.outputs.push_back("bands.json");
    return res;
  }
  json sweep = json::array();
  for (double f : pumps) sweep.push_back(prediction_json(cfg, table, f));
  write_json(out_path(cfg, "bands_sweep.json"), json{{"sweep", sweep}});
  res.outputs.push_back("bands_sweep.json");
  return res;
}

CommandResult cmd_gain(const RunConfig& cfg,
                       const std::vector<double>& pump_sweep_hz) {
  require_pump(cfg);
  CommandResult res;
  std::vector<double> pumps =
      pump_sweep_hz.empty() ? std::vector<double>{cfg.pump_f_hz} : pump_sweep_hz;
  std::vector<double> grid = cfg.sweep.frequency_grid();

  double f_max_needed = 0.0;
  for (double fp : pumps) {
    RunConfig sized = cfg;
    sized.pump_f_hz = fp;
    f_max_needed = std::max(
        f_max_needed, f_max_for_mode(sized, cfg.sweep.f_min_hz, cfg.sweep.f_max_hz));
  }
  DispersionTable table = build_table(cfg, f_max_needed);

  for (double fp : pumps) {
    PumpConfig pump{fp, cfg.pump_i_a, cfg.pump_p_dbm};
    pump.validate(table, cfg.line.i_star);
    GainCurve curve = gain_curve(cfg.line, table, pump, grid, cfg.mode);
    std::string name =
        pump_sweep_hz.empty() ? "gain.csv" : mhz_name("gain", fp);
    write_gain_csv(out_path(cfg, name), curve);
    res.outputs.push_back(name);
    for (const std::string& w : curve.warnings)
      res.warnings.push_back(name + ": " + w);
  }
  return res;
}

CommandResult cmd_compress(const RunConfig& cfg) {
  require_pump(cfg);
  CommandResult res;
  DispersionTable table =
      build_table(cfg, f_max_for_mode(cfg, cfg.sweep.f_min_hz, cfg.sweep.f_max_hz));
  PumpConfig pump = cfg.pump(table);

  double f_signal = cfg.sweep.f_signal_hz;
  if (f_signal <= 0) {
    // No probe frequency given: take the small-signal gain peak on a coarse
    // scan of the sweep band.
    std::vector<double> coarse = linspace(cfg.sweep.f_min_hz, cfg.sweep.f_max_hz, 41);
    GainCurve curve = gain_curve(cfg.line, table, pump, coarse, cfg.mode);
    std::size_t best = 0;
    for (std::size_t i = 1; i < curve.gain_db.size(); ++i)
      if (curve.gain_db[i] > curve.gain_db[best]) best = i;
    f_signal = curve.freq_hz[best];
    res.warnings.push_back("sweep.f_signal_hz not set; using gain peak at " +
                           std::to_string(f_signal) + " Hz");
  }

  CompressionResult comp = compression_sweep(cfg.line, table, pump, f_signal,
                                             cfg.sweep.power_grid(), cfg.mode);
  std::ostringstream csv;
  csv << "p_in_dbm,gain_db\n";
  for (const CompressionPoint& pt : comp.curve)
    csv << format_value(pt.p_in_dbm) << ',' << format_value(pt.gain_db) << '\n';
  write_text(out_path(cfg, "compress.csv"), csv.str());
  res.outputs.push_back("compress.csv");

  json j{{"pump", pump_json(cfg, pump.f_pump)},
         {"f_signal_hz", f_signal},
         {"small_signal_gain_db", comp.small_signal_gain_db},
         {"p1db_in_dbm", comp.p1db_in_dbm ? json(*comp.p1db_in_dbm) : json(nullptr)},
         {"p1db_out_dbm", comp.p1db_out_dbm ? json(*comp.p1db_out_dbm) : json(nullptr)}};
  write_json(out_path(cfg, "compress.json"), j);
  res.outputs.push_back("compress.json");
  if (!comp.p1db_in_dbm)
    res.warnings.push_back("no 1 dB compression point inside the input power grid");
  return res;
}

CommandResult cmd_ripple(const RunConfig& cfg, RippleConvention convention) {
  CommandResult res;
  TelegrapherParams tp = telegrapher_params(cfg.line);
  RippleModel model;
  model.r = cfg.ripple.r;
  model.t = cfg.ripple.t;
  model.g = std::pow(10.0, cfg.ripple.g_db / 20.0);
  model.v_ph = cfg.ripple.v_ph > 0 ? cfg.ripple.v_ph : tp.v_ph;
  model.length = cfg.ripple.length > 0 ? cfg.ripple.length : cfg.line.total_length;

  Trace trace = ripple_s21(model, cfg.sweep.frequency_grid(), convention);
  write_trace_csv(out_path(cfg, "ripple.csv"), trace);
  res.outputs.push_back("ripple.csv");

  double spacing = model.v_ph / (2.0 * model.length);
  write_json(out_path(cfg, "ripple.json"),
             json{{"convention", convention == RippleConvention::as_printed
                                     ? "printed"
                                     : "roundtrip"},
                  {"r", model.r},
                  {"one_way_gain_db", cfg.ripple.g_db},
                  {"free_spectral_range_hz", spacing}});
  res.outputs.push_back("ripple.json");
  return res;
}

CommandResult cmd_noise_synth(const RunConfig& cfg) {
  CommandResult res;
  const NoiseConfig& n = cfg.noise;
  NoiseChain chain = chain_from_config(n);
  chain.validate();
  SynthesizedMeasurement m = synth_measurement(
      chain, linspace(n.f_min_hz, n.f_max_hz, n.n_points), n.seed, n.noise_frac);

  const std::pair<const char*, const Trace*> files[] = {
      {"hot.csv", &m.hot},         {"cold.csv", &m.cold},
      {"hot_off.csv", &m.hot_off}, {"cold_off.csv", &m.cold_off},
      {"pump_off.csv", &m.pump_off}, {"bypass.csv", &m.bypass},
      {"gain.csv", &m.gain}};
  for (const auto& [name, trace] : files) {
    write_trace_csv(out_path(cfg, name), *trace);
    res.outputs.push_back(name);
  }
  return res;
}

CommandResult cmd_noise_extract(const RunConfig& cfg) {
  CommandResult res;
  const NoiseConfig& n = cfg.noise;
  std::vector<std::string> needed = {"hot", "cold", "pump_off", "bypass", "gain"};
  bool use_off_pair = !n.n_hemt_quanta.has_value();
  if (use_off_pair) {
    needed.push_back("hot_off");
    needed.push_back("cold_off");
  }
  require_trace_files(n, needed, res.inputs);

  Trace hot = ingest_trace(n.traces.at("hot"), TraceUnit::linear);
  Trace cold = ingest_trace(n.traces.at("cold"), TraceUnit::linear);
  Trace pump_off = ingest_trace(n.traces.at("pump_off"), TraceUnit::db);
  Trace bypass = ingest_trace(n.traces.at("bypass"), TraceUnit::db);
  Trace gain = ingest_trace(n.traces.at("gain"), TraceUnit::db);
  Trace hot_off, cold_off;
  if (use_off_pair) {
    hot_off = ingest_trace(n.traces.at("hot_off"), TraceUnit::linear);
    cold_off = ingest_trace(n.traces.at("cold_off"), TraceUnit::linear);
  }

  ExtractionResult ex = extract_added_noise(
      hot, cold, pump_off, bypass, gain, n.t_hot_k, n.t_cold_k, n.n_hemt_quanta,
      use_off_pair ? &hot_off : nullptr, use_off_pair ? &cold_off : nullptr);

  std::size_t dropped = 0;
  for (std::uint8_t v : ex.valid)
    if (!v) ++dropped;
  if (dropped > 0)
    res.warnings.push_back(std::to_string(dropped) +
                           " bin(s) dropped: Y-factor or inversion invalid there");

  const std::pair<const char*, const Trace*> files[] = {{"n_sys.csv", &ex.n_sys},
                                                        {"n_a.csv", &ex.n_a},
                                                        {"loss.csv", &ex.loss_db},
                                                        {"n_hemt.csv", &ex.n_hemt}};
  for (const auto& [name, trace] : files) {
    write_trace_csv(out_path(cfg, name), keep_valid(*trace, ex.valid));
    res.outputs.push_back(name);
  }

  Trace n_a_valid = keep_valid(ex.n_a, ex.valid);
  Trace n_sys_valid = keep_valid(ex.n_sys, ex.valid);
  Trace loss_valid = keep_valid(ex.loss_db, ex.valid);
  write_json(out_path(cfg, "extract.json"),
             json{{"band_mean_n_a_quanta", band_mean(n_a_valid)},
                  {"band_mean_n_sys_quanta", band_mean(n_sys_valid)},
                  {"band_mean_loss_db_per_side", band_mean(loss_valid)},
                  {"bins_total", hot.size()},
                  {"bins_dropped", dropped},
                  {"t_hot_k", n.t_hot_k},
                  {"t_cold_k", n.t_cold_k}});
  res.outputs.push_back("extract.json");
  return res;
}

CommandResult cmd_noise_hemt(const RunConfig& cfg) {
  CommandResult res;
  const NoiseConfig& n = cfg.noise;
  require_trace_files(n, {"hot_off", "cold_off"}, res.inputs);
  Trace hot_off = ingest_trace(n.traces.at("hot_off"), TraceUnit::linear);
  Trace cold_off = ingest_trace(n.traces.at("cold_off"), TraceUnit::linear);
  NoiseChain chain = chain_from_config(n);

  HemtNoiseTrace hemt = hemt_noise_from_yfactor(hot_off, cold_off, chain);
  std::size_t dropped = 0;
  for (std::uint8_t v : hemt.valid)
    if (!v) ++dropped;
  if (dropped > 0)
    res.warnings.push_back(std::to_string(dropped) +
                           " bin(s) dropped: pump-off Y-factor invalid there");
  Trace valid = keep_valid(hemt.quanta, hemt.valid);
  write_trace_csv(out_path(cfg, "n_hemt.csv"), valid);
  res.outputs.push_back("n_hemt.csv");
  write_json(out_path(cfg, "hemt.json"),
             json{{"band_mean_n_hemt_quanta", band_mean(valid)},
                  {"bins_total", hot_off.size()},
                  {"bins_dropped", dropped}});
  res.outputs.push_back("hemt.json");
  return res;
}

CommandResult cmd_fit_istar(const RunConfig& cfg, const fs::path& data) {
  CommandResult res;
  if (data.empty())
    throw ConfigError("fit-istar: pass the sample file with --data");
  if (!fs::exists(data))
    throw ConfigError("fit-istar: file '" + data.string() + "' does not exist");
  res.inputs.push_back(data);

  std::ifstream in(data);
  std::string header;
  if (!std::getline(in, header)) throw TraceError(data.string(), 1, "empty file");
  if (!header.empty() && header.back() == '\r') header.pop_back();
  if (header != "i_a,f_hz")
    throw TraceError(data.string(), 1, "expected header 'i_a,f_hz', got '" + header + "'");

  std::vector<IStarPoint> points;
  std::string line;
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::size_t comma = line.find(',');
    if (comma == std::string::npos)
      throw TraceError(data.string(), line_no, "expected two comma-separated fields");
    try {
      std::size_t used = 0;
      double i = std::stod(line.substr(0, comma), &used);
      double f = std::stod(line.substr(comma + 1), &used);
      points.push_back({i, f});
    } catch (const std::exception&) {
      throw TraceError(data.string(), line_no, "non-numeric field");
    }
  }

  IStarFit fit = fit_istar(points);
  write_json(out_path(cfg, "istar.json"),
             json{{"i_star_a", fit.finite ? json(fit.i_star) : json(nullptr)},
                  {"f0_hz", fit.f0},
                  {"rms_rel_residual", fit.rms_rel_residual},
                  {"n_points", points.size()},
                  {"note", fit.note}});
  res.outputs.push_back("istar.json");
  if (!fit.finite)
    res.warnings.push_back("no measurable shift: scale current unresolved");
  return res;
}

int run_command(const RunConfig& cfg, const CommandOptions& opt) {
  auto t0 = std::chrono::steady_clock::now();
  fs::create_directories(cfg.out_dir);

  CommandResult res;
  if (opt.command == "dispersion")
    res = cmd_dispersion(cfg);
  else if (opt.command == "bands")
    res = cmd_bands(cfg, opt.pump_sweep_hz);
  else if (opt.command == "gain")
    res = cmd_gain(cfg, opt.pump_sweep_hz);
  else if (opt.command == "compress")
    res = cmd_compress(cfg);
  else if (opt.command == "ripple")
    res = cmd_ripple(cfg, opt.ripple_convention);
  else if (opt.command == "noise synth")
    res = cmd_noise_synth(cfg);
  else if (opt.command == "noise extract")
    res = cmd_noise_extract(cfg);
  else if (opt.command == "noise hemt")
    res = cmd_noise_hemt(cfg);
  else if (opt.command == "fit-istar")
    res = cmd_fit_istar(cfg, opt.istar_data);
  else
    throw ConfigError("unknown command '" + opt.command + "'");

  auto hex = [](std::uint64_t d) {
    std::ostringstream s;
    s << "0x" << std::hex << d;
    return s.str();
  };
  json inputs = json::object();
  if (!opt.config_path.empty())
    inputs[opt.config_path.string()] = hex(fnv1a_digest(opt.config_path));
  for (const fs::path& p : res.inputs) inputs[p.string()] = hex(fnv1a_digest(p));
  json outputs = json::object();
  for (const fs::path& p : res.outputs)
    outputs[p.string()] = hex(fnv1a_digest(cfg.out_dir / p));

  auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                std::chrono::steady_clock::now() - t0)
                .count();
  json manifest{{"tool", "kitwpa"},
                {"version", kVersion},
                {"command", opt.command},
                {"preset", cfg.preset_name},
                {"config", json::parse(cfg.resolved_json)},
                {"inputs", inputs},
                {"outputs", outputs},
                {"warnings", res.warnings},
                {"duration_ms", ms}};
  write_json(out_path(cfg, "manifest.json"), manifest);
  return 0;
}

}  // namespace kitwpa
