#include "kitwpa/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "kitwpa/constants.hpp"
#include "kitwpa/errors.hpp"

namespace kitwpa {
namespace {

using nlohmann::json;

json preset_nbtin_4to8() {
  return json{
      {"device",
       {{"l_per_m", 16.64e-6},
        {"c_per_m", 6.45e-9},
        {"i_star", 3.2e-3},
        {"pitch", 2.2e-6},
        {"stub_avg", 10.8e-6},
        {"stub_mod", 2.08e-6},
        {"mod_period", 122.7e-6},
        {"length", 0.1},
        {"stub_z0", 163.0},
        {"stub_vph", 9.78e6}}},
      {"pump", {{"f_pump_hz", 10.6e9}, {"i_pump_ratio", 0.119}}},
      {"noise",
       {{"t_hot_k", 3.18},
        {"t_cold_k", 0.02},
        {"n_hemt_quanta", 13.0},
        {"chain",
         {{"l1_db", 1.0},
          {"l2_db", 1.0},
          {"g_pa_db", 15.0},
          {"n_a", 0.7},
          {"g_hemt_db", 38.0},
          {"n_hemt", 13.0},
          {"g_w_db", 40.0},
          {"n_w", 300.0}}}}},
  };
}

json preset_for(const std::string& name) {
  if (name == "nbtin-4to8") return preset_nbtin_4to8();
  if (name == "nbtin-4to8-sec2") {
    json j = preset_nbtin_4to8();
    j["device"]["mod_period"] = 122.0e-6;
    return j;
  }
  throw ConfigError("unknown preset '" + name + "' (available: nbtin-4to8, nbtin-4to8-sec2)");
}

void deep_merge(json& base, const json& overlay) {
  if (!base.is_object() || !overlay.is_object()) {
    base = overlay;
    return;
  }
  for (auto it = overlay.begin(); it != overlay.end(); ++it) {
    if (base.contains(it.key()))
      deep_merge(base[it.key()], it.value());
    else
      base[it.key()] = it.value();
  }
}

// Pulls one numeric field, recording a problem instead of throwing so a bad
// config reports every issue in one pass.
class Reader {
 public:
  explicit Reader(std::vector<std::string>& problems) : problems_(problems) {}

  double num(const json& obj, const std::string& section, const std::string& key,
             double fallback, bool required = false) {
    if (!obj.contains(key)) {
      if (required) problems_.push_back(section + "." + key + ": required key is missing");
      return fallback;
    }
    const json& v = obj.at(key);
    if (!v.is_number()) {
      problems_.push_back(section + "." + key + ": expected a number");
      return fallback;
    }
    return v.get<double>();
  }

  int integer(const json& obj, const std::string& section, const std::string& key,
              int fallback) {
    double d = num(obj, section, key, fallback);
    if (d != std::floor(d)) {
      problems_.push_back(section + "." + key + ": expected an integer");
      return fallback;
    }
    return static_cast<int>(d);
  }

  void check_keys(const json& obj, const std::string& section,
                  std::initializer_list<const char*> allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
      bool known = false;
      for (const char* k : allowed)
        if (it.key() == k) known = true;
      if (!known) problems_.push_back(section + "." + it.key() + ": unknown key");
    }
  }

 private:
  std::vector<std::string>& problems_;
};

void parse_device(const json& dev, RunConfig& cfg, Reader& rd,
                  std::vector<std::string>& problems) {
  rd.check_keys(dev, "device",
                {"l_per_m", "c_per_m", "i_star", "pitch", "stub_avg", "stub_mod",
                 "mod_period", "length", "stub_z0", "stub_vph", "z_target", "v_target"});
  cfg.line.l_per_m = rd.num(dev, "device", "l_per_m", 0.0, true);
  cfg.line.c_per_m = rd.num(dev, "device", "c_per_m", 0.0, true);
  cfg.line.i_star = rd.num(dev, "device", "i_star", 0.0, true);
  cfg.line.total_length = rd.num(dev, "device", "length", 0.1);
  cfg.line.z_target = rd.num(dev, "device", "z_target", 50.0);
  cfg.line.v_target = rd.num(dev, "device", "v_target", 0.010);  // fraction of c
  if (cfg.line.v_target <= 0 || cfg.line.v_target >= 1)
    problems.push_back("device.v_target: phase velocity must be a fraction of c in (0, 1)");
  auto given = [&dev](const char* key) {
    return dev.contains(key) && dev.at(key).is_number();
  };
  if (cfg.line.l_per_m <= 0 && given("l_per_m"))
    problems.push_back("device.l_per_m: must be positive");
  if (cfg.line.c_per_m <= 0 && given("c_per_m"))
    problems.push_back("device.c_per_m: must be positive");
  if (cfg.line.i_star <= 0 && given("i_star"))
    problems.push_back("device.i_star: must be positive");
  if (cfg.line.total_length <= 0) problems.push_back("device.length: must be positive");

  cfg.has_pattern = dev.contains("pitch") || dev.contains("mod_period");
  if (!cfg.has_pattern) return;
  cfg.pattern.cell_pitch = rd.num(dev, "device", "pitch", 2.2e-6);
  cfg.pattern.stub_len_avg = rd.num(dev, "device", "stub_avg", 10.8e-6);
  cfg.pattern.stub_len_mod = rd.num(dev, "device", "stub_mod", 2.08e-6);
  cfg.pattern.mod_period = rd.num(dev, "device", "mod_period", 122.7e-6);
  cfg.pattern.stub_z0 = rd.num(dev, "device", "stub_z0", 0.0);
  cfg.pattern.stub_vph = rd.num(dev, "device", "stub_vph", 0.0);
  if (cfg.pattern.cell_pitch <= 0) problems.push_back("device.pitch: must be positive");
  if (cfg.pattern.mod_period <= 0) problems.push_back("device.mod_period: must be positive");
  if (cfg.pattern.stub_len_mod < 0) problems.push_back("device.stub_mod: must be non-negative");
  if (cfg.pattern.stub_len_avg <= cfg.pattern.stub_len_mod)
    problems.push_back("device.stub_avg: must exceed stub_mod so stub length stays positive");
}

void parse_pump(const json& pump, RunConfig& cfg, Reader& rd,
                std::vector<std::string>& problems) {
  rd.check_keys(pump, "pump", {"f_pump_hz", "i_pump_a", "i_pump_ratio", "p_pump_dbm"});
  cfg.pump_f_hz = rd.num(pump, "pump", "f_pump_hz", 0.0, true);
  if (cfg.pump_f_hz <= 0 && pump.contains("f_pump_hz"))
    problems.push_back("pump.f_pump_hz: must be positive");
  int drives = int(pump.contains("i_pump_a")) + int(pump.contains("i_pump_ratio")) +
               int(pump.contains("p_pump_dbm"));
  if (drives == 0) {
    problems.push_back("pump: one of i_pump_a, i_pump_ratio, p_pump_dbm is required");
    return;
  }
  if (drives > 1)
    problems.push_back("pump: i_pump_a, i_pump_ratio and p_pump_dbm are mutually exclusive");
  if (pump.contains("i_pump_a")) {
    cfg.pump_i_a = rd.num(pump, "pump", "i_pump_a", 0.0);
  } else if (pump.contains("i_pump_ratio")) {
    double ratio = rd.num(pump, "pump", "i_pump_ratio", 0.0);
    cfg.pump_i_a = ratio * cfg.line.i_star;
  } else {
    double z0 = cfg.line.z_target > 0 ? cfg.line.z_target : 50.0;
    cfg.pump_p_dbm = rd.num(pump, "pump", "p_pump_dbm", 0.0);
    cfg.pump_i_a = current_from_dbm(cfg.pump_p_dbm, z0);
  }
  if (cfg.pump_i_a <= 0) {
    problems.push_back("pump: resolved pump current must be positive");
  } else {
    double z0 = cfg.line.z_target > 0 ? cfg.line.z_target : 50.0;
    cfg.pump_p_dbm = dbm_from_current(cfg.pump_i_a, z0);
  }
}

void parse_chain(const json& ch, NoiseChain& chain, Reader& rd) {
  rd.check_keys(ch, "noise.chain",
                {"l1_db", "l2_db", "g_pa_db", "n_a", "g_hemt_db", "n_hemt", "g_w_db", "n_w"});
  auto lin = [](double db) { return std::pow(10.0, db / 10.0); };
  chain.l1 = 1.0 / lin(rd.num(ch, "noise.chain", "l1_db", 1.0));
  chain.l2 = 1.0 / lin(rd.num(ch, "noise.chain", "l2_db", 1.0));
  chain.g_pa = lin(rd.num(ch, "noise.chain", "g_pa_db", 15.0));
  chain.n_a = rd.num(ch, "noise.chain", "n_a", 0.7);
  chain.g_hemt = lin(rd.num(ch, "noise.chain", "g_hemt_db", 38.0));
  chain.n_hemt = rd.num(ch, "noise.chain", "n_hemt", 13.0);
  chain.g_w = lin(rd.num(ch, "noise.chain", "g_w_db", 40.0));
  chain.n_w = rd.num(ch, "noise.chain", "n_w", 300.0);
}

void parse_noise(const json& nz, RunConfig& cfg, Reader& rd,
                 std::vector<std::string>& problems) {
  rd.check_keys(nz, "noise",
                {"t_hot_k", "t_cold_k", "n_hemt_quanta", "chain", "traces", "seed",
                 "noise_frac", "f_min_hz", "f_max_hz", "n_points"});
  NoiseConfig& n = cfg.noise;
  n.t_hot_k = rd.num(nz, "noise", "t_hot_k", n.t_hot_k);
  n.t_cold_k = rd.num(nz, "noise", "t_cold_k", n.t_cold_k);
  if (nz.contains("n_hemt_quanta")) {
    if (nz.at("n_hemt_quanta").is_null())
      n.n_hemt_quanta.reset();
    else
      n.n_hemt_quanta = rd.num(nz, "noise", "n_hemt_quanta", 13.0);
  }
  if (n.t_hot_k <= 0) problems.push_back("noise.t_hot_k: must be positive");
  if (n.t_cold_k <= 0) problems.push_back("noise.t_cold_k: must be positive");
  if (n.t_hot_k <= n.t_cold_k && n.t_hot_k > 0 && n.t_cold_k > 0)
    problems.push_back("noise.t_hot_k: hot load must be warmer than cold load");
  if (nz.contains("chain")) {
    if (!nz.at("chain").is_object())
      problems.push_back("noise.chain: expected an object");
    else
      parse_chain(nz.at("chain"), n.chain, rd);
  }
  if (nz.contains("traces")) {
    const json& tr = nz.at("traces");
    if (!tr.is_object()) {
      problems.push_back("noise.traces: expected an object");
    } else {
      rd.check_keys(tr, "noise.traces",
                    {"hot", "cold", "pump_off", "bypass", "gain", "hot_off", "cold_off"});
      for (auto it = tr.begin(); it != tr.end(); ++it) {
        if (!it.value().is_string()) {
          problems.push_back("noise.traces." + it.key() + ": expected a file path string");
          continue;
        }
        n.traces[it.key()] = it.value().get<std::string>();
      }
    }
  }
  if (nz.contains("seed")) {
    double s = rd.num(nz, "noise", "seed", 1.0);
    if (s < 0 || s != std::floor(s))
      problems.push_back("noise.seed: expected a non-negative integer");
    else
      n.seed = static_cast<std::uint64_t>(s);
  }
  n.noise_frac = rd.num(nz, "noise", "noise_frac", n.noise_frac);
  if (n.noise_frac < 0) problems.push_back("noise.noise_frac: must be non-negative");
  n.f_min_hz = rd.num(nz, "noise", "f_min_hz", n.f_min_hz);
  n.f_max_hz = rd.num(nz, "noise", "f_max_hz", n.f_max_hz);
  n.n_points = rd.integer(nz, "noise", "n_points", n.n_points);
  if (n.n_points < 2) problems.push_back("noise.n_points: need at least 2 points");
  if (n.f_min_hz <= 0 || n.f_max_hz <= n.f_min_hz)
    problems.push_back("noise.f_min_hz/f_max_hz: need 0 < f_min < f_max");
}

void parse_sweep(const json& sw, SweepConfig& s, Reader& rd,
                 std::vector<std::string>& problems) {
  rd.check_keys(sw, "sweep",
                {"f_min_hz", "f_max_hz", "n_points", "f_signal_hz", "p_in_min_dbm",
                 "p_in_max_dbm", "p_in_step_db"});
  s.f_min_hz = rd.num(sw, "sweep", "f_min_hz", s.f_min_hz);
  s.f_max_hz = rd.num(sw, "sweep", "f_max_hz", s.f_max_hz);
  s.n_points = rd.integer(sw, "sweep", "n_points", s.n_points);
  s.f_signal_hz = rd.num(sw, "sweep", "f_signal_hz", s.f_signal_hz);
  s.p_in_min_dbm = rd.num(sw, "sweep", "p_in_min_dbm", s.p_in_min_dbm);
  s.p_in_max_dbm = rd.num(sw, "sweep", "p_in_max_dbm", s.p_in_max_dbm);
  s.p_in_step_db = rd.num(sw, "sweep", "p_in_step_db", s.p_in_step_db);
  if (s.f_min_hz <= 0 || s.f_max_hz <= s.f_min_hz)
    problems.push_back("sweep.f_min_hz/f_max_hz: need 0 < f_min < f_max");
  if (s.n_points < 2) problems.push_back("sweep.n_points: need at least 2 points");
  if (s.p_in_step_db <= 0) problems.push_back("sweep.p_in_step_db: must be positive");
  if (s.p_in_max_dbm <= s.p_in_min_dbm)
    problems.push_back("sweep.p_in_min_dbm/p_in_max_dbm: need min < max");
}

void parse_ripple(const json& rp, RippleConfig& r, Reader& rd,
                  std::vector<std::string>& problems) {
  rd.check_keys(rp, "ripple", {"r", "t", "g_db", "v_ph", "length"});
  r.r = rd.num(rp, "ripple", "r", r.r);
  r.t = rd.num(rp, "ripple", "t", r.t);
  r.g_db = rd.num(rp, "ripple", "g_db", r.g_db);
  r.v_ph = rd.num(rp, "ripple", "v_ph", r.v_ph);
  r.length = rd.num(rp, "ripple", "length", r.length);
  if (r.r < 0 || r.r >= 1) problems.push_back("ripple.r: need 0 <= r < 1");
  if (r.v_ph < 0) problems.push_back("ripple.v_ph: must be positive (or 0 for device value)");
  if (r.length < 0) problems.push_back("ripple.length: must be positive (or 0 for device value)");
}

void parse_grid(const json& gr, GridConfig& g, Reader& rd,
                std::vector<std::string>& problems) {
  rd.check_keys(gr, "grid", {"f_min_hz", "f_max_hz", "f_step_hz"});
  g.f_min_hz = rd.num(gr, "grid", "f_min_hz", g.f_min_hz);
  g.f_max_hz = rd.num(gr, "grid", "f_max_hz", g.f_max_hz);
  g.f_step_hz = rd.num(gr, "grid", "f_step_hz", g.f_step_hz);
  if (g.f_min_hz <= 0) problems.push_back("grid.f_min_hz: must be positive");
  if (g.f_step_hz <= 0) problems.push_back("grid.f_step_hz: must be positive");
  if (g.f_max_hz != 0 && g.f_max_hz <= g.f_min_hz)
    problems.push_back("grid.f_max_hz: must exceed f_min_hz (or 0 for automatic)");
}

}  // namespace

std::vector<double> SweepConfig::frequency_grid() const {
  std::vector<double> f(n_points);
  double step = (f_max_hz - f_min_hz) / (n_points - 1);
  for (int i = 0; i < n_points; ++i) f[i] = f_min_hz + step * i;
  return f;
}

std::vector<double> SweepConfig::power_grid() const {
  std::vector<double> p;
  for (double x = p_in_min_dbm; x <= p_in_max_dbm + 1e-9; x += p_in_step_db)
    p.push_back(x);
  return p;
}

PumpConfig RunConfig::pump(const DispersionTable& table) const {
  PumpConfig p;
  p.f_pump = pump_f_hz;
  p.i_pump = pump_i_a;
  p.p_pump_dbm = pump_p_dbm;
  p.validate(table, line.i_star);
  return p;
}

std::vector<std::string> preset_names() { return {"nbtin-4to8", "nbtin-4to8-sec2"}; }

RunConfig load_run_config(const std::string& preset,
                          const std::filesystem::path& config_path) {
  json merged = json::object();
  if (!preset.empty()) merged = preset_for(preset);
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in)
      throw ConfigError("config file '" + config_path.string() + "' does not exist");
    json file_json;
    try {
      file_json = json::parse(in);
    } catch (const json::parse_error& e) {
      throw ConfigError("config file '" + config_path.string() + "': " + e.what());
    }
    if (!file_json.is_object())
      throw ConfigError("config file '" + config_path.string() + "': top level must be an object");
    // A pump drive level in the file replaces the preset's drive outright;
    // merging both would trip the mutual-exclusion check.
    if (file_json.contains("pump") && file_json.at("pump").is_object() &&
        merged.contains("pump") && merged.at("pump").is_object()) {
      const json& fp = file_json.at("pump");
      if (fp.contains("i_pump_a") || fp.contains("i_pump_ratio") ||
          fp.contains("p_pump_dbm"))
        for (const char* key : {"i_pump_a", "i_pump_ratio", "p_pump_dbm"})
          merged["pump"].erase(key);
    }
    deep_merge(merged, file_json);
  }
  if (merged.empty())
    throw ConfigError("no configuration given: pass --preset, --config, or both");

  std::vector<std::string> problems;
  Reader rd(problems);
  rd.check_keys(merged, "config",
                {"device", "pump", "mode", "sweep", "grid", "ripple", "noise", "output"});

  RunConfig cfg;
  cfg.preset_name = preset;
  if (!merged.contains("device"))
    problems.push_back("device: required section is missing");
  else if (!merged.at("device").is_object())
    problems.push_back("device: expected an object");
  else
    parse_device(merged.at("device"), cfg, rd, problems);

  if (merged.contains("pump")) {
    if (!merged.at("pump").is_object())
      problems.push_back("pump: expected an object");
    else
      parse_pump(merged.at("pump"), cfg, rd, problems);
  }
  if (merged.contains("mode")) {
    const json& m = merged.at("mode");
    if (m.is_string() && m.get<std::string>() == "three")
      cfg.mode = ToneSetMode::three_tone;
    else if (m.is_string() && m.get<std::string>() == "six")
      cfg.mode = ToneSetMode::six_tone;
    else
      problems.push_back("mode: expected \"three\" or \"six\"");
  }
  if (merged.contains("sweep")) {
    if (!merged.at("sweep").is_object())
      problems.push_back("sweep: expected an object");
    else
      parse_sweep(merged.at("sweep"), cfg.sweep, rd, problems);
  }
  if (merged.contains("grid")) {
    if (!merged.at("grid").is_object())
      problems.push_back("grid: expected an object");
    else
      parse_grid(merged.at("grid"), cfg.grid, rd, problems);
  }
  if (merged.contains("ripple")) {
    if (!merged.at("ripple").is_object())
      problems.push_back("ripple: expected an object");
    else
      parse_ripple(merged.at("ripple"), cfg.ripple, rd, problems);
  }
  if (merged.contains("noise")) {
    if (!merged.at("noise").is_object())
      problems.push_back("noise: expected an object");
    else
      parse_noise(merged.at("noise"), cfg, rd, problems);
  }
  if (merged.contains("output")) {
    const json& out = merged.at("output");
    if (!out.is_object()) {
      problems.push_back("output: expected an object");
    } else {
      rd.check_keys(out, "output", {"dir"});
      if (out.contains("dir")) {
        if (!out.at("dir").is_string())
          problems.push_back("output.dir: expected a string");
        else
          cfg.out_dir = out.at("dir").get<std::string>();
      }
    }
  }

  if (!problems.empty()) throw ConfigError(problems);
  cfg.resolved_json = merged.dump(2);
  return cfg;
}

}  // namespace kitwpa
