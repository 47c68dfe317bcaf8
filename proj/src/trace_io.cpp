#include "kitwpa/trace_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "kitwpa/errors.hpp"

namespace kitwpa {

std::string to_string(TraceUnit unit) {
  switch (unit) {
    case TraceUnit::db: return "dB";
    case TraceUnit::quanta: return "quanta";
    case TraceUnit::kelvin: return "kelvin";
    case TraceUnit::linear: return "linear";
  }
  return "linear";
}

std::string to_string(TraceState state) {
  switch (state) {
    case TraceState::none: return "none";
    case TraceState::hot: return "hot";
    case TraceState::cold: return "cold";
    case TraceState::pump_on: return "pump_on";
    case TraceState::pump_off: return "pump_off";
    case TraceState::bypass: return "bypass";
  }
  return "none";
}

TraceUnit trace_unit_from_string(const std::string& s) {
  if (s == "dB" || s == "db") return TraceUnit::db;
  if (s == "quanta") return TraceUnit::quanta;
  if (s == "kelvin") return TraceUnit::kelvin;
  if (s == "linear") return TraceUnit::linear;
  throw std::domain_error("unknown trace unit: " + s);
}

TraceState trace_state_from_string(const std::string& s) {
  if (s == "none") return TraceState::none;
  if (s == "hot") return TraceState::hot;
  if (s == "cold") return TraceState::cold;
  if (s == "pump_on") return TraceState::pump_on;
  if (s == "pump_off") return TraceState::pump_off;
  if (s == "bypass") return TraceState::bypass;
  throw std::domain_error("unknown trace state: " + s);
}

void Trace::validate() const {
  if (freq_hz.size() != values.size())
    throw std::domain_error("trace: frequency and value counts differ");
  for (std::size_t i = 0; i < freq_hz.size(); ++i) {
    if (!std::isfinite(values[i]))
      throw std::domain_error("trace: non-finite value at index " +
                              std::to_string(i));
    if (i > 0 && !(freq_hz[i] > freq_hz[i - 1]))
      throw std::domain_error("trace: frequency grid not strictly ascending");
  }
}

std::string format_value(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

void write_trace_csv(const std::filesystem::path& path, const Trace& trace) {
  trace.validate();
  std::ofstream out(path);
  if (!out) throw TraceError(path.string(), 0, "cannot open for writing");
  out << "freq_hz,value,unit,state\n";
  for (std::size_t i = 0; i < trace.size(); ++i)
    out << static_cast<long long>(std::llround(trace.freq_hz[i])) << ','
        << format_value(trace.values[i]) << ',' << to_string(trace.unit)
        << ',' << to_string(trace.state) << '\n';
  if (!out) throw TraceError(path.string(), 0, "write failed");
}

Trace read_trace_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw TraceError(path.string(), 0, "cannot open");
  std::string line;
  if (!std::getline(in, line))
    throw TraceError(path.string(), 1, "empty file");
  if (line == "freq_hz,value,unit,state\r")
    line.pop_back();
  if (line != "freq_hz,value,unit,state")
    throw TraceError(path.string(), 1,
                     "expected header freq_hz,value,unit,state");

  Trace trace;
  bool typed = false;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string freq_s, value_s, unit_s, state_s;
    if (!std::getline(row, freq_s, ',') || !std::getline(row, value_s, ',') ||
        !std::getline(row, unit_s, ',') || !std::getline(row, state_s))
      throw TraceError(path.string(), line_no, "expected 4 comma-separated fields");
    double freq = 0.0, value = 0.0;
    try {
      freq = std::stod(freq_s);
      value = std::stod(value_s);
    } catch (const std::exception&) {
      throw TraceError(path.string(), line_no, "non-numeric field");
    }
    if (!std::isfinite(value))
      throw TraceError(path.string(), line_no, "non-finite value");
    if (!trace.freq_hz.empty() && !(freq > trace.freq_hz.back()))
      throw TraceError(path.string(), line_no,
                       "frequency grid not strictly ascending");
    TraceUnit unit;
    TraceState state;
    try {
      unit = trace_unit_from_string(unit_s);
      state = trace_state_from_string(state_s);
    } catch (const std::exception& e) {
      throw TraceError(path.string(), line_no, e.what());
    }
    if (!typed) {
      trace.unit = unit;
      trace.state = state;
      typed = true;
    } else if (unit != trace.unit) {
      throw TraceError(path.string(), line_no, "mixed units within one trace");
    }
    trace.freq_hz.push_back(freq);
    trace.values.push_back(value);
  }
  return trace;
}

Trace ingest_trace(const std::filesystem::path& path, TraceUnit expected_unit) {
  Trace trace = read_trace_csv(path);
  if (trace.size() == 0)
    throw TraceError(path.string(), 1, "trace has no data rows");
  if (trace.unit != expected_unit)
    throw TraceError(path.string(), 2,
                     "unit mismatch: expected " + to_string(expected_unit) +
                         ", file declares " + to_string(trace.unit));
  return trace;
}

std::uint64_t fnv1a_digest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw TraceError(path.string(), 0, "cannot open for digest");
  std::uint64_t hash = 1469598103934665603ull;
  char buf[65536];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      hash ^= static_cast<unsigned char>(buf[i]);
      hash *= 1099511628211ull;
    }
    if (!in) break;
  }
  return hash;
}

}  // namespace kitwpa
