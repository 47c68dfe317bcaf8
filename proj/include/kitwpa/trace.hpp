#pragma once

#include <string>
#include <vector>

namespace kitwpa {

enum class TraceUnit { db, quanta, kelvin, linear };
enum class TraceState { none, hot, cold, pump_on, pump_off, bypass };

std::string to_string(TraceUnit unit);
std::string to_string(TraceState state);
TraceUnit trace_unit_from_string(const std::string& s);
TraceState trace_state_from_string(const std::string& s);

// One measured or synthesized curve over a strictly ascending grid.
struct Trace {
  std::vector<double> freq_hz;
  std::vector<double> values;
  TraceUnit unit = TraceUnit::linear;
  TraceState state = TraceState::none;

  std::size_t size() const { return freq_hz.size(); }
  void validate() const;  // ascending grid, finite values, matched lengths
};

}  // namespace kitwpa
