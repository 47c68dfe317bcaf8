#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace kitwpa {

// Bad or inconsistent run configuration. Collects every field-level message
// found during validation so a run never partially executes.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> messages)
      : std::runtime_error(join(messages)), messages_(std::move(messages)) {}
  explicit ConfigError(const std::string& message)
      : ConfigError(std::vector<std::string>{message}) {}
  const std::vector<std::string>& messages() const { return messages_; }

 private:
  static std::string join(const std::vector<std::string>& msgs) {
    std::string out = "config error:";
    for (const auto& m : msgs) out += "\n  - " + m;
    return out;
  }
  std::vector<std::string> messages_;
};

// Malformed trace file; carries the 1-based line number when known.
class TraceError : public std::runtime_error {
 public:
  TraceError(const std::string& path, long line, const std::string& what)
      : std::runtime_error(path + ":" + std::to_string(line) + ": " + what),
        line_(line) {}
  TraceError(const std::string& path, const std::string& what)
      : std::runtime_error(path + ": " + what), line_(0) {}
  long line() const { return line_; }

 private:
  long line_;
};

// Traces that must share a frequency grid do not.
class GridMismatchError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Loaded-line calibration could not reach the requested targets.
class CalibrationError : public std::runtime_error {
 public:
  CalibrationError(const std::string& what, double residual)
      : std::runtime_error(what + " (residual " + std::to_string(residual) + ")"),
        residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

// Evaluation requested exactly at a stub resonance pole.
class SingularFrequencyError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A tone landed inside a stopband where the operation needs it to propagate.
class EvanescentToneError : public std::runtime_error {
 public:
  EvanescentToneError(const std::string& label, double freq_hz)
      : std::runtime_error("tone '" + label + "' at " + std::to_string(freq_hz) +
                           " Hz is evanescent (inside a stopband)"),
        label_(label),
        freq_hz_(freq_hz) {}
  const std::string& label() const { return label_; }
  double freq_hz() const { return freq_hz_; }

 private:
  std::string label_;
  double freq_hz_;
};

// Signal placed on top of the pump; the degenerate tone set is ill-defined.
class DegenerateToneError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Adaptive step size underflowed; the system is stiff at the reported point.
class StiffnessError : public std::runtime_error {
 public:
  StiffnessError(double z, double h)
      : std::runtime_error("step size underflow at z = " + std::to_string(z) +
                           " m (h = " + std::to_string(h) + " m)"),
        z_(z),
        h_(h) {}
  double z() const { return z_; }
  double h() const { return h_; }

 private:
  double z_, h_;
};

// Standing-wave model driven at or past its oscillation threshold.
class OscillationError : public std::runtime_error {
 public:
  explicit OscillationError(double loop_magnitude)
      : std::runtime_error("feedback loop magnitude " +
                           std::to_string(loop_magnitude) +
                           " at or past the oscillation threshold"),
        loop_magnitude_(loop_magnitude) {}
  double loop_magnitude() const { return loop_magnitude_; }

 private:
  double loop_magnitude_;
};

}  // namespace kitwpa
