#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "kitwpa/trace.hpp"

namespace kitwpa {

// CSV layout: header `freq_hz,value,unit,state`, frequencies as integer Hz,
// values with 9 significant digits. Write-then-read is the identity for any
// trace the toolkit itself produces.
void write_trace_csv(const std::filesystem::path& path, const Trace& trace);
Trace read_trace_csv(const std::filesystem::path& path);

// As read_trace_csv, additionally enforcing the unit the caller expects.
Trace ingest_trace(const std::filesystem::path& path, TraceUnit expected_unit);

// FNV-1a over the raw bytes; manifest input digests.
std::uint64_t fnv1a_digest(const std::filesystem::path& path);
std::string format_value(double v);  // %.9g, the toolkit-wide value format

}  // namespace kitwpa
