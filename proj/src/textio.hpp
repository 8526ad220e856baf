#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tabsim {

// Shortest decimal representation that round-trips to the same double.
// All CSV/JSON output goes through this so reruns are byte-identical.
std::string format_double(double value);

// One CSV line: fields joined by commas, LF terminator appended by caller.
std::string csv_row(std::span<const double> fields);

// FNV-1a 64-bit, used to fingerprint resolved configurations.
std::uint64_t fnv1a64(std::string_view text);
std::string fnv1a64_hex(std::string_view text);

// Writes text to path atomically enough for our purposes (truncate + write).
// Throws tabsim::Error(io) on failure.
void write_text_file(const std::string& path, std::string_view content);

std::string read_text_file(const std::string& path);

}  // namespace tabsim
