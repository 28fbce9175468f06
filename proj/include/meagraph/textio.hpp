#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace meagraph {

// Shortest round-trip decimal form (std::to_chars); used everywhere a
// double is written so repeated runs emit byte-identical files.
std::string format_double(double v);

// Locale-independent full-string parse; throws DataError on failure.
double parse_double(std::string_view s);

std::vector<std::string_view> split_csv_line(std::string_view line);

std::string sha256_hex(std::string_view bytes);

void write_text_file(const std::string& path, std::string_view content);
std::string read_text_file(const std::string& path);

} // namespace meagraph
