#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace viscal {

// Shortest decimal representation that parses back to the same double, so
// emitted files are byte-stable across runs.
std::string format_double(double v);

// Strict numeric parsers: the whole field must be consumed.
double parse_double(std::string_view s, const char* context);
long long parse_int(std::string_view s, const char* context);

// Plain comma split; the file contracts here never quote fields.
std::vector<std::string> split_fields(const std::string& line);

struct CsvFile {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;  // data rows, header excluded
};

// Reads a whole file and checks the header column-for-column. Error messages
// carry 1-based line numbers counting the header as line 1.
CsvFile read_csv(const std::filesystem::path& path,
                 const std::vector<std::string>& expected_header);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& content);

// FNV-1a fingerprint of a file's bytes, for determinism checks.
std::uint64_t hash_file(const std::filesystem::path& path);

}  // namespace viscal
