#include "viscal/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "viscal/errors.hpp"
#include "viscal/rng.hpp"

namespace viscal {

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view s, const char* context) {
  double value = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), value);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    throw ValidationError(std::string(context) + ": bad number '" +
                          std::string(s) + "'");
  }
  return value;
}

long long parse_int(std::string_view s, const char* context) {
  long long value = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), value);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    throw ValidationError(std::string(context) + ": bad integer '" +
                          std::string(s) + "'");
  }
  return value;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      fields.emplace_back(line, start);
      return fields;
    }
    fields.emplace_back(line, start, comma - start);
    start = comma + 1;
  }
}

namespace {

std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

}  // namespace

CsvFile read_csv(const std::filesystem::path& path,
                 const std::vector<std::string>& expected_header) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  CsvFile file;
  std::string line;
  if (!std::getline(in, line)) {
    throw ValidationError(path.string() + ": missing header");
  }
  file.header = split_fields(strip_cr(line));
  if (file.header != expected_header) {
    std::string want;
    for (const auto& c : expected_header) {
      if (!want.empty()) want += ',';
      want += c;
    }
    throw ValidationError(path.string() + ": header mismatch, expected '" +
                          want + "'");
  }
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;
    auto fields = split_fields(line);
    if (fields.size() != expected_header.size()) {
      throw ValidationError(path.string() + " line " + std::to_string(line_no) +
                            ": expected " +
                            std::to_string(expected_header.size()) +
                            " fields, got " + std::to_string(fields.size()));
    }
    file.rows.push_back(std::move(fields));
  }
  return file;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << content;
  if (!out) throw IoError("write failed for " + path.string());
}

std::uint64_t hash_file(const std::filesystem::path& path) {
  return hash_bytes(read_file(path));
}

}  // namespace viscal
