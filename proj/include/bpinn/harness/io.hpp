#pragma once

#include "bpinn/types.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace bpinn::harness {

using Json = nlohmann::json;

/// "%.17g": enough significant digits for an exact float64 round trip.
std::string format_double(double x);

/// Deterministic JSON text: keys sorted, two-space indent, doubles printed
/// with format_double, trailing newline.
std::string canonical_json(const Json& value);

/// 64-bit FNV-1a of `text`, as 16 lowercase hex digits.
std::string fnv1a_hex(const std::string& text);

Json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const Json& value);
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

Json to_json(const Vector& v);
Vector vector_from_json(const Json& j, const std::string& what);

/// Minimal CSV table: a header row and string cells, no quoting.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of `name` in the header; throws SchemaError if absent.
  std::size_t column(const std::string& name) const;
};

CsvTable read_csv(const std::filesystem::path& path);
void write_csv(const std::filesystem::path& path, const CsvTable& table);

/// Single vector file with header `index,value`.
void write_vector_csv(const std::filesystem::path& path, const Vector& v);
Vector read_vector_csv(const std::filesystem::path& path);

double parse_double(const std::string& cell, const std::string& where);
std::uint64_t parse_index(const std::string& cell, const std::string& where);

}  // namespace bpinn::harness
