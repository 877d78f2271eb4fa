#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace valdet::io {

namespace fs = std::filesystem;

std::string read_file(const fs::path& path);
/// Writes atomically (temp file + rename) and creates parent directories.
void write_file(const fs::path& path, std::string_view contents);
void require_file(const fs::path& path, std::string_view what = "input file");

/// One parsed CSV record plus the physical line on which it started.
struct CsvRow {
  std::vector<std::string> fields;
  std::size_t line = 0;
};

/// RFC 4180 reader: quoted fields may contain separators, doubled quotes and
/// newlines. A UTF-8 BOM on the first line is skipped.
std::vector<CsvRow> parse_csv(std::string_view data, char sep = ',');

class CsvTable {
 public:
  static CsvTable parse(std::string_view data);
  static CsvTable load(const fs::path& path);

  const std::vector<std::string>& header() const { return header_; }
  const std::vector<CsvRow>& rows() const { return rows_; }
  bool has_column(std::string_view name) const;
  /// Throws ParseError naming the missing column.
  std::size_t column(std::string_view name) const;
  std::optional<std::size_t> find_column(std::string_view name) const;

 private:
  std::vector<std::string> header_;
  std::vector<CsvRow> rows_;
};

std::string csv_escape(std::string_view field);
std::string csv_line(const std::vector<std::string>& fields);

/// Dense matrix persistence: 8-byte magic "VDMATRX1", u64 rows, u64 cols,
/// u64 has_labels; when has_labels, `rows` length-prefixed (u32) UTF-8 row
/// labels follow; then rows*cols little-endian IEEE-754 doubles, row-major.
struct LabeledMatrix {
  Eigen::MatrixXd values;
  std::vector<std::string> row_labels;  // empty or one per row
};

void write_binary_matrix(const fs::path& path, const LabeledMatrix& m);
LabeledMatrix read_binary_matrix(const fs::path& path);
bool is_binary_matrix(const fs::path& path);

/// Dense CSV with a header; the first column holds row labels.
void write_csv_matrix(const fs::path& path, const LabeledMatrix& m,
                      const std::vector<std::string>& column_names, std::string_view label_header = "id");

/// Lowercase hex SHA-256 of the file contents / of a string.
std::string sha256_file(const fs::path& path);
std::string sha256(std::string_view data);

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view data, std::uint64_t basis = 0xcbf29ce484222325ULL);

/// Stage seeds: hash of (global seed, stage name), stable across platforms.
std::uint64_t derive_seed(std::uint64_t global_seed, std::string_view stage);

std::vector<std::string> read_lines(const fs::path& path);
void write_lines(const fs::path& path, const std::vector<std::string>& lines);

}  // namespace valdet::io
