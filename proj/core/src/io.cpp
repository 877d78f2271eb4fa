#include "valdet/io.hpp"

#include <openssl/evp.h>

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "valdet/error.hpp"
#include "valdet/text.hpp"

namespace valdet::io {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, std::string_view contents) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write file: " + path.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw Error("write failed: " + path.string());
  }
  fs::rename(tmp, path);
}

void require_file(const fs::path& path, std::string_view what) {
  if (!fs::exists(path)) throw Error("missing " + std::string(what) + ": " + path.string());
}

std::vector<CsvRow> parse_csv(std::string_view data, char sep) {
  std::vector<CsvRow> rows;
  if (data.size() >= 3 && data.substr(0, 3) == "\xEF\xBB\xBF") data.remove_prefix(3);

  CsvRow row;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  std::size_t line = 1;
  row.line = 1;

  auto end_field = [&] {
    row.fields.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_row = [&] {
    end_field();
    const bool blank = row.fields.size() == 1 && row.fields[0].empty();
    if (!blank) rows.push_back(std::move(row));
    row = CsvRow{};
  };

  for (std::size_t i = 0; i < data.size(); ++i) {
    const char c = data[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < data.size() && data[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    if (c == '"' && !field_started) {
      in_quotes = true;
      field_started = true;
    } else if (c == sep) {
      end_field();
    } else if (c == '\r') {
      // swallowed; '\n' terminates the record
    } else if (c == '\n') {
      end_row();
      ++line;
      row.line = line;
    } else {
      field.push_back(c);
      field_started = true;
    }
  }
  if (in_quotes) throw ParseError("unterminated quoted CSV field", row.line);
  if (field_started || !field.empty() || !row.fields.empty()) end_row();
  return rows;
}

CsvTable CsvTable::parse(std::string_view data) {
  CsvTable t;
  auto rows = parse_csv(data);
  if (rows.empty()) return t;
  t.header_ = std::move(rows.front().fields);
  for (auto& h : t.header_) h = text::trim(h);
  rows.erase(rows.begin());
  t.rows_ = std::move(rows);
  return t;
}

CsvTable CsvTable::load(const fs::path& path) { return parse(read_file(path)); }

std::optional<std::size_t> CsvTable::find_column(std::string_view name) const {
  for (std::size_t i = 0; i < header_.size(); ++i) {
    if (header_[i] == name) return i;
  }
  return std::nullopt;
}

bool CsvTable::has_column(std::string_view name) const { return find_column(name).has_value(); }

std::size_t CsvTable::column(std::string_view name) const {
  if (auto c = find_column(name)) return *c;
  throw ParseError("missing CSV column '" + std::string(name) + "'", 1);
}

std::string csv_escape(std::string_view field) {
  const bool needs_quotes = field.find_first_of(",\"\n\r") != std::string_view::npos;
  if (!needs_quotes) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string csv_line(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out.push_back(',');
    out += csv_escape(fields[i]);
  }
  out.push_back('\n');
  return out;
}

namespace {

constexpr char kMagic[8] = {'V', 'D', 'M', 'A', 'T', 'R', 'X', '1'};

template <typename T>
void put_le(std::string& out, T value) {
  static_assert(std::endian::native == std::endian::little, "little-endian host required");
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.append(buf, sizeof(T));
}

template <typename T>
T get_le(std::string_view data, std::size_t& pos, const fs::path& path) {
  if (pos + sizeof(T) > data.size()) throw ParseError("truncated binary matrix: " + path.string());
  T value;
  std::memcpy(&value, data.data() + pos, sizeof(T));
  pos += sizeof(T);
  return value;
}

}  // namespace

void write_binary_matrix(const fs::path& path, const LabeledMatrix& m) {
  const auto rows = static_cast<std::uint64_t>(m.values.rows());
  const auto cols = static_cast<std::uint64_t>(m.values.cols());
  if (!m.row_labels.empty() && m.row_labels.size() != rows) {
    throw InvalidArgument("row label count does not match matrix rows");
  }
  std::string out(kMagic, sizeof(kMagic));
  put_le<std::uint64_t>(out, rows);
  put_le<std::uint64_t>(out, cols);
  put_le<std::uint64_t>(out, m.row_labels.empty() ? 0 : 1);
  for (const auto& label : m.row_labels) {
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(label.size()));
    out += label;
  }
  for (std::uint64_t r = 0; r < rows; ++r) {
    for (std::uint64_t c = 0; c < cols; ++c) put_le<double>(out, m.values(r, c));
  }
  write_file(path, out);
}

bool is_binary_matrix(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  char buf[sizeof(kMagic)] = {};
  in.read(buf, sizeof(buf));
  return in.gcount() == sizeof(kMagic) && std::memcmp(buf, kMagic, sizeof(kMagic)) == 0;
}

LabeledMatrix read_binary_matrix(const fs::path& path) {
  const std::string data = read_file(path);
  if (data.size() < sizeof(kMagic) || std::memcmp(data.data(), kMagic, sizeof(kMagic)) != 0) {
    throw ParseError("not a binary matrix file: " + path.string());
  }
  std::size_t pos = sizeof(kMagic);
  const auto rows = get_le<std::uint64_t>(data, pos, path);
  const auto cols = get_le<std::uint64_t>(data, pos, path);
  const auto has_labels = get_le<std::uint64_t>(data, pos, path);
  LabeledMatrix m;
  if (has_labels) {
    m.row_labels.reserve(rows);
    for (std::uint64_t r = 0; r < rows; ++r) {
      const auto len = get_le<std::uint32_t>(data, pos, path);
      if (pos + len > data.size()) throw ParseError("truncated binary matrix labels: " + path.string());
      m.row_labels.emplace_back(data.substr(pos, len));
      pos += len;
    }
  }
  if (data.size() - pos != rows * cols * sizeof(double)) {
    throw ParseError("binary matrix payload size mismatch: " + path.string());
  }
  m.values.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::uint64_t r = 0; r < rows; ++r) {
    for (std::uint64_t c = 0; c < cols; ++c) {
      m.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = get_le<double>(data, pos, path);
    }
  }
  return m;
}

void write_csv_matrix(const fs::path& path, const LabeledMatrix& m,
                      const std::vector<std::string>& column_names, std::string_view label_header) {
  std::ostringstream out;
  out.precision(17);
  std::vector<std::string> header{std::string(label_header)};
  header.insert(header.end(), column_names.begin(), column_names.end());
  out << csv_line(header);
  for (Eigen::Index r = 0; r < m.values.rows(); ++r) {
    out << csv_escape(m.row_labels.empty() ? std::to_string(r) : m.row_labels[static_cast<std::size_t>(r)]);
    for (Eigen::Index c = 0; c < m.values.cols(); ++c) out << ',' << m.values(r, c);
    out << '\n';
  }
  write_file(path, out.str());
}

std::string sha256(std::string_view data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw Error("sha256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xF]);
  }
  return out;
}

std::string sha256_file(const fs::path& path) { return sha256(read_file(path)); }

std::uint64_t fnv1a64(std::string_view data, std::uint64_t basis) {
  std::uint64_t h = basis;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t derive_seed(std::uint64_t global_seed, std::string_view stage) {
  return fnv1a64(std::to_string(global_seed) + ":" + std::string(stage));
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::vector<std::string> lines;
  std::istringstream in(read_file(path));
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

void write_lines(const fs::path& path, const std::vector<std::string>& lines) {
  std::string out;
  for (const auto& l : lines) {
    out += l;
    out.push_back('\n');
  }
  write_file(path, out);
}

}  // namespace valdet::io
