#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

namespace dncp::exp {

/// %.17g, with "nan", "inf" and "-inf" for the non-finite values.
std::string format_double(double v);

/// Quotes a field when it holds a comma, quote, CR or LF.
std::string csv_escape(std::string_view field);

using CsvCell = std::variant<double, long long, std::string>;

/// In-memory RFC 4180 table; the header is mandatory.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);

  [[nodiscard]] const std::vector<std::string>& header() const { return header_; }
  [[nodiscard]] std::size_t rows() const { return rows_.size(); }

  /// Throws std::invalid_argument when the width does not match the header.
  void add(std::vector<CsvCell> row);

  /// CRLF line endings.
  [[nodiscard]] std::string str() const;
  void write(const std::filesystem::path& path) const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<CsvCell>> rows_;
};

void write_text(const std::filesystem::path& path, std::string_view text);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

/// SHA-1 of "blob <size>\0<bytes>", as `git hash-object` computes it.
std::string git_blob_hash(std::string_view bytes);
std::string git_blob_hash_file(const std::filesystem::path& path);

}  // namespace dncp::exp
