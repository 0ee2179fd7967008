#pragma once

#include <array>
#include <bit>
#include <charconv>
#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

#include "json.hpp"
#include "qsm/error.hpp"

namespace qsm::experiments {

// Shortest round-trip representation; identical bits give identical text.
inline std::string format_double(double x) {
  std::array<char, 32> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  if (ec != std::errc()) throw Error(ErrorCode::io_error, "number formatting failed");
  return std::string(buf.data(), ptr);
}

// One formatted CSV cell.
struct Cell {
  std::string text;
  Cell(double x) : text(format_double(x)) {}
  Cell(int x) : text(std::to_string(x)) {}
  Cell(long x) : text(std::to_string(x)) {}
  Cell(long long x) : text(std::to_string(x)) {}
  Cell(unsigned long x) : text(std::to_string(x)) {}
  Cell(std::string s) : text(std::move(s)) {}
  Cell(const char* s) : text(s) {}
};

class CsvTable {
 public:
  explicit CsvTable(const std::vector<std::string>& header) : columns_(header.size()) {
    for (std::size_t i = 0; i < header.size(); ++i) text_ += (i ? "," : "") + header[i];
    text_ += '\n';
  }

  void add(std::initializer_list<Cell> cells) {
    if (cells.size() != columns_) throw Error(ErrorCode::io_error, "CSV row has wrong number of cells");
    bool first = true;
    for (const auto& c : cells) {
      if (!first) text_ += ',';
      text_ += c.text;
      first = false;
    }
    text_ += '\n';
    ++rows_;
  }

  const std::string& text() const { return text_; }
  std::size_t rows() const { return rows_; }  // excluding the header

 private:
  std::size_t columns_;
  std::string text_;
  std::size_t rows_ = 0;
};

// Flat little-endian float64 payload, row-major, with a JSON sidecar.
struct BinaryArray {
  std::vector<double> data;
  std::vector<std::size_t> shape;
  std::string description;

  std::string payload() const {
    static_assert(std::endian::native == std::endian::little, "binary export assumes a little-endian host");
    std::size_t n = 1;
    for (auto s : shape) n *= s;
    if (n != data.size()) throw Error(ErrorCode::io_error, "binary array shape does not match its data");
    return std::string(reinterpret_cast<const char*>(data.data()), data.size() * sizeof(double));
  }

  nlohmann::ordered_json sidecar(const std::string& payload_name) const {
    nlohmann::ordered_json j;
    j["file"] = payload_name;
    j["dtype"] = "float64";
    j["byte_order"] = "little";
    j["layout"] = "row-major";
    j["shape"] = shape;
    j["description"] = description;
    return j;
  }
};

}  // namespace qsm::experiments
