#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace rmis::io {

// Little-endian encoders appending to a byte buffer.
void put_u32(std::string& out, std::uint32_t v);
void put_u64(std::string& out, std::uint64_t v);
void put_f64(std::string& out, double v);

// Sequential little-endian reader over a byte buffer; throws FormatError on truncation.
class Reader {
 public:
  Reader(std::string_view data, std::string what) : data_(data), what_(std::move(what)) {}

  std::uint32_t u32();
  std::uint64_t u64();
  double f64();
  std::string_view bytes(std::size_t n);
  bool at_end() const noexcept { return pos_ == data_.size(); }
  std::size_t remaining() const noexcept { return data_.size() - pos_; }

 private:
  std::string_view data_;
  std::string what_;
  std::size_t pos_ = 0;
};

std::string read_file(const std::string& path);
// Writes to path + ".tmp" and renames over path.
void write_file_atomic(const std::string& path, std::string_view data);

// "key=value" lines, keys sorted. Values may not contain newlines.
std::string format_manifest(const std::map<std::string, std::string>& manifest);
std::map<std::string, std::string> parse_manifest(std::string_view text);

}  // namespace rmis::io
