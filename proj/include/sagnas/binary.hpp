#pragma once

// SAGG binary container.
//
//   bytes 0..3   magic "SAGG"
//   u32          format version (1)
//   u32          payload kind (1 = graph snapshot, 2 = named tensors)
//   ...          payload
//
// All integers and doubles are little-endian regardless of host order.
// Named-tensor payload: u64 count, then per tensor
//   u32 name length, name bytes, u64 rows, u64 cols, f64[rows*cols] row-major.

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace sagnas::sagg {

inline constexpr std::string_view kMagic = "SAGG";
inline constexpr std::uint32_t kVersion = 1;

enum class PayloadKind : std::uint32_t { graph = 1, tensors = 2 };

class Writer {
 public:
  explicit Writer(PayloadKind kind);

  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
  void f64(double v);
  void bytes(std::string_view s) { buf_.append(s); }

  const std::string& data() const { return buf_; }

 private:
  std::string buf_;
};

class Reader {
 public:
  /// Validates magic, version and payload kind; throws DataError on mismatch.
  Reader(std::string_view data, PayloadKind expected);

  std::uint8_t u8();
  std::uint32_t u32();
  std::uint64_t u64();
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  double f64();
  std::string bytes(std::size_t n);

  bool at_end() const { return pos_ == data_.size(); }

 private:
  void need(std::size_t n) const;

  std::string_view data_;
  std::size_t pos_ = 0;
};

struct NamedTensor {
  std::string name;
  Eigen::MatrixXd value;
};

std::string encode_tensors(const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> decode_tensors(std::string_view data);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view data);

}  // namespace sagnas::sagg
