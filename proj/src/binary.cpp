#include "sagnas/binary.hpp"

#include "sagnas/errors.hpp"

#include <bit>
#include <fstream>
#include <sstream>

namespace sagnas::sagg {

Writer::Writer(PayloadKind kind) {
  buf_.append(kMagic);
  u32(kVersion);
  u32(static_cast<std::uint32_t>(kind));
}

void Writer::u32(std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

void Writer::u64(std::uint64_t v) {
  for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

void Writer::f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

Reader::Reader(std::string_view data, PayloadKind expected) : data_(data) {
  if (data_.size() < 12 || data_.substr(0, 4) != kMagic) throw DataError("not a SAGG container (bad magic)");
  pos_ = 4;
  const std::uint32_t version = u32();
  if (version != kVersion) throw DataError("unsupported SAGG version " + std::to_string(version));
  const std::uint32_t kind = u32();
  if (kind != static_cast<std::uint32_t>(expected)) {
    throw DataError("SAGG payload kind " + std::to_string(kind) + " where " +
                    std::to_string(static_cast<std::uint32_t>(expected)) + " was expected");
  }
}

void Reader::need(std::size_t n) const {
  if (data_.size() - pos_ < n) throw DataError("truncated SAGG container");
}

std::uint8_t Reader::u8() {
  need(1);
  return static_cast<std::uint8_t>(data_[pos_++]);
}

std::uint32_t Reader::u32() {
  need(4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(data_[pos_++])) << (8 * i);
  return v;
}

std::uint64_t Reader::u64() {
  need(8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_++])) << (8 * i);
  return v;
}

double Reader::f64() { return std::bit_cast<double>(u64()); }

std::string Reader::bytes(std::size_t n) {
  need(n);
  std::string s(data_.substr(pos_, n));
  pos_ += n;
  return s;
}

std::string encode_tensors(const std::vector<NamedTensor>& tensors) {
  Writer w(PayloadKind::tensors);
  w.u64(tensors.size());
  for (const auto& t : tensors) {
    w.u32(static_cast<std::uint32_t>(t.name.size()));
    w.bytes(t.name);
    w.u64(static_cast<std::uint64_t>(t.value.rows()));
    w.u64(static_cast<std::uint64_t>(t.value.cols()));
    for (Eigen::Index r = 0; r < t.value.rows(); ++r)
      for (Eigen::Index c = 0; c < t.value.cols(); ++c) w.f64(t.value(r, c));
  }
  return w.data();
}

std::vector<NamedTensor> decode_tensors(std::string_view data) {
  Reader r(data, PayloadKind::tensors);
  const std::uint64_t count = r.u64();
  std::vector<NamedTensor> out;
  for (std::uint64_t i = 0; i < count; ++i) {
    NamedTensor t;
    t.name = r.bytes(r.u32());
    const auto rows = static_cast<Eigen::Index>(r.u64());
    const auto cols = static_cast<Eigen::Index>(r.u64());
    if (rows < 0 || cols < 0 || (rows > 0 && cols > (1LL << 40) / rows)) throw DataError("bad tensor shape in SAGG");
    t.value.resize(rows, cols);
    for (Eigen::Index rr = 0; rr < rows; ++rr)
      for (Eigen::Index c = 0; c < cols; ++c) t.value(rr, c) = r.f64();
    out.push_back(std::move(t));
  }
  if (!r.at_end()) throw DataError("trailing bytes after SAGG tensor payload");
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view data) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
}

}  // namespace sagnas::sagg
