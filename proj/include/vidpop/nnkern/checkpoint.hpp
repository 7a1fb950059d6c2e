#pragma once

#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <unordered_map>
#include <vector>

#include "vidpop/nnkern/param.hpp"

namespace vidpop::nn {

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

/// Little-endian cursor over a byte buffer; every read is bounds checked.
class ByteReader {
 public:
  ByteReader(const std::string& bytes, std::string what) : bytes_(bytes), what_(std::move(what)) {}

  bool at_end() const { return pos_ == bytes_.size(); }
  std::size_t remaining() const { return bytes_.size() - pos_; }

  std::uint32_t u32() { return static_cast<std::uint32_t>(read_le(4)); }
  std::uint64_t u64() { return read_le(8); }

  std::string bytes(std::size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

 private:
  void need(std::size_t n) const {
    if (remaining() < n) fail(ErrorCode::FormatError, what_ + ": truncated payload");
  }

  std::uint64_t read_le(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + static_cast<std::size_t>(i)]))
           << (8 * i);
    }
    pos_ += static_cast<std::size_t>(n);
    return v;
  }

  const std::string& bytes_;
  std::string what_;
  std::size_t pos_ = 0;
};

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCode::IoError, "short write to " + path.string());
}

}  // namespace detail

struct NamedTensor {
  std::string name;
  Tensor value;
};

inline constexpr char kCheckpointMagic[4] = {'N', 'N', 'K', '1'};

/// Serializes tensors as "NNK1" followed by one record per tensor:
/// u32 name length, UTF-8 name, u32 rank, u32 extents, f64 values (all LE).
inline std::string encode_checkpoint(const std::vector<NamedTensor>& tensors) {
  std::string out(kCheckpointMagic, 4);
  for (const auto& t : tensors) {
    detail::put_u32(out, static_cast<std::uint32_t>(t.name.size()));
    out += t.name;
    detail::put_u32(out, static_cast<std::uint32_t>(t.value.rank()));
    for (std::size_t e : t.value.shape()) detail::put_u32(out, static_cast<std::uint32_t>(e));
    for (double v : t.value.values()) detail::put_u64(out, std::bit_cast<std::uint64_t>(v));
  }
  return out;
}

inline std::vector<NamedTensor> decode_checkpoint(const std::string& bytes) {
  if (bytes.size() < 4 || bytes.compare(0, 4, kCheckpointMagic, 4) != 0) {
    fail(ErrorCode::FormatError, "checkpoint: bad magic");
  }
  detail::ByteReader rd(bytes, "checkpoint");
  rd.bytes(4);
  std::vector<NamedTensor> out;
  while (!rd.at_end()) {
    NamedTensor t;
    t.name = rd.bytes(rd.u32());
    const std::uint32_t rank = rd.u32();
    if (rank == 0 || rank > 8) fail(ErrorCode::FormatError, "checkpoint: bad rank for " + t.name);
    std::vector<std::size_t> shape(rank);
    std::size_t count = 1;
    for (auto& e : shape) {
      e = rd.u32();
      if (e == 0) fail(ErrorCode::FormatError, "checkpoint: zero extent in " + t.name);
      count *= e;
    }
    if (count > rd.remaining() / 8) fail(ErrorCode::FormatError, "checkpoint: truncated payload");
    std::vector<double> data(count);
    for (double& v : data) v = std::bit_cast<double>(rd.u64());
    t.value = Tensor(std::move(shape), std::move(data));
    out.push_back(std::move(t));
  }
  return out;
}

inline void save_checkpoint(const std::filesystem::path& path, const ParamRefs& params) {
  std::vector<NamedTensor> tensors;
  tensors.reserve(params.size());
  for (const Param* p : params) tensors.push_back({p->name, p->value});
  detail::write_file(path, encode_checkpoint(tensors));
}

/// Loads values into `params` by name. Every param must be present with the
/// same shape; extra tensors in the file are an error.
inline void assign_checkpoint(const ParamRefs& params, const std::vector<NamedTensor>& tensors) {
  std::unordered_map<std::string, const Tensor*> by_name;
  for (const auto& t : tensors) {
    if (!by_name.emplace(t.name, &t.value).second) {
      fail(ErrorCode::FormatError, "checkpoint: duplicate tensor " + t.name);
    }
  }
  if (by_name.size() != params.size()) {
    fail(ErrorCode::ShapeError, "checkpoint holds " + std::to_string(by_name.size()) + " tensors, model has " +
                                    std::to_string(params.size()));
  }
  for (Param* p : params) {
    auto it = by_name.find(p->name);
    if (it == by_name.end()) fail(ErrorCode::ShapeError, "checkpoint is missing " + p->name);
    if (it->second->shape() != p->value.shape()) {
      fail(ErrorCode::ShapeError, "checkpoint shape " + shape_string(it->second->shape()) + " for " + p->name +
                                      " does not match " + shape_string(p->value.shape()));
    }
    p->value = *it->second;
  }
}

inline void load_checkpoint(const std::filesystem::path& path, const ParamRefs& params) {
  assign_checkpoint(params, decode_checkpoint(detail::read_file(path)));
}

/// JSON sidecar describing a checkpoint lives at "<checkpoint>.json".
inline std::filesystem::path sidecar_path(const std::filesystem::path& checkpoint) {
  return std::filesystem::path(checkpoint.string() + ".json");
}

}  // namespace vidpop::nn
