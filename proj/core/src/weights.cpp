// Copyright 2026 The cemmaf Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cemmaf/weights.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <string_view>

#include "cemmaf/error.hpp"

namespace cemmaf {
namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

class ByteReader {
 public:
  ByteReader(std::string_view bytes, std::size_t start, const std::string& origin)
      : bytes_(bytes), origin_(origin), pos_(start) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += 4;
    return v;
  }

  float f32() { return std::bit_cast<float>(u32()); }

  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw FormatError(origin_ + ": truncated weight file");
  }

  bool at_end() const { return pos_ == bytes_.size(); }

 private:
  std::string_view bytes_;
  const std::string& origin_;
  std::size_t pos_;
};

}  // namespace

std::string encode_weights(std::span<const Tensor> tensors) {
  std::string out(kWeightMagic, 4);
  put_u32(out, kWeightVersion);
  put_u32(out, static_cast<std::uint32_t>(tensors.size()));
  for (const Tensor& t : tensors) {
    put_u32(out, static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape()) put_u32(out, static_cast<std::uint32_t>(d));
    for (double v : t.data()) {
      const float f = static_cast<float>(v);
      if (!std::isfinite(f)) throw NumericError("weight does not fit in float32");
      put_u32(out, std::bit_cast<std::uint32_t>(f));
    }
  }
  return out;
}

std::vector<Tensor> decode_weights(const std::string& bytes, const std::string& origin) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kWeightMagic, 4) != 0) {
    throw FormatError(origin + ": bad magic, expected CMAF");
  }
  ByteReader in(bytes, 4, origin);
  const std::uint32_t version = in.u32();
  if (version != kWeightVersion) {
    throw FormatError(origin + ": unsupported weight file version " + std::to_string(version));
  }
  const std::uint32_t count = in.u32();
  std::vector<Tensor> tensors;
  for (std::uint32_t t = 0; t < count; ++t) {
    const std::uint32_t ndim = in.u32();
    if (ndim == 0 || ndim > 8) throw FormatError(origin + ": bad tensor rank");
    Shape shape(ndim);
    std::size_t total = 1;
    for (auto& d : shape) {
      d = in.u32();
      if (d == 0) throw FormatError(origin + ": zero tensor dimension");
      total *= d;
      if (total > (std::size_t{1} << 32)) throw FormatError(origin + ": tensor too large");
    }
    in.need(total * 4);
    std::vector<double> data(total);
    for (double& v : data) {
      v = static_cast<double>(in.f32());
      if (!std::isfinite(v)) throw FormatError(origin + ": non-finite weight");
    }
    tensors.emplace_back(std::move(shape), std::move(data));
  }
  if (!in.at_end()) throw FormatError(origin + ": trailing bytes after last tensor");
  return tensors;
}

std::vector<Tensor> read_weight_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open weight file " + path.string());
  std::string bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return decode_weights(bytes, path.string());
}

void write_weight_file(const std::filesystem::path& path, std::span<const Tensor> tensors) {
  const std::string bytes = encode_weights(tensors);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write weight file " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("failed writing weight file " + path.string());
}

Tensor quantize_float32(const Tensor& tensor) {
  Tensor out = tensor;
  for (double& v : out.data()) v = static_cast<double>(static_cast<float>(v));
  return out;
}

}  // namespace cemmaf
