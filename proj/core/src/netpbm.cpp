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

#include "cemmaf/netpbm.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <string>

#include "cemmaf/error.hpp"

namespace cemmaf {
namespace {

class HeaderReader {
 public:
  HeaderReader(const std::vector<char>& bytes, const std::string& path)
      : bytes_(bytes), path_(path) {}

  // Next whitespace-separated token, skipping '#' comments.
  std::uint64_t next_number() {
    skip_space_and_comments();
    if (pos_ >= bytes_.size() || !std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) {
      throw FormatError(path_ + ": expected a number in header");
    }
    std::uint64_t value = 0;
    while (pos_ < bytes_.size() && std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) {
      value = value * 10 + static_cast<std::uint64_t>(bytes_[pos_] - '0');
      if (value > 0xFFFFFFFFull) throw FormatError(path_ + ": header number out of range");
      ++pos_;
    }
    return value;
  }

  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      const char c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  // The single whitespace byte between maxval and binary raster.
  void skip_single_space() {
    if (pos_ >= bytes_.size() || !std::isspace(static_cast<unsigned char>(bytes_[pos_]))) {
      throw FormatError(path_ + ": missing whitespace before raster");
    }
    ++pos_;
  }

  std::size_t pos() const { return pos_; }
  void set_pos(std::size_t p) { pos_ = p; }

 private:
  const std::vector<char>& bytes_;
  const std::string& path_;
  std::size_t pos_ = 2;
};

std::vector<char> slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

PnmData read_pnm(const std::filesystem::path& path) {
  const std::string name = path.string();
  const std::vector<char> bytes = slurp(path);
  if (bytes.size() < 2 || bytes[0] != 'P') throw FormatError(name + ": not a PGM/PPM file");

  bool ascii = false;
  PnmData out;
  switch (bytes[1]) {
    case '2': ascii = true; out.channels = 1; break;
    case '3': ascii = true; out.channels = 3; break;
    case '5': out.channels = 1; break;
    case '6': out.channels = 3; break;
    default: throw FormatError(name + ": unsupported magic P" + std::string(1, bytes[1]));
  }

  HeaderReader header(bytes, name);
  out.width = header.next_number();
  out.height = header.next_number();
  const std::uint64_t maxval = header.next_number();
  if (out.width == 0 || out.height == 0) throw FormatError(name + ": zero image dimension");
  if (maxval == 0 || maxval > 65535) throw FormatError(name + ": maxval out of range");
  out.maxval = static_cast<std::uint32_t>(maxval);

  const std::size_t count = out.width * out.height * out.channels;
  out.samples.resize(count);
  if (ascii) {
    for (std::size_t i = 0; i < count; ++i) {
      const std::uint64_t v = header.next_number();
      if (v > maxval) throw FormatError(name + ": sample exceeds maxval");
      out.samples[i] = static_cast<std::uint32_t>(v);
    }
    return out;
  }

  header.skip_single_space();
  const std::size_t bytes_per_sample = maxval > 255 ? 2 : 1;
  const std::size_t start = header.pos();
  if (bytes.size() < start + count * bytes_per_sample) {
    throw FormatError(name + ": truncated raster");
  }
  for (std::size_t i = 0; i < count; ++i) {
    std::uint32_t v = static_cast<unsigned char>(bytes[start + i * bytes_per_sample]);
    if (bytes_per_sample == 2) {
      v = (v << 8) | static_cast<unsigned char>(bytes[start + i * 2 + 1]);
    }
    if (v > maxval) throw FormatError(name + ": sample exceeds maxval");
    out.samples[i] = v;
  }
  return out;
}

void write_pnm(const std::filesystem::path& path, const PnmData& data) {
  if (data.channels != 1 && data.channels != 3) {
    throw FormatError("PGM/PPM supports 1 or 3 channels, got " + std::to_string(data.channels));
  }
  if (data.maxval == 0 || data.maxval > 65535) throw FormatError("maxval out of range");
  if (data.samples.size() != data.width * data.height * data.channels) {
    throw ShapeError("sample count does not match image dimensions");
  }
  std::string out = (data.channels == 1 ? "P5\n" : "P6\n") + std::to_string(data.width) + " " +
                    std::to_string(data.height) + "\n" + std::to_string(data.maxval) + "\n";
  const bool wide = data.maxval > 255;
  out.reserve(out.size() + data.samples.size() * (wide ? 2 : 1));
  for (std::uint32_t v : data.samples) {
    if (v > data.maxval) throw FormatError("sample exceeds maxval");
    if (wide) out.push_back(static_cast<char>(v >> 8));
    out.push_back(static_cast<char>(v & 0xFF));
  }
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw FormatError("cannot write " + path.string());
  file.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!file) throw FormatError("failed writing " + path.string());
}

Image read_image(const std::filesystem::path& path) {
  const PnmData data = read_pnm(path);
  std::vector<double> values(data.samples.size());
  const double scale = static_cast<double>(data.maxval);
  std::transform(data.samples.begin(), data.samples.end(), values.begin(),
                 [scale](std::uint32_t s) { return static_cast<double>(s) / scale; });
  return Image({data.height, data.width, data.channels}, std::move(values));
}

void write_image(const std::filesystem::path& path, const Image& image) {
  PnmData data;
  data.width = image.shape().width;
  data.height = image.shape().height;
  data.channels = image.shape().channels;
  data.maxval = 255;
  data.samples.resize(image.size());
  std::transform(image.values().begin(), image.values().end(), data.samples.begin(),
                 [](double v) {
                   return static_cast<std::uint32_t>(std::round(std::clamp(v, 0.0, 1.0) * 255.0));
                 });
  write_pnm(path, data);
}

}  // namespace cemmaf
