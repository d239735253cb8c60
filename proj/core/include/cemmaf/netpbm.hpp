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

// PGM/PPM reading and writing.
//
// Images are written as binary P5 (one channel) or P6 (three channels) with
// maxval 255 and sample = round(255 * clamp(v, 0, 1)). Readers accept the
// ASCII (P2/P3) and binary (P5/P6) variants with any maxval up to 65535;
// 16-bit binary samples are big-endian as Netpbm requires.

#ifndef CEMMAF_NETPBM_HPP_
#define CEMMAF_NETPBM_HPP_

#include <cstdint>
#include <filesystem>
#include <vector>

#include "cemmaf/image.hpp"

namespace cemmaf {

// Raw integer samples of a PGM/PPM file.
struct PnmData {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t channels = 0;
  std::uint32_t maxval = 0;
  std::vector<std::uint32_t> samples;  // row-major, channels innermost
};

PnmData read_pnm(const std::filesystem::path& path);
// Binary P5/P6; 2-byte samples when maxval > 255.
void write_pnm(const std::filesystem::path& path, const PnmData& data);

Image read_image(const std::filesystem::path& path);
void write_image(const std::filesystem::path& path, const Image& image);

}  // namespace cemmaf

#endif  // CEMMAF_NETPBM_HPP_
