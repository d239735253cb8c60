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

// Binary weight files.
//
// Layout, all integers u32 little-endian:
//   "CMAF" | version | tensor count | per tensor: ndim, dims[ndim], float32 data
// Data is row-major float32 little-endian. Values are widened to double on
// load and narrowed to float32 on save.

#ifndef CEMMAF_WEIGHTS_HPP_
#define CEMMAF_WEIGHTS_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "cemmaf/tensor.hpp"

namespace cemmaf {

inline constexpr char kWeightMagic[4] = {'C', 'M', 'A', 'F'};
inline constexpr std::uint32_t kWeightVersion = 1;

std::string encode_weights(std::span<const Tensor> tensors);
std::vector<Tensor> decode_weights(const std::string& bytes, const std::string& origin = "weights");

std::vector<Tensor> read_weight_file(const std::filesystem::path& path);
void write_weight_file(const std::filesystem::path& path, std::span<const Tensor> tensors);

// Rounds every entry through float32, i.e. what a save/load cycle yields.
Tensor quantize_float32(const Tensor& tensor);

}  // namespace cemmaf

#endif  // CEMMAF_WEIGHTS_HPP_
