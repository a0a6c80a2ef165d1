// Copyright 2026 The l2grade Authors. All Rights Reserved.
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

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <span>
#include <vector>

#include "l2grade/matrix.hpp"

// EMB1 container: one embedding matrix per file.
//
//   offset  size  field
//   0       4     magic "EMB1"
//   4       4     version, u32 little-endian, = 1
//   8       4     n_rows, u32 little-endian, >= 1
//   12      4     n_cols, u32 little-endian, >= 1
//   16      4*n   payload, f32 little-endian, row-major, all finite

namespace l2grade {

inline constexpr std::uint32_t kEmbeddingVersion = 1;
inline constexpr std::size_t kEmbeddingHeaderSize = 16;

struct EmbeddingHeader {
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;
};

std::vector<std::uint8_t> encode_embedding(const Matrix& m);
Matrix decode_embedding(std::span<const std::uint8_t> bytes);

void write_embedding_file(const Matrix& m, const std::filesystem::path& path);
Matrix read_embedding_file(const std::filesystem::path& path);

/// Reads the header and only the first min(n_rows, max_rows) rows. The
/// declared payload length is still checked against the file size.
Matrix read_embedding_rows(const std::filesystem::path& path,
                           std::size_t max_rows = std::numeric_limits<std::size_t>::max());

EmbeddingHeader read_embedding_header(const std::filesystem::path& path);

}  // namespace l2grade
