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

#include "l2grade/embedding_file.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace l2grade {
namespace {

constexpr char kMagic[4] = {'E', 'M', 'B', '1'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int shift = 0; shift < 32; shift += 8) out.push_back(static_cast<std::uint8_t>(v >> shift));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

EmbeddingHeader parse_header(std::span<const std::uint8_t> bytes, const std::string& where) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) throw FormatError(where + "not an EMB1 file");
  if (bytes.size() < kEmbeddingHeaderSize) throw FormatError(where + "payload length mismatch (truncated header)");
  const std::uint32_t version = get_u32(bytes.data() + 4);
  if (version != kEmbeddingVersion) throw FormatError(where + "unsupported version " + std::to_string(version));
  EmbeddingHeader h{get_u32(bytes.data() + 8), get_u32(bytes.data() + 12)};
  if (h.rows == 0 || h.cols == 0) {
    throw FormatError(where + "empty embedding (" + std::to_string(h.rows) + "x" + std::to_string(h.cols) + ")");
  }
  return h;
}

std::uint64_t payload_bytes(const EmbeddingHeader& h) {
  return static_cast<std::uint64_t>(h.rows) * h.cols * sizeof(float);
}

Matrix decode_rows(const std::uint8_t* payload, std::size_t rows, std::size_t cols, const std::string& where) {
  std::vector<float> values(rows * cols);
  for (std::size_t i = 0; i < values.size(); ++i) {
    values[i] = std::bit_cast<float>(get_u32(payload + 4 * i));
    if (!std::isfinite(values[i])) {
      throw FormatError(where + "non-finite value at row " + std::to_string(i / cols) + ", column " +
                        std::to_string(i % cols));
    }
  }
  return Matrix(rows, cols, std::move(values));
}

std::string prefix(const std::filesystem::path& path) { return path.string() + ": "; }

std::ifstream open_for_read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(prefix(path) + "cannot open embedding file");
  return in;
}

}  // namespace

std::vector<std::uint8_t> encode_embedding(const Matrix& m) {
  if (m.rows() == 0 || m.cols() == 0) throw ShapeError("cannot encode an empty matrix");
  if (m.rows() > UINT32_MAX || m.cols() > UINT32_MAX) throw ShapeError("matrix too large for EMB1");
  if (!m.all_finite()) throw FormatError("refusing to write non-finite values to EMB1");
  std::vector<std::uint8_t> out;
  out.reserve(kEmbeddingHeaderSize + 4 * m.size());
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  put_u32(out, kEmbeddingVersion);
  put_u32(out, static_cast<std::uint32_t>(m.rows()));
  put_u32(out, static_cast<std::uint32_t>(m.cols()));
  for (const float v : m.values()) put_u32(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

Matrix decode_embedding(std::span<const std::uint8_t> bytes) {
  const EmbeddingHeader h = parse_header(bytes, "");
  if (bytes.size() - kEmbeddingHeaderSize != payload_bytes(h)) {
    throw FormatError("payload length mismatch: header declares " + std::to_string(h.rows) + "x" +
                      std::to_string(h.cols) + " (" + std::to_string(payload_bytes(h)) + " bytes), found " +
                      std::to_string(bytes.size() - kEmbeddingHeaderSize));
  }
  return decode_rows(bytes.data() + kEmbeddingHeaderSize, h.rows, h.cols, "");
}

void write_embedding_file(const Matrix& m, const std::filesystem::path& path) {
  const auto bytes = encode_embedding(m);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(prefix(path) + "cannot open for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(prefix(path) + "write failed");
}

Matrix read_embedding_file(const std::filesystem::path& path) {
  auto in = open_for_read(path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return decode_embedding(bytes);
  } catch (const FormatError& e) {
    throw FormatError(prefix(path) + e.what());
  }
}

EmbeddingHeader read_embedding_header(const std::filesystem::path& path) {
  auto in = open_for_read(path);
  std::uint8_t buf[kEmbeddingHeaderSize];
  in.read(reinterpret_cast<char*>(buf), sizeof buf);
  const auto got = static_cast<std::size_t>(in.gcount());
  const EmbeddingHeader h = parse_header({buf, got}, prefix(path));
  const auto size = std::filesystem::file_size(path);
  if (size - kEmbeddingHeaderSize != payload_bytes(h)) {
    throw FormatError(prefix(path) + "payload length mismatch: header declares " + std::to_string(h.rows) + "x" +
                      std::to_string(h.cols) + ", file holds " + std::to_string(size - kEmbeddingHeaderSize) +
                      " payload bytes");
  }
  return h;
}

Matrix read_embedding_rows(const std::filesystem::path& path, std::size_t max_rows) {
  const EmbeddingHeader h = read_embedding_header(path);
  const std::size_t rows = std::min<std::size_t>(h.rows, max_rows);
  if (rows == 0) throw ShapeError(prefix(path) + "max_rows must be at least 1");
  auto in = open_for_read(path);
  in.seekg(kEmbeddingHeaderSize);
  std::vector<std::uint8_t> payload(rows * h.cols * sizeof(float));
  in.read(reinterpret_cast<char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
  if (static_cast<std::size_t>(in.gcount()) != payload.size()) throw FormatError(prefix(path) + "payload length mismatch");
  return decode_rows(payload.data(), rows, h.cols, prefix(path));
}

}  // namespace l2grade
