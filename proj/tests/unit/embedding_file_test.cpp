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


#include <cstring>
#include <limits>

#include <gtest/gtest.h>

#include "l2grade/embedding_file.hpp"
#include "l2grade/errors.hpp"
#include "l2grade/rng.hpp"
#include "test_util.hpp"

namespace l2grade {
namespace {

using testing::TempDir;

Matrix random_matrix(std::size_t r, std::size_t c, std::uint64_t seed) {
  RngStream rng(seed);
  Matrix m(r, c);
  for (float& v : m.values()) v = static_cast<float>(rng.normal() * 10.0);
  return m;
}

bool bit_equal(const Matrix& a, const Matrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         std::memcmp(a.values().data(), b.values().data(), a.size() * sizeof(float)) == 0;
}

TEST(Emb1, SingleZeroIsTwentyBytes) {
  TempDir dir;
  write_embedding_file(Matrix{{0.0f}}, dir / "z.emb1");
  const std::string bytes = testing::slurp(dir / "z.emb1");
  const std::string expect("EMB1\x01\0\0\0\x01\0\0\0\x01\0\0\0\0\0\0\0", 20);
  EXPECT_EQ(bytes, expect);
}

TEST(Emb1, LittleEndianLayout) {
  const auto bytes = encode_embedding(Matrix{{1.0f, -2.0f}, {0.5f, 3.0f}, {0.0f, 0.0f}});
  ASSERT_EQ(bytes.size(), 16u + 6 * 4);
  EXPECT_EQ(bytes[8], 3);
  EXPECT_EQ(bytes[12], 2);
  // 1.0f = 0x3f800000
  EXPECT_EQ(bytes[16], 0x00);
  EXPECT_EQ(bytes[18], 0x80);
  EXPECT_EQ(bytes[19], 0x3f);
}

TEST(Emb1, RoundTripBitExact) {
  TempDir dir;
  const Matrix m = random_matrix(50, 768, 1);
  write_embedding_file(m, dir / "a.emb1");
  EXPECT_TRUE(bit_equal(read_embedding_file(dir / "a.emb1"), m));
}

TEST(Emb1, RoundTripKeepsSpecialFiniteValues) {
  Matrix m{{-0.0f, std::numeric_limits<float>::denorm_min(), std::numeric_limits<float>::max(),
            std::numeric_limits<float>::lowest()}};
  EXPECT_TRUE(bit_equal(decode_embedding(encode_embedding(m)), m));
}

TEST(Emb1, RewriteIsByteIdentical) {
  TempDir dir;
  const Matrix m = random_matrix(7, 13, 2);
  write_embedding_file(m, dir / "a.emb1");
  write_embedding_file(m, dir / "b.emb1");
  EXPECT_EQ(testing::slurp(dir / "a.emb1"), testing::slurp(dir / "b.emb1"));
}

TEST(Emb1, RefusesNonFinite) {
  TempDir dir;
  Matrix m{{1.0f, std::numeric_limits<float>::quiet_NaN()}};
  EXPECT_THROW(write_embedding_file(m, dir / "n.emb1"), FormatError);
  EXPECT_FALSE(std::filesystem::exists(dir / "n.emb1"));
  m(0, 1) = std::numeric_limits<float>::infinity();
  EXPECT_THROW(encode_embedding(m), FormatError);
}

TEST(Emb1, BadMagic) {
  TempDir dir;
  auto bytes = encode_embedding(Matrix{{1.0f}});
  bytes[3] = 'X';
  testing::spit(dir / "x.emb1", std::string(bytes.begin(), bytes.end()));
  try {
    read_embedding_file(dir / "x.emb1");
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("not an EMB1 file"), std::string::npos);
  }
}

TEST(Emb1, TruncatedPayload) {
  TempDir dir;
  auto bytes = encode_embedding(random_matrix(10, 768, 3));
  bytes.resize(16 + 9 * 768 * 4);
  testing::spit(dir / "t.emb1", std::string(bytes.begin(), bytes.end()));
  try {
    read_embedding_file(dir / "t.emb1");
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("payload length mismatch"), std::string::npos);
  }
  EXPECT_THROW(read_embedding_rows(dir / "t.emb1", 1), FormatError);
}

TEST(Emb1, TrailingBytesRejected) {
  auto bytes = encode_embedding(Matrix{{1.0f}});
  bytes.push_back(0);
  EXPECT_THROW(decode_embedding(bytes), FormatError);
}

TEST(Emb1, UnsupportedVersion) {
  auto bytes = encode_embedding(Matrix{{1.0f}});
  bytes[4] = 2;
  try {
    decode_embedding(bytes);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("unsupported version"), std::string::npos);
  }
}

TEST(Emb1, ZeroRowsRejected) {
  auto bytes = encode_embedding(Matrix{{1.0f}});
  bytes[8] = 0;
  bytes.resize(16);
  EXPECT_THROW(decode_embedding(bytes), FormatError);
}

TEST(Emb1, NonFinitePayloadRejectedOnRead) {
  auto bytes = encode_embedding(Matrix{{1.0f, 2.0f}});
  const float nan = std::numeric_limits<float>::quiet_NaN();
  std::memcpy(bytes.data() + 20, &nan, 4);
  EXPECT_THROW(decode_embedding(bytes), FormatError);
}

TEST(Emb1, MissingFile) {
  TempDir dir;
  EXPECT_THROW(read_embedding_file(dir / "nope.emb1"), FormatError);
}

TEST(Emb1, ReadRowsStopsAtMaxRows) {
  TempDir dir;
  const Matrix m = random_matrix(10, 6, 4);
  write_embedding_file(m, dir / "r.emb1");
  const Matrix head = read_embedding_rows(dir / "r.emb1", 3);
  ASSERT_EQ(head.rows(), 3u);
  for (std::size_t r = 0; r < 3; ++r) {
    for (std::size_t c = 0; c < 6; ++c) EXPECT_EQ(head(r, c), m(r, c));
  }
  EXPECT_EQ(read_embedding_rows(dir / "r.emb1", 64).rows(), 10u);
  const auto h = read_embedding_header(dir / "r.emb1");
  EXPECT_EQ(h.rows, 10u);
  EXPECT_EQ(h.cols, 6u);
}

}  // namespace
}  // namespace l2grade
