#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>

#include <gtest/gtest.h>

#include "tsdshap/io.hpp"
#include "tsdshap/rng.hpp"

namespace tsdshap::io {
namespace {

namespace fs = std::filesystem;

class IoTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("tsdshap_io_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path path(const std::string& name) const { return dir_ / name; }

  void write_raw(const fs::path& p, const std::string& bytes) const {
    std::ofstream out(p, std::ios::binary);
    out << bytes;
  }

  fs::path dir_;
};

TEST_F(IoTest, BinaryHeaderLayout) {
  const EmbeddingMatrix m(2, 3, {1.F, 2.F, 3.F, 4.F, 5.F, 6.F});
  const std::string bytes = encode_binary(m);
  ASSERT_EQ(bytes.size(), 24U + 6U * 4U);
  EXPECT_EQ(bytes.substr(0, 4), "TSDS");
  EXPECT_EQ(bytes[4], 1);
  EXPECT_EQ(bytes[5], 0);
  EXPECT_EQ(bytes[6], 0);
  EXPECT_EQ(bytes[7], 0);
  EXPECT_EQ(bytes[8], 2);
  EXPECT_EQ(bytes[16], 3);
  // 1.0f = 0x3F800000, little-endian.
  EXPECT_EQ(static_cast<unsigned char>(bytes[24 + 3]), 0x3FU);
  EXPECT_EQ(static_cast<unsigned char>(bytes[24 + 2]), 0x80U);
}

TEST_F(IoTest, BinaryRoundTrip) {
  const EmbeddingMatrix m(2, 3, {1.5F, -2.F, 3.25F, 0.F, 1e-30F, -7.F});
  write_embedding_matrix(m, path("m.tsds"));
  EXPECT_EQ(load_embedding_matrix(path("m.tsds")), m);
}

TEST_F(IoTest, ZeroRowRoundTrip) {
  const EmbeddingMatrix m(0, 5);
  write_embedding_matrix(m, path("empty.tsds"));
  const auto back = load_embedding_matrix(path("empty.tsds"));
  EXPECT_EQ(back.rows(), 0U);
  EXPECT_EQ(back.cols(), 5U);
}

TEST_F(IoTest, RandomMatricesRoundTripBitExactly) {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const auto rows = static_cast<std::size_t>(rng.below(6));
    const auto cols = static_cast<std::size_t>(1 + rng.below(4));
    EmbeddingMatrix m(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < cols; ++c) {
        // Random finite bit patterns: keep the exponent below all-ones.
        auto bits = static_cast<std::uint32_t>(rng.next());
        if ((bits & 0x7F800000U) == 0x7F800000U) bits &= 0xBFFFFFFFU;
        m(r, c) = std::bit_cast<float>(bits);
      }
    }
    const auto back = decode_binary(encode_binary(m));
    ASSERT_EQ(back.rows(), rows);
    ASSERT_EQ(back.cols(), cols);
    for (std::size_t i = 0; i < m.data().size(); ++i) {
      EXPECT_EQ(std::bit_cast<std::uint32_t>(back.data()[i]), std::bit_cast<std::uint32_t>(m.data()[i]));
    }
  }
}

TEST_F(IoTest, CsvMatrix) {
  write_raw(path("m.csv"), "1.0,2.0\n3.0,4.0");
  const auto m = load_embedding_matrix(path("m.csv"));
  EXPECT_EQ(m, EmbeddingMatrix(2, 2, {1.F, 2.F, 3.F, 4.F}));
}

TEST_F(IoTest, CsvRaggedRowNamesLine) {
  write_raw(path("bad.csv"), "1,2\n3\n");
  try {
    load_embedding_matrix(path("bad.csv"));
    FAIL() << "expected LoadError";
  } catch (const LoadError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
}

TEST_F(IoTest, ShortPayloadIsRejected) {
  std::string bytes = encode_binary(EmbeddingMatrix(2, 3));
  bytes.resize(bytes.size() - 4);
  write_raw(path("short.tsds"), bytes);
  try {
    load_embedding_matrix(path("short.tsds"));
    FAIL() << "expected LoadError";
  } catch (const LoadError& e) {
    EXPECT_NE(std::string(e.what()).find("byte offset"), std::string::npos);
  }
}

TEST_F(IoTest, NonFiniteBinaryValueIsRejected) {
  std::string bytes = encode_binary(EmbeddingMatrix(1, 2));
  // Second float becomes +inf (0x7F800000).
  bytes[24 + 4 + 2] = static_cast<char>(0x80);
  bytes[24 + 4 + 3] = static_cast<char>(0x7F);
  try {
    decode_binary(bytes);
    FAIL() << "expected LoadError";
  } catch (const LoadError& e) {
    EXPECT_NE(std::string(e.what()).find("byte offset 28"), std::string::npos);
  }
}

TEST_F(IoTest, BadVersionIsRejected) {
  std::string bytes = encode_binary(EmbeddingMatrix(1, 1));
  bytes[4] = 2;
  EXPECT_THROW(decode_binary(bytes), LoadError);
}

TEST_F(IoTest, WriteToUnwritablePathFails) {
  EXPECT_THROW(write_embedding_matrix(EmbeddingMatrix(1, 1), dir_ / "missing_dir" / "m.tsds"), WriteError);
}

TEST_F(IoTest, Labels) {
  write_raw(path("y.txt"), "0\n1\n1\n");
  const auto y = load_labels(path("y.txt"));
  EXPECT_EQ(y.labels, (std::vector<Label>{0, 1, 1}));
  EXPECT_EQ(y.num_classes, 2U);
}

TEST_F(IoTest, EmptyLabelFile) {
  write_raw(path("y.txt"), "");
  const auto y = load_labels(path("y.txt"));
  EXPECT_EQ(y.size(), 0U);
  EXPECT_EQ(y.num_classes, 0U);
}

TEST_F(IoTest, LabelParseErrorNamesLine) {
  for (const char* text : {"0\ntwo\n", "0\n-1\n"}) {
    write_raw(path("y.txt"), text);
    try {
      load_labels(path("y.txt"));
      FAIL() << "expected LoadError for " << text;
    } catch (const LoadError& e) {
      EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
    }
  }
}

TEST_F(IoTest, LabelRoundTrip) {
  const LabelVector y({3, 0, 2, 2});
  write_labels(y, path("y.txt"));
  EXPECT_EQ(load_labels(path("y.txt")), y);
}

}  // namespace
}  // namespace tsdshap::io
