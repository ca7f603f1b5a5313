#pragma once

// Matrix and label file formats.
//
// Binary matrix ("TSDS"), all fields little-endian:
//   offset 0   4 bytes  magic "TSDS"
//   offset 4   u16      version (1)
//   offset 6   u16      reserved (0)
//   offset 8   u64      rows n
//   offset 16  u64      cols d
//   offset 24  n*d      IEEE-754 binary32, row-major
//
// CSV matrix: one row per line, comma-separated decimal floats, no header.
// Labels: one non-negative decimal integer per line.

#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "tsdshap/types.hpp"

namespace tsdshap::io {

inline constexpr std::array<char, 4> kMagic = {'T', 'S', 'D', 'S'};
inline constexpr std::uint16_t kVersion = 1;
inline constexpr std::size_t kHeaderSize = 24;

namespace detail {

template <class T>
void put_le(std::string& out, T value) {
  using U = std::make_unsigned_t<T>;
  auto u = static_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<char>(u & 0xFFU));
    u = static_cast<U>(u >> 8);
  }
}

template <class T>
T get_le(std::string_view bytes, std::size_t offset) {
  T value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    value |= static_cast<T>(static_cast<unsigned char>(bytes[offset + i])) << (8 * i);
  }
  return value;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw WriteError("cannot open '" + path.string() + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  out.flush();
  if (!out) throw WriteError("failed writing '" + path.string() + "'");
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    lines.push_back(text.substr(start, end - start));
    start = end + 1;
  }
  return lines;
}

}  // namespace detail

inline std::string encode_binary(const EmbeddingMatrix& m) {
  std::string out;
  out.reserve(kHeaderSize + m.data().size() * 4);
  out.append(kMagic.data(), kMagic.size());
  detail::put_le<std::uint16_t>(out, kVersion);
  detail::put_le<std::uint16_t>(out, 0);
  detail::put_le<std::uint64_t>(out, m.rows());
  detail::put_le<std::uint64_t>(out, m.cols());
  for (float v : m.data()) detail::put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

inline EmbeddingMatrix decode_binary(std::string_view bytes) {
  if (bytes.size() < kHeaderSize) {
    throw LoadError("truncated header: " + std::to_string(bytes.size()) + " bytes, need " +
                    std::to_string(kHeaderSize));
  }
  if (std::memcmp(bytes.data(), kMagic.data(), kMagic.size()) != 0) {
    throw LoadError("bad magic at byte offset 0");
  }
  const auto version = detail::get_le<std::uint16_t>(bytes, 4);
  if (version != kVersion) {
    throw LoadError("unsupported version " + std::to_string(version) + " at byte offset 4");
  }
  if (detail::get_le<std::uint16_t>(bytes, 6) != 0) {
    throw LoadError("non-zero reserved field at byte offset 6");
  }
  const auto rows = detail::get_le<std::uint64_t>(bytes, 8);
  const auto cols = detail::get_le<std::uint64_t>(bytes, 16);
  if (cols < 1) throw LoadError("zero columns declared at byte offset 16");
  const std::uint64_t payload = bytes.size() - kHeaderSize;
  if (rows > payload / 4 / cols || rows * cols * 4 != payload) {
    throw LoadError("payload is " + std::to_string(payload) + " bytes at byte offset " +
                    std::to_string(kHeaderSize) + ", header declares " + std::to_string(rows) +
                    "x" + std::to_string(cols) + " floats");
  }
  std::vector<float> data(rows * cols);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const std::size_t offset = kHeaderSize + 4 * i;
    data[i] = std::bit_cast<float>(detail::get_le<std::uint32_t>(bytes, offset));
    if (!std::isfinite(data[i])) {
      throw LoadError("non-finite value at byte offset " + std::to_string(offset));
    }
  }
  return {rows, cols, std::move(data)};
}

inline EmbeddingMatrix parse_csv(std::string_view text) {
  std::vector<float> data;
  std::size_t cols = 0;
  std::size_t rows = 0;
  const auto lines = detail::split_lines(text);
  for (std::size_t ln = 0; ln < lines.size(); ++ln) {
    const auto line = detail::trim(lines[ln]);
    if (line.empty()) continue;
    std::size_t fields = 0;
    std::size_t start = 0;
    while (start <= line.size()) {
      std::size_t end = line.find(',', start);
      if (end == std::string_view::npos) end = line.size();
      const auto field = detail::trim(line.substr(start, end - start));
      float v = 0.0F;
      auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
      if (field.empty() || ec != std::errc() || ptr != field.data() + field.size()) {
        throw LoadError("line " + std::to_string(ln + 1) + ": cannot parse '" + std::string(field) +
                        "' as a number");
      }
      if (!std::isfinite(v)) throw LoadError("line " + std::to_string(ln + 1) + ": non-finite value");
      data.push_back(v);
      ++fields;
      start = end + 1;
    }
    if (rows == 0) {
      cols = fields;
    } else if (fields != cols) {
      throw LoadError("line " + std::to_string(ln + 1) + ": expected " + std::to_string(cols) +
                      " columns, found " + std::to_string(fields));
    }
    ++rows;
  }
  if (rows == 0) throw LoadError("CSV matrix has no rows, column count unknown");
  return {rows, cols, std::move(data)};
}

// Format is chosen by content: the TSDS magic selects binary, anything else
// is parsed as CSV.
inline EmbeddingMatrix load_embedding_matrix(const std::filesystem::path& path) {
  const std::string bytes = detail::read_file(path);
  try {
    if (bytes.size() >= 4 && std::memcmp(bytes.data(), kMagic.data(), 4) == 0) {
      return decode_binary(bytes);
    }
    return parse_csv(bytes);
  } catch (const LoadError& e) {
    throw LoadError(path.string() + ": " + e.what());
  }
}

inline void write_embedding_matrix(const EmbeddingMatrix& m, const std::filesystem::path& path) {
  detail::write_file(path, encode_binary(m));
}

inline void write_embedding_csv(const EmbeddingMatrix& m, const std::filesystem::path& path) {
  std::string out;
  std::array<char, 32> buf{};
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) {
      if (c) out.push_back(',');
      auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), m(r, c));
      out.append(buf.data(), ptr);
    }
    out.push_back('\n');
  }
  detail::write_file(path, out);
}

inline LabelVector parse_labels(std::string_view text) {
  std::vector<Label> labels;
  const auto lines = detail::split_lines(text);
  for (std::size_t ln = 0; ln < lines.size(); ++ln) {
    const auto line = detail::trim(lines[ln]);
    if (line.empty() && ln + 1 == lines.size()) break;
    Label v = 0;
    auto [ptr, ec] = std::from_chars(line.data(), line.data() + line.size(), v);
    if (line.empty() || ec != std::errc() || ptr != line.data() + line.size()) {
      throw LoadError("line " + std::to_string(ln + 1) + ": '" + std::string(line) +
                      "' is not a non-negative integer label");
    }
    labels.push_back(v);
  }
  return LabelVector(std::move(labels));
}

inline LabelVector load_labels(const std::filesystem::path& path) {
  try {
    return parse_labels(detail::read_file(path));
  } catch (const LoadError& e) {
    throw LoadError(path.string() + ": " + e.what());
  }
}

inline std::string format_labels(std::span<const Label> labels) {
  std::string out;
  for (Label l : labels) out += std::to_string(l) + '\n';
  return out;
}

inline void write_labels(const LabelVector& y, const std::filesystem::path& path) {
  detail::write_file(path, format_labels(y.labels));
}

// Newline-separated indices (used for kept-index and flipped-index files).
inline void write_indices(std::span<const Index> indices, const std::filesystem::path& path) {
  std::string out;
  for (Index i : indices) out += std::to_string(i) + '\n';
  detail::write_file(path, out);
}

inline std::vector<Index> load_indices(const std::filesystem::path& path) {
  const std::string text = detail::read_file(path);
  std::vector<Index> out;
  const auto lines = detail::split_lines(text);
  for (std::size_t ln = 0; ln < lines.size(); ++ln) {
    const auto line = detail::trim(lines[ln]);
    if (line.empty()) continue;
    Index v = 0;
    auto [ptr, ec] = std::from_chars(line.data(), line.data() + line.size(), v);
    if (ec != std::errc() || ptr != line.data() + line.size()) {
      throw LoadError(path.string() + ": line " + std::to_string(ln + 1) + ": bad index");
    }
    out.push_back(v);
  }
  return out;
}

inline void write_text(const std::filesystem::path& path, std::string_view text) {
  detail::write_file(path, text);
}

}  // namespace tsdshap::io
