// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pathbench/image.hpp"

namespace pathbench {

using Symbol = std::int32_t;
inline constexpr Symbol kMinSymbol = -32768;
inline constexpr Symbol kMaxSymbol = 32767;

/// MSB-first bit packer.
class BitWriter {
 public:
  void put(std::uint64_t code, unsigned length);
  /// Pads the pending byte with zero bits.
  void flush();
  std::size_t bit_count() const noexcept { return bits_written_; }
  Bytes& bytes() noexcept { return out_; }

 private:
  Bytes out_;
  std::uint8_t pending_ = 0;
  unsigned pending_bits_ = 0;
  std::size_t bits_written_ = 0;
};

class BitReader {
 public:
  explicit BitReader(std::span<const Byte> data) : data_(data) {}
  /// Throws FormatError past the end of the buffer.
  unsigned bit();
  /// Skips to the next byte boundary.
  void align() noexcept;
  std::size_t byte_position() const noexcept { return pos_ + (bit_pos_ ? 1 : 0); }

 private:
  std::span<const Byte> data_;
  std::size_t pos_ = 0;
  unsigned bit_pos_ = 0;
};

/// Canonical prefix code for one symbol stream. Lengths are assigned by Huffman's
/// algorithm and codes by canonical ordering on (length, symbol).
struct CodeTable {
  struct Entry {
    Symbol symbol;
    std::uint8_t length;
  };
  std::vector<Entry> entries;  // sorted by (length, symbol)

  static CodeTable build(std::span<const Symbol> symbols);
};

/// Serialized layout per stream: u32 symbol count, u16 table length in bytes, the table
/// (u16 entry count, then per entry i16 symbol + u8 code length), bit-packed payload padded
/// to a byte boundary. Symbols must lie in [-32768, 32767].
Bytes entropy_encode(std::span<const Symbol> symbols);
void entropy_encode_into(std::span<const Symbol> symbols, Bytes& out);

/// Decodes one stream starting at `offset` and advances it past the padded payload.
std::vector<Symbol> entropy_decode(std::span<const Byte> data, std::size_t& offset);
std::vector<Symbol> entropy_decode(std::span<const Byte> data);

/// Sizes of the pieces of an encoded stream, for rate accounting.
struct StreamCost {
  std::size_t header_bits = 0;
  std::size_t payload_bits = 0;  // before byte padding
};
StreamCost entropy_cost(std::span<const Symbol> symbols);

/// Empirical Shannon entropy of the symbol histogram, bits per symbol.
double entropy_bound(std::span<const Symbol> symbols);

}  // namespace pathbench
