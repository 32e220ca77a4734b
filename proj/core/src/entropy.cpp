// SPDX-License-Identifier: Apache-2.0
#include "pathbench/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <queue>
#include <tuple>

namespace pathbench {

void BitWriter::put(std::uint64_t code, unsigned length) {
  for (unsigned i = length; i-- > 0;) {
    pending_ = static_cast<std::uint8_t>((pending_ << 1) | ((code >> i) & 1u));
    if (++pending_bits_ == 8) {
      out_.push_back(pending_);
      pending_ = 0;
      pending_bits_ = 0;
    }
  }
  bits_written_ += length;
}

void BitWriter::flush() {
  if (pending_bits_ > 0) {
    out_.push_back(static_cast<std::uint8_t>(pending_ << (8 - pending_bits_)));
    pending_ = 0;
    pending_bits_ = 0;
  }
}

unsigned BitReader::bit() {
  if (pos_ >= data_.size()) throw FormatError("truncated bitstream");
  const unsigned b = (data_[pos_] >> (7 - bit_pos_)) & 1u;
  if (++bit_pos_ == 8) {
    bit_pos_ = 0;
    ++pos_;
  }
  return b;
}

void BitReader::align() noexcept {
  if (bit_pos_ != 0) {
    bit_pos_ = 0;
    ++pos_;
  }
}

namespace {

constexpr unsigned kMaxCodeLength = 63;

std::map<Symbol, std::uint64_t> histogram(std::span<const Symbol> symbols) {
  std::map<Symbol, std::uint64_t> hist;
  for (const Symbol s : symbols) {
    if (s < kMinSymbol || s > kMaxSymbol) throw DomainError("symbol " + std::to_string(s) + " outside 16-bit range");
    ++hist[s];
  }
  return hist;
}

struct CanonicalCode {
  std::uint64_t code;
  unsigned length;
};

// Assigns canonical codes in (length, symbol) order.
std::vector<CanonicalCode> canonical_codes(const CodeTable& table) {
  std::vector<CanonicalCode> codes;
  codes.reserve(table.entries.size());
  std::uint64_t code = 0;
  unsigned prev = table.entries.empty() ? 0 : table.entries.front().length;
  for (const auto& e : table.entries) {
    code <<= (e.length - prev);
    prev = e.length;
    codes.push_back({code, e.length});
    ++code;
  }
  return codes;
}

void put_u16(Bytes& out, std::uint32_t v) {
  out.push_back(static_cast<Byte>(v & 0xFF));
  out.push_back(static_cast<Byte>((v >> 8) & 0xFF));
}

void put_u32(Bytes& out, std::uint32_t v) {
  put_u16(out, v & 0xFFFF);
  put_u16(out, v >> 16);
}

std::uint32_t get_u16(std::span<const Byte> d, std::size_t& at) {
  if (at + 2 > d.size()) throw FormatError("truncated stream header");
  const std::uint32_t v = d[at] | (static_cast<std::uint32_t>(d[at + 1]) << 8);
  at += 2;
  return v;
}

std::uint32_t get_u32(std::span<const Byte> d, std::size_t& at) {
  const std::uint32_t lo = get_u16(d, at);
  return lo | (get_u16(d, at) << 16);
}

}  // namespace

CodeTable CodeTable::build(std::span<const Symbol> symbols) {
  const auto hist = histogram(symbols);
  CodeTable table;
  if (hist.empty()) return table;
  if (hist.size() == 1) {
    table.entries.push_back({hist.begin()->first, 0});
    return table;
  }

  // Huffman merge; ties broken by node id so the result is a pure function of the histogram.
  struct Node {
    std::uint64_t weight;
    std::size_t id;
  };
  auto heavier = [](const Node& a, const Node& b) { return std::tie(a.weight, a.id) > std::tie(b.weight, b.id); };
  std::priority_queue<Node, std::vector<Node>, decltype(heavier)> queue(heavier);
  std::vector<std::size_t> parent;
  std::vector<Symbol> leaf_symbol;
  for (const auto& [sym, count] : hist) {
    queue.push({count, parent.size()});
    parent.push_back(0);
    leaf_symbol.push_back(sym);
  }
  const std::size_t leaves = parent.size();
  while (queue.size() > 1) {
    const Node a = queue.top();
    queue.pop();
    const Node b = queue.top();
    queue.pop();
    const std::size_t id = parent.size();
    parent.push_back(id);  // root points at itself until merged
    parent[a.id] = id;
    parent[b.id] = id;
    queue.push({a.weight + b.weight, id});
  }
  const std::size_t root = parent.size() - 1;
  for (std::size_t leaf = 0; leaf < leaves; ++leaf) {
    unsigned depth = 0;
    for (std::size_t n = leaf; n != root; n = parent[n]) ++depth;
    if (depth > kMaxCodeLength) throw DomainError("prefix code length exceeds 63 bits");
    table.entries.push_back({leaf_symbol[leaf], static_cast<std::uint8_t>(depth)});
  }
  std::sort(table.entries.begin(), table.entries.end(),
            [](const Entry& a, const Entry& b) { return std::tie(a.length, a.symbol) < std::tie(b.length, b.symbol); });
  return table;
}

void entropy_encode_into(std::span<const Symbol> symbols, Bytes& out) {
  if (symbols.size() > 0xFFFFFFFFu) throw DomainError("symbol stream longer than 2^32");
  const CodeTable table = CodeTable::build(symbols);
  const std::size_t table_bytes = 2 + 3 * table.entries.size();
  if (table_bytes > 0xFFFF) {
    throw DomainError("code table for " + std::to_string(table.entries.size()) + " distinct symbols exceeds 64 KiB");
  }
  put_u32(out, static_cast<std::uint32_t>(symbols.size()));
  put_u16(out, static_cast<std::uint32_t>(table_bytes));
  put_u16(out, static_cast<std::uint32_t>(table.entries.size()));
  for (const auto& e : table.entries) {
    put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(e.symbol)));
    out.push_back(e.length);
  }

  const auto codes = canonical_codes(table);
  std::vector<CanonicalCode> lookup(65536, CanonicalCode{0, 0});
  for (std::size_t i = 0; i < codes.size(); ++i) lookup[static_cast<std::size_t>(table.entries[i].symbol - kMinSymbol)] = codes[i];

  BitWriter writer;
  for (const Symbol s : symbols) {
    const auto& c = lookup[static_cast<std::size_t>(s - kMinSymbol)];
    writer.put(c.code, c.length);
  }
  writer.flush();
  out.insert(out.end(), writer.bytes().begin(), writer.bytes().end());
}

Bytes entropy_encode(std::span<const Symbol> symbols) {
  Bytes out;
  entropy_encode_into(symbols, out);
  return out;
}

std::vector<Symbol> entropy_decode(std::span<const Byte> data, std::size_t& offset) {
  std::size_t at = offset;
  const std::uint32_t count = get_u32(data, at);
  const std::uint32_t table_bytes = get_u16(data, at);
  const std::size_t table_start = at;
  if (table_bytes < 2 || table_start + table_bytes > data.size()) throw FormatError("corrupted code table length");
  const std::uint32_t n = get_u16(data, at);
  if (table_bytes != 2 + 3 * n) throw FormatError("code table length disagrees with entry count");

  CodeTable table;
  for (std::uint32_t i = 0; i < n; ++i) {
    const auto sym = static_cast<std::int16_t>(get_u16(data, at));
    const std::uint8_t len = data[at++];
    table.entries.push_back({sym, len});
  }
  if (n == 0 && count != 0) throw FormatError("empty code table for nonempty stream");
  if (n == 1 && table.entries[0].length != 0) throw FormatError("single-symbol table must use a zero-length code");
  if (n > 1) {
    // Canonical order, no zero lengths, Kraft sum <= 1.
    long double kraft = 0.0L;
    for (std::uint32_t i = 0; i < n; ++i) {
      const auto& e = table.entries[i];
      if (e.length == 0 || e.length > kMaxCodeLength) throw FormatError("invalid code length in table");
      if (i > 0) {
        const auto& p = table.entries[i - 1];
        if (std::tie(p.length, p.symbol) >= std::tie(e.length, e.symbol)) throw FormatError("code table not canonical");
      }
      kraft += std::ldexp(1.0L, -static_cast<int>(e.length));
    }
    if (kraft > 1.0L) throw FormatError("code table violates the Kraft inequality");
  }

  std::vector<Symbol> symbols;
  symbols.reserve(count);
  if (n == 1) {
    symbols.assign(count, table.entries[0].symbol);
    offset = at;
    return symbols;
  }

  // Per-length decoding tables (first code, first index, count).
  std::vector<std::uint64_t> first_code(kMaxCodeLength + 2, 0);
  std::vector<std::size_t> first_index(kMaxCodeLength + 2, 0), per_length(kMaxCodeLength + 2, 0);
  for (const auto& e : table.entries) ++per_length[e.length];
  {
    std::uint64_t code = 0;
    std::size_t index = 0;
    for (unsigned len = 1; len <= kMaxCodeLength; ++len) {
      code <<= 1;
      first_code[len] = code;
      first_index[len] = index;
      code += per_length[len];
      index += per_length[len];
    }
  }

  BitReader reader(data.subspan(at));
  for (std::uint32_t i = 0; i < count; ++i) {
    std::uint64_t code = 0;
    unsigned len = 0;
    for (;;) {
      code = (code << 1) | reader.bit();
      ++len;
      if (len > kMaxCodeLength) throw FormatError("invalid prefix code in payload");
      if (per_length[len] && code - first_code[len] < per_length[len]) {
        symbols.push_back(table.entries[first_index[len] + static_cast<std::size_t>(code - first_code[len])].symbol);
        break;
      }
    }
  }
  reader.align();
  offset = at + reader.byte_position();
  return symbols;
}

std::vector<Symbol> entropy_decode(std::span<const Byte> data) {
  std::size_t offset = 0;
  return entropy_decode(data, offset);
}

StreamCost entropy_cost(std::span<const Symbol> symbols) {
  const CodeTable table = CodeTable::build(symbols);
  std::map<Symbol, unsigned> length_of;
  for (const auto& e : table.entries) length_of[e.symbol] = e.length;
  StreamCost cost;
  cost.header_bits = 8 * (4 + 2 + 2 + 3 * table.entries.size());
  for (const Symbol s : symbols) cost.payload_bits += length_of[s];
  return cost;
}

double entropy_bound(std::span<const Symbol> symbols) {
  if (symbols.empty()) throw DomainError("entropy_bound: empty symbol stream");
  const auto hist = histogram(symbols);
  const double n = static_cast<double>(symbols.size());
  double h = 0.0;
  for (const auto& [sym, count] : hist) {
    const double p = static_cast<double>(count) / n;
    h -= p * std::log2(p);
  }
  return h;
}

}  // namespace pathbench
