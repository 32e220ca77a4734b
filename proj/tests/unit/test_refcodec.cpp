// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <numeric>

#include "oracles.hpp"
#include "pathbench/error.hpp"
#include "pathbench/metrics.hpp"
#include "pathbench/random.hpp"
#include "pathbench/refcodec.hpp"
#include "pathbench/synthetic.hpp"

using namespace pathbench;

namespace {

Block8x8 random_block(SplitMix64& rng, double lo = -128, double hi = 127) {
  Block8x8 b{};
  for (auto& v : b) v = rng.uniform(lo, hi);
  return b;
}

// Textbook DCT-II with explicit cosines.
Block8x8 naive_dct(const Block8x8& x) {
  Block8x8 out{};
  for (int u = 0; u < 8; ++u)
    for (int v = 0; v < 8; ++v) {
      double s = 0;
      for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 8; ++j)
          s += x[i * 8 + j] * std::cos((2 * i + 1) * u * std::numbers::pi / 16) *
               std::cos((2 * j + 1) * v * std::numbers::pi / 16);
      const double cu = u == 0 ? std::sqrt(1.0 / 8) : std::sqrt(2.0 / 8);
      const double cv = v == 0 ? std::sqrt(1.0 / 8) : std::sqrt(2.0 / 8);
      out[u * 8 + v] = cu * cv * s;
    }
  return out;
}

std::vector<Symbol> random_stream(SplitMix64& rng) {
  const std::size_t n = 1 + rng.below(3000);
  const std::size_t alphabet = 1 + rng.below(200);
  std::vector<Symbol> s(n);
  for (auto& v : s) {
    // skewed: small magnitudes dominate, like quantized coefficients
    const double u = rng.uniform();
    v = static_cast<Symbol>(std::floor(u * u * static_cast<double>(alphabet))) - static_cast<Symbol>(alphabet / 2);
  }
  return s;
}

int max_channel_error(const Tile& a, const Tile& b) {
  int worst = 0;
  for (std::size_t i = 0; i < a.pixels().size(); ++i)
    worst = std::max(worst, std::abs(int(a.pixels()[i]) - int(b.pixels()[i])));
  return worst;
}

}  // namespace

TEST(Dct, ConstantBlock) {
  Block8x8 b;
  b.fill(10.0);
  const auto c = dct2_8x8(b);
  EXPECT_NEAR(c[0], 80.0, 1e-10);
  for (std::size_t i = 1; i < 64; ++i) EXPECT_NEAR(c[i], 0.0, 1e-10);
}

TEST(Dct, MatchesTextbookFormula) {
  SplitMix64 rng(3);
  for (int t = 0; t < 20; ++t) {
    const auto b = random_block(rng);
    const auto fast = dct2_8x8(b), slow = naive_dct(b);
    for (std::size_t i = 0; i < 64; ++i) EXPECT_NEAR(fast[i], slow[i], 1e-9);
  }
}

TEST(Dct, InverseAndParseval) {
  SplitMix64 rng(4);
  for (int t = 0; t < 100; ++t) {
    const auto b = random_block(rng);
    const auto c = dct2_8x8(b);
    const auto back = idct2_8x8(c);
    double e_in = 0, e_out = 0;
    for (std::size_t i = 0; i < 64; ++i) {
      EXPECT_NEAR(back[i], b[i], 1e-10);
      e_in += b[i] * b[i];
      e_out += c[i] * c[i];
    }
    EXPECT_NEAR(e_in, e_out, 1e-8 * std::max(1.0, e_in));
  }
}

TEST(Quality, ScaleAndStep) {
  EXPECT_EQ(QualityParam(100).step(), 1);
  EXPECT_DOUBLE_EQ(QualityParam(100).scale(), 0.0);
  EXPECT_DOUBLE_EQ(QualityParam(50).scale(), 100.0);
  EXPECT_EQ(QualityParam(50).step(), 16);
  EXPECT_DOUBLE_EQ(QualityParam(25).scale(), 200.0);
  EXPECT_EQ(QualityParam(25).step(), 32);
  EXPECT_EQ(QualityParam(1).step(), 800);
  EXPECT_EQ(QualityParam(90).step(), 3);
  EXPECT_NEAR(QualityParam(30).scale(), 5000.0 / 30.0, 1e-12);
  EXPECT_THROW(QualityParam(0), DomainError);
  EXPECT_THROW(QualityParam(101), DomainError);
}

TEST(Quality, StepNonIncreasing) {
  for (int q = 2; q <= 100; ++q) EXPECT_LE(QualityParam(q).step(), QualityParam(q - 1).step()) << q;
}

TEST(Quantize, PureRoundingAtFullQuality) {
  Block8x8 c{};
  c[0] = 2.4;
  c[5] = -3.6;
  c[63] = 0.5;
  const auto l = quantize(c, QualityParam(100));
  EXPECT_EQ(l[0], 2);
  EXPECT_EQ(l[5], -4);
  EXPECT_EQ(l[63], 1);
  const auto d = dequantize(l, QualityParam(100));
  EXPECT_DOUBLE_EQ(d[5], -4.0);
}

TEST(Quantize, ZeroBlockStaysZero) {
  for (int q : {1, 30, 50, 99}) {
    const auto l = quantize(Block8x8{}, QualityParam(q));
    EXPECT_TRUE(std::all_of(l.begin(), l.end(), [](auto v) { return v == 0; }));
  }
}

TEST(Zigzag, OrderAndInverse) {
  QuantBlock b{};
  b[1] = 1;  // row 0, column 1
  const auto z = zigzag(b);
  EXPECT_EQ(z.size(), 64u);
  EXPECT_EQ(z[1], 1);
  QuantBlock c{};
  c[8] = 1;  // row 1, column 0
  EXPECT_EQ(zigzag(c)[2], 1);
  EXPECT_EQ(kZigzagOrder[63], 63);
  SplitMix64 rng(8);
  for (int t = 0; t < 50; ++t) {
    QuantBlock r{};
    for (auto& v : r) v = static_cast<std::int32_t>(rng.below(100)) - 50;
    EXPECT_EQ(unzigzag(zigzag(r)), r);
  }
  std::array<bool, 64> seen{};
  for (auto i : kZigzagOrder) seen[i] = true;
  EXPECT_TRUE(std::all_of(seen.begin(), seen.end(), [](bool v) { return v; }));
}

TEST(Entropy, BoundExamples) {
  EXPECT_DOUBLE_EQ(entropy_bound(std::vector<Symbol>(10, 3)), 0.0);
  EXPECT_NEAR(entropy_bound(std::vector<Symbol>{0, 1, 2, 3}), 2.0, 1e-12);
  EXPECT_NEAR(entropy_bound(std::vector<Symbol>{7, 7, 7, -2}), 0.8113, 1e-4);
  EXPECT_THROW(entropy_bound(std::vector<Symbol>{}), DomainError);
}

TEST(Entropy, SingleSymbolHasNoPayload) {
  const std::vector<Symbol> s(5000, -4);
  const auto cost = entropy_cost(s);
  EXPECT_EQ(cost.payload_bits, 0u);
  const Bytes enc = entropy_encode(s);
  EXPECT_LT(enc.size(), 16u);
  EXPECT_EQ(entropy_decode(enc), s);
}

TEST(Entropy, UniformFourSymbols) {
  std::vector<Symbol> s;
  for (int i = 0; i < 1000; ++i) s.push_back(i % 4);
  const auto cost = entropy_cost(s);
  EXPECT_GE(static_cast<double>(cost.payload_bits) / s.size(), 2.0);
  EXPECT_EQ(entropy_decode(entropy_encode(s)), s);
}

TEST(Entropy, RoundTripAndRateBounds) {
  SplitMix64 rng(21);
  for (int t = 0; t < 200; ++t) {
    const auto s = random_stream(rng);
    const Bytes enc = entropy_encode(s);
    std::size_t offset = 0;
    EXPECT_EQ(entropy_decode(enc, offset), s);
    EXPECT_EQ(offset, enc.size());
    const auto cost = entropy_cost(s);
    const double n = static_cast<double>(s.size());
    const double h = oracle::entropy(s);
    EXPECT_NEAR(entropy_bound(s), h, 1e-12);
    const double rate = static_cast<double>(cost.payload_bits) / n;
    EXPECT_GE(rate, h - 1e-9);
    EXPECT_LE(rate, h + 1.0 + static_cast<double>(cost.header_bits) / n + 1e-9);
  }
}

TEST(Entropy, Deterministic) {
  SplitMix64 rng(5);
  const auto s = random_stream(rng);
  EXPECT_EQ(entropy_encode(s), entropy_encode(s));
}

TEST(Entropy, ConcatenatedStreams) {
  SplitMix64 rng(6);
  const auto a = random_stream(rng), b = random_stream(rng);
  Bytes buf;
  entropy_encode_into(a, buf);
  entropy_encode_into(b, buf);
  std::size_t off = 0;
  EXPECT_EQ(entropy_decode(buf, off), a);
  EXPECT_EQ(entropy_decode(buf, off), b);
  EXPECT_EQ(off, buf.size());
}

TEST(Entropy, RejectsOutOfRangeAndHugeAlphabets) {
  EXPECT_THROW(entropy_encode(std::vector<Symbol>{40000}), DomainError);
  std::vector<Symbol> many(30000);
  std::iota(many.begin(), many.end(), -15000);
  EXPECT_THROW(entropy_encode(many), DomainError);
}

TEST(Entropy, CorruptStreams) {
  std::vector<Symbol> s{1, 2, 3, 1, 1, 2};
  Bytes enc = entropy_encode(s);
  Bytes truncated(enc.begin(), enc.end() - 1);
  EXPECT_THROW(entropy_decode(truncated), FormatError);
  Bytes header_only(enc.begin(), enc.begin() + 5);
  EXPECT_THROW(entropy_decode(header_only), FormatError);
}

TEST(RefCodec, ContainerLayout) {
  const Tile t = synthetic::tissue_tile(40, 24, 1);
  const auto blob = refcodec_encode(t, QualityParam(75));
  ASSERT_GE(blob.bytes.size(), 10u);
  EXPECT_TRUE(std::equal(kRefCodecMagic.begin(), kRefCodecMagic.end(), blob.bytes.begin()));
  EXPECT_EQ(blob.bytes[4] | (blob.bytes[5] << 8), 40);
  EXPECT_EQ(blob.bytes[6] | (blob.bytes[7] << 8), 24);
  EXPECT_EQ(blob.bytes[8], 75);
  EXPECT_EQ(blob.bytes[9], 0);
  EXPECT_EQ(refcodec_encode(t, QualityParam(75), {true}).bytes[9], 1);
  EXPECT_EQ(blob.source_width, 40u);
  EXPECT_DOUBLE_EQ(blob.bpp(), 8.0 * blob.bytes.size() / (40.0 * 24.0));
}

TEST(RefCodec, Deterministic) {
  const Tile t = synthetic::tissue_tile(224, 224, 9);
  EXPECT_EQ(refcodec_encode(t, QualityParam(80)).bytes, refcodec_encode(t, QualityParam(80)).bytes);
}

TEST(RefCodec, ErrorBoundOddSizes) {
  SplitMix64 rng(77);
  for (int t = 0; t < 10; ++t) {
    const std::size_t w = 1 + rng.below(50), h = 1 + rng.below(50);
    const Tile tile = synthetic::tissue_tile(w, h, rng.next());
    for (int q : {50, 80, 95}) {
      const QualityParam qp(q);
      const Tile back = refcodec_decode(refcodec_encode(tile, qp));
      ASSERT_EQ(back.width(), w);
      ASSERT_EQ(back.height(), h);
      EXPECT_LE(max_channel_error(tile, back), 8 * qp.step() / 2 + 2) << w << "x" << h << " q" << q;
    }
  }
}

TEST(RefCodec, SubsampledRoundTrip) {
  const Tile t = synthetic::tissue_tile(33, 17, 4);
  const auto blob = refcodec_encode(t, QualityParam(90), {true});
  const Tile back = refcodec_decode(blob);
  EXPECT_EQ(back.width(), 33u);
  EXPECT_GT(psnr(t, back), 25.0);
  EXPECT_LT(blob.bytes.size(), refcodec_encode(t, QualityParam(90)).bytes.size());
}

TEST(RefCodec, BppBoundAtQ80) {
  const Tile t = synthetic::tissue_tile(224, 224, 12);
  const double bpp = refcodec_encode(t, QualityParam(80)).bpp();
  EXPECT_GT(bpp, 0.0);
  EXPECT_LT(bpp, 8.0);
}

TEST(RefCodec, HigherQualityHigherPsnr) {
  const auto corpus = synthetic::tissue_corpus(50, 64, 31);
  double hi = 0, lo = 0;
  for (const auto& t : corpus) {
    hi += psnr(t, refcodec_decode(refcodec_encode(t, QualityParam(95))));
    lo += psnr(t, refcodec_decode(refcodec_encode(t, QualityParam(20))));
  }
  EXPECT_GT(hi, lo);
}

TEST(RefCodec, RejectsMalformedContainers) {
  const Tile t = synthetic::tissue_tile(16, 16, 2);
  Bytes good = refcodec_encode(t, QualityParam(60)).bytes;
  Bytes bad_magic = good;
  bad_magic[0] = 'X';
  EXPECT_THROW(refcodec_decode(bad_magic), FormatError);
  Bytes truncated(good.begin(), good.begin() + static_cast<std::ptrdiff_t>(good.size() / 2));
  EXPECT_THROW(refcodec_decode(truncated), FormatError);
  Bytes trailing = good;
  trailing.push_back(0);
  EXPECT_THROW(refcodec_decode(trailing), FormatError);
}

TEST(RefCodec, CodecInterface) {
  const RefCodec codec;
  EXPECT_EQ(codec.info().name, "refcodec");
  EXPECT_EQ(codec.info().quality_kind, QualityKind::Int);
  const Tile t = synthetic::tissue_tile(24, 24, 5);
  const auto blob = codec.encode(t, 79.6);
  EXPECT_DOUBLE_EQ(blob.quality, 80.0);
  EXPECT_EQ(codec.decode(blob).width(), 24u);
  EXPECT_EQ(RefCodec({true}).info().name, "refcodec-420");
}
