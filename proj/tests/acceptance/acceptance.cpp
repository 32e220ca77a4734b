// SPDX-License-Identifier: Apache-2.0
// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any fails.
// Criterion names given as arguments restrict the run to those.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "doubles.hpp"
#include "oracles.hpp"
#include "paths.hpp"
#include "pathbench/adapters.hpp"
#include "pathbench/bench.hpp"
#include "pathbench/entropy.hpp"
#include "pathbench/error.hpp"
#include "pathbench/extractor.hpp"
#include "pathbench/metrics.hpp"
#include "pathbench/random.hpp"
#include "pathbench/ratecontrol.hpp"
#include "pathbench/refcodec.hpp"
#include "pathbench/report.hpp"
#include "pathbench/runner.hpp"
#include "pathbench/synthetic.hpp"

using namespace pathbench;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

// Collects the first few violations of a criterion.
class Checker {
 public:
  void expect(bool ok, const std::string& what) {
    if (ok) return;
    ++failures_;
    if (failures_ <= 3) notes_.push_back(what);
  }
  Outcome outcome(const std::string& summary) const {
    if (failures_ == 0) return {true, summary};
    std::string d = fmt::format("{} violation(s): ", failures_);
    for (std::size_t i = 0; i < notes_.size(); ++i) d += (i ? "; " : "") + notes_[i];
    return {false, d};
  }

 private:
  std::size_t failures_ = 0;
  std::vector<std::string> notes_;
};

constexpr std::size_t kTile = 224;

const std::vector<Tile>& corpus50() {
  static const auto tiles = synthetic::tissue_corpus(50, kTile, 2024);
  return tiles;
}

const ConvExtractor& extractor() {
  static const ConvExtractor e = seeded_extractor(42);
  return e;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

Outcome metric_identity() {
  Checker c;
  double worst_ms = 1.0, worst_cos = 0.0, worst_deep = 0.0;
  std::size_t taps = 0;
  for (std::uint64_t i = 0; i < 100; ++i) {
    const Tile t = i % 2 ? synthetic::noise_tile(kTile, kTile, 1000 + i) : synthetic::tissue_tile(kTile, kTile, 1000 + i);
    c.expect(std::isinf(psnr(t, t)) && psnr(t, t) > 0, fmt::format("tile {}: psnr not +inf", i));
    const double ms = ms_ssim(t, t);
    worst_ms = std::min(worst_ms, ms);
    c.expect(ms >= 1.0 - 1e-9 && ms <= 1.0, fmt::format("tile {}: ms_ssim {:.12f}", i, ms));
    const FeatureSet f = extractor().extract(t);
    const auto profile = similarity_profile(f, f);
    taps = profile.size();
    c.expect(taps == 6, fmt::format("tile {}: {} taps", i, taps));
    for (const auto& [tap, s] : profile) {
      worst_cos = std::max(worst_cos, std::abs(s - 1.0));
      c.expect(std::abs(s - 1.0) <= 1e-9, fmt::format("tile {} tap {}: cosine {:.12f}", i, tap, s));
    }
    const double d = deep_feature_distance(f, f);
    worst_deep = std::max(worst_deep, d);
    c.expect(d <= 1e-9, fmt::format("tile {}: deep distance {:.3e}", i, d));
  }
  return c.outcome(fmt::format("100 tiles, {} taps; min ms_ssim {:.12f}, max |cos-1| {:.1e}, max deep {:.1e}", taps,
                               worst_ms, worst_cos, worst_deep));
}

Outcome cosine_oracle() {
  Checker c;
  const std::vector<float> x{1, 2, 2}, y{2, 1, 2};
  const double s = cosine_similarity(x, y);
  c.expect(std::abs(s - 8.0 / 9.0) <= 1e-12, fmt::format("(1,2,2)/(2,1,2) = {:.15f}", s));

  // Entries carry 12 significant bits and scalars at most 11, so k * v is exact in float and
  // any drift comes from the similarity itself.
  SplitMix64 rng(7);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.next() % 512;
    std::vector<float> a(n), b(n);
    for (auto& v : a) v = static_cast<float>(static_cast<int>(rng.next() % 4095) - 2047) / 2048.0f;
    for (auto& v : b) v = static_cast<float>(static_cast<int>(rng.next() % 4095) - 2047) / 2048.0f;
    if (std::all_of(a.begin(), a.end(), [](float v) { return v == 0.0f; })) a[0] = 1.0f;
    if (std::all_of(b.begin(), b.end(), [](float v) { return v == 0.0f; })) b[0] = 1.0f;
    const double base = cosine_similarity(a, b);
    for (const float k : {0x1p-10f, 0.75f, 3.0f, 1000.0f, 5000.0f}) {
      for (const float m : {k, 1.0f}) {
        std::vector<float> ka(a), kb(b);
        for (auto& v : ka) v *= k;
        for (auto& v : kb) v *= m;
        const double scaled = cosine_similarity(ka, kb);
        worst = std::max(worst, std::abs(scaled - base));
        c.expect(std::abs(scaled - base) <= 1e-9, fmt::format("n={} k={} drift {:.2e}", n, k, scaled - base));
      }
    }
  }
  const std::vector<float> zero(3, 0.0f);
  bool raised = false;
  try {
    cosine_similarity(zero, x);
  } catch (const DomainError&) {
    raised = true;
  }
  c.expect(raised, "zero vector did not raise DomainError");
  raised = false;
  try {
    cosine_similarity(x, zero);
  } catch (const DomainError&) {
    raised = true;
  }
  c.expect(raised, "zero vector (second operand) did not raise DomainError");
  return c.outcome(fmt::format("8/9 exact to {:.1e}; scale drift max {:.1e}; zero vector raises", std::abs(s - 8.0 / 9.0),
                               worst));
}

Outcome ms_ssim_oracle() {
  Checker c;
  double worst = 0.0;
  for (std::uint64_t i = 0; i < 10; ++i) {
    const Tile a = synthetic::tissue_tile(kTile, kTile, 500 + i);
    Tile b;
    switch (i % 3) {
      case 0: b = synthetic::add_gaussian_noise(a, 4.0 + 3.0 * static_cast<double>(i), 900 + i); break;
      case 1: b = refcodec_decode(refcodec_encode(a, QualityParam(10 + 8 * static_cast<int>(i)))); break;
      default: b = synthetic::noise_tile(kTile, kTile, 700 + i); break;
    }
    const double fast = ms_ssim(a, b), slow = oracle::ms_ssim(a, b);
    worst = std::max(worst, std::abs(fast - slow));
    c.expect(std::abs(fast - slow) <= 1e-6, fmt::format("pair {}: {:.9f} vs oracle {:.9f}", i, fast, slow));
  }
  return c.outcome(fmt::format("10 pairs, max |toolkit - oracle| {:.2e}", worst));
}

std::vector<Symbol> random_stream(SplitMix64& rng, std::size_t index) {
  const std::size_t n = 1 + rng.next() % 4000;
  std::vector<Symbol> s(n);
  switch (index % 4) {
    case 0: {  // uniform over a small alphabet
      const std::uint64_t k = 1 + rng.next() % 64;
      const Symbol base = static_cast<Symbol>(rng.next() % 2000) - 1000;
      for (auto& v : s) v = base + static_cast<Symbol>(rng.next() % k);
      break;
    }
    case 1: {  // two-sided geometric, like quantized coefficients
      const double p = 0.2 + 0.7 * rng.uniform();
      for (auto& v : s) {
        Symbol m = 0;
        while (rng.uniform() > p && m < 5000) ++m;
        v = rng.next() % 2 ? m : -m;
      }
      break;
    }
    case 2: {  // single repeated symbol
      const Symbol v = static_cast<Symbol>(rng.next() % 65536) + kMinSymbol;
      std::fill(s.begin(), s.end(), v);
      break;
    }
    default:  // full range
      for (auto& v : s) v = static_cast<Symbol>(rng.next() % 65536) + kMinSymbol;
  }
  return s;
}

Outcome refcodec_properties() {
  Checker c;
  SplitMix64 rng(31337);
  double worst_gap = -1e9;
  for (std::size_t i = 0; i < 1000; ++i) {
    const auto s = random_stream(rng, i);
    const Bytes enc = entropy_encode(s);
    c.expect(entropy_decode(enc) == s, fmt::format("stream {}: round trip differs", i));
    const double n = static_cast<double>(s.size());
    const double h = oracle::entropy(s);
    const StreamCost cost = entropy_cost(s);
    const double payload = static_cast<double>(cost.payload_bits) / n;
    const double total = static_cast<double>(cost.payload_bits + cost.header_bits) / n;
    const double upper = h + 1.0 + static_cast<double>(cost.header_bits) / n;
    worst_gap = std::max(worst_gap, payload - h);
    c.expect(payload >= h - 1e-9, fmt::format("stream {}: {:.6f} bits/symbol below entropy {:.6f}", i, payload, h));
    c.expect(total <= upper + 1e-9, fmt::format("stream {}: {:.6f} bits/symbol above {:.6f}", i, total, upper));
    c.expect(enc.size() * 8 >= cost.header_bits + cost.payload_bits && enc.size() * 8 < cost.header_bits + cost.payload_bits + 8,
             fmt::format("stream {}: serialized size disagrees with cost", i));
  }

  std::string errors;
  for (const int q : {50, 80, 95}) {
    const QualityParam qp(q);
    const int bound = 8 * qp.step() / 2 + 2;
    int worst = 0;
    for (std::size_t i = 0; i < 20; ++i) {
      const Tile& t = i < 15 ? corpus50()[i] : synthetic::noise_tile(96, 80, 40 + i);
      const Tile d = refcodec_decode(refcodec_encode(t, qp));
      for (std::size_t k = 0; k < t.pixels().size(); ++k) worst = std::max(worst, std::abs(int(t.pixels()[k]) - int(d.pixels()[k])));
    }
    c.expect(worst <= bound, fmt::format("q{}: max channel error {} > {}", q, worst, bound));
    errors += fmt::format(" q{} {}<={}", q, worst, bound);
  }

  for (std::size_t i = 0; i < 5; ++i) {
    const Tile& t = corpus50()[i];
    for (const bool sub : {false, true}) {
      const auto a = refcodec_encode(t, QualityParam(75), {sub}), b = refcodec_encode(t, QualityParam(75), {sub});
      c.expect(a.bytes == b.bytes, fmt::format("tile {} subsample={}: bytes differ between runs", i, sub));
    }
  }
  return c.outcome(fmt::format("1000 streams round-trip, max payload-H {:.3f} bits; errors{}; deterministic", worst_gap,
                               errors));
}

Outcome monotonicity() {
  Checker c;
  RefCodec codec;
  const auto& corpus = corpus50();
  double prev_bpp = -1.0, prev_psnr = -1.0;
  double first_bpp = 0, last_bpp = 0, first_psnr = 0, last_psnr = 0;
  for (int q = 10; q <= 100; ++q) {
    std::vector<double> bpp, ps;
    for (const auto& t : corpus) {
      const auto blob = codec.encode(t, q);
      bpp.push_back(blob.bpp());
      const double p = psnr(t, codec.decode(blob));
      ps.push_back(std::isinf(p) ? kPsnrCapDb : p);
    }
    const double b = mean_of(bpp), p = mean_of(ps);
    c.expect(b >= prev_bpp, fmt::format("bpp drops at q={}: {:.6f} < {:.6f}", q, b, prev_bpp));
    c.expect(p >= prev_psnr, fmt::format("psnr drops at q={}: {:.6f} < {:.6f}", q, p, prev_psnr));
    if (q == 10) first_bpp = b, first_psnr = p;
    last_bpp = b, last_psnr = p;
    prev_bpp = b;
    prev_psnr = p;
  }
  return c.outcome(fmt::format("q=10..100 on 50 tiles: bpp {:.3f}->{:.3f}, psnr {:.2f}->{:.2f} dB", first_bpp, last_bpp,
                               first_psnr, last_psnr));
}

Outcome rate_targeting() {
  Checker c;
  RefCodec codec;
  const auto& corpus = corpus50();
  std::string detail;
  for (const double target : {0.25, 0.5, 1.0, 1.75}) {
    const auto r = target_bpp(codec, corpus, target);
    const bool within = std::abs(r.achieved_bpp - target) <= 0.05 * target;
    if (r.flags.target_unreachable) {
      // Flag is honest only if the target really lies outside the codec's range.
      const double lo = mean_bpp(codec, corpus, 1), hi = mean_bpp(codec, corpus, 100);
      c.expect(target < lo || target > hi, fmt::format("target {} flagged unreachable inside [{:.3f}, {:.3f}]", target, lo, hi));
    } else {
      c.expect(within, fmt::format("target {}: achieved {:.4f} at q={} flags '{}'", target, r.achieved_bpp, r.quality,
                                   r.flags.to_string()));
    }
    detail += fmt::format(" {}->{:.4f}@q{}", target, r.achieved_bpp, r.quality);
  }
  pathbench::testing::LinearCodec linear;
  const auto r = target_bpp(linear, corpus, 0.5);
  c.expect(r.quality == 50.0, fmt::format("linear codec converged to q={}", r.quality));
  detail += fmt::format("; linear q={}", r.quality);
  return c.outcome("refcodec" + detail);
}

Outcome degradation_ordering() {
  Checker c;
  RefCodec codec;
  const auto& corpus = corpus50();
  SweepOptions opt;
  opt.metrics = {true, true, true, true};
  opt.extractor = &extractor();
  const auto hi = evaluate_at_quality(codec, corpus, corpus, 95, opt);
  const auto lo = evaluate_at_quality(codec, corpus, corpus, 30, opt);
  std::string detail;
  for (const auto& [name, agg] : hi.metrics) {
    const Aggregate* other = lo.metric(name);
    if (!other) {
      c.expect(false, "missing " + name + " at q30");
      continue;
    }
    const bool ok = name == "deep_distance" ? agg.mean < other->mean : agg.mean > other->mean;
    c.expect(ok, fmt::format("{}: q95 {:.6f} vs q30 {:.6f}", name, agg.mean, other->mean));
    if (name == "psnr" || name == "ms_ssim" || name == "deep_distance" || name == "cosine:fc")
      detail += fmt::format(" {} {:.4f}/{:.4f}", name, agg.mean, other->mean);
  }
  c.expect(hi.metrics.size() == 3 + 6, fmt::format("{} metric columns, expected 9", hi.metrics.size()));
  return c.outcome("q95/q30:" + detail);
}

Outcome generation_loss() {
  Checker c;
  auto codec = std::make_shared<RefCodec>();
  const ChainSpec once{"q80", {{codec, 80.0, std::nullopt}}};
  const ChainSpec twice{"q80-q80", {{codec, 80.0, std::nullopt}, {codec, 80.0, std::nullopt}}};
  std::vector<double> p1, p2;
  for (const auto& t : corpus50()) {
    p1.push_back(psnr(t, chain_compress(once, t).tile));
    p2.push_back(psnr(t, chain_compress(twice, t).tile));
  }
  const double a = mean_of(p1), b = mean_of(p2);
  c.expect(b <= a, fmt::format("two-pass {:.6f} dB > single-pass {:.6f} dB", b, a));
  return c.outcome(fmt::format("single {:.4f} dB, two-pass {:.4f} dB", a, b));
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome end_to_end_determinism() {
  Checker c;
  const char* config = R"({
    "name": "determinism",
    "corpus": {"synthetic": {"count": 6, "size": 224, "seed": 77}},
    "codecs": [{"kind": "refcodec"}, {"kind": "refcodec", "subsample": true}],
    "chains": [{"name": "q80-then-refcodec", "codec": "refcodec", "prefix": [{"codec": "refcodec", "quality": 80}]}],
    "targets": [0.5, 1.0],
    "metrics": ["psnr", "ms_ssim", "deep_distance", "cosine"],
    "extractor": {"kind": "seeded", "seed": 42},
    "rate": {"sample": 4},
    "seed": 5
  })";
  const fs::path root = fs::temp_directory_path() / "pathbench-acceptance-determinism";
  fs::remove_all(root);
  std::string csv[2];
  for (int run = 0; run < 2; ++run) {
    ExperimentPlan plan = load_config(config);
    plan.jobs = run == 0 ? 1 : 2;
    const auto bundle = run_experiment(plan, Scenarios{true, false, false});
    c.expect(!bundle.partial(), fmt::format("run {} had failures", run));
    const fs::path dir = root / fmt::format("run{}", run);
    emit_reports(bundle, dir);
    csv[run] = read_text(dir / "rd_points.csv");
  }
  c.expect(!csv[0].empty() && csv[0] == csv[1], "rd_points.csv differs between runs");
  const auto rows = static_cast<std::size_t>(std::count(csv[0].begin(), csv[0].end(), '\n'));
  return c.outcome(fmt::format("rd_points.csv byte-identical across two runs ({} lines, jobs 1 vs 2)", rows));
}

Outcome timing_harness() {
  Checker c;
  const auto corpus = synthetic::tissue_corpus(8, 128, 3);
  double worst = 0.0;
  for (const std::size_t warmup : {0u, 1u, 3u}) {
    pathbench::testing::CountingCodec codec;
    const std::size_t reps = 4;
    const auto enc = time_encode(codec, corpus, 80, warmup, reps);
    const auto dec = time_decode(codec, enc.blobs, warmup, reps);
    for (const auto* r : {&enc.report, &dec}) {
      const double expect = static_cast<double>(r->tile_count * r->per_rep_seconds.size()) / r->total_seconds;
      const double rel = std::abs(r->tiles_per_second - expect) / expect;
      worst = std::max(worst, rel);
      c.expect(rel <= 1e-9, fmt::format("{} tiles_per_second off by {:.2e}", to_string(r->phase), rel));
      double sum = 0.0;
      for (double s : r->per_rep_seconds) sum += s;
      c.expect(std::abs(sum - r->total_seconds) <= 1e-12 * r->total_seconds, "total != sum(per_rep)");
      c.expect(r->per_rep_seconds.size() == reps, "per_rep length != reps");
    }
    c.expect(codec.encodes == corpus.size() * (warmup + reps),
             fmt::format("warmup {}: {} encodes, expected {}", warmup, codec.encodes.load(), corpus.size() * (warmup + reps)));
    c.expect(codec.decodes == corpus.size() * (warmup + reps),
             fmt::format("warmup {}: {} decodes, expected {}", warmup, codec.decodes.load(), corpus.size() * (warmup + reps)));
  }
  return c.outcome(fmt::format("accounting identity max rel error {:.1e}; invocations = n*(warmup+reps)", worst));
}

Outcome adapter_conformance() {
  Checker c;
  const auto good = conformance_check(pathbench::testing::fixture("identity"));
  c.expect(good.passed(), "identity fixture failed conformance");
  const auto bad = conformance_check(pathbench::testing::fixture("broken-decoder"));
  std::vector<std::string> failed;
  for (const auto& e : bad.entries)
    if (e.status == CheckStatus::Fail) failed.push_back(e.check);
  c.expect(failed == std::vector<std::string>{"roundtrip"},
           fmt::format("broken-decoder failed [{}], expected [roundtrip]", fmt::join(failed, ",")));
  return c.outcome(fmt::format("identity passes {} checks; broken-decoder fails only [{}]", good.entries.size(),
                               fmt::join(failed, ",")));
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::string> only(argv + 1, argv + argc);
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"metric-identity", metric_identity},
      {"cosine-oracle", cosine_oracle},
      {"ms-ssim-oracle", ms_ssim_oracle},
      {"refcodec-entropy-error-determinism", refcodec_properties},
      {"rate-quality-monotonicity", monotonicity},
      {"rate-targeting", rate_targeting},
      {"degradation-ordering", degradation_ordering},
      {"generation-loss", generation_loss},
      {"end-to-end-determinism", end_to_end_determinism},
      {"timing-harness", timing_harness},
      {"adapter-conformance", adapter_conformance},
  };
  std::size_t failed = 0, ran = 0;
  for (const auto& [name, run] : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), name) == only.end()) continue;
    ++ran;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!o.pass) ++failed;
    fmt::print("{} {:<36} {:7.1f}s  {}\n", o.pass ? "PASS" : "FAIL", name, secs, o.detail);
    std::fflush(stdout);
  }
  fmt::print("{} of {} criteria passed\n", ran - failed, ran);
  return failed == 0 ? 0 : 1;
}
