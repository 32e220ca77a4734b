// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "pathbench/adapters.hpp"
#include "pathbench/error.hpp"
#include "pathbench/extractor.hpp"
#include "pathbench/image.hpp"
#include "pathbench/metrics.hpp"
#include "pathbench/ratecontrol.hpp"
#include "pathbench/refcodec.hpp"
#include "pathbench/report.hpp"
#include "pathbench/runner.hpp"
#include "pathbench/tiling.hpp"

namespace fs = std::filesystem;
using namespace pathbench;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  bool dump_raw = false;
  std::size_t jobs = 0;
};

struct CodecArgs {
  std::string codec = "refcodec";
  std::vector<std::string> adapter_args;
  double timeout = kDefaultAdapterTimeoutSeconds;
};

void add_codec_options(CLI::App* app, CodecArgs& c) {
  app->add_option("--codec", c.codec, "refcodec, refcodec-420, or the path of an adapter executable");
  app->add_option("--adapter-arg", c.adapter_args, "extra argument passed to the adapter before the subcommand");
  app->add_option("--timeout", c.timeout, "adapter timeout in seconds")->check(CLI::PositiveNumber);
}

AdapterHandle adapter_handle(const std::string& exe, const std::vector<std::string>& args, double timeout) {
  if (!fs::exists(exe)) throw ValidationError("adapter executable '" + exe + "' does not exist");
  AdapterHandle h{exe, args, timeout};
  h.validate();
  return h;
}

std::unique_ptr<Codec> make_codec(const CodecArgs& c) {
  if (c.codec == "refcodec") return std::make_unique<RefCodec>();
  if (c.codec == "refcodec-420") return std::make_unique<RefCodec>(RefCodecOptions{true});
  return std::make_unique<AdapterCodec>(adapter_handle(c.codec, c.adapter_args, c.timeout));
}

ExperimentPlan plan_from(const Globals& g) {
  if (g.config.empty()) throw ValidationError("--config is required for this subcommand");
  ExperimentPlan plan = load_config_file(g.config);
  if (g.seed) plan.seed = *g.seed;
  if (!g.out.empty()) plan.output = g.out;
  if (g.jobs > 0) plan.jobs = g.jobs;
  if (g.dump_raw) plan.dump_raw = true;
  return plan;
}

int emit(const ReportBundle& bundle, const fs::path& dir, bool dump_raw) {
  const auto files = emit_reports(bundle, dir, dump_raw);
  for (const auto& f : files) std::cout << f.string() << "\n";
  for (const auto& f : bundle.failures) {
    std::cerr << fmt::format("failed: {} {} @ {} bpp: {}\n", f.scenario, f.codec_id, f.target_bpp, f.diagnostic);
  }
  return bundle.partial() ? kExitRuntime : kExitOk;
}

int run_scenarios(const Globals& g, const Scenarios& s) {
  const ExperimentPlan plan = plan_from(g);
  const ReportBundle bundle = run_experiment(plan, s);
  return emit(bundle, plan.output, plan.dump_raw);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rate-distortion and feature-similarity benchmark for pathology image codecs", "pathbench"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", kToolkitVersion);
  Globals g;
  app.add_option("--config", g.config, "experiment config (JSON)");
  app.add_option("--seed", g.seed, "override the config seed");
  app.add_option("--out", g.out, "output directory or file");
  app.add_flag("--dump-raw", g.dump_raw, "also write per-tile values (raw.csv)");
  app.add_option("--jobs", g.jobs, "worker threads")->check(CLI::PositiveNumber);

  // tile
  auto* tile = app.add_subcommand("tile", "sample foreground tiles from a slide image");
  std::string slide, mask_path;
  std::size_t size = kDefaultTileSize, count = 16;
  double coverage = kDefaultMinCoverage;
  int threshold = kDefaultWhiteThreshold;
  tile->add_option("slide", slide, "slide raster (PPM)")->required();
  tile->add_option("--mask", mask_path, "precomputed mask (PGM); default thresholds the slide");
  tile->add_option("--size", size)->check(CLI::PositiveNumber);
  tile->add_option("--count", count)->check(CLI::PositiveNumber);
  tile->add_option("--min-coverage", coverage)->check(CLI::Range(0.0, 1.0));
  tile->add_option("--threshold", threshold)->check(CLI::Range(0, 256));

  // compress / decompress
  auto* compress = app.add_subcommand("compress", "encode one PPM tile");
  CodecArgs compress_codec;
  std::string input, output;
  std::optional<double> quality, target;
  add_codec_options(compress, compress_codec);
  compress->add_option("input", input)->required();
  compress->add_option("--quality", quality);
  compress->add_option("--target-bpp", target, "search quality for this bpp on the single tile");

  auto* decompress = app.add_subcommand("decompress", "decode a blob to PPM");
  CodecArgs decompress_codec;
  add_codec_options(decompress, decompress_codec);
  decompress->add_option("input", input)->required();

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "metrics for a (reference, test) PPM pair");
  std::string ref_path, test_path;
  std::vector<std::string> metric_names{"psnr", "ms_ssim"};
  std::uint64_t extractor_seed = 42;
  evaluate->add_option("reference", ref_path)->required();
  evaluate->add_option("test", test_path)->required();
  evaluate->add_option("--metrics", metric_names, "psnr, ms_ssim, deep_distance, cosine")->delimiter(',');
  evaluate->add_option("--extractor-seed", extractor_seed);

  auto* sweep_cmd = app.add_subcommand("sweep", "rate-distortion sweep over the configured codecs and chains");
  auto* similarity_cmd = app.add_subcommand("similarity", "feature similarity at the configured fixed bpp");
  auto* time_cmd = app.add_subcommand("time", "encode/decode timing");

  auto* report = app.add_subcommand("report", "re-emit CSV/JSON/SVG reports from a bundle.json");
  std::string bundle_path;
  report->add_option("bundle", bundle_path)->required()->check(CLI::ExistingFile);

  auto* conformance = app.add_subcommand("conformance", "check an adapter executable against the protocol");
  std::string exe;
  std::vector<std::string> exe_args;
  conformance->add_option("executable", exe)->required();
  conformance->add_option("--adapter-arg", exe_args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (tile->parsed()) {
      const Tile image = read_pnm_file(slide);
      const Mask mask = mask_path.empty() ? foreground_mask(image, threshold) : read_pgm_mask(read_file(mask_path));
      const SampleResult r = sample_tiles(image, mask, size, count, coverage, g.seed.value_or(0));
      const fs::path dir = g.out.empty() ? fs::path("tiles") : fs::path(g.out);
      fs::create_directories(dir);
      const std::string stem = fs::path(slide).stem().string();
      for (const auto& o : r.origins) {
        const fs::path p = dir / fmt::format("{}_{}_{}.ppm", stem, o.x, o.y);
        write_pnm_file(p.string(), image.crop(o.x, o.y, size, size));
        std::cout << p.string() << "\n";
      }
      if (r.shortfall) std::cerr << fmt::format("shortfall: placed {} of {} tiles\n", r.origins.size(), count);
      return kExitOk;
    }
    if (compress->parsed()) {
      if (quality.has_value() == target.has_value()) throw ValidationError("give exactly one of --quality, --target-bpp");
      const auto codec = make_codec(compress_codec);
      const Tile t = read_pnm_file(input);
      double q = quality.value_or(0.0);
      if (target) {
        const Tile one[] = {t};
        const auto rt = target_bpp(*codec, one, *target);
        q = rt.quality;
        if (!rt.flags.to_string().empty()) std::cerr << "flags: " << rt.flags.to_string() << "\n";
      }
      const CompressedBlob blob = codec->encode(t, q);
      write_file(g.out.empty() ? input + ".pbc" : g.out, blob.bytes);
      std::cout << fmt::format("quality={} bpp={:.6f} bytes={}\n", q, blob.bpp(), blob.bytes.size());
      return kExitOk;
    }
    if (decompress->parsed()) {
      const auto codec = make_codec(decompress_codec);
      CompressedBlob blob;
      blob.bytes = read_file(input);
      blob.codec_id = codec->info().name;
      const Tile t = codec->decode(blob);
      write_pnm_file(g.out.empty() ? input + ".ppm" : g.out, t);
      return kExitOk;
    }
    if (evaluate->parsed()) {
      MetricSelection sel{false, false, false, false};
      for (const auto& m : metric_names) {
        if (m == "psnr") sel.psnr = true;
        else if (m == "ms_ssim") sel.ms_ssim = true;
        else if (m == "deep_distance") sel.deep_distance = true;
        else if (m == "cosine") sel.cosine = true;
        else throw ValidationError("unknown metric '" + m + "'");
      }
      const Tile a = read_pnm_file(ref_path), b = read_pnm_file(test_path);
      std::optional<ConvExtractor> extractor;
      if (sel.needs_features()) extractor = seeded_extractor(extractor_seed);
      const MetricReport r = evaluate_pair(a, b, sel, extractor ? &*extractor : nullptr);
      nlohmann::json j;
      if (r.psnr) j["psnr"] = std::isinf(*r.psnr) ? nlohmann::json("inf") : nlohmann::json(*r.psnr);
      if (r.ms_ssim) j["ms_ssim"] = *r.ms_ssim;
      if (r.deep_distance) j["deep_distance"] = *r.deep_distance;
      if (r.cosine_per_tap) {
        for (const auto& [tap, v] : *r.cosine_per_tap) j["cosine"][tap] = v;
      }
      std::cout << j.dump(2) << "\n";
      return kExitOk;
    }
    if (sweep_cmd->parsed()) return run_scenarios(g, {true, false, false});
    if (similarity_cmd->parsed()) return run_scenarios(g, {false, true, false});
    if (time_cmd->parsed()) return run_scenarios(g, {false, false, true});
    if (report->parsed()) {
      const Bytes data = read_file(bundle_path);
      const ReportBundle bundle = bundle_from_json(std::string(data.begin(), data.end()));
      return emit(bundle, g.out.empty() ? fs::path(bundle_path).parent_path() : fs::path(g.out), g.dump_raw);
    }
    if (conformance->parsed()) {
      const ConformanceReport r = conformance_check(adapter_handle(exe, exe_args, kDefaultAdapterTimeoutSeconds));
      for (const auto& e : r.entries) {
        std::cout << fmt::format("{:<14} {:<6} {}\n", e.check, to_string(e.status), e.detail);
      }
      return r.passed() ? kExitOk : kExitRuntime;
    }
  } catch (const ValidationError& e) {
    std::cerr << "pathbench: " << e.what() << "\n";
    return kExitValidation;
  } catch (const ParseError& e) {
    std::cerr << "pathbench: " << e.what() << "\n";
    return kExitValidation;
  } catch (const FormatError& e) {
    std::cerr << "pathbench: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "pathbench: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}
