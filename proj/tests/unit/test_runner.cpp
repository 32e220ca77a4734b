// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "paths.hpp"
#include "pathbench/error.hpp"
#include "pathbench/report.hpp"
#include "pathbench/runner.hpp"
#include "pathbench/synthetic.hpp"

using namespace pathbench;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const char* kMinimal = R"({"corpus": {"synthetic": {"count": 2, "size": 32}}, "codecs": [{"kind": "refcodec"}]})";

std::string validation_message(const std::string& text) {
  try {
    load_config(text);
  } catch (const ValidationError& e) {
    return e.what();
  }
  return {};
}

json minimal() { return json::parse(kMinimal); }

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("pathbench-test-runner-" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t line_count(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

std::size_t count_of(const std::string& s, const std::string& needle) {
  std::size_t n = 0;
  for (auto p = s.find(needle); p != std::string::npos; p = s.find(needle, p + 1)) ++n;
  return n;
}

ExperimentPlan small_plan() {
  ExperimentPlan plan = load_config(kMinimal);
  plan.allow_scale_reduction = true;
  return plan;
}

}  // namespace

TEST(Config, MinimalDefaults) {
  const auto plan = load_config(kMinimal);
  EXPECT_EQ(plan.name, "experiment");
  EXPECT_EQ(plan.corpus.kind, CorpusSource::Kind::Synthetic);
  EXPECT_EQ(plan.corpus.synthetic_count, 2u);
  ASSERT_EQ(plan.codecs.size(), 1u);
  EXPECT_EQ(plan.codecs[0].id, "refcodec");
  EXPECT_TRUE(plan.targets.empty());
  EXPECT_TRUE(plan.metrics.psnr);
  EXPECT_TRUE(plan.metrics.ms_ssim);
  EXPECT_FALSE(plan.metrics.needs_features());
  EXPECT_EQ(plan.extractor.seed, 42u);
  EXPECT_FALSE(plan.timing.enabled);
  EXPECT_EQ(plan.jobs, 1u);
}

TEST(Config, UnknownKeyNamed) {
  auto j = minimal();
  j["codecz"] = json::array();
  EXPECT_NE(validation_message(j.dump()).find("codecz"), std::string::npos);

  j = minimal();
  j["codecs"][0]["subsampel"] = true;
  EXPECT_NE(validation_message(j.dump()).find("codecs[0].subsampel"), std::string::npos);
}

TEST(Config, TargetsRangeChecked) {
  auto j = minimal();
  j["targets"] = {1.0, 30.0};
  EXPECT_NE(validation_message(j.dump()).find("targets[1]"), std::string::npos);
  j["targets"] = {0.0};
  EXPECT_FALSE(validation_message(j.dump()).empty());
  j["targets"] = {1.0, 0.5, 1.0};
  EXPECT_EQ(load_config(j.dump()).targets, (std::vector<double>{0.5, 1.0}));
}

TEST(Config, TypeMismatchNamesKey) {
  auto j = minimal();
  j["seed"] = "seven";
  EXPECT_NE(validation_message(j.dump()).find("seed"), std::string::npos);
  j = minimal();
  j["corpus"]["synthetic"]["count"] = -3;
  EXPECT_NE(validation_message(j.dump()).find("corpus.synthetic.count"), std::string::npos);
}

TEST(Config, StructuralErrors) {
  EXPECT_FALSE(validation_message("{not json").empty());
  EXPECT_FALSE(validation_message(R"({"codecs": [{"kind": "refcodec"}]})").empty());
  EXPECT_FALSE(validation_message(R"({"corpus": {"synthetic": {"count": 1}}})").empty());
  auto j = minimal();
  j["codecs"].push_back({{"kind", "refcodec"}});
  EXPECT_NE(validation_message(j.dump()).find("duplicate"), std::string::npos);
  j = minimal();
  j["metrics"] = {"psnr", "vmaf"};
  EXPECT_NE(validation_message(j.dump()).find("vmaf"), std::string::npos);
  j = minimal();
  j["corpus"]["dir"] = "/nonexistent/pathbench";
  EXPECT_FALSE(validation_message(j.dump()).empty());
  j = minimal();
  j["timing"] = {{"quality", 50}, {"target_bpp", 1.0}};
  EXPECT_NE(validation_message(j.dump()).find("timing"), std::string::npos);
  j = minimal();
  j["chains"] = {{{"name", "c"}, {"codec", "refcodec"}, {"prefix", {{{"codec", "jpeg"}, {"quality", 80}}}}}};
  EXPECT_NE(validation_message(j.dump()).find("chains[0].prefix[0].codec"), std::string::npos);
}

TEST(Config, FullSchemaParses) {
  const json j = {
      {"name", "full"},
      {"corpus", {{"synthetic", {{"count", 3}, {"size", 64}, {"seed", 5}}}}},
      {"codecs",
       {{{"kind", "refcodec"}},
        {{"kind", "refcodec"}, {"subsample", true}},
        {{"kind", "adapter"}, {"exe", PATHBENCH_FIXTURE_ADAPTER}, {"args", {"--mode=identity"}}, {"id", "ident"}}}},
      {"chains", {{{"name", "q80-twice"}, {"codec", "refcodec"}, {"prefix", {{{"codec", "refcodec"}, {"quality", 80}}}}}}},
      {"targets", {0.5, 1.0}},
      {"metrics", {"psnr", "cosine"}},
      {"extractor", {{"kind", "seeded"}, {"seed", 9}}},
      {"similarity_bpp", 1.0},
      {"timing", {{"quality", 75}, {"warmup", 0}, {"reps", 2}}},
      {"rate", {{"tolerance", 0.1}, {"max_iter", 8}, {"sample", 2}, {"full_corpus", true}}},
      {"ms_ssim_scale_reduction", true},
      {"seed", 11},
      {"output", "out"},
      {"jobs", 2},
      {"dump_raw", true}};
  const auto plan = load_config(j.dump(), "/tmp");
  ASSERT_EQ(plan.codecs.size(), 3u);
  EXPECT_EQ(plan.codecs[1].id, "refcodec-420");
  EXPECT_EQ(plan.codecs[2].id, "ident");
  EXPECT_EQ(plan.codecs[2].adapter.extra_args, std::vector<std::string>{"--mode=identity"});
  ASSERT_EQ(plan.chains.size(), 1u);
  EXPECT_EQ(plan.chains[0].prefix[0].quality, 80.0);
  EXPECT_TRUE(plan.metrics.cosine);
  EXPECT_FALSE(plan.metrics.ms_ssim);
  EXPECT_EQ(plan.extractor.seed, 9u);
  EXPECT_EQ(plan.similarity_bpp, 1.0);
  EXPECT_EQ(plan.timing.reps, 2u);
  EXPECT_EQ(plan.rate.tolerance, 0.1);
  EXPECT_TRUE(plan.full_corpus_targeting);
  EXPECT_EQ(plan.output, fs::path("/tmp/out"));
  EXPECT_EQ(plan.jobs, 2u);
  EXPECT_TRUE(plan.dump_raw);
}

TEST(Config, HashIgnoresJobsAndOutput) {
  auto j = minimal();
  const auto base = load_config(j.dump()).config_hash();
  EXPECT_EQ(base.size(), 16u);
  j["jobs"] = 4;
  j["output"] = "elsewhere";
  EXPECT_EQ(load_config(j.dump()).config_hash(), base);
  j["seed"] = 1;
  EXPECT_NE(load_config(j.dump()).config_hash(), base);
}

TEST(Config, LoadFileResolvesRelativePaths) {
  const auto dir = scratch_dir("relative");
  fs::create_directories(dir / "tiles" / "subject-1");
  write_pnm_file((dir / "tiles" / "subject-1" / "a.ppm").string(), synthetic::tissue_tile(16, 16, 1));
  std::ofstream(dir / "plan.json") << R"({"corpus": {"dir": "tiles"}, "codecs": [{"kind": "refcodec"}]})";
  const auto plan = load_config_file(dir / "plan.json");
  EXPECT_EQ(plan.corpus.path, (dir / "tiles").lexically_normal());
  EXPECT_EQ(load_corpus(plan.corpus).size(), 1u);
}

TEST(Fnv, KnownVectors) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ull);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cull);
  EXPECT_EQ(fnv1a64("foobar"), 0x85944171f73967e8ull);
}

TEST(Run, IdentityAdapterGivesIdealMetrics) {
  auto j = minimal();
  j["corpus"]["synthetic"] = {{"count", 2}, {"size", 64}};
  j["codecs"] = {{{"kind", "adapter"}, {"exe", PATHBENCH_FIXTURE_ADAPTER}, {"args", {"--mode=identity"}}, {"id", "ident"}}};
  j["targets"] = {1.0};
  j["metrics"] = {"psnr", "ms_ssim", "deep_distance", "cosine"};
  j["ms_ssim_scale_reduction"] = true;
  const auto bundle = run_experiment(load_config(j.dump()));
  EXPECT_FALSE(bundle.partial());
  ASSERT_EQ(bundle.rd_points.size(), 1u);
  const auto& p = bundle.rd_points[0];
  EXPECT_TRUE(p.flags.target_unreachable);
  EXPECT_TRUE(p.flags.psnr_capped);
  EXPECT_EQ(p.metric("psnr")->mean, kPsnrCapDb);
  EXPECT_NEAR(p.metric("ms_ssim")->mean, 1.0, 1e-12);
  EXPECT_NEAR(p.metric("deep_distance")->mean, 0.0, 1e-9);
  std::size_t taps = 0;
  for (const auto& [name, agg] : p.metrics) {
    if (!name.starts_with("cosine:")) continue;
    ++taps;
    EXPECT_NEAR(agg.mean, 1.0, 1e-9) << name;
  }
  EXPECT_EQ(taps, 6u);
}

TEST(Run, DeterministicAcrossRunsAndJobs) {
  auto plan = small_plan();
  plan.corpus.synthetic_size = 64;
  plan.corpus.synthetic_count = 3;
  plan.targets = {0.5, 1.5};
  const auto a = rd_points_csv(run_experiment(plan).rd_points);
  const auto b = rd_points_csv(run_experiment(plan).rd_points);
  plan.jobs = 3;
  const auto c = rd_points_csv(run_experiment(plan).rd_points);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a, c);
}

TEST(Run, MsSsimIncreasesWithRate) {
  auto plan = small_plan();
  plan.corpus.synthetic_size = 64;
  plan.corpus.synthetic_count = 3;
  plan.targets = {0.5, 1.0, 1.5};
  plan.metrics = {false, true, false, false};
  const auto bundle = run_experiment(plan);
  ASSERT_EQ(bundle.rd_points.size(), 3u);
  for (std::size_t i = 1; i < 3; ++i) {
    EXPECT_GT(bundle.rd_points[i].metric("ms_ssim")->mean, bundle.rd_points[i - 1].metric("ms_ssim")->mean);
  }
}

TEST(Run, ScenariosAndChains) {
  auto plan = small_plan();
  plan.corpus.synthetic_size = 64;
  plan.targets = {1.0};
  plan.chains = {{"q80-then-refcodec", {{"refcodec", 80.0}}, "refcodec"}};
  plan.metrics = {true, false, false, false};
  plan.similarity_bpp = 1.0;
  plan.timing.enabled = true;
  plan.timing.quality = 60.0;
  plan.timing.warmup = 0;
  plan.timing.reps = 1;
  const auto bundle = run_experiment(plan);
  EXPECT_FALSE(bundle.partial());
  ASSERT_EQ(bundle.rd_points.size(), 2u);
  EXPECT_EQ(bundle.rd_points[1].codec_id, "q80-then-refcodec");
  EXPECT_EQ(bundle.similarity.size(), 6u);
  ASSERT_EQ(bundle.timing.size(), 2u);
  EXPECT_EQ(bundle.timing[0].phase, TimingPhase::Encode);
  EXPECT_EQ(bundle.timing[1].phase, TimingPhase::Decode);
  EXPECT_EQ(bundle.timing[0].quality, 60.0);

  const auto sweep_only = run_experiment(plan, {true, false, false});
  EXPECT_TRUE(sweep_only.similarity.empty());
  EXPECT_TRUE(sweep_only.timing.empty());
  EXPECT_EQ(sweep_only.rd_points.size(), 2u);
}

TEST(Run, FailingCodecMakesBundlePartial) {
  auto plan = small_plan();
  plan.targets = {1.0};
  CodecEntry broken;
  broken.id = "broken";
  broken.kind = CodecEntry::Kind::Adapter;
  broken.adapter = pathbench::testing::fixture("broken-decoder");
  plan.codecs.push_back(broken);
  const auto bundle = run_experiment(plan);
  EXPECT_TRUE(bundle.partial());
  EXPECT_EQ(bundle.rd_points.size(), 1u);
  ASSERT_EQ(bundle.failures.size(), 1u);
  EXPECT_EQ(bundle.failures[0].codec_id, "broken");
  EXPECT_EQ(bundle.failures[0].scenario, "sweep");
}

TEST(Report, EmptyBundleWritesHeadersOnly) {
  const auto dir = scratch_dir("empty");
  ReportBundle bundle;
  emit_reports(bundle, dir);
  EXPECT_EQ(slurp(dir / "rd_points.csv"), std::string(kRdCsvHeader) + "\n");
  EXPECT_EQ(slurp(dir / "similarity.csv"), std::string(kSimilarityCsvHeader) + "\n");
  EXPECT_TRUE(fs::exists(dir / "metadata.json"));
  EXPECT_TRUE(fs::exists(dir / "timing.json"));
  EXPECT_FALSE(fs::exists(dir / "raw.csv"));
  for (const auto& e : fs::directory_iterator(dir)) EXPECT_NE(e.path().extension(), ".svg") << e.path();
}

TEST(Report, OneCodecThreeTargets) {
  auto plan = small_plan();
  plan.corpus.synthetic_size = 64;
  plan.targets = {0.5, 1.0, 1.5};
  plan.dump_raw = true;
  const auto bundle = run_experiment(plan);
  ASSERT_EQ(bundle.rd_points.size(), 3u);
  const auto dir = scratch_dir("three");
  emit_reports(bundle, dir, true);

  const auto csv = slurp(dir / "rd_points.csv");
  EXPECT_EQ(line_count(csv), 1 + 3 * 2);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), kRdCsvHeader);
  EXPECT_EQ(line_count(slurp(dir / "raw.csv")), 1 + 3 * 2 * 2 + 3 * 2);

  const auto svg = slurp(dir / "rd_psnr.svg");
  EXPECT_EQ(count_of(svg, "<polyline"), 1u);
  const auto poly = svg.substr(svg.find("<polyline"));
  const auto pts = poly.substr(poly.find("points=\"") + 8);
  EXPECT_EQ(count_of(pts.substr(0, pts.find('"')), ","), 3u);
  EXPECT_TRUE(fs::exists(dir / "rd_ms_ssim.svg"));
  EXPECT_FALSE(fs::exists(dir / "similarity.svg"));
  EXPECT_FALSE(fs::exists(dir / "timing.svg"));

  const auto meta = json::parse(slurp(dir / "metadata.json"));
  EXPECT_EQ(meta["config_hash"], plan.config_hash());
  EXPECT_EQ(meta["toolkit_version"], kToolkitVersion);
}

TEST(Report, BundleJsonRoundTrip) {
  auto plan = small_plan();
  plan.targets = {1.0};
  plan.timing.enabled = true;
  plan.timing.reps = 1;
  plan.timing.warmup = 0;
  plan.similarity_bpp = 1.0;
  ReportBundle bundle = run_experiment(plan);
  bundle.failures.push_back({"sweep", "x", 2.0, "boom"});
  const auto text = bundle_to_json(bundle);
  const auto back = bundle_from_json(text);
  EXPECT_EQ(bundle_to_json(back), text);
  EXPECT_EQ(rd_points_csv(back.rd_points), rd_points_csv(bundle.rd_points));
  EXPECT_EQ(similarity_csv(back.similarity), similarity_csv(bundle.similarity));
  EXPECT_TRUE(back.partial());
  EXPECT_THROW(bundle_from_json("[]"), Error);
}

TEST(Report, CsvFormatting) {
  RateDistortionPoint p;
  p.codec_id = "c";
  p.target_bpp = 1.0;
  p.achieved_bpp = 0.98;
  p.quality = 40;
  p.tile_count = 2;
  p.flags.psnr_capped = true;
  p.metrics = {{"psnr", {30.5, 0.25, 2}}};
  EXPECT_EQ(rd_points_csv({p}), std::string(kRdCsvHeader) +
                                    "\nc,1.000000,0.980000,40.000000,psnr,30.50000000,0.25000000,2,psnr_capped\n");
  const std::vector<SimilarityRow> rows = {{"c", "stage1", {0.9, 0.01, 2}, 40, 0.98}};
  EXPECT_EQ(similarity_csv(rows), std::string(kSimilarityCsvHeader) + "\nc,stage1,0.90000000,0.01000000\n");
}
