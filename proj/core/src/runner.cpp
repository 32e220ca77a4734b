// SPDX-License-Identifier: Apache-2.0
#include "pathbench/runner.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "pathbench/error.hpp"
#include "pathbench/extractor.hpp"
#include "pathbench/image.hpp"
#include "pathbench/refcodec.hpp"
#include "pathbench/synthetic.hpp"
#include "pathbench/tiling.hpp"

namespace pathbench {

using json = nlohmann::json;
namespace fs = std::filesystem;

std::uint64_t fnv1a64(std::string_view data) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char c : data) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {

// Walks one JSON object, remembering which keys were consumed so leftovers can be rejected.
class Reader {
 public:
  Reader(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) throw ValidationError(where() + ": expected an object");
  }

  bool has(const std::string& key) const { return node_.contains(key); }

  const json& get(const std::string& key) {
    seen_.insert(key);
    return node_.at(key);
  }

  std::string key_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  std::string string(const std::string& key) {
    const json& v = get(key);
    if (!v.is_string()) throw ValidationError(key_path(key) + ": expected a string");
    return v.get<std::string>();
  }
  std::string string(const std::string& key, const std::string& fallback) { return has(key) ? string(key) : fallback; }

  double number(const std::string& key) {
    const json& v = get(key);
    if (!v.is_number()) throw ValidationError(key_path(key) + ": expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ValidationError(key_path(key) + ": expected a finite number");
    return d;
  }
  double number(const std::string& key, double fallback) { return has(key) ? number(key) : fallback; }

  std::uint64_t unsigned_int(const std::string& key) {
    const json& v = get(key);
    if (!v.is_number_unsigned()) throw ValidationError(key_path(key) + ": expected a non-negative integer");
    return v.get<std::uint64_t>();
  }
  std::uint64_t unsigned_int(const std::string& key, std::uint64_t fallback) {
    return has(key) ? unsigned_int(key) : fallback;
  }

  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const json& v = get(key);
    if (!v.is_boolean()) throw ValidationError(key_path(key) + ": expected true or false");
    return v.get<bool>();
  }

  const json& array(const std::string& key) {
    const json& v = get(key);
    if (!v.is_array()) throw ValidationError(key_path(key) + ": expected an array");
    return v;
  }

  std::vector<std::string> strings(const std::string& key) {
    std::vector<std::string> out;
    const json& arr = array(key);
    for (std::size_t i = 0; i < arr.size(); ++i) {
      if (!arr[i].is_string()) throw ValidationError(fmt::format("{}[{}]: expected a string", key_path(key), i));
      out.push_back(arr[i].get<std::string>());
    }
    return out;
  }

  void finish() const {
    for (const auto& [key, value] : node_.items()) {
      if (!seen_.contains(key)) throw ValidationError(key_path(key) + ": unknown key");
    }
  }

 private:
  std::string where() const { return path_.empty() ? "config" : path_; }

  const json& node_;
  std::string path_;
  std::set<std::string> seen_;
};

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  if (path.is_relative() && !base.empty()) path = base / path;
  return path.lexically_normal();
}

fs::path existing(const fs::path& base, const std::string& p, const std::string& key) {
  const fs::path path = resolve(base, p);
  if (!fs::exists(path)) throw ValidationError(fmt::format("{}: path '{}' does not exist", key, path.string()));
  return path;
}

AdapterHandle read_adapter(Reader& r, const fs::path& base) {
  AdapterHandle h;
  h.executable = existing(base, r.string("exe"), r.key_path("exe")).string();
  if (r.has("args")) h.extra_args = r.strings("args");
  h.timeout_seconds = r.number("timeout", kDefaultAdapterTimeoutSeconds);
  if (h.timeout_seconds <= 0) throw ValidationError(r.key_path("timeout") + ": must be positive");
  return h;
}

CorpusSource read_corpus(const json& node, const fs::path& base) {
  Reader r(node, "corpus");
  CorpusSource c;
  const int kinds = int(r.has("manifest")) + int(r.has("dir")) + int(r.has("synthetic"));
  if (kinds != 1) throw ValidationError("corpus: exactly one of manifest, dir, synthetic is required");
  if (r.has("manifest")) {
    c.kind = CorpusSource::Kind::Manifest;
    c.path = existing(base, r.string("manifest"), "corpus.manifest");
  } else if (r.has("dir")) {
    c.kind = CorpusSource::Kind::Directory;
    c.path = existing(base, r.string("dir"), "corpus.dir");
    if (r.has("patterns")) c.patterns = r.strings("patterns");
    if (c.patterns.empty()) throw ValidationError("corpus.patterns: must not be empty");
  } else {
    c.kind = CorpusSource::Kind::Synthetic;
    Reader s(r.get("synthetic"), "corpus.synthetic");
    c.synthetic_count = s.unsigned_int("count");
    c.synthetic_size = s.unsigned_int("size", 224);
    c.synthetic_seed = s.unsigned_int("seed", 0);
    if (c.synthetic_count == 0) throw ValidationError("corpus.synthetic.count: must be positive");
    if (c.synthetic_size < 8) throw ValidationError("corpus.synthetic.size: must be at least 8");
    s.finish();
  }
  r.finish();
  return c;
}

}  // namespace

ExperimentPlan load_config(const std::string& text, const fs::path& base_dir) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  Reader r(root, "");
  ExperimentPlan plan;
  plan.name = r.string("name", plan.name);
  if (!r.has("corpus")) throw ValidationError("corpus: required");
  plan.corpus = read_corpus(r.get("corpus"), base_dir);

  std::set<std::string> ids;
  if (r.has("codecs")) {
    const json& arr = r.array("codecs");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      Reader c(arr[i], fmt::format("codecs[{}]", i));
      CodecEntry e;
      const std::string kind = c.string("kind", "refcodec");
      if (kind == "refcodec") {
        e.kind = CodecEntry::Kind::RefCodec;
        e.subsample = c.boolean("subsample", false);
        e.id = e.subsample ? "refcodec-420" : "refcodec";
      } else if (kind == "adapter") {
        e.kind = CodecEntry::Kind::Adapter;
        e.adapter = read_adapter(c, base_dir);
        e.id = fs::path(e.adapter.executable).filename().string();
      } else {
        throw ValidationError(c.key_path("kind") + ": expected 'refcodec' or 'adapter'");
      }
      e.id = c.string("id", e.id);
      if (e.id.empty()) throw ValidationError(c.key_path("id") + ": must not be empty");
      if (!ids.insert(e.id).second) throw ValidationError(c.key_path("id") + ": duplicate codec id '" + e.id + "'");
      c.finish();
      plan.codecs.push_back(std::move(e));
    }
  }
  if (plan.codecs.empty()) throw ValidationError("codecs: at least one codec is required");

  if (r.has("chains")) {
    const json& arr = r.array("chains");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      Reader c(arr[i], fmt::format("chains[{}]", i));
      ChainEntry chain;
      chain.name = c.string("name");
      chain.codec = c.string("codec");
      if (!ids.contains(chain.codec)) throw ValidationError(c.key_path("codec") + ": unknown codec '" + chain.codec + "'");
      const json& prefix = c.array("prefix");
      for (std::size_t j = 0; j < prefix.size(); ++j) {
        Reader s(prefix[j], fmt::format("chains[{}].prefix[{}]", i, j));
        ChainEntry::Stage stage{s.string("codec"), s.number("quality")};
        if (!ids.contains(stage.codec)) throw ValidationError(s.key_path("codec") + ": unknown codec '" + stage.codec + "'");
        s.finish();
        chain.prefix.push_back(stage);
      }
      if (chain.prefix.empty()) throw ValidationError(c.key_path("prefix") + ": must not be empty");
      if (!ids.insert(chain.name).second) throw ValidationError(c.key_path("name") + ": name collides with another id");
      c.finish();
      plan.chains.push_back(std::move(chain));
    }
  }

  if (r.has("targets")) {
    const json& arr = r.array("targets");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      if (!arr[i].is_number()) throw ValidationError(fmt::format("targets[{}]: expected a number", i));
      const double t = arr[i].get<double>();
      if (!(t > 0.0 && t < 24.0)) throw ValidationError(fmt::format("targets[{}]: {} outside (0, 24) bpp", i, t));
      plan.targets.push_back(t);
    }
    std::sort(plan.targets.begin(), plan.targets.end());
    plan.targets.erase(std::unique(plan.targets.begin(), plan.targets.end()), plan.targets.end());
  }

  if (r.has("metrics")) {
    plan.metrics = MetricSelection{false, false, false, false};
    for (const auto& m : r.strings("metrics")) {
      if (m == "psnr") plan.metrics.psnr = true;
      else if (m == "ms_ssim") plan.metrics.ms_ssim = true;
      else if (m == "deep_distance") plan.metrics.deep_distance = true;
      else if (m == "cosine") plan.metrics.cosine = true;
      else throw ValidationError("metrics: unknown metric '" + m + "'");
    }
  }

  if (r.has("extractor")) {
    Reader e(r.get("extractor"), "extractor");
    const std::string kind = e.string("kind", "seeded");
    if (kind == "seeded") {
      plan.extractor.kind = ExtractorChoice::Kind::Seeded;
      plan.extractor.seed = e.unsigned_int("seed", plan.extractor.seed);
    } else if (kind == "weights") {
      plan.extractor.kind = ExtractorChoice::Kind::Weights;
      plan.extractor.weights = existing(base_dir, e.string("path"), "extractor.path");
    } else if (kind == "adapter") {
      plan.extractor.kind = ExtractorChoice::Kind::Adapter;
      plan.extractor.adapter = read_adapter(e, base_dir);
    } else {
      throw ValidationError("extractor.kind: expected 'seeded', 'weights' or 'adapter'");
    }
    e.finish();
  }

  if (r.has("similarity_bpp")) {
    const double b = r.number("similarity_bpp");
    if (!(b > 0.0 && b < 24.0)) throw ValidationError("similarity_bpp: outside (0, 24) bpp");
    plan.similarity_bpp = b;
  }

  if (r.has("timing")) {
    Reader t(r.get("timing"), "timing");
    plan.timing.enabled = true;
    if (t.has("quality")) plan.timing.quality = t.number("quality");
    if (t.has("target_bpp")) {
      const double b = t.number("target_bpp");
      if (!(b > 0.0 && b < 24.0)) throw ValidationError("timing.target_bpp: outside (0, 24) bpp");
      plan.timing.target_bpp = b;
    }
    if (plan.timing.quality && plan.timing.target_bpp)
      throw ValidationError("timing: quality and target_bpp are mutually exclusive");
    plan.timing.warmup = t.unsigned_int("warmup", kDefaultWarmupReps);
    plan.timing.reps = t.unsigned_int("reps", kDefaultTimedReps);
    if (plan.timing.reps == 0) throw ValidationError("timing.reps: must be positive");
    t.finish();
  }

  if (r.has("rate")) {
    Reader t(r.get("rate"), "rate");
    plan.rate.tolerance = t.number("tolerance", kDefaultRateTolerance);
    plan.rate.max_iter = t.unsigned_int("max_iter", kDefaultMaxIterations);
    plan.rate_sample = t.unsigned_int("sample", kDefaultRateSample);
    plan.full_corpus_targeting = t.boolean("full_corpus", false);
    if (!(plan.rate.tolerance > 0.0 && plan.rate.tolerance < 1.0)) throw ValidationError("rate.tolerance: outside (0, 1)");
    if (plan.rate.max_iter == 0) throw ValidationError("rate.max_iter: must be positive");
    if (plan.rate_sample == 0) throw ValidationError("rate.sample: must be positive");
    t.finish();
  }

  plan.allow_scale_reduction = r.boolean("ms_ssim_scale_reduction", false);
  plan.seed = r.unsigned_int("seed", 0);
  if (r.has("output")) plan.output = resolve(base_dir, r.string("output"));
  plan.jobs = r.unsigned_int("jobs", 1);
  if (plan.jobs == 0) throw ValidationError("jobs: must be positive");
  plan.dump_raw = r.boolean("dump_raw", false);
  r.finish();
  return plan;
}

ExperimentPlan load_config_file(const fs::path& path) {
  const Bytes data = read_file(path);
  return load_config(std::string(data.begin(), data.end()), path.parent_path());
}

namespace {

json adapter_json(const AdapterHandle& h) {
  return {{"exe", h.executable}, {"args", h.extra_args}, {"timeout", h.timeout_seconds}};
}

}  // namespace

std::string plan_to_json(const ExperimentPlan& plan) {
  json j;
  j["name"] = plan.name;
  json corpus;
  switch (plan.corpus.kind) {
    case CorpusSource::Kind::Manifest: corpus["manifest"] = plan.corpus.path.string(); break;
    case CorpusSource::Kind::Directory:
      corpus["dir"] = plan.corpus.path.string();
      corpus["patterns"] = plan.corpus.patterns;
      break;
    case CorpusSource::Kind::Synthetic:
      corpus["synthetic"] = {{"count", plan.corpus.synthetic_count},
                             {"size", plan.corpus.synthetic_size},
                             {"seed", plan.corpus.synthetic_seed}};
      break;
  }
  j["corpus"] = corpus;
  j["codecs"] = json::array();
  for (const auto& c : plan.codecs) {
    json e{{"id", c.id}};
    if (c.kind == CodecEntry::Kind::RefCodec) {
      e["kind"] = "refcodec";
      e["subsample"] = c.subsample;
    } else {
      e["kind"] = "adapter";
      e.update(adapter_json(c.adapter));
    }
    j["codecs"].push_back(e);
  }
  j["chains"] = json::array();
  for (const auto& c : plan.chains) {
    json prefix = json::array();
    for (const auto& s : c.prefix) prefix.push_back({{"codec", s.codec}, {"quality", s.quality}});
    j["chains"].push_back({{"name", c.name}, {"codec", c.codec}, {"prefix", prefix}});
  }
  j["targets"] = plan.targets;
  std::vector<std::string> metrics;
  if (plan.metrics.psnr) metrics.emplace_back("psnr");
  if (plan.metrics.ms_ssim) metrics.emplace_back("ms_ssim");
  if (plan.metrics.deep_distance) metrics.emplace_back("deep_distance");
  if (plan.metrics.cosine) metrics.emplace_back("cosine");
  j["metrics"] = metrics;
  switch (plan.extractor.kind) {
    case ExtractorChoice::Kind::Seeded: j["extractor"] = {{"kind", "seeded"}, {"seed", plan.extractor.seed}}; break;
    case ExtractorChoice::Kind::Weights:
      j["extractor"] = {{"kind", "weights"}, {"path", plan.extractor.weights.string()}};
      break;
    case ExtractorChoice::Kind::Adapter:
      j["extractor"] = adapter_json(plan.extractor.adapter);
      j["extractor"]["kind"] = "adapter";
      break;
  }
  j["similarity_bpp"] = plan.similarity_bpp ? json(*plan.similarity_bpp) : json(nullptr);
  if (plan.timing.enabled) {
    j["timing"] = {{"warmup", plan.timing.warmup}, {"reps", plan.timing.reps}};
    if (plan.timing.quality) j["timing"]["quality"] = *plan.timing.quality;
    if (plan.timing.target_bpp) j["timing"]["target_bpp"] = *plan.timing.target_bpp;
  }
  j["rate"] = {{"tolerance", plan.rate.tolerance},
               {"max_iter", plan.rate.max_iter},
               {"sample", plan.rate_sample},
               {"full_corpus", plan.full_corpus_targeting}};
  j["ms_ssim_scale_reduction"] = plan.allow_scale_reduction;
  j["seed"] = plan.seed;
  return j.dump();
}

std::string ExperimentPlan::config_hash() const { return fmt::format("{:016x}", fnv1a64(plan_to_json(*this))); }

std::vector<Tile> load_corpus(const CorpusSource& source) {
  switch (source.kind) {
    case CorpusSource::Kind::Synthetic:
      return synthetic::tissue_corpus(source.synthetic_count, source.synthetic_size, source.synthetic_seed);
    case CorpusSource::Kind::Manifest: {
      const Bytes data = read_file(source.path);
      const auto manifest = manifest_from_jsonl(std::string(data.begin(), data.end()), source.path.parent_path(),
                                                source.path.stem().string());
      return load_tiles(manifest);
    }
    case CorpusSource::Kind::Directory: {
      ManifestSpec spec;
      spec.root = source.path;
      spec.patterns = source.patterns;
      spec.name = source.path.filename().string();
      return load_tiles(build_manifest(spec));
    }
  }
  throw Error("load_corpus: unknown corpus kind");
}

std::unique_ptr<FeatureExtractor> make_extractor(const ExperimentPlan& plan) {
  switch (plan.extractor.kind) {
    case ExtractorChoice::Kind::Seeded: return std::make_unique<ConvExtractor>(seeded_extractor(plan.extractor.seed));
    case ExtractorChoice::Kind::Weights: {
      const Bytes data = read_file(plan.extractor.weights);
      return std::make_unique<ConvExtractor>(load_weights(data));
    }
    case ExtractorChoice::Kind::Adapter: return std::make_unique<AdapterExtractor>(plan.extractor.adapter);
  }
  throw Error("make_extractor: unknown extractor kind");
}

namespace {

std::shared_ptr<const Codec> make_codec(const CodecEntry& entry) {
  if (entry.kind == CodecEntry::Kind::RefCodec) return std::make_shared<RefCodec>(RefCodecOptions{entry.subsample});
  return std::make_shared<AdapterCodec>(entry.adapter);
}

std::vector<Tile> rate_sample(std::span<const Tile> corpus, const ExperimentPlan& plan) {
  std::vector<Tile> sample;
  const std::size_t n = plan.full_corpus_targeting ? corpus.size() : plan.rate_sample;
  for (const auto i : rate_sample_indices(corpus.size(), n, plan.seed)) sample.push_back(corpus[i]);
  return sample;
}

}  // namespace

ReportBundle run_experiment(const ExperimentPlan& plan, const Scenarios& scenarios) {
  const std::vector<Tile> corpus = load_corpus(plan.corpus);
  return run_experiment(plan, corpus, scenarios);
}

ReportBundle run_experiment(const ExperimentPlan& plan, std::span<const Tile> corpus, const Scenarios& scenarios) {
  if (corpus.empty()) throw ValidationError("corpus is empty");
  ReportBundle bundle;
  bundle.metadata.config_hash = plan.config_hash();
  bundle.metadata.seed = plan.seed;
  bundle.metadata.plan_name = plan.name;
  bundle.metadata.tile_count = corpus.size();

  std::map<std::string, std::shared_ptr<const Codec>> codecs;
  for (const auto& entry : plan.codecs) {
    try {
      codecs[entry.id] = make_codec(entry);
    } catch (const std::exception& e) {
      bundle.failures.push_back({"setup", entry.id, 0.0, e.what()});
    }
  }

  const bool want_similarity = scenarios.similarity && plan.similarity_bpp.has_value();
  std::unique_ptr<FeatureExtractor> extractor;
  if ((scenarios.sweep && plan.metrics.needs_features()) || want_similarity) extractor = make_extractor(plan);

  SweepOptions options;
  options.rate = plan.rate;
  options.metrics = plan.metrics;
  options.extractor = extractor.get();
  options.ms_ssim.allow_scale_reduction = plan.allow_scale_reduction;
  options.rate_sample = plan.rate_sample;
  options.full_corpus_targeting = plan.full_corpus_targeting;
  options.seed = plan.seed;
  options.jobs = plan.jobs;
  options.keep_raw = plan.dump_raw;

  const auto merge = [&](SweepResult&& r) {
    for (auto& p : r.points) bundle.rd_points.push_back(std::move(p));
    for (auto& f : r.failures) bundle.failures.push_back({"sweep", f.codec_id, f.target_bpp, f.diagnostic});
    for (auto& v : r.raw) bundle.raw.push_back(std::move(v));
  };

  if (scenarios.sweep && !plan.targets.empty()) {
    for (const auto& entry : plan.codecs) {
      const auto it = codecs.find(entry.id);
      if (it == codecs.end()) continue;
      SweepOptions o = options;
      o.label = entry.id;
      merge(sweep(*it->second, corpus, plan.targets, o));
    }
    for (const auto& chain : plan.chains) {
      const auto it = codecs.find(chain.codec);
      if (it == codecs.end()) continue;
      SweepOptions o = options;
      o.label = chain.name;
      bool ok = true;
      for (const auto& stage : chain.prefix) {
        const auto s = codecs.find(stage.codec);
        if (s == codecs.end()) {
          ok = false;
          break;
        }
        o.prefix.push_back({s->second, stage.quality, std::nullopt});
      }
      if (!ok) {
        bundle.failures.push_back({"sweep", chain.name, 0.0, "chain references a codec that failed to load"});
        continue;
      }
      try {
        merge(sweep(*it->second, corpus, plan.targets, o));
      } catch (const std::exception& e) {
        bundle.failures.push_back({"sweep", chain.name, 0.0, e.what()});
      }
    }
  }

  const std::vector<Tile> sample = (want_similarity || (scenarios.timing && plan.timing.target_bpp))
                                       ? rate_sample(corpus, plan)
                                       : std::vector<Tile>{};

  if (want_similarity) {
    SweepOptions o = options;
    o.metrics = MetricSelection{false, false, false, true};
    o.keep_raw = false;
    for (const auto& entry : plan.codecs) {
      const auto it = codecs.find(entry.id);
      if (it == codecs.end()) continue;
      try {
        RateTargetOptions rate = plan.rate;
        rate.jobs = plan.jobs;
        const auto rt = target_bpp(*it->second, sample, *plan.similarity_bpp, rate);
        o.label = entry.id;
        const auto point = evaluate_at_quality(*it->second, corpus, corpus, rt.quality, o);
        for (const auto& [name, agg] : point.metrics) {
          if (!name.starts_with("cosine:")) continue;
          bundle.similarity.push_back({entry.id, name.substr(7), agg, rt.quality, point.achieved_bpp});
        }
      } catch (const std::exception& e) {
        bundle.failures.push_back({"similarity", entry.id, *plan.similarity_bpp, e.what()});
      }
    }
  }

  if (scenarios.timing && plan.timing.enabled) {
    for (const auto& entry : plan.codecs) {
      const auto it = codecs.find(entry.id);
      if (it == codecs.end()) continue;
      const Codec& codec = *it->second;
      try {
        double quality = 0.0;
        if (plan.timing.quality) {
          quality = *plan.timing.quality;
        } else if (plan.timing.target_bpp) {
          RateTargetOptions rate = plan.rate;
          rate.jobs = plan.jobs;
          quality = target_bpp(codec, sample, *plan.timing.target_bpp, rate).quality;
        } else {
          quality = 0.5 * (codec.info().quality_min + codec.info().quality_max);
          if (codec.info().quality_kind == QualityKind::Int) quality = std::round(quality);
        }
        auto enc = time_encode(codec, corpus, quality, plan.timing.warmup, plan.timing.reps);
        enc.report.codec_id = entry.id;
        auto dec = time_decode(codec, enc.blobs, plan.timing.warmup, plan.timing.reps);
        dec.codec_id = entry.id;
        dec.quality = quality;
        bundle.timing.push_back(std::move(enc.report));
        bundle.timing.push_back(std::move(dec));
      } catch (const std::exception& e) {
        bundle.failures.push_back({"timing", entry.id, plan.timing.target_bpp.value_or(0.0), e.what()});
      }
    }
  }
  return bundle;
}

namespace {

json aggregate_json(const Aggregate& a) { return {{"mean", a.mean}, {"std", a.std}, {"n", a.n}}; }

Aggregate aggregate_from(const json& j) {
  return {j.at("mean").get<double>(), j.at("std").get<double>(), j.at("n").get<std::size_t>()};
}

}  // namespace

std::string bundle_to_json(const ReportBundle& b) {
  json j;
  j["metadata"] = {{"config_hash", b.metadata.config_hash},
                   {"seed", b.metadata.seed},
                   {"toolkit_version", b.metadata.toolkit_version},
                   {"plan_name", b.metadata.plan_name},
                   {"tile_count", b.metadata.tile_count},
                   {"psnr_cap_db", b.metadata.psnr_cap_db}};
  j["rd_points"] = json::array();
  for (const auto& p : b.rd_points) {
    json metrics = json::array();
    for (const auto& [name, agg] : p.metrics) {
      json m = aggregate_json(agg);
      m["metric"] = name;
      metrics.push_back(m);
    }
    j["rd_points"].push_back({{"codec", p.codec_id},
                              {"target_bpp", p.target_bpp},
                              {"achieved_bpp", p.achieved_bpp},
                              {"quality", p.quality},
                              {"tile_count", p.tile_count},
                              {"flags", p.flags.to_string()},
                              {"metrics", metrics}});
  }
  j["similarity"] = json::array();
  for (const auto& s : b.similarity) {
    json row = aggregate_json(s.value);
    row.update({{"codec", s.codec_id}, {"tap_id", s.tap_id}, {"quality", s.quality}, {"achieved_bpp", s.achieved_bpp}});
    j["similarity"].push_back(row);
  }
  j["timing"] = json::array();
  for (const auto& t : b.timing) {
    j["timing"].push_back({{"codec", t.codec_id},
                           {"quality", t.quality},
                           {"phase", to_string(t.phase)},
                           {"tile_count", t.tile_count},
                           {"warmup_reps", t.warmup_reps},
                           {"per_rep_seconds", t.per_rep_seconds},
                           {"total_seconds", t.total_seconds},
                           {"tiles_per_second", t.tiles_per_second},
                           {"median_rep_seconds", t.median_rep_seconds},
                           {"host", t.host}});
  }
  j["failures"] = json::array();
  for (const auto& f : b.failures) {
    j["failures"].push_back(
        {{"scenario", f.scenario}, {"codec", f.codec_id}, {"target_bpp", f.target_bpp}, {"diagnostic", f.diagnostic}});
  }
  j["raw"] = json::array();
  for (const auto& r : b.raw) {
    j["raw"].push_back({{"codec", r.codec_id},
                        {"target_bpp", r.target_bpp},
                        {"tile_id", r.tile_id},
                        {"metric", r.metric},
                        {"value", r.value}});
  }
  return j.dump(2);
}

ReportBundle bundle_from_json(const std::string& text) {
  ReportBundle b;
  try {
    const json j = json::parse(text);
    const json& m = j.at("metadata");
    b.metadata.config_hash = m.at("config_hash").get<std::string>();
    b.metadata.seed = m.at("seed").get<std::uint64_t>();
    b.metadata.toolkit_version = m.at("toolkit_version").get<std::string>();
    b.metadata.plan_name = m.at("plan_name").get<std::string>();
    b.metadata.tile_count = m.at("tile_count").get<std::size_t>();
    b.metadata.psnr_cap_db = m.at("psnr_cap_db").get<double>();
    for (const auto& p : j.at("rd_points")) {
      RateDistortionPoint point;
      point.codec_id = p.at("codec").get<std::string>();
      point.target_bpp = p.at("target_bpp").get<double>();
      point.achieved_bpp = p.at("achieved_bpp").get<double>();
      point.quality = p.at("quality").get<double>();
      point.tile_count = p.at("tile_count").get<std::size_t>();
      point.flags = PointFlags::parse(p.at("flags").get<std::string>());
      for (const auto& metric : p.at("metrics"))
        point.metrics.emplace_back(metric.at("metric").get<std::string>(), aggregate_from(metric));
      b.rd_points.push_back(std::move(point));
    }
    for (const auto& s : j.at("similarity")) {
      b.similarity.push_back({s.at("codec").get<std::string>(), s.at("tap_id").get<std::string>(), aggregate_from(s),
                              s.at("quality").get<double>(), s.at("achieved_bpp").get<double>()});
    }
    for (const auto& t : j.at("timing")) {
      TimingReport r;
      r.codec_id = t.at("codec").get<std::string>();
      r.quality = t.at("quality").get<double>();
      const auto phase = t.at("phase").get<std::string>();
      if (phase == "encode") r.phase = TimingPhase::Encode;
      else if (phase == "decode") r.phase = TimingPhase::Decode;
      else throw ValidationError("bundle: unknown timing phase '" + phase + "'");
      r.tile_count = t.at("tile_count").get<std::size_t>();
      r.warmup_reps = t.at("warmup_reps").get<std::size_t>();
      r.per_rep_seconds = t.at("per_rep_seconds").get<std::vector<double>>();
      r.total_seconds = t.at("total_seconds").get<double>();
      r.tiles_per_second = t.at("tiles_per_second").get<double>();
      r.median_rep_seconds = t.at("median_rep_seconds").get<double>();
      r.host = t.at("host").get<std::string>();
      b.timing.push_back(std::move(r));
    }
    for (const auto& f : j.at("failures")) {
      b.failures.push_back({f.at("scenario").get<std::string>(), f.at("codec").get<std::string>(),
                            f.at("target_bpp").get<double>(), f.at("diagnostic").get<std::string>()});
    }
    for (const auto& r : j.at("raw")) {
      b.raw.push_back({r.at("codec").get<std::string>(), r.at("target_bpp").get<double>(),
                       r.at("tile_id").get<std::string>(), r.at("metric").get<std::string>(),
                       r.at("value").get<double>()});
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("bundle: ") + e.what());
  }
  return b;
}

}  // namespace pathbench
