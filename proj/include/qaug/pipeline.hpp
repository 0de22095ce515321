#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "qaug/backends.hpp"
#include "qaug/corpus.hpp"
#include "qaug/judge.hpp"
#include "qaug/pools.hpp"
#include "qaug/prompt.hpp"
#include "qaug/report.hpp"
#include "qaug/skeleton.hpp"

namespace qaug {

struct RunPaths {
  std::filesystem::path input;
  std::filesystem::path output_dir;
};

struct RunConfig {
  PromptSetting setting = PromptSetting::InstructionsAndExamples;
  std::vector<BackendConfig> generators;
  BackendConfig scorer;
  std::size_t m = 1;         // demonstrations per pool
  std::size_t k_gen = 3;     // candidates per generator per question
  std::size_t k_out = 3;     // output cap per group
  double sample_fraction = 0.25;
  std::uint64_t seed = 0;
  std::size_t workers = 1;   // parallelism within one question
  double temperature = 0.7;  // generation decoding
  std::size_t max_tokens = 256;
  RunPaths paths;
  std::filesystem::path templates_dir;  // empty = built-in templates
};

inline void validate_config(const RunConfig& config) {
  if (config.generators.empty())
    fail(ErrorCode::bad_config, "at least one generator backend is required");
  std::set<std::string> names;
  for (const BackendConfig& generator : config.generators) {
    validate_backend_config(generator);
    if (!names.insert(generator.model.name).second)
      fail(ErrorCode::bad_config,
           "generator model \"" + generator.model.name + "\" listed twice");
  }
  validate_backend_config(config.scorer);
  std::vector<ModelId> generator_models;
  for (const BackendConfig& generator : config.generators)
    generator_models.push_back(generator.model);
  require_scorer_disjoint(config.scorer.model, generator_models);
  if (config.k_gen < 1) fail(ErrorCode::bad_config, "k_gen must be at least 1");
  if (config.k_out < 1) fail(ErrorCode::bad_config, "k_out must be at least 1");
  if (!(config.sample_fraction > 0.0) || config.sample_fraction > 1.0)
    fail(ErrorCode::fraction_out_of_range,
         "sample_fraction must lie in (0, 1], got " + std::to_string(config.sample_fraction));
  if (config.workers < 1) fail(ErrorCode::bad_config, "workers must be at least 1");
  if (config.temperature < 0.0)
    fail(ErrorCode::bad_config, "temperature must be non-negative");
  if (config.max_tokens < 1) fail(ErrorCode::bad_config, "max_tokens must be at least 1");
}

/// Digest over the knobs that shape run output. Paths, worker count, and
/// transport plumbing are excluded: runs that differ only in those produce
/// identical artifacts and should share a digest.
inline std::string config_digest(const RunConfig& config) {
  ojson semantic;
  semantic["setting"] = prompt_setting_name(config.setting);
  ojson generators = ojson::array();
  for (const BackendConfig& generator : config.generators)
    generators.push_back(generator.model.name);
  semantic["generators"] = std::move(generators);
  semantic["scorer"] = config.scorer.model.name;
  semantic["m"] = config.m;
  semantic["k_gen"] = config.k_gen;
  semantic["k_out"] = config.k_out;
  semantic["sample_fraction"] = config.sample_fraction;
  semantic["seed"] = config.seed;
  semantic["temperature"] = config.temperature;
  semantic["max_tokens"] = config.max_tokens;
  return hex64(fnv1a64(semantic.dump()));
}

inline std::string run_id(const RunConfig& config) {
  return "run-" + config_digest(config).substr(0, 12);
}

inline ojson run_config_to_json(const RunConfig& config) {
  ojson obj;
  obj["setting"] = prompt_setting_name(config.setting);
  ojson generators = ojson::array();
  for (const BackendConfig& generator : config.generators)
    generators.push_back(backend_config_to_json(generator));
  obj["generators"] = std::move(generators);
  obj["scorer"] = backend_config_to_json(config.scorer);
  obj["m"] = config.m;
  obj["k_gen"] = config.k_gen;
  obj["k_out"] = config.k_out;
  obj["sample_fraction"] = config.sample_fraction;
  obj["seed"] = config.seed;
  obj["workers"] = config.workers;
  obj["temperature"] = config.temperature;
  obj["max_tokens"] = config.max_tokens;
  obj["paths"] = ojson{{"input", config.paths.input.string()},
                       {"output_dir", config.paths.output_dir.string()}};
  if (!config.templates_dir.empty())
    obj["templates_dir"] = config.templates_dir.string();
  return obj;
}

/// Parses the JSON run config; field names mirror RunConfig exactly, so the
/// file doubles as the provenance echo written to run_config.json.
inline RunConfig parse_run_config(const ojson& obj) {
  RunConfig config;
  try {
    if (obj.contains("setting"))
      config.setting = parse_prompt_setting(obj.at("setting").get<std::string>());
    if (!obj.contains("generators") || !obj.at("generators").is_array())
      fail(ErrorCode::bad_config, "config needs a \"generators\" array");
    for (const auto& generator : obj.at("generators"))
      config.generators.push_back(backend_config_from_json(generator));
    if (!obj.contains("scorer"))
      fail(ErrorCode::bad_config, "config needs a \"scorer\" backend");
    config.scorer = backend_config_from_json(obj.at("scorer"));
    config.m = obj.value("m", config.m);
    config.k_gen = obj.value("k_gen", config.k_gen);
    config.k_out = obj.value("k_out", config.k_out);
    config.sample_fraction = obj.value("sample_fraction", config.sample_fraction);
    config.seed = obj.value("seed", config.seed);
    config.workers = obj.value("workers", config.workers);
    config.temperature = obj.value("temperature", config.temperature);
    config.max_tokens = obj.value("max_tokens", config.max_tokens);
    if (obj.contains("paths")) {
      const auto& paths = obj.at("paths");
      config.paths.input = paths.value("input", std::string());
      config.paths.output_dir = paths.value("output_dir", std::string());
    }
    config.templates_dir = obj.value("templates_dir", std::string());
  } catch (const Error&) {
    throw;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::bad_config, std::string("invalid run config: ") + e.what());
  }
  return config;
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
  ojson obj;
  try {
    obj = ojson::parse(read_text_file(path));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::bad_config, "config " + path.string() + ": " + e.what());
  }
  return parse_run_config(obj);
}

struct GeneratorTally {
  std::size_t positive = 0;
  std::size_t negative = 0;
};

struct RunStats {
  PromptSetting setting = PromptSetting::InstructionsAndExamples;
  std::size_t positive_count = 0;
  std::size_t negative_count = 0;
  std::size_t parse_failures = 0;
  std::size_t empty_completions = 0;
  std::map<std::string, GeneratorTally> per_generator;
};

struct PoolPair {
  ExamplePool positive{PoolLabel::Positive};
  ExamplePool negative{PoolLabel::Negative};
};

namespace detail {

struct CandidateDraft {
  std::string text;
  ModelId generator;
};

}  // namespace detail

/// Runs the per-question cycle: retrieve demonstrations, fan generation out
/// across every backend, dedup, score, and emit the augmented group. Pool
/// insertion and stats happen in one sequential commit after scoring, in
/// canonical order (generator registry order, then candidate index), so the
/// result is independent of scheduling.
inline std::pair<AugmentedGroup, std::vector<ScoredCandidate>> augment_question(
    const QuestionRecord& record, const RunConfig& config, PoolPair& pools,
    std::vector<std::unique_ptr<Backend>>& generators, Backend& scorer,
    const PromptTemplates& templates, RunStats& stats) {
  // Call-time guard mirroring config validation.
  for (const auto& generator : generators)
    if (generator->config().model == scorer.config().model)
      fail(ErrorCode::scorer_not_disjoint,
           "scorer model \"" + scorer.config().model.name + "\" is also a generator");
  const Skeleton skeleton = extract_skeleton(record);

  std::vector<PoolEntry> positive_demos;
  std::vector<PoolEntry> negative_demos;
  if (setting_has_examples(config.setting)) {
    positive_demos = pools.positive.retrieve_demos(skeleton, config.m);
    negative_demos = pools.negative.retrieve_demos(skeleton, config.m);
  }
  const RenderedPrompt prompt =
      build_generation_prompt(config.setting, record.question, positive_demos,
                              negative_demos, config.k_gen, templates);

  GenerationRequest request{prompt, config.k_gen, config.temperature, config.max_tokens};
  std::vector<GenerationResponse> responses(generators.size());
  run_indexed(generators.size(), config.workers,
              [&](std::size_t i) { responses[i] = generators[i]->generate(request); });

  // Dedup exact texts, keeping the first in canonical order.
  std::vector<detail::CandidateDraft> drafts;
  std::set<std::string> seen;
  for (std::size_t g = 0; g < generators.size(); ++g) {
    if (responses[g].candidates.empty()) ++stats.empty_completions;
    for (const std::string& text : responses[g].candidates) {
      if (!seen.insert(text).second) continue;
      drafts.push_back({text, generators[g]->config().model});
    }
  }

  std::vector<ScoringItem> items;
  items.reserve(drafts.size());
  for (const detail::CandidateDraft& draft : drafts)
    items.push_back({record, draft.text, draft.generator});
  std::vector<ScoredCandidate> scored =
      score_candidates_with(scorer, items, templates, config.workers);

  // Commit phase: strictly sequential, canonical order.
  AugmentedGroup group;
  group.source = record;
  std::vector<std::size_t> positive_indices;
  for (std::size_t i = 0; i < scored.size(); ++i) {
    const ScoredCandidate& candidate = scored[i];
    PoolEntry entry;
    entry.entry_id = record.id + "#" + std::to_string(i);
    entry.text = candidate.text;
    entry.skeleton = skeleton;  // entries inherit the source question's skeleton
    entry.s = candidate.s;
    entry.w = candidate.w;
    entry.generator = candidate.generator;
    entry.source_question_id = record.id;
    const PoolLabel label = route(candidate.s, candidate.w);
    if (label == PoolLabel::Positive) {
      pools.positive.insert(std::move(entry));
      ++stats.positive_count;
      ++stats.per_generator[candidate.generator.name].positive;
      positive_indices.push_back(i);
    } else {
      pools.negative.insert(std::move(entry));
      ++stats.negative_count;
      ++stats.per_generator[candidate.generator.name].negative;
    }
    if (candidate.parse_failure) ++stats.parse_failures;
  }

  // Highest (s+w) first; stable sort keeps canonical order among ties.
  std::stable_sort(positive_indices.begin(), positive_indices.end(),
                   [&](std::size_t a, std::size_t b) {
                     return scored[a].s + scored[a].w > scored[b].s + scored[b].w;
                   });
  const std::size_t take = std::min(config.k_out, positive_indices.size());
  for (std::size_t rank = 0; rank < take; ++rank) {
    const ScoredCandidate& pick = scored[positive_indices[rank]];
    group.augmentations.push_back({pick.text, pick.s, pick.w, pick.generator});
  }
  return {std::move(group), std::move(scored)};
}

using ProgressFn = std::function<void(const QuestionRecord&, const AugmentedGroup&,
                                      const std::vector<ScoredCandidate>&)>;

/// Full run: sample the corpus, process questions sequentially so the pools
/// evolve in a well-defined order, then write every run artifact under
/// output_dir.
inline std::pair<AugmentedDataset, RunStats> augment_dataset(
    const RunConfig& config, const BackendFactory& factory = default_backend_factory(),
    const ProgressFn& progress = nullptr) {
  validate_config(config);
  const PromptTemplates templates = config.templates_dir.empty()
                                        ? PromptTemplates{}
                                        : load_templates(config.templates_dir);

  const std::vector<QuestionRecord> records = load_dataset(config.paths.input);
  const std::vector<QuestionRecord> sampled =
      sample_fraction(records, config.sample_fraction, config.seed);

  std::vector<std::unique_ptr<Backend>> generators;
  for (const BackendConfig& generator : config.generators)
    generators.push_back(factory(generator));
  std::unique_ptr<Backend> scorer = factory(config.scorer);

  PoolPair pools;
  RunStats stats;
  stats.setting = config.setting;

  AugmentedDataset dataset;
  dataset.run_id = run_id(config);
  dataset.config_digest = config_digest(config);
  for (const QuestionRecord& record : sampled) {
    auto [group, scored] =
        augment_question(record, config, pools, generators, *scorer, templates, stats);
    if (progress) progress(record, group, scored);
    dataset.groups.push_back(std::move(group));
  }

  const std::filesystem::path& out = config.paths.output_dir;
  std::error_code ec;
  std::filesystem::create_directories(out / "pools", ec);
  if (ec) fail(ErrorCode::io_failure, "cannot create run directory " + out.string());

  write_augmented(dataset, out / "augmented.jsonl");
  pools.positive.persist(out / "pools" / "positive.jsonl");
  pools.negative.persist(out / "pools" / "negative.jsonl");

  const std::vector<SettingResult> results = {make_setting_result(
      config.setting, stats.positive_count, stats.negative_count, stats.parse_failures)};
  write_report_json(results, dataset.run_id, dataset.config_digest, out / "report.json");
  write_text_file(out / "report.csv", render_table_csv(results));
  render_bar_chart(results, out / "chart.svg");
  write_text_file(out / "run_config.json", run_config_to_json(config).dump(2) + "\n");
  return {std::move(dataset), std::move(stats)};
}

}  // namespace qaug
