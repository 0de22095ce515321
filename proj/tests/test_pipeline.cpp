#include <gtest/gtest.h>

#include "qaug/pipeline.hpp"
#include "support/synth_backend.hpp"
#include "support/temp_dir.hpp"

using namespace qaug;
using qaug_test::TempDir;

namespace {

BackendConfig scripted(const std::string& model, const std::filesystem::path& fixtures) {
  BackendConfig config;
  config.model.name = model;
  config.kind = BackendKind::Scripted;
  config.fixtures_path = fixtures;
  return config;
}

RunConfig base_config(const TempDir& dir) {
  RunConfig config;
  config.setting = PromptSetting::InstructionsAndExamples;
  config.generators = {scripted("gen-a", dir / "fixtures/gen-a"),
                       scripted("gen-b", dir / "fixtures/gen-b")};
  config.scorer = scripted("scorer", dir / "fixtures/scorer");
  config.m = 1;
  config.k_gen = 3;
  config.k_out = 3;
  config.sample_fraction = 1.0;
  config.seed = 7;
  config.paths.input = dir / "corpus.jsonl";
  config.paths.output_dir = dir / "out";
  return config;
}

void write_small_corpus(const std::filesystem::path& path, std::size_t n) {
  std::string content;
  for (std::size_t i = 0; i < n; ++i) {
    ojson obj;
    obj["id"] = "q" + std::to_string(i + 1);
    obj["question"] = "What is interesting fact number " + std::to_string(i + 1) + "?";
    obj["answer"] = "fact " + std::to_string(i + 1);
    content += obj.dump() + "\n";
  }
  write_text_file(path, content);
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected qaug::Error";
  return ErrorCode::io_failure;
}

std::size_t line_count(const std::filesystem::path& path) {
  std::size_t count = 0;
  for (const std::string& line : split_lines(read_text_file(path)))
    if (!trim(line).empty()) ++count;
  return count;
}

}  // namespace

TEST(ValidateConfig, RejectsBadShapes) {
  TempDir dir;
  RunConfig config = base_config(dir);
  config.generators.clear();
  EXPECT_EQ(code_of([&] { validate_config(config); }), ErrorCode::bad_config);

  config = base_config(dir);
  config.scorer.model.name = "gen-a";
  EXPECT_EQ(code_of([&] { validate_config(config); }), ErrorCode::scorer_not_disjoint);

  config = base_config(dir);
  config.generators.push_back(config.generators[0]);
  EXPECT_EQ(code_of([&] { validate_config(config); }), ErrorCode::bad_config);

  config = base_config(dir);
  config.sample_fraction = 0.0;
  EXPECT_EQ(code_of([&] { validate_config(config); }), ErrorCode::fraction_out_of_range);

  config = base_config(dir);
  config.k_gen = 0;
  EXPECT_EQ(code_of([&] { validate_config(config); }), ErrorCode::bad_config);

  validate_config(base_config(dir));  // the baseline itself is fine
}

TEST(RunConfigJson, DefaultsAndRoundTrip) {
  const ojson minimal = ojson::parse(R"({
    "generators": [{"model": "a", "kind": "scripted", "fixtures_path": "fa"}],
    "scorer": {"model": "s", "kind": "scripted", "fixtures_path": "fs"}
  })");
  const RunConfig config = parse_run_config(minimal);
  EXPECT_EQ(config.setting, PromptSetting::InstructionsAndExamples);
  EXPECT_EQ(config.m, 1u);
  EXPECT_EQ(config.k_gen, 3u);
  EXPECT_EQ(config.k_out, 3u);
  EXPECT_DOUBLE_EQ(config.sample_fraction, 0.25);
  EXPECT_EQ(config.workers, 1u);
  EXPECT_DOUBLE_EQ(config.temperature, 0.7);
  EXPECT_EQ(config.max_tokens, 256u);

  TempDir dir;
  const RunConfig original = base_config(dir);
  const RunConfig reparsed = parse_run_config(run_config_to_json(original));
  EXPECT_EQ(reparsed.setting, original.setting);
  ASSERT_EQ(reparsed.generators.size(), original.generators.size());
  for (std::size_t i = 0; i < original.generators.size(); ++i) {
    EXPECT_EQ(reparsed.generators[i].model, original.generators[i].model);
    EXPECT_EQ(reparsed.generators[i].fixtures_path, original.generators[i].fixtures_path);
  }
  EXPECT_EQ(reparsed.scorer.model, original.scorer.model);
  EXPECT_EQ(reparsed.seed, original.seed);
  EXPECT_EQ(reparsed.paths.input, original.paths.input);
}

TEST(RunConfigJson, MissingSectionsRejected) {
  EXPECT_EQ(code_of([] { parse_run_config(ojson::parse(R"({"scorer":{"model":"s"}})")); }),
            ErrorCode::bad_config);
  EXPECT_EQ(code_of([] {
              parse_run_config(ojson::parse(
                  R"({"generators":[{"model":"a","fixtures_path":"f"}]})"));
            }),
            ErrorCode::bad_config);
}

TEST(ConfigDigest, IgnoresPathsAndWorkers) {
  TempDir dir_a;
  TempDir dir_b;
  RunConfig a = base_config(dir_a);
  RunConfig b = base_config(dir_b);
  b.workers = 8;
  EXPECT_EQ(config_digest(a), config_digest(b));
  EXPECT_EQ(run_id(a), run_id(b));
  b.seed = a.seed + 1;
  EXPECT_NE(config_digest(a), config_digest(b));
}

TEST(AugmentQuestion, TraceWithAuthoredFixtures) {
  TempDir dir;
  RunConfig config = base_config(dir);
  config.setting = PromptSetting::InstructionsOnly;  // prompt independent of pools
  const PromptTemplates templates;

  QuestionRecord record;
  record.id = "q1";
  record.question = "Who painted the Mona Lisa?";
  record.answer = "Leonardo da Vinci";

  const RenderedPrompt gen_prompt = build_generation_prompt(
      config.setting, record.question, {}, {}, config.k_gen, templates);
  const std::vector<std::string> a_texts = {"Which artist painted the Mona Lisa?",
                                            "Who created the Mona Lisa painting?",
                                            "The Mona Lisa was painted by whom?"};
  const std::vector<std::string> b_texts = {"Who is the painter behind the Mona Lisa?",
                                            "Name the artist of the Mona Lisa.",
                                            "Which painter produced the Mona Lisa?"};
  std::filesystem::create_directories(dir / "fixtures/gen-a");
  std::filesystem::create_directories(dir / "fixtures/gen-b");
  std::filesystem::create_directories(dir / "fixtures/scorer");
  auto fixture_body = [](const std::vector<std::string>& texts) {
    std::string body;
    for (std::size_t i = 0; i < texts.size(); ++i)
      body += "Q" + std::to_string(i + 1) + ": " + texts[i] + "\n";
    return body;
  };
  write_text_file(dir / "fixtures/gen-a" / (gen_prompt.digest + ".txt"),
                  fixture_body(a_texts));
  write_text_file(dir / "fixtures/gen-b" / (gen_prompt.digest + ".txt"),
                  fixture_body(b_texts));

  // Six candidates, scored so that four are positive and two negative.
  const std::vector<std::pair<int, int>> scores = {{4, 4}, {2, 2}, {5, 4},
                                                   {4, 5}, {3, 4}, {5, 5}};
  std::vector<std::string> all_texts = a_texts;
  all_texts.insert(all_texts.end(), b_texts.begin(), b_texts.end());
  for (std::size_t i = 0; i < all_texts.size(); ++i) {
    const RenderedPrompt p = build_scoring_prompt(record, all_texts[i], templates);
    write_text_file(dir / "fixtures/scorer" / (p.digest + ".txt"),
                    "Assessed.\nQUALITY: " + std::to_string(scores[i].first) +
                        "\nCONSISTENCY: " + std::to_string(scores[i].second) + "\n");
  }

  std::vector<std::unique_ptr<Backend>> generators;
  for (const BackendConfig& g : config.generators) generators.push_back(make_backend(g));
  ScriptedBackend scorer(config.scorer);
  PoolPair pools;
  RunStats stats;
  stats.setting = config.setting;
  auto [group, scored] =
      augment_question(record, config, pools, generators, scorer, templates, stats);

  ASSERT_EQ(scored.size(), 6u);
  EXPECT_EQ(pools.positive.size(), 4u);
  EXPECT_EQ(pools.negative.size(), 2u);
  EXPECT_EQ(stats.positive_count, 4u);
  EXPECT_EQ(stats.negative_count, 2u);
  // k_out=3 positives by (s+w) descending: (5,5)=10, then the 9s in canonical
  // order: gen-a's (5,4) before gen-b's (4,5).
  ASSERT_EQ(group.augmentations.size(), 3u);
  EXPECT_EQ(group.augmentations[0].text, all_texts[5]);
  EXPECT_EQ(group.augmentations[1].text, all_texts[2]);
  EXPECT_EQ(group.augmentations[2].text, all_texts[3]);
  // Pool entries inherit the source question's skeleton.
  const Skeleton source_skeleton = extract_skeleton(record);
  for (const PoolEntry& entry : pools.positive.entries())
    EXPECT_EQ(entry.skeleton, source_skeleton);
  // Generator attribution in tallies.
  EXPECT_EQ(stats.per_generator["gen-a"].positive, 2u);
  EXPECT_EQ(stats.per_generator["gen-a"].negative, 1u);
  EXPECT_EQ(stats.per_generator["gen-b"].positive, 2u);
  EXPECT_EQ(stats.per_generator["gen-b"].negative, 1u);
}

TEST(AugmentQuestion, CallTimeScorerDisjointnessGuard) {
  // Even bypassing config validation, the per-question path re-asserts that
  // the scorer is not one of the generators.
  TempDir dir;
  RunConfig config = base_config(dir);
  const PromptTemplates templates;
  QuestionRecord record;
  record.id = "q1";
  record.question = "Anything at all?";
  record.answer = "x";
  std::vector<std::unique_ptr<Backend>> generators;
  for (const BackendConfig& g : config.generators) generators.push_back(make_backend(g));
  BackendConfig scorer_config = config.generators[0];  // same model as a generator
  ScriptedBackend scorer(scorer_config);
  PoolPair pools;
  RunStats stats;
  EXPECT_EQ(code_of([&] {
              augment_question(record, config, pools, generators, scorer, templates,
                               stats);
            }),
            ErrorCode::scorer_not_disjoint);
}

TEST(AugmentQuestion, DuplicateCandidatesCollapse) {
  TempDir dir;
  RunConfig config = base_config(dir);
  config.setting = PromptSetting::InstructionsOnly;
  const PromptTemplates templates;
  QuestionRecord record;
  record.id = "q1";
  record.question = "How many continents are there?";
  record.answer = "Seven";
  const RenderedPrompt gen_prompt = build_generation_prompt(
      config.setting, record.question, {}, {}, config.k_gen, templates);
  std::filesystem::create_directories(dir / "fixtures/gen-a");
  std::filesystem::create_directories(dir / "fixtures/gen-b");
  std::filesystem::create_directories(dir / "fixtures/scorer");
  // Both backends emit the same single text three times.
  const std::string same = "Q1: How many continents exist?\nQ2: How many continents exist?\n"
                           "Q3: How many continents exist?\n";
  write_text_file(dir / "fixtures/gen-a" / (gen_prompt.digest + ".txt"), same);
  write_text_file(dir / "fixtures/gen-b" / (gen_prompt.digest + ".txt"), same);
  const RenderedPrompt p =
      build_scoring_prompt(record, "How many continents exist?", templates);
  write_text_file(dir / "fixtures/scorer" / (p.digest + ".txt"),
                  "Good.\nQUALITY: 4\nCONSISTENCY: 4\n");

  std::vector<std::unique_ptr<Backend>> generators;
  for (const BackendConfig& g : config.generators) generators.push_back(make_backend(g));
  ScriptedBackend scorer(config.scorer);
  PoolPair pools;
  RunStats stats;
  auto [group, scored] =
      augment_question(record, config, pools, generators, scorer, templates, stats);
  ASSERT_EQ(scored.size(), 1u);
  EXPECT_EQ(scored[0].generator.name, "gen-a");  // first in canonical order wins
  EXPECT_EQ(pools.positive.size() + pools.negative.size(), 1u);
}

TEST(AugmentQuestion, AllNegativeYieldsEmptyGroup) {
  TempDir dir;
  RunConfig config = base_config(dir);
  config.setting = PromptSetting::InstructionsOnly;
  const PromptTemplates templates;
  QuestionRecord record;
  record.id = "q1";
  record.question = "Which ocean is the deepest?";
  record.answer = "The Pacific Ocean";
  const RenderedPrompt gen_prompt = build_generation_prompt(
      config.setting, record.question, {}, {}, config.k_gen, templates);
  std::filesystem::create_directories(dir / "fixtures/gen-a");
  std::filesystem::create_directories(dir / "fixtures/gen-b");
  std::filesystem::create_directories(dir / "fixtures/scorer");
  auto body = [](char tag) {
    std::string out;
    for (int i = 1; i <= 3; ++i)
      out += "Q" + std::to_string(i) + ": Variant " + tag + std::to_string(i) +
             " of the ocean question?\n";
    return out;
  };
  write_text_file(dir / "fixtures/gen-a" / (gen_prompt.digest + ".txt"), body('a'));
  write_text_file(dir / "fixtures/gen-b" / (gen_prompt.digest + ".txt"), body('b'));
  for (char tag : {'a', 'b'}) {
    for (int i = 1; i <= 3; ++i) {
      const std::string text =
          "Variant " + std::string(1, tag) + std::to_string(i) + " of the ocean question?";
      const RenderedPrompt p = build_scoring_prompt(record, text, templates);
      write_text_file(dir / "fixtures/scorer" / (p.digest + ".txt"),
                      "Weak.\nQUALITY: 2\nCONSISTENCY: 2\n");
    }
  }
  std::vector<std::unique_ptr<Backend>> generators;
  for (const BackendConfig& g : config.generators) generators.push_back(make_backend(g));
  ScriptedBackend scorer(config.scorer);
  PoolPair pools;
  RunStats stats;
  auto [group, scored] =
      augment_question(record, config, pools, generators, scorer, templates, stats);
  EXPECT_TRUE(group.augmentations.empty());
  EXPECT_EQ(pools.negative.size(), 6u);
  EXPECT_EQ(pools.positive.size(), 0u);
}

TEST(AugmentDataset, DeterministicAcrossRunsAndWorkerCounts) {
  TempDir dir;
  write_small_corpus(dir / "corpus.jsonl", 5);
  RunConfig config = base_config(dir);

  // First pass synthesizes fixtures on miss; later passes replay them.
  config.paths.output_dir = dir / "out1";
  auto [ds1, stats1] = augment_dataset(config, qaug_test::synth_backend_factory());

  config.paths.output_dir = dir / "out2";
  auto [ds2, stats2] = augment_dataset(config);

  config.paths.output_dir = dir / "out3";
  config.workers = 8;
  auto [ds3, stats3] = augment_dataset(config);

  for (const char* name : {"augmented.jsonl", "pools/positive.jsonl",
                           "pools/negative.jsonl", "report.json", "chart.svg",
                           "report.csv"}) {
    const std::string first = read_text_file(dir / "out1" / name);
    EXPECT_EQ(first, read_text_file(dir / "out2" / name)) << name;
    EXPECT_EQ(first, read_text_file(dir / "out3" / name)) << name;
  }
  EXPECT_EQ(stats1.positive_count, stats3.positive_count);
  EXPECT_EQ(stats1.negative_count, stats3.negative_count);
  EXPECT_EQ(ds1.groups.size(), 5u);
  EXPECT_EQ(ds2.groups.size(), 5u);
}

TEST(AugmentDataset, ConservationAndPositivePoolCoverage) {
  TempDir dir;
  write_small_corpus(dir / "corpus.jsonl", 6);
  RunConfig config = base_config(dir);
  auto [dataset, stats] = augment_dataset(config, qaug_test::synth_backend_factory());

  const std::size_t positive_lines = line_count(dir / "out/pools/positive.jsonl");
  const std::size_t negative_lines = line_count(dir / "out/pools/negative.jsonl");
  EXPECT_EQ(positive_lines, stats.positive_count);
  EXPECT_EQ(negative_lines, stats.negative_count);
  EXPECT_GT(positive_lines + negative_lines, 0u);

  // Every emitted augmentation also sits in the positive pool, and no group
  // exceeds the output cap.
  const ExamplePool positive =
      ExamplePool::load(PoolLabel::Positive, dir / "out/pools/positive.jsonl");
  std::set<std::string> pool_texts;
  for (const PoolEntry& entry : positive.entries()) pool_texts.insert(entry.text);
  for (const AugmentedGroup& group : dataset.groups) {
    EXPECT_LE(group.augmentations.size(), config.k_out);
    for (const AcceptedQuestion& aug : group.augmentations)
      EXPECT_TRUE(pool_texts.count(aug.text)) << aug.text;
  }

  // Group order matches the sampled corpus order.
  for (std::size_t i = 0; i < dataset.groups.size(); ++i)
    EXPECT_EQ(dataset.groups[i].source.id, "q" + std::to_string(i + 1));
}

TEST(AugmentDataset, SampledSubsetRespectsSeed) {
  TempDir dir;
  write_small_corpus(dir / "corpus.jsonl", 12);
  RunConfig config = base_config(dir);
  config.sample_fraction = 0.5;
  config.paths.output_dir = dir / "outA";
  auto [ds_a, stats_a] = augment_dataset(config, qaug_test::synth_backend_factory());
  config.paths.output_dir = dir / "outB";
  auto [ds_b, stats_b] = augment_dataset(config);
  ASSERT_EQ(ds_a.groups.size(), 6u);
  ASSERT_EQ(ds_b.groups.size(), 6u);
  for (std::size_t i = 0; i < ds_a.groups.size(); ++i)
    EXPECT_EQ(ds_a.groups[i].source.id, ds_b.groups[i].source.id);
}

TEST(AugmentDataset, RerunIntoSameDirectoryOverwrites) {
  TempDir dir;
  write_small_corpus(dir / "corpus.jsonl", 4);
  RunConfig config = base_config(dir);
  augment_dataset(config, qaug_test::synth_backend_factory());
  const std::string augmented = read_text_file(dir / "out/augmented.jsonl");
  const std::string positive = read_text_file(dir / "out/pools/positive.jsonl");
  const std::string negative = read_text_file(dir / "out/pools/negative.jsonl");
  // A rerun over the same inputs replaces every artifact instead of
  // appending to it.
  augment_dataset(config);
  EXPECT_EQ(read_text_file(dir / "out/augmented.jsonl"), augmented);
  EXPECT_EQ(read_text_file(dir / "out/pools/positive.jsonl"), positive);
  EXPECT_EQ(read_text_file(dir / "out/pools/negative.jsonl"), negative);
}

TEST(AugmentDataset, ZeroParseableCandidatesIsStillSuccess) {
  TempDir dir;
  write_text_file(dir / "corpus.jsonl",
                  "{\"id\":\"q1\",\"question\":\"Lone question?\",\"answer\":\"x\"}\n");
  RunConfig config = base_config(dir);
  config.generators.resize(1);
  const PromptTemplates templates;
  const RenderedPrompt prompt = build_generation_prompt(
      config.setting, "Lone question?", {}, {}, config.k_gen, templates);
  std::filesystem::create_directories(dir / "fixtures/gen-a");
  write_text_file(dir / "fixtures/gen-a" / (prompt.digest + ".txt"),
                  "I cannot improve this question.\n");

  auto [dataset, stats] = augment_dataset(config);
  ASSERT_EQ(dataset.groups.size(), 1u);
  EXPECT_TRUE(dataset.groups[0].augmentations.empty());
  EXPECT_EQ(stats.positive_count, 0u);
  EXPECT_EQ(stats.negative_count, 0u);
  EXPECT_EQ(stats.empty_completions, 1u);
  const auto report = read_report_json(dir / "out/report.json");
  ASSERT_EQ(report.size(), 1u);
  EXPECT_FALSE(report[0].acc.has_value());
}

TEST(AugmentDataset, MissingFixtureDuringGenerationAborts) {
  TempDir dir;
  write_small_corpus(dir / "corpus.jsonl", 1);
  RunConfig config = base_config(dir);
  std::filesystem::create_directories(dir / "fixtures/gen-a");
  std::filesystem::create_directories(dir / "fixtures/gen-b");
  EXPECT_EQ(code_of([&] { augment_dataset(config); }), ErrorCode::fixture_missing);
}
