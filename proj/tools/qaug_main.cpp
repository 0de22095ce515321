// qaug: contrastive question augmentation pipeline.
//
// Subcommands: augment (full run), score (re-score a candidates file),
// pools (inspect pool files), report (merge run reports), record (live run
// that captures fixtures for offline replay).

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qaug/pipeline.hpp"

namespace fs = std::filesystem;

namespace {

template <typename Fn>
int guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const qaug::Error& e) {
    std::cerr << "error_code=" << qaug::error_code_name(e.code()) << "\n"
              << e.what() << "\n";
    return qaug::exit_class(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error_code=internal\n" << e.what() << "\n";
    return 3;
  }
}

struct AugmentOptions {
  std::string config_path;
  std::string input;
  std::string out;
  std::string setting;
  std::int64_t seed = 0;
  bool seed_set = false;
  double sample = 0.0;
  bool sample_set = false;
};

qaug::RunConfig resolve_config(const AugmentOptions& opt) {
  qaug::RunConfig config = qaug::load_run_config(opt.config_path);
  if (!opt.input.empty()) config.paths.input = opt.input;
  if (!opt.out.empty()) config.paths.output_dir = opt.out;
  if (!opt.setting.empty()) config.setting = qaug::parse_prompt_setting(opt.setting);
  if (opt.seed_set) config.seed = static_cast<std::uint64_t>(opt.seed);
  if (opt.sample_set) config.sample_fraction = opt.sample;
  if (config.paths.input.empty())
    qaug::fail(qaug::ErrorCode::bad_config, "no input corpus (use --input or paths.input)");
  if (config.paths.output_dir.empty())
    qaug::fail(qaug::ErrorCode::bad_config,
               "no output directory (use --out or paths.output_dir)");
  return config;
}

qaug::ProgressFn stderr_progress() {
  return [](const qaug::QuestionRecord& record, const qaug::AugmentedGroup& group,
            const std::vector<qaug::ScoredCandidate>& scored) {
    std::size_t positive = 0;
    for (const auto& candidate : scored)
      if (qaug::route(candidate.s, candidate.w) == qaug::PoolLabel::Positive) ++positive;
    std::fprintf(stderr, "[%s] scored=%zu positive=%zu emitted=%zu\n",
                 record.id.c_str(), scored.size(), positive,
                 group.augmentations.size());
  };
}

int run_augment_with(const qaug::RunConfig& config, const qaug::BackendFactory& factory) {
  auto [dataset, stats] = qaug::augment_dataset(config, factory, stderr_progress());
  if (stats.positive_count + stats.negative_count == 0)
    std::cerr << "warning: run produced no scored candidates\n";
  qaug::ojson summary;
  summary["run_id"] = dataset.run_id;
  summary["config_digest"] = dataset.config_digest;
  summary["groups"] = dataset.groups.size();
  summary["positive"] = stats.positive_count;
  summary["negative"] = stats.negative_count;
  summary["parse_failures"] = stats.parse_failures;
  std::cout << summary.dump() << "\n";
  return 0;
}

int run_augment(const AugmentOptions& opt) {
  return run_augment_with(resolve_config(opt), qaug::default_backend_factory());
}

int run_record(const AugmentOptions& opt, const std::string& fixtures_dir) {
  qaug::RunConfig config = resolve_config(opt);
  for (const qaug::BackendConfig& generator : config.generators)
    if (generator.kind != qaug::BackendKind::HttpChat)
      qaug::fail(qaug::ErrorCode::bad_config,
                 "record needs http_chat backends; \"" + generator.model.name +
                     "\" is scripted");
  if (config.scorer.kind != qaug::BackendKind::HttpChat)
    qaug::fail(qaug::ErrorCode::bad_config, "record needs an http_chat scorer");
  const fs::path fixtures(fixtures_dir);
  qaug::BackendFactory factory = [fixtures](const qaug::BackendConfig& backend) {
    return std::unique_ptr<qaug::Backend>(new qaug::RecordingBackend(
        qaug::make_backend(backend), fixtures / backend.model.name));
  };
  return run_augment_with(config, factory);
}

int run_score(const std::string& candidates_path, const std::string& config_path,
              const std::string& out_path) {
  qaug::RunConfig config = qaug::load_run_config(config_path);
  const qaug::PromptTemplates templates =
      config.templates_dir.empty() ? qaug::PromptTemplates{}
                                   : qaug::load_templates(config.templates_dir);

  std::ifstream in(candidates_path, std::ios::binary);
  if (!in)
    qaug::fail(qaug::ErrorCode::io_failure, "cannot open " + candidates_path);
  std::vector<qaug::ScoringItem> items;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (qaug::trim(line).empty()) continue;
    qaug::ojson obj;
    try {
      obj = qaug::ojson::parse(line);
      qaug::ScoringItem item;
      item.original.id = obj.at("id").get<std::string>();
      item.original.question = obj.at("question").get<std::string>();
      if (obj.contains("logical_form"))
        item.original.logical_form = obj.at("logical_form").get<std::string>();
      item.original.answer = obj.value("answer", std::string());
      item.candidate = obj.at("candidate").get<std::string>();
      item.generator.name = obj.value("generator", std::string("unknown"));
      items.push_back(std::move(item));
    } catch (const nlohmann::json::exception& e) {
      qaug::fail(qaug::ErrorCode::malformed_line,
                 "line " + std::to_string(line_no) + ": " + e.what());
    }
  }

  std::vector<qaug::ModelId> generator_models;
  for (const qaug::BackendConfig& generator : config.generators)
    generator_models.push_back(generator.model);
  const std::vector<qaug::ScoredCandidate> scored = qaug::score_candidates(
      config.scorer, items, generator_models, templates,
      qaug::default_backend_factory(), config.workers);

  std::string out;
  for (std::size_t i = 0; i < scored.size(); ++i) {
    qaug::ojson obj;
    obj["id"] = items[i].original.id;
    obj["question"] = items[i].original.question;
    if (items[i].original.logical_form)
      obj["logical_form"] = *items[i].original.logical_form;
    obj["candidate"] = scored[i].text;
    obj["generator"] = scored[i].generator.name;
    obj["s"] = scored[i].s;
    obj["w"] = scored[i].w;
    obj["rationale"] = scored[i].rationale;
    obj["parse_failure"] = scored[i].parse_failure;
    out += obj.dump();
    out += '\n';
  }
  qaug::write_text_file(out_path, out);
  std::fprintf(stderr, "scored %zu candidates\n", scored.size());
  return 0;
}

qaug::ojson pool_stats(const qaug::ExamplePool& pool) {
  qaug::ojson stats;
  stats["count"] = pool.size();
  if (pool.empty()) {
    stats["mean_s"] = nullptr;
    stats["mean_w"] = nullptr;
  } else {
    double sum_s = 0.0;
    double sum_w = 0.0;
    for (const qaug::PoolEntry& entry : pool.entries()) {
      sum_s += entry.s;
      sum_w += entry.w;
    }
    stats["mean_s"] = sum_s / static_cast<double>(pool.size());
    stats["mean_w"] = sum_w / static_cast<double>(pool.size());
  }
  return stats;
}

void print_pool_entries(const qaug::ExamplePool& pool) {
  for (const qaug::PoolEntry& entry : pool.entries()) {
    qaug::ojson obj;
    obj["entry_id"] = entry.entry_id;
    obj["text"] = entry.text;
    obj["skeleton_tokens"] = entry.skeleton.tokens;
    obj["skeleton_source"] = qaug::skeleton_source_name(entry.skeleton.source);
    obj["s"] = entry.s;
    obj["w"] = entry.w;
    obj["generator"] = entry.generator.name;
    obj["source_question_id"] = entry.source_question_id;
    obj["sequence"] = entry.sequence;
    std::cout << obj.dump() << "\n";
  }
}

int run_pools(const std::string& dir, const std::string& label, bool stats) {
  const fs::path pools_dir = fs::path(dir) / "pools";
  const bool want_positive = label.empty() || label == "positive";
  const bool want_negative = label.empty() || label == "negative";
  if (!label.empty() && label != "positive" && label != "negative")
    qaug::fail(qaug::ErrorCode::bad_config, "label must be positive or negative");

  std::optional<qaug::ExamplePool> positive;
  std::optional<qaug::ExamplePool> negative;
  if (want_positive)
    positive = qaug::ExamplePool::load(qaug::PoolLabel::Positive,
                                       pools_dir / "positive.jsonl");
  if (want_negative)
    negative = qaug::ExamplePool::load(qaug::PoolLabel::Negative,
                                       pools_dir / "negative.jsonl");
  if (stats) {
    qaug::ojson doc;
    if (positive) doc["positive"] = pool_stats(*positive);
    if (negative) doc["negative"] = pool_stats(*negative);
    std::cout << doc.dump(2) << "\n";
  } else {
    if (positive) print_pool_entries(*positive);
    if (negative) print_pool_entries(*negative);
  }
  return 0;
}

int run_report(const std::vector<std::string>& runs, const std::string& out_dir) {
  if (runs.empty())
    qaug::fail(qaug::ErrorCode::bad_config, "no run directories given (--runs)");
  std::vector<std::vector<qaug::SettingResult>> all;
  std::string id_material;
  for (const std::string& run : runs) {
    all.push_back(qaug::read_report_json(fs::path(run) / "report.json"));
    id_material += run;
    id_material += '\n';
  }
  const std::vector<qaug::SettingResult> merged = qaug::merge_results(all);

  const fs::path out(out_dir);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) qaug::fail(qaug::ErrorCode::io_failure, "cannot create " + out.string());
  const std::string digest = qaug::hex64(qaug::fnv1a64(id_material));
  qaug::write_report_json(merged, "combined", digest, out / "report.json");
  qaug::write_text_file(out / "report.csv", qaug::render_table_csv(merged));
  qaug::render_bar_chart(merged, out / "chart.svg");
  std::cout << qaug::render_table_text(merged);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Contrastive question augmentation pipeline"};
  app.require_subcommand(1);
  int rc = 0;

  AugmentOptions augment_opt;
  CLI::App* augment = app.add_subcommand("augment", "Run the augmentation pipeline");
  augment->add_option("--input", augment_opt.input, "Input corpus (JSONL)");
  augment->add_option("--config", augment_opt.config_path, "Run config (JSON)")->required();
  augment->add_option("--out", augment_opt.out, "Output run directory");
  augment->add_option("--setting", augment_opt.setting,
                      "Prompt setting: instructions|examples|both");
  augment->add_option("--seed", augment_opt.seed, "Sampling seed")
      ->each([&](const std::string&) { augment_opt.seed_set = true; });
  augment->add_option("--sample", augment_opt.sample, "Sample fraction in (0,1]")
      ->each([&](const std::string&) { augment_opt.sample_set = true; });
  augment->callback([&] { rc = guarded([&] { return run_augment(augment_opt); }); });

  std::string score_candidates_path, score_config, score_out;
  CLI::App* score = app.add_subcommand("score", "Score a candidates file with the judge");
  score->add_option("--candidates", score_candidates_path, "Candidates (JSONL)")->required();
  score->add_option("--config", score_config, "Run config (JSON)")->required();
  score->add_option("--out", score_out, "Scored output (JSONL)")->required();
  score->callback([&] {
    rc = guarded([&] { return run_score(score_candidates_path, score_config, score_out); });
  });

  std::string pools_dir, pools_label;
  bool pools_stats = false;
  CLI::App* pools = app.add_subcommand("pools", "Inspect pool files of a run directory");
  pools->add_option("--dir", pools_dir, "Run directory")->required();
  pools->add_option("--label", pools_label, "positive|negative");
  pools->add_flag("--stats", pools_stats, "Print counts and mean scores");
  pools->callback(
      [&] { rc = guarded([&] { return run_pools(pools_dir, pools_label, pools_stats); }); });

  std::vector<std::string> report_runs;
  std::string report_out;
  CLI::App* report = app.add_subcommand("report", "Merge run reports into one table");
  report->add_option("--runs", report_runs, "Run directories");
  report->add_option("--out", report_out, "Output directory")->required();
  report->callback(
      [&] { rc = guarded([&] { return run_report(report_runs, report_out); }); });

  AugmentOptions record_opt;
  std::string record_fixtures;
  CLI::App* record = app.add_subcommand("record", "Live run that records fixtures");
  record->add_option("--input", record_opt.input, "Input corpus (JSONL)");
  record->add_option("--config", record_opt.config_path, "Run config (JSON)")->required();
  record->add_option("--fixtures", record_fixtures, "Fixture output directory")->required();
  record->callback(
      [&] { rc = guarded([&] { return run_record(record_opt, record_fixtures); }); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  return rc;
}
