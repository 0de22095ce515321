#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qaug/errors.hpp"
#include "qaug/model_id.hpp"
#include "qaug/util.hpp"

namespace qaug {

using ojson = nlohmann::ordered_json;

/// One source question: natural-language text plus an optional logical form
/// and the expected answer.
struct QuestionRecord {
  std::string id;
  std::string question;
  std::optional<std::string> logical_form;
  std::string answer;
  // Input fields outside the schema, kept verbatim; never consulted by logic.
  ojson extras = ojson::object();

  friend bool operator==(const QuestionRecord& a, const QuestionRecord& b) {
    return a.id == b.id && a.question == b.question &&
           a.logical_form == b.logical_form && a.answer == b.answer;
  }
};

/// A generated question that passed the quality gate (s > 3 and w > 3).
struct AcceptedQuestion {
  std::string text;
  int s = 0;
  int w = 0;
  ModelId generator;

  friend bool operator==(const AcceptedQuestion&, const AcceptedQuestion&) = default;
};

struct AugmentedGroup {
  QuestionRecord source;
  std::vector<AcceptedQuestion> augmentations;

  friend bool operator==(const AugmentedGroup&, const AugmentedGroup&) = default;
};

struct AugmentedDataset {
  std::vector<AugmentedGroup> groups;
  std::string run_id;
  std::string config_digest;
};

namespace detail {

inline QuestionRecord parse_question_record(const ojson& obj, std::size_t line_no) {
  auto malformed = [&](const std::string& why) -> void {
    fail(ErrorCode::malformed_line, "line " + std::to_string(line_no) + ": " + why);
  };
  if (!obj.is_object()) malformed("not a JSON object");
  QuestionRecord rec;
  for (const auto& [key, value] : obj.items()) {
    if (key == "id") {
      if (!value.is_string()) malformed("\"id\" must be a string");
      rec.id = value.get<std::string>();
    } else if (key == "question") {
      if (!value.is_string()) malformed("\"question\" must be a string");
      rec.question = value.get<std::string>();
    } else if (key == "logical_form") {
      if (!value.is_string()) malformed("\"logical_form\" must be a string");
      rec.logical_form = value.get<std::string>();
    } else if (key == "answer") {
      if (!value.is_string()) malformed("\"answer\" must be a string");
      rec.answer = value.get<std::string>();
    } else {
      rec.extras[key] = value;
    }
  }
  if (!obj.contains("id") || rec.id.empty()) malformed("missing or empty \"id\"");
  if (!obj.contains("question")) malformed("missing \"question\"");
  if (!obj.contains("answer")) malformed("missing \"answer\"");
  return rec;
}

}  // namespace detail

/// Loads a JSONL corpus in file order. Blank lines are skipped; ids must be
/// unique and questions non-empty after trimming.
inline std::vector<QuestionRecord> load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::io_failure, "cannot open corpus " + path.string());
  std::vector<QuestionRecord> records;
  std::set<std::string> seen_ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    ojson obj;
    try {
      obj = ojson::parse(line);
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::malformed_line,
           "line " + std::to_string(line_no) + ": " + e.what());
    }
    QuestionRecord rec = detail::parse_question_record(obj, line_no);
    if (trim(rec.question).empty())
      fail(ErrorCode::empty_question, "record \"" + rec.id + "\" has an empty question");
    if (!seen_ids.insert(rec.id).second)
      fail(ErrorCode::duplicate_id, "duplicate record id \"" + rec.id + "\"");
    records.push_back(std::move(rec));
  }
  return records;
}

/// Draws floor(fraction * N) records (at least one) without replacement using
/// a seeded generator. The subset keeps the corpus's relative order and is
/// identical for identical (records, fraction, seed).
inline std::vector<QuestionRecord> sample_fraction(const std::vector<QuestionRecord>& records,
                                                   double fraction, std::uint64_t seed) {
  if (records.empty()) fail(ErrorCode::empty_corpus, "cannot sample an empty corpus");
  if (!(fraction > 0.0) || fraction > 1.0)
    fail(ErrorCode::fraction_out_of_range,
         "sample fraction must lie in (0, 1], got " + std::to_string(fraction));
  const std::size_t total = records.size();
  auto count = static_cast<std::size_t>(
      std::floor(fraction * static_cast<double>(total) + 1e-9));
  if (count < 1) count = 1;
  if (count > total) count = total;

  std::vector<std::size_t> indices(total);
  for (std::size_t i = 0; i < total; ++i) indices[i] = i;
  // Partial Fisher-Yates with explicit modulo mapping: mt19937_64 output is
  // specified bit-exactly, so the draw is reproducible on every platform.
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng() % (total - i));
    std::swap(indices[i], indices[j]);
  }
  indices.resize(count);
  std::sort(indices.begin(), indices.end());

  std::vector<QuestionRecord> sampled;
  sampled.reserve(count);
  for (std::size_t idx : indices) sampled.push_back(records[idx]);
  return sampled;
}

namespace detail {

inline void check_group_invariants(const AugmentedGroup& group) {
  std::set<std::string> texts;
  for (const AcceptedQuestion& aug : group.augmentations) {
    if (aug.s < 1 || aug.s > 5 || aug.w < 1 || aug.w > 5)
      fail(ErrorCode::invariant_violation,
           "group \"" + group.source.id + "\": augmentation score outside 1..5");
    if (!(aug.s > 3 && aug.w > 3))
      fail(ErrorCode::invariant_violation,
           "group \"" + group.source.id + "\": augmentation with s=" +
               std::to_string(aug.s) + " w=" + std::to_string(aug.w) +
               " is not a positive");
    if (!texts.insert(aug.text).second)
      fail(ErrorCode::invariant_violation,
           "group \"" + group.source.id + "\": duplicate augmentation text");
  }
}

inline ojson group_to_json(const AugmentedGroup& group) {
  ojson obj;
  obj["id"] = group.source.id;
  obj["question"] = group.source.question;
  if (group.source.logical_form) obj["logical_form"] = *group.source.logical_form;
  obj["answer"] = group.source.answer;
  ojson augs = ojson::array();
  for (const AcceptedQuestion& aug : group.augmentations) {
    ojson a;
    a["text"] = aug.text;
    a["s"] = aug.s;
    a["w"] = aug.w;
    a["generator"] = aug.generator.name;
    augs.push_back(std::move(a));
  }
  obj["augmentations"] = std::move(augs);
  return obj;
}

}  // namespace detail

/// Writes one JSONL line per group with a fixed key order, so equal datasets
/// serialize byte-equal.
inline void write_augmented(const AugmentedDataset& dataset,
                            const std::filesystem::path& path) {
  for (const AugmentedGroup& group : dataset.groups)
    detail::check_group_invariants(group);
  std::string out;
  for (const AugmentedGroup& group : dataset.groups) {
    out += detail::group_to_json(group).dump();
    out += '\n';
  }
  write_text_file(path, out);
}

inline AugmentedDataset read_augmented(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::io_failure, "cannot open dataset " + path.string());
  AugmentedDataset dataset;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    ojson obj;
    try {
      obj = ojson::parse(line);
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::malformed_line,
           "line " + std::to_string(line_no) + ": " + e.what());
    }
    AugmentedGroup group;
    group.source = detail::parse_question_record(obj, line_no);
    group.source.extras = ojson::object();
    if (!obj.contains("augmentations") || !obj["augmentations"].is_array())
      fail(ErrorCode::malformed_line,
           "line " + std::to_string(line_no) + ": missing \"augmentations\" array");
    for (const auto& a : obj["augmentations"]) {
      AcceptedQuestion aug;
      try {
        aug.text = a.at("text").get<std::string>();
        aug.s = a.at("s").get<int>();
        aug.w = a.at("w").get<int>();
        aug.generator.name = a.at("generator").get<std::string>();
      } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::malformed_line,
             "line " + std::to_string(line_no) + ": " + e.what());
      }
      group.augmentations.push_back(std::move(aug));
    }
    detail::check_group_invariants(group);
    dataset.groups.push_back(std::move(group));
  }
  return dataset;
}

}  // namespace qaug
