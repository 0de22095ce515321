#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "qaug/skeleton.hpp"

namespace qaug {

enum class PoolLabel { Positive, Negative };

inline const char* pool_label_name(PoolLabel label) {
  return label == PoolLabel::Positive ? "positive" : "negative";
}

struct PoolEntry {
  std::string entry_id;
  std::string text;
  Skeleton skeleton;
  int s = 1;
  int w = 1;
  ModelId generator;
  std::string source_question_id;
  std::uint64_t sequence = 0;

  friend bool operator==(const PoolEntry&, const PoolEntry&) = default;
};

/// Ordered, persistent store of scored example questions. A Positive pool
/// holds only entries with s > 3 and w > 3; a Negative pool holds the rest.
class ExamplePool {
 public:
  explicit ExamplePool(PoolLabel label) : label_(label) {}

  PoolLabel label() const { return label_; }
  const std::vector<PoolEntry>& entries() const { return entries_; }
  bool empty() const { return entries_.empty(); }
  std::size_t size() const { return entries_.size(); }

  /// Appends the entry with the next sequence number. The entry's scores must
  /// match this pool's label; a mismatch signals a routing bug upstream.
  void insert(PoolEntry entry) {
    validate(entry);
    entry.sequence = next_sequence_++;
    ids_.insert(entry.entry_id);
    entries_.push_back(std::move(entry));
  }

  /// Up to m demonstrations ranked by bigram overlap against the input
  /// skeleton; candidate order is sequence order, so ties favor older entries.
  std::vector<PoolEntry> retrieve_demos(const Skeleton& input, std::size_t m) const {
    std::vector<std::pair<std::string, Skeleton>> candidates;
    candidates.reserve(entries_.size());
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      candidates.emplace_back(entries_[i].entry_id, entries_[i].skeleton);
      index.emplace(entries_[i].entry_id, i);
    }
    std::vector<PoolEntry> demos;
    for (const std::string& id : rank_candidates(input, candidates, m))
      demos.push_back(entries_[index.at(id)]);
    return demos;
  }

  void persist(const std::filesystem::path& path) const {
    std::string out;
    for (const PoolEntry& entry : entries_) {
      ojson obj;
      obj["entry_id"] = entry.entry_id;
      obj["text"] = entry.text;
      obj["skeleton_tokens"] = entry.skeleton.tokens;
      obj["skeleton_source"] = skeleton_source_name(entry.skeleton.source);
      obj["s"] = entry.s;
      obj["w"] = entry.w;
      obj["generator"] = entry.generator.name;
      obj["source_question_id"] = entry.source_question_id;
      obj["sequence"] = entry.sequence;
      out += obj.dump();
      out += '\n';
    }
    write_text_file(path, out);
  }

  static ExamplePool load(PoolLabel label, const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::io_failure, "cannot open pool " + path.string());
    ExamplePool pool(label);
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
             "pool line " + std::to_string(line_no) + ": " + e.what());
      }
      PoolEntry entry;
      try {
        entry.entry_id = obj.at("entry_id").get<std::string>();
        entry.text = obj.at("text").get<std::string>();
        entry.skeleton.tokens = obj.at("skeleton_tokens").get<std::vector<std::string>>();
        entry.skeleton.source =
            parse_skeleton_source(obj.at("skeleton_source").get<std::string>());
        entry.s = obj.at("s").get<int>();
        entry.w = obj.at("w").get<int>();
        entry.generator.name = obj.at("generator").get<std::string>();
        entry.source_question_id = obj.at("source_question_id").get<std::string>();
        entry.sequence = obj.at("sequence").get<std::uint64_t>();
      } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::malformed_line,
             "pool line " + std::to_string(line_no) + ": " + e.what());
      } catch (const Error& e) {
        fail(e.code(), "pool line " + std::to_string(line_no) + ": " + e.what());
      }
      try {
        pool.validate(entry);
      } catch (const Error& e) {
        fail(ErrorCode::corrupt_pool,
             "pool line " + std::to_string(line_no) + ": " + e.what());
      }
      if (!pool.entries_.empty() && entry.sequence <= pool.entries_.back().sequence)
        fail(ErrorCode::corrupt_pool,
             "pool line " + std::to_string(line_no) + ": sequence not increasing");
      pool.ids_.insert(entry.entry_id);
      pool.next_sequence_ = entry.sequence + 1;
      pool.entries_.push_back(std::move(entry));
    }
    return pool;
  }

 private:
  void validate(const PoolEntry& entry) const {
    if (entry.s < 1 || entry.s > 5 || entry.w < 1 || entry.w > 5)
      fail(ErrorCode::out_of_range,
           "entry \"" + entry.entry_id + "\": scores s=" + std::to_string(entry.s) +
               " w=" + std::to_string(entry.w) + " outside 1..5");
    const bool positive = entry.s > 3 && entry.w > 3;
    if (label_ == PoolLabel::Positive && !positive)
      fail(ErrorCode::label_mismatch,
           "entry \"" + entry.entry_id + "\" (s=" + std::to_string(entry.s) +
               ", w=" + std::to_string(entry.w) + ") does not qualify as positive");
    if (label_ == PoolLabel::Negative && positive)
      fail(ErrorCode::label_mismatch,
           "entry \"" + entry.entry_id + "\" (s=" + std::to_string(entry.s) +
               ", w=" + std::to_string(entry.w) + ") belongs in the positive pool");
    if (ids_.count(entry.entry_id))
      fail(ErrorCode::duplicate_entry, "duplicate entry id \"" + entry.entry_id + "\"");
  }

  PoolLabel label_;
  std::vector<PoolEntry> entries_;
  std::set<std::string> ids_;
  std::uint64_t next_sequence_ = 0;
};

}  // namespace qaug
