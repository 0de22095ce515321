#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qaug/corpus.hpp"
#include "qaug/prompt.hpp"

namespace qaug {

/// One row of the per-setting results table.
struct SettingResult {
  PromptSetting setting = PromptSetting::InstructionsAndExamples;
  std::size_t positive = 0;
  std::size_t negative = 0;
  std::optional<double> acc;  // percentage, two decimals; empty when no samples
  std::size_t parse_failures = 0;

  friend bool operator==(const SettingResult&, const SettingResult&) = default;
};

/// 100 * positive / (positive + negative), rounded half-up to two decimals.
/// Computed in integer arithmetic so the rounding is exact on every platform.
inline double accuracy(std::size_t positive, std::size_t negative) {
  const std::uint64_t total = positive + negative;
  if (total == 0) fail(ErrorCode::no_samples, "no scored candidates to rate");
  const std::uint64_t numerator = 10000ULL * positive;  // centi-percent
  const std::uint64_t centi = (2 * numerator + total) / (2 * total);
  return static_cast<double>(centi) / 100.0;
}

inline std::string format_percent(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", value);
  return std::string(buf);
}

inline SettingResult make_setting_result(PromptSetting setting, std::size_t positive,
                                         std::size_t negative,
                                         std::size_t parse_failures = 0) {
  SettingResult result;
  result.setting = setting;
  result.positive = positive;
  result.negative = negative;
  result.parse_failures = parse_failures;
  if (positive + negative > 0) result.acc = accuracy(positive, negative);
  return result;
}

inline std::string render_table_csv(const std::vector<SettingResult>& results) {
  std::string csv = "Setting,positive,Negative,Acc\n";
  for (const SettingResult& row : results) {
    csv += prompt_setting_label(row.setting);
    csv += ',';
    csv += std::to_string(row.positive);
    csv += ',';
    csv += std::to_string(row.negative);
    csv += ',';
    if (row.acc) csv += format_percent(*row.acc);
    csv += '\n';
  }
  return csv;
}

inline std::string render_table_text(const std::vector<SettingResult>& results) {
  const std::vector<std::string> headers = {"Setting", "positive", "Negative", "Acc"};
  std::vector<std::vector<std::string>> rows;
  for (const SettingResult& row : results)
    rows.push_back({prompt_setting_label(row.setting), std::to_string(row.positive),
                    std::to_string(row.negative),
                    row.acc ? format_percent(*row.acc) : std::string("-")});
  std::vector<std::size_t> widths;
  for (std::size_t c = 0; c < headers.size(); ++c) {
    std::size_t width = headers[c].size();
    for (const auto& row : rows) width = std::max(width, row[c].size());
    widths.push_back(width);
  }
  auto emit_row = [&](const std::vector<std::string>& cells) {
    std::string line;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (c > 0) line += "  ";
      line += cells[c];
      line.append(widths[c] - cells[c].size(), ' ');
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    return line + "\n";
  };
  std::string text = emit_row(headers);
  for (const auto& row : rows) text += emit_row(row);
  return text;
}

namespace detail {

inline std::string svg_num(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", value);
  return std::string(buf);
}

// Smallest {1,2,5}*10^k not below the maximum; keeps axis ticks tidy.
inline double nice_ceiling(double max_value) {
  if (max_value <= 0.0) return 1.0;
  double magnitude = 1.0;
  while (magnitude * 10.0 <= max_value) magnitude *= 10.0;
  while (magnitude > max_value) magnitude /= 10.0;
  for (double step : {1.0, 2.0, 5.0, 10.0}) {
    if (magnitude * step >= max_value) return magnitude * step;
  }
  return magnitude * 10.0;
}

}  // namespace detail

/// Static grouped bar chart: per setting, one bar each for the positive
/// count, the negative count, and the accuracy percentage. Layout constants
/// are fixed so equal inputs produce byte-equal SVG.
inline std::string render_bar_chart_svg(const std::vector<SettingResult>& results) {
  if (results.empty())
    fail(ErrorCode::bad_config, "bar chart needs at least one result row");

  constexpr double kWidth = 720.0, kHeight = 420.0;
  constexpr double kLeft = 70.0, kRight = 30.0, kTop = 50.0, kBottom = 70.0;
  const char* kSeriesColor[3] = {"#4e79a7", "#e15759", "#76b7b2"};
  const char* kSeriesName[3] = {"positive", "negative", "acc"};

  double max_value = 0.0;
  for (const SettingResult& row : results) {
    max_value = std::max(max_value, static_cast<double>(row.positive));
    max_value = std::max(max_value, static_cast<double>(row.negative));
    if (row.acc) max_value = std::max(max_value, *row.acc);
  }
  const double y_max = detail::nice_ceiling(max_value);
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  const double group_w = plot_w / static_cast<double>(results.size());
  const double bar_w = group_w / 4.0;

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + detail::svg_num(kWidth) +
         "\" height=\"" + detail::svg_num(kHeight) + "\" viewBox=\"0 0 " +
         detail::svg_num(kWidth) + " " + detail::svg_num(kHeight) + "\">\n";
  svg += "<rect width=\"" + detail::svg_num(kWidth) + "\" height=\"" +
         detail::svg_num(kHeight) + "\" fill=\"#ffffff\"/>\n";

  // Axes and ticks.
  const double axis_y = kTop + plot_h;
  svg += "<line x1=\"" + detail::svg_num(kLeft) + "\" y1=\"" + detail::svg_num(kTop) +
         "\" x2=\"" + detail::svg_num(kLeft) + "\" y2=\"" + detail::svg_num(axis_y) +
         "\" stroke=\"#333333\"/>\n";
  svg += "<line x1=\"" + detail::svg_num(kLeft) + "\" y1=\"" + detail::svg_num(axis_y) +
         "\" x2=\"" + detail::svg_num(kLeft + plot_w) + "\" y2=\"" +
         detail::svg_num(axis_y) + "\" stroke=\"#333333\"/>\n";
  for (int tick = 0; tick <= 5; ++tick) {
    const double value = y_max * tick / 5.0;
    const double y = axis_y - plot_h * tick / 5.0;
    svg += "<line x1=\"" + detail::svg_num(kLeft - 5.0) + "\" y1=\"" + detail::svg_num(y) +
           "\" x2=\"" + detail::svg_num(kLeft) + "\" y2=\"" + detail::svg_num(y) +
           "\" stroke=\"#333333\"/>\n";
    svg += "<text x=\"" + detail::svg_num(kLeft - 10.0) + "\" y=\"" +
           detail::svg_num(y + 4.0) +
           "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"end\">" +
           detail::svg_num(value) + "</text>\n";
  }
  svg += "<text x=\"" + detail::svg_num(kLeft - 55.0) + "\" y=\"" +
         detail::svg_num(kTop + plot_h / 2.0) +
         "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\" "
         "transform=\"rotate(-90 " + detail::svg_num(kLeft - 55.0) + " " +
         detail::svg_num(kTop + plot_h / 2.0) + ")\">count / percent</text>\n";

  // Bars.
  for (std::size_t g = 0; g < results.size(); ++g) {
    const SettingResult& row = results[g];
    const double values[3] = {static_cast<double>(row.positive),
                              static_cast<double>(row.negative),
                              row.acc ? *row.acc : 0.0};
    const double group_x = kLeft + group_w * static_cast<double>(g);
    for (int series = 0; series < 3; ++series) {
      const double h = y_max > 0.0 ? plot_h * values[series] / y_max : 0.0;
      const double x = group_x + bar_w * (0.5 + static_cast<double>(series));
      svg += "<rect class=\"bar\" x=\"" + detail::svg_num(x) + "\" y=\"" +
             detail::svg_num(axis_y - h) + "\" width=\"" + detail::svg_num(bar_w * 0.9) +
             "\" height=\"" + detail::svg_num(h) + "\" fill=\"" +
             kSeriesColor[series] + "\"/>\n";
    }
    svg += "<text x=\"" + detail::svg_num(group_x + group_w / 2.0) + "\" y=\"" +
           detail::svg_num(axis_y + 24.0) +
           "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">" +
           prompt_setting_label(row.setting) + "</text>\n";
  }

  // Legend.
  for (int series = 0; series < 3; ++series) {
    const double x = kLeft + 10.0 + 110.0 * series;
    svg += "<circle cx=\"" + detail::svg_num(x) + "\" cy=\"" + detail::svg_num(kTop - 24.0) +
           "\" r=\"6\" fill=\"" + kSeriesColor[series] + "\"/>\n";
    svg += "<text x=\"" + detail::svg_num(x + 12.0) + "\" y=\"" +
           detail::svg_num(kTop - 20.0) +
           "\" font-family=\"sans-serif\" font-size=\"12\">" + kSeriesName[series] +
           "</text>\n";
  }

  svg += "</svg>\n";
  return svg;
}

inline void render_bar_chart(const std::vector<SettingResult>& results,
                             const std::filesystem::path& path) {
  write_text_file(path, render_bar_chart_svg(results));
}

inline ojson report_to_json(const std::vector<SettingResult>& results,
                            const std::string& run_id,
                            const std::string& config_digest) {
  ojson doc;
  ojson rows = ojson::array();
  for (const SettingResult& row : results) {
    ojson r;
    r["setting"] = prompt_setting_name(row.setting);
    r["positive"] = row.positive;
    r["negative"] = row.negative;
    if (row.acc)
      r["acc"] = *row.acc;
    else
      r["acc"] = nullptr;
    r["parse_failures"] = row.parse_failures;
    rows.push_back(std::move(r));
  }
  doc["results"] = std::move(rows);
  doc["run_id"] = run_id;
  doc["config_digest"] = config_digest;
  return doc;
}

inline void write_report_json(const std::vector<SettingResult>& results,
                              const std::string& run_id,
                              const std::string& config_digest,
                              const std::filesystem::path& path) {
  write_text_file(path, report_to_json(results, run_id, config_digest).dump(2) + "\n");
}

inline std::vector<SettingResult> read_report_json(const std::filesystem::path& path) {
  ojson doc;
  try {
    doc = ojson::parse(read_text_file(path));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::malformed_line, "report " + path.string() + ": " + e.what());
  }
  std::vector<SettingResult> results;
  try {
    for (const auto& r : doc.at("results")) {
      SettingResult row;
      row.setting = parse_prompt_setting(r.at("setting").get<std::string>());
      row.positive = r.at("positive").get<std::size_t>();
      row.negative = r.at("negative").get<std::size_t>();
      if (r.contains("acc") && !r.at("acc").is_null()) row.acc = r.at("acc").get<double>();
      if (r.contains("parse_failures"))
        row.parse_failures = r.at("parse_failures").get<std::size_t>();
      results.push_back(row);
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::malformed_line, "report " + path.string() + ": " + e.what());
  }
  return results;
}

/// Sums counts per setting across runs and recomputes accuracy; rows come out
/// in the fixed setting order.
inline std::vector<SettingResult> merge_results(
    const std::vector<std::vector<SettingResult>>& runs) {
  std::map<int, SettingResult> by_setting;
  for (const auto& run : runs) {
    for (const SettingResult& row : run) {
      SettingResult& merged = by_setting[static_cast<int>(row.setting)];
      merged.setting = row.setting;
      merged.positive += row.positive;
      merged.negative += row.negative;
      merged.parse_failures += row.parse_failures;
    }
  }
  std::vector<SettingResult> results;
  for (PromptSetting setting :
       {PromptSetting::InstructionsOnly, PromptSetting::ExamplesOnly,
        PromptSetting::InstructionsAndExamples}) {
    auto it = by_setting.find(static_cast<int>(setting));
    if (it == by_setting.end()) continue;
    SettingResult row = it->second;
    if (row.positive + row.negative > 0) row.acc = accuracy(row.positive, row.negative);
    results.push_back(row);
  }
  return results;
}

}  // namespace qaug
