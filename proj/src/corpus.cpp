#include "htc/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <unordered_set>

#include "htc/csv.hpp"
#include "htc/errors.hpp"

namespace htc {

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

bool blank_after_trim(const std::string& s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c) != 0; });
}

void strip_trailing_crlf(std::string& s) {
  while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.pop_back();
}

[[noreturn]] void malformed(std::size_t row, const std::string& what) {
  throw DataError(ErrorCode::malformed_row,
                  "corpus: malformed row " + std::to_string(row) + ": " + what);
}

}  // namespace

std::string to_string(TaskId t) {
  switch (t) {
    case TaskId::task3: return "task3";
    case TaskId::task5: return "task5";
    case TaskId::task6: return "task6";
  }
  return "task3";
}

std::string to_string(Platform p) {
  switch (p) {
    case Platform::twitter: return "twitter";
    case Platform::reddit: return "reddit";
    case Platform::unknown: return "unknown";
  }
  return "unknown";
}

std::string to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::dev: return "dev";
    case Split::test: return "test";
  }
  return "train";
}

TaskId task_from_string(const std::string& s) {
  if (s == "task3") return TaskId::task3;
  if (s == "task5") return TaskId::task5;
  if (s == "task6") return TaskId::task6;
  throw ConfigError("config: unknown task '" + s + "' (expected task3|task5|task6)");
}

Platform platform_from_string(const std::string& s) {
  std::string v = lower(s);
  if (v == "twitter") return Platform::twitter;
  if (v == "reddit") return Platform::reddit;
  if (v == "unknown" || v.empty()) return Platform::unknown;
  throw DataError(ErrorCode::malformed_row, "corpus: unknown platform '" + s + "'");
}

Split split_from_string(const std::string& s) {
  if (s == "train") return Split::train;
  if (s == "dev") return Split::dev;
  if (s == "test") return Split::test;
  throw ConfigError("config: unknown split '" + s + "' (expected train|dev|test)");
}

LabelSpace LabelSpace::for_task(TaskId task) {
  if (task == TaskId::task3) return LabelSpace(task, {0, 1, 2, 3});
  return LabelSpace(task, {0, 1});
}

bool LabelSpace::contains(int label) const {
  return std::find(labels_.begin(), labels_.end(), label) != labels_.end();
}

LabeledDataset load_dataset(const std::string& path, FileFormat format,
                            const LabelSpace& label_space, Split split) {
  const char sep = format == FileFormat::csv ? ',' : '\t';
  auto records = csv::read_file(path, sep);
  if (records.empty()) {
    throw DataError(ErrorCode::malformed_row, "corpus: '" + path + "' has no header row");
  }

  const auto& header = records.front();
  auto column = [&](const std::string& name) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (lower(header[i]) == name) return i;
    }
    return std::nullopt;
  };
  auto id_col = column("id");
  auto text_col = column("text");
  auto label_col = column("label");
  auto platform_col = column("platform");
  if (!id_col || !text_col) {
    throw DataError(ErrorCode::malformed_row,
                    "corpus: '" + path + "' header must name id and text columns");
  }

  LabeledDataset ds{label_space, {}, split};
  ds.samples.reserve(records.size() - 1);
  std::unordered_set<std::string> seen_ids;
  seen_ids.reserve(records.size());

  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    const std::size_t row = r;  // 1-based data row number
    if (rec.size() != header.size()) {
      malformed(row, "expected " + std::to_string(header.size()) + " columns, got " +
                         std::to_string(rec.size()));
    }

    TextSample sample;
    sample.id = rec[*id_col];
    if (sample.id.empty()) malformed(row, "empty id");
    if (!seen_ids.insert(sample.id).second) {
      throw DataError(ErrorCode::duplicate_id, "corpus: duplicate id '" + sample.id +
                                                   "' at row " + std::to_string(row));
    }

    sample.text = rec[*text_col];
    strip_trailing_crlf(sample.text);
    if (blank_after_trim(sample.text)) malformed(row, "empty text");

    if (label_col && !rec[*label_col].empty()) {
      const std::string& cell = rec[*label_col];
      int value = 0;
      auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
      if (ec != std::errc() || ptr != cell.data() + cell.size()) {
        malformed(row, "label '" + cell + "' is not an integer");
      }
      if (!label_space.contains(value)) {
        throw DataError(ErrorCode::label_out_of_space,
                        "corpus: label " + std::to_string(value) + " out of space at row " +
                            std::to_string(row));
      }
      sample.gold_label = value;
    }

    if (platform_col) {
      try {
        sample.platform = platform_from_string(rec[*platform_col]);
      } catch (const DataError&) {
        malformed(row, "unknown platform '" + rec[*platform_col] + "'");
      }
    }
    ds.samples.push_back(std::move(sample));
  }
  return ds;
}

ClassDistribution class_distribution(const LabeledDataset& ds) {
  ClassDistribution dist;
  for (int label : ds.label_space.labels()) dist.counts[label] = 0;
  for (const auto& s : ds.samples) {
    if (!s.gold_label) {
      throw DataError(ErrorCode::unlabeled_sample,
                      "corpus: sample '" + s.id + "' has no gold label");
    }
    ++dist.counts[*s.gold_label];
  }
  dist.total = ds.samples.size();
  return dist;
}

LabeledDataset filter_by_platform(const LabeledDataset& ds, Platform platform) {
  LabeledDataset out{ds.label_space, {}, ds.split};
  for (const auto& s : ds.samples) {
    if (s.platform == platform) out.samples.push_back(s);
  }
  return out;
}

}  // namespace htc
