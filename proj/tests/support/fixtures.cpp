#include "support/fixtures.hpp"

#include <fstream>

#include "htc/csv.hpp"
#include "htc/hashing.hpp"

namespace htc::testing {

namespace {

const std::vector<std::string>& text_pool() {
  static const std::vector<std::string> pool = {
      "went hiking this weekend and felt calmer after",
      "stuck inside all week, everything feels heavy",
      "the park was crowded, loud, honestly no effect either way",
      "new meds since march, sleep improved a lot",
      "posting about my garden: tomatoes, basil, and peace of mind",
      "they said \"go outside, it helps\" but it made things worse",
      "rain again today,\nstayed in bed until noon",
      "therapy plus trail runs = actually manageable weeks",
      "caf\xc3\xa9 visit with friends \xe2\x98\x82 small win",
      "tab\tseparated thoughts about the lake trip",
      "quote at the end \"",
      "  leading spaces kept verbatim",
  };
  return pool;
}

std::string platform_for(std::uint64_t seed, std::size_t row) {
  return keyed_uniform(seed ^ 0x9e3779b97f4a7c15ULL, "p" + std::to_string(row)) < 0.5
             ? "twitter"
             : "reddit";
}

// Fisher-Yates with counter-based draws so the layout is stable across
// platforms and standard libraries.
void shuffle_labels(std::vector<int>& labels, std::uint64_t seed) {
  for (std::size_t i = labels.size(); i > 1; --i) {
    const double u = keyed_uniform(seed, "shuffle" + std::to_string(i));
    const std::size_t j = static_cast<std::size_t>(u * static_cast<double>(i));
    std::swap(labels[i - 1], labels[j < i ? j : i - 1]);
  }
}

}  // namespace

std::string fixture_csv(const FixtureSpec& spec) {
  std::vector<int> labels;
  for (const auto& [label, count] : spec.counts) {
    labels.insert(labels.end(), count, label);
  }
  shuffle_labels(labels, spec.seed);

  const std::string sep(1, spec.separator);
  std::string out = "id" + sep + "text";
  if (spec.with_label) out += sep + "label";
  if (spec.with_platform) out += sep + "platform";
  out += "\n";

  const auto& pool = text_pool();
  char id_buf[32];
  for (std::size_t i = 0; i < labels.size(); ++i) {
    std::snprintf(id_buf, sizeof(id_buf), "%s%06zu", spec.id_prefix.c_str(), i + 1);
    const std::size_t pick = static_cast<std::size_t>(
        keyed_uniform(spec.seed, "text" + std::to_string(i)) *
        static_cast<double>(pool.size()));
    const std::string text =
        pool[pick < pool.size() ? pick : pool.size() - 1] + " [" + std::to_string(i) + "]";
    std::vector<std::string> row{id_buf, text};
    if (spec.with_label) row.push_back(std::to_string(labels[i]));
    if (spec.with_platform) row.push_back(platform_for(spec.seed, i));
    out += csv::format_row(row, spec.separator);
  }
  return out;
}

void write_fixture(const std::filesystem::path& path, const FixtureSpec& spec) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << fixture_csv(spec);
}

FixtureSpec task3_train_spec() {
  return {{{0, 1131}, {1, 160}, {2, 395}, {3, 114}}, "t3tr", true, false, ',', 31};
}
FixtureSpec task3_dev_spec() {
  return {{{0, 377}, {1, 54}, {2, 131}, {3, 38}}, "t3dv", true, false, ',', 32};
}
FixtureSpec task5_train_spec() {
  return {{{0, 5118}, {1, 2280}}, "t5tr", true, false, ',', 51};
}
FixtureSpec task5_dev_spec() {
  return {{{0, 254}, {1, 135}}, "t5dv", true, false, ',', 52};
}
FixtureSpec task6_train_spec() {
  return {{{0, 5966}, {1, 2834}}, "t6tr", true, true, ',', 61};
}
FixtureSpec task6_dev_spec() {
  return {{{0, 2435}, {1, 1765}}, "t6dv", true, true, ',', 62};
}

LabeledDataset synth_dataset(TaskId task, const std::vector<int>& labels, Split split) {
  LabeledDataset ds{LabelSpace::for_task(task), {}, split};
  ds.samples.reserve(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    TextSample s;
    s.id = "s" + std::to_string(i + 1);
    s.text = "synthetic sample " + std::to_string(i + 1);
    s.platform = Platform::unknown;
    s.gold_label = labels[i];
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

}  // namespace htc::testing
