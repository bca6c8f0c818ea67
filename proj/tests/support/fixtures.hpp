#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "htc/corpus.hpp"

namespace htc::testing {

// Deterministic dataset fixture: `counts` pairs of (label, row count), rows
// interleaved by a seeded shuffle, texts drawn from a pool that exercises
// RFC-4180 quoting (commas, quotes, newlines, tabs, unicode).
struct FixtureSpec {
  std::vector<std::pair<int, std::size_t>> counts;
  std::string id_prefix = "s";
  bool with_label = true;
  bool with_platform = false;
  char separator = ',';
  std::uint64_t seed = 1;
};

std::string fixture_csv(const FixtureSpec& spec);
void write_fixture(const std::filesystem::path& path, const FixtureSpec& spec);

// The three tasks' split shapes.
FixtureSpec task3_train_spec();  // {0:1131, 1:160, 2:395, 3:114}
FixtureSpec task3_dev_spec();    // {0:377, 1:54, 2:131, 3:38}
FixtureSpec task5_train_spec();  // {0:5118, 1:2280}
FixtureSpec task5_dev_spec();    // {0:254, 1:135}
FixtureSpec task6_train_spec();  // {0:5966, 1:2834}
FixtureSpec task6_dev_spec();    // {0:2435, 1:1765}

// In-memory dataset with ids s1..sN and the given gold labels.
LabeledDataset synth_dataset(TaskId task, const std::vector<int>& labels,
                             Split split = Split::dev);

}  // namespace htc::testing
