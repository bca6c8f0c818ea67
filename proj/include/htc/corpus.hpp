#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace htc {

enum class TaskId { task3, task5, task6 };
enum class Platform { twitter, reddit, unknown };
enum class Split { train, dev, test };
enum class FileFormat { csv, tsv };

std::string to_string(TaskId t);
std::string to_string(Platform p);
std::string to_string(Split s);
TaskId task_from_string(const std::string& s);
Platform platform_from_string(const std::string& s);
Split split_from_string(const std::string& s);

// One social-media post. Text is stored verbatim except trailing CR/LF.
struct TextSample {
  std::string id;
  std::string text;
  Platform platform = Platform::unknown;
  std::optional<int> gold_label;
};

// The label set of a task: task3 -> {0,1,2,3}, task5/task6 -> {0,1}.
class LabelSpace {
 public:
  static LabelSpace for_task(TaskId task);

  TaskId task() const { return task_; }
  const std::vector<int>& labels() const { return labels_; }
  bool contains(int label) const;

 private:
  LabelSpace(TaskId task, std::vector<int> labels) : task_(task), labels_(std::move(labels)) {}
  TaskId task_;
  std::vector<int> labels_;
};

struct LabeledDataset {
  LabelSpace label_space;
  std::vector<TextSample> samples;  // file order, stable under load
  Split split = Split::train;

  std::size_t size() const { return samples.size(); }
};

struct ClassDistribution {
  std::map<int, std::size_t> counts;  // zero-filled over the label space
  std::size_t total = 0;
};

// Reads a dataset file with header columns id,text[,label][,platform].
// Unknown extra columns are ignored. Rows with an empty label cell load as
// unlabeled samples. Errors name the offending data row (1-based).
LabeledDataset load_dataset(const std::string& path, FileFormat format,
                            const LabelSpace& label_space, Split split = Split::train);

// Requires every sample to carry a gold label.
ClassDistribution class_distribution(const LabeledDataset& ds);

// Keeps samples whose platform matches, preserving order and label space.
LabeledDataset filter_by_platform(const LabeledDataset& ds, Platform platform);

}  // namespace htc
