#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "htc/corpus.hpp"

namespace htc {

// An instruction plus the strict single-character output contract: the set
// of characters the model may answer with and their label meanings.
class PromptTemplate {
 public:
  PromptTemplate(std::string name, std::string instruction,
                 std::map<char, int> output_to_label);

  const std::string& name() const { return name_; }
  const std::string& instruction() const { return instruction_; }
  const std::map<char, int>& output_to_label() const { return output_to_label_; }
  std::set<char> allowed_outputs() const;
  std::set<int> output_labels() const;

 private:
  std::string name_;
  std::string instruction_;
  std::map<char, int> output_to_label_;
};

// Instruction and sample text joined by a blank line; no truncation.
std::string render_prompt(const PromptTemplate& t, const TextSample& s);

// Strips surrounding whitespace and one layer of surrounding single/double
// quotes; accepts exactly one remaining character from the allowed set.
// Anything else raises a malformed_response error carrying the raw text.
int parse_response(const std::string& raw, const PromptTemplate& t);

// Built-in templates, addressable by dotted name:
//   task3.direct, task3.two_stage.gate, task3.two_stage.stage2,
//   task5.direct, task5.and.condition1..3,
//   task6.direct, task6.or.condition1..3
const std::vector<PromptTemplate>& builtin_templates();
const PromptTemplate* find_builtin_template(const std::string& name);

}  // namespace htc
