#include "htc/prompts.hpp"

#include <algorithm>
#include <cctype>

#include "htc/errors.hpp"

namespace htc {

PromptTemplate::PromptTemplate(std::string name, std::string instruction,
                               std::map<char, int> output_to_label)
    : name_(std::move(name)),
      instruction_(std::move(instruction)),
      output_to_label_(std::move(output_to_label)) {
  if (name_.empty()) {
    throw ConfigError("prompts: template name must be non-empty");
  }
  if (instruction_.empty()) {
    throw ConfigError("prompts: template '" + name_ + "' has an empty instruction");
  }
  if (output_to_label_.empty()) {
    throw ConfigError("prompts: template '" + name_ + "' declares no allowed outputs");
  }
}

std::set<char> PromptTemplate::allowed_outputs() const {
  std::set<char> out;
  for (const auto& [c, _] : output_to_label_) out.insert(c);
  return out;
}

std::set<int> PromptTemplate::output_labels() const {
  std::set<int> out;
  for (const auto& [_, label] : output_to_label_) out.insert(label);
  return out;
}

std::string render_prompt(const PromptTemplate& t, const TextSample& s) {
  return t.instruction() + "\n\n" + s.text;
}

int parse_response(const std::string& raw, const PromptTemplate& t) {
  auto trim = [](std::string_view v) {
    while (!v.empty() && std::isspace(static_cast<unsigned char>(v.front()))) v.remove_prefix(1);
    while (!v.empty() && std::isspace(static_cast<unsigned char>(v.back()))) v.remove_suffix(1);
    return v;
  };
  std::string_view v = trim(raw);
  if (v.size() >= 2 && (v.front() == '"' || v.front() == '\'') && v.back() == v.front()) {
    v.remove_prefix(1);
    v.remove_suffix(1);
    v = trim(v);
  }
  if (v.size() == 1) {
    auto it = t.output_to_label().find(v.front());
    if (it != t.output_to_label().end()) return it->second;
  }
  throw BackendError(ErrorCode::malformed_response,
                     "backends: malformed response for template '" + t.name() + "': \"" + raw +
                         "\"");
}

namespace {

const std::map<char, int> kBinary{{'0', 0}, {'1', 1}};
const std::map<char, int> kFourWay{{'0', 0}, {'1', 1}, {'2', 2}, {'3', 3}};
const std::map<char, int> kStageTwo{{'1', 1}, {'2', 2}, {'3', 3}};

// Shared preamble of the child-health sub-condition prompts.
const std::string kChildPreamble =
    "The tweets already mention at least one of the following: "
    "attention-deficit/hyperactivity disorder (ADHD), autism spectrum disorders (ASD), "
    "delayed speech (speech disorder), or asthma. In some cases, the tweets discuss "
    "hypothetical cases or the possibility of having the condition. ";

const std::string kSingleCharBinary =
    " In all other cases, respond with a '0'. Respond with only one character ('0'/'1') "
    "and nothing else.";

std::vector<PromptTemplate> make_builtins() {
  std::vector<PromptTemplate> out;

  out.emplace_back(
      "task3.direct",
      "What impact did outdoor spaces or activities have on the user's mental health ? "
      "Respond only with a 1 for positive or 2 for neutral or 3 for negative or 0 for no "
      "mention. Only one character (1/2/3/0) nothing else.",
      kFourWay);
  out.emplace_back(
      "task3.two_stage.gate",
      "Did outdoor spaces or activities get mentioned? Respond only with a 1 for yes or 0 "
      "for no. Only one character (0/1) nothing else.",
      kBinary);
  out.emplace_back(
      "task3.two_stage.stage2",
      "What impact did outdoor spaces or activities have on the user's mental health ? "
      "Respond only with a 1 for positive or 2 for neutral or 3 for negative. Only one "
      "character (1/2/3) nothing else.",
      kStageTwo);

  out.emplace_back(
      "task5.direct",
      kChildPreamble +
          "It might be about someone else's child or an adult son/daughter. Respond with "
          "'1' if the tweet explicitly mentions an existing formal diagnosis of one of "
          "those conditions AND it concerns a child/baby AND the child is the user's own." +
          kSingleCharBinary,
      kBinary);
  out.emplace_back("task5.and.condition1",
                   kChildPreamble +
                       "Respond with '1' if the tweet explicitly mentions an existing formal "
                       "diagnosis of one of those conditions." +
                       kSingleCharBinary,
                   kBinary);
  out.emplace_back("task5.and.condition2",
                   kChildPreamble +
                       "Respond with '1' if the tweet explicitly mentions it concerns a "
                       "child/baby having one of those conditions." +
                       kSingleCharBinary,
                   kBinary);
  out.emplace_back("task5.and.condition3",
                   kChildPreamble +
                       "Respond with '1' if the tweet explicitly mentions the child is the "
                       "user's own having diagnosed with one of those conditions." +
                       kSingleCharBinary,
                   kBinary);

  out.emplace_back(
      "task6.direct",
      "Respond only with 0 or 1 and nothing else : based on whether current age of the "
      "AUTHOR in years can be known from the texts. The texts have a two digit number "
      "which is likely an age if not clear. The age needed to know in context is current "
      "age of THE author and not someone else. In some cases formats like 25m , 24f are "
      "used where m refers to Male and f refers to Female.",
      kBinary);
  out.emplace_back("task6.or.condition1",
                   "Respond only with 0 or 1 and nothing else based on whether the current "
                   "age of the author was reported in the given text.",
                   kBinary);
  out.emplace_back("task6.or.condition2",
                   "Respond only with 0 or 1 and nothing else based on whether the current "
                   "age of the author can be determined from the given text.",
                   kBinary);
  out.emplace_back("task6.or.condition3",
                   "Respond only with 0 or 1 and nothing else based on whether the current "
                   "age of the author was expressed using formats like 25m , 24f are used "
                   "where 'm' refers to Male and 'f' refers to Female.",
                   kBinary);
  return out;
}

}  // namespace

const std::vector<PromptTemplate>& builtin_templates() {
  static const std::vector<PromptTemplate> templates = make_builtins();
  return templates;
}

const PromptTemplate* find_builtin_template(const std::string& name) {
  for (const auto& t : builtin_templates()) {
    if (t.name() == name) return &t;
  }
  return nullptr;
}

}  // namespace htc
