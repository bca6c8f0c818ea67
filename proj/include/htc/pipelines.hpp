#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "htc/backends.hpp"
#include "htc/corpus.hpp"

namespace htc {

enum class PipelineVariant { direct, two_stage, and_rule, or_rule, majority_vote };

std::string to_string(PipelineVariant v);
PipelineVariant pipeline_variant_from_string(const std::string& s);

// A composition of backends: one of the five topologies. Members are
// resolved backend instances; for two_stage the order is gate then stage2.
struct PipelineSpec {
  std::string name;
  PipelineVariant variant = PipelineVariant::direct;
  std::vector<std::shared_ptr<ClassifierBackend>> members;
  std::vector<std::size_t> tie_break;  // member indices, majority_vote only
  std::map<Platform, std::size_t> router;  // platform -> member index, direct only
};

// Structural checks: member counts per variant, gate/stage output ranges,
// rule members binary, vote members sharing one output set, tie_break
// covering all members, router only on direct.
void validate_pipeline(const PipelineSpec& spec, const LabelSpace& space);

// Gate 0 short-circuits to 0 without touching stage 2; gate 1 defers to it.
int classify_two_stage(int gate_label, const std::function<int()>& stage2);

// 1 iff every element is 1 / at least one element is 1.
int and_rule(const std::vector<int>& labels);
int or_rule(const std::vector<int>& labels);

// Strict plurality wins; among tied top counts, the highest-priority member
// whose vote is in the tied set decides.
int majority_vote(const std::vector<int>& votes, const std::vector<std::size_t>& priority);

// Applies the variant per sample; provenance records every member decision
// (gate+stage for cascades, each sub-condition for rules, every vote for
// majority). Deterministic for any parallelism given deterministic members.
PredictionSet run_pipeline(const PipelineSpec& spec, const LabeledDataset& ds,
                           const BatchOptions& options = {});

}  // namespace htc
