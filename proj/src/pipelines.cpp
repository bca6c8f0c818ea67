#include "htc/pipelines.hpp"

#include <algorithm>
#include <exception>
#include <mutex>
#include <set>

#include "htc/errors.hpp"
#include "htc/parallel.hpp"

namespace htc {

std::string to_string(PipelineVariant v) {
  switch (v) {
    case PipelineVariant::direct: return "direct";
    case PipelineVariant::two_stage: return "two_stage";
    case PipelineVariant::and_rule: return "and_rule";
    case PipelineVariant::or_rule: return "or_rule";
    case PipelineVariant::majority_vote: return "majority_vote";
  }
  return "direct";
}

PipelineVariant pipeline_variant_from_string(const std::string& s) {
  if (s == "direct") return PipelineVariant::direct;
  if (s == "two_stage") return PipelineVariant::two_stage;
  if (s == "and_rule") return PipelineVariant::and_rule;
  if (s == "or_rule") return PipelineVariant::or_rule;
  if (s == "majority_vote") return PipelineVariant::majority_vote;
  throw ConfigError("pipelines: unknown variant '" + s + "'");
}

namespace {

bool subset_of(const std::set<int>& labels, const std::set<int>& allowed) {
  return std::all_of(labels.begin(), labels.end(),
                     [&](int l) { return allowed.count(l) > 0; });
}

std::string member_list(const PipelineSpec& spec) {
  std::string out;
  for (const auto& m : spec.members) {
    if (!out.empty()) out += ", ";
    out += m->name();
  }
  return out;
}

}  // namespace

void validate_pipeline(const PipelineSpec& spec, const LabelSpace& space) {
  const std::string where = "pipelines: '" + spec.name + "': ";
  if (spec.members.empty()) {
    throw BackendError(ErrorCode::empty_member_list, where + "member list is empty");
  }
  for (const auto& m : spec.members) {
    if (!m) throw ConfigError(where + "null member");
  }
  if (!spec.router.empty() && spec.variant != PipelineVariant::direct) {
    throw ConfigError(where + "a router is only supported on direct pipelines");
  }
  for (const auto& [platform, idx] : spec.router) {
    if (idx >= spec.members.size()) {
      throw ConfigError(where + "router maps " + to_string(platform) +
                        " to member index " + std::to_string(idx) + ", out of range");
    }
  }

  const std::set<int> binary{0, 1};
  const std::set<int> space_set(space.labels().begin(), space.labels().end());
  switch (spec.variant) {
    case PipelineVariant::direct: {
      if (spec.router.empty() && spec.members.size() != 1) {
        throw ConfigError(where + "direct takes exactly 1 member (got " +
                          member_list(spec) + ")");
      }
      for (const auto& m : spec.members) {
        if (!subset_of(m->output_labels(), space_set)) {
          throw ConfigError(where + "member '" + m->name() +
                            "' emits labels outside the task label space");
        }
      }
      break;
    }
    case PipelineVariant::two_stage: {
      if (spec.members.size() != 2) {
        throw ConfigError(where + "two_stage takes exactly 2 members, gate then stage2");
      }
      const std::set<int> stage2{1, 2, 3};
      if (!subset_of(spec.members[0]->output_labels(), binary)) {
        throw ConfigError(where + "gate '" + spec.members[0]->name() +
                          "' must output within {0,1}");
      }
      if (!subset_of(spec.members[1]->output_labels(), stage2)) {
        throw ConfigError(where + "stage2 '" + spec.members[1]->name() +
                          "' must output within {1,2,3}");
      }
      break;
    }
    case PipelineVariant::and_rule:
    case PipelineVariant::or_rule: {
      if (spec.members.size() < 2) {
        throw ConfigError(where + to_string(spec.variant) + " takes at least 2 members");
      }
      for (const auto& m : spec.members) {
        if (!subset_of(m->output_labels(), binary)) {
          throw ConfigError(where + "member '" + m->name() + "' must output within {0,1}");
        }
      }
      break;
    }
    case PipelineVariant::majority_vote: {
      if (spec.members.size() < 2) {
        throw ConfigError(where + "majority_vote takes at least 2 members");
      }
      const auto& first = spec.members[0]->output_labels();
      for (const auto& m : spec.members) {
        if (m->output_labels() != first) {
          throw ConfigError(where + "vote members must share one output label set ('" +
                            m->name() + "' differs from '" + spec.members[0]->name() + "')");
        }
      }
      if (!spec.tie_break.empty()) {
        std::set<std::size_t> seen(spec.tie_break.begin(), spec.tie_break.end());
        if (spec.tie_break.size() != spec.members.size() ||
            seen.size() != spec.members.size() ||
            *seen.rbegin() != spec.members.size() - 1) {
          throw ConfigError(where + "tie_break must be a permutation of all member indices");
        }
      }
      break;
    }
  }
}

int classify_two_stage(int gate_label, const std::function<int()>& stage2) {
  if (gate_label == 0) return 0;
  return stage2();
}

int and_rule(const std::vector<int>& labels) {
  if (labels.empty()) {
    throw BackendError(ErrorCode::empty_member_list, "pipelines: and_rule over no members");
  }
  return std::all_of(labels.begin(), labels.end(), [](int l) { return l == 1; }) ? 1 : 0;
}

int or_rule(const std::vector<int>& labels) {
  if (labels.empty()) {
    throw BackendError(ErrorCode::empty_member_list, "pipelines: or_rule over no members");
  }
  return std::any_of(labels.begin(), labels.end(), [](int l) { return l == 1; }) ? 1 : 0;
}

int majority_vote(const std::vector<int>& votes, const std::vector<std::size_t>& priority) {
  if (votes.empty()) {
    throw BackendError(ErrorCode::empty_member_list, "pipelines: majority_vote over no members");
  }
  std::map<int, std::size_t> counts;
  for (int v : votes) ++counts[v];
  std::size_t top = 0;
  for (const auto& [_, c] : counts) top = std::max(top, c);

  std::set<int> tied;
  for (const auto& [label, c] : counts) {
    if (c == top) tied.insert(label);
  }
  if (tied.size() == 1) return *tied.begin();

  for (std::size_t member : priority) {
    if (member < votes.size() && tied.count(votes[member])) return votes[member];
  }
  // Every tied label was cast by some member, so priority order always
  // resolves; reaching here means the priority list was not a cover.
  throw ConfigError("pipelines: tie_break priority does not cover the tied members");
}

namespace {

std::string vote_provenance(const std::vector<Prediction>& votes, bool tie, int winner) {
  std::string prov = "vote(";
  for (std::size_t i = 0; i < votes.size(); ++i) {
    if (i > 0) prov += ", ";
    prov += votes[i].provenance + ":" + std::to_string(votes[i].label);
  }
  prov += ")";
  if (tie) prov += "[tie->" + std::to_string(winner) + "]";
  return prov;
}

Prediction classify_sample(const PipelineSpec& spec, const TextSample& sample,
                           const std::vector<std::size_t>& priority) {
  switch (spec.variant) {
    case PipelineVariant::direct: {
      std::size_t member = 0;
      std::string routed;
      if (!spec.router.empty()) {
        auto it = spec.router.find(sample.platform);
        if (it == spec.router.end()) {
          throw BackendError(ErrorCode::router_gap,
                             "pipelines: '" + spec.name + "' router has no member for platform " +
                                 to_string(sample.platform) + " (sample '" + sample.id + "')");
        }
        member = it->second;
        routed = "routed[" + to_string(sample.platform) + "]:";
      }
      Prediction p = spec.members[member]->predict(sample);
      p.provenance = routed + p.provenance;
      return p;
    }
    case PipelineVariant::two_stage: {
      Prediction gate = spec.members[0]->predict(sample);
      if (gate.label == 0) {
        return {sample.id, 0,
                "two_stage(gate=" + gate.provenance + ":0)", gate.raw_response};
      }
      Prediction stage2 = spec.members[1]->predict(sample);
      return {sample.id, stage2.label,
              "two_stage(gate=" + gate.provenance + ":1, stage2=" + stage2.provenance + ":" +
                  std::to_string(stage2.label) + ")",
              stage2.raw_response};
    }
    case PipelineVariant::and_rule:
    case PipelineVariant::or_rule: {
      // No short-circuit: provenance must record every sub-condition.
      std::vector<Prediction> parts;
      std::vector<int> labels;
      parts.reserve(spec.members.size());
      for (const auto& m : spec.members) {
        parts.push_back(m->predict(sample));
        labels.push_back(parts.back().label);
      }
      const bool conjunction = spec.variant == PipelineVariant::and_rule;
      int label = conjunction ? and_rule(labels) : or_rule(labels);
      std::string prov = conjunction ? "and(" : "or(";
      for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i > 0) prov += ", ";
        prov += parts[i].provenance + ":" + std::to_string(parts[i].label);
      }
      prov += ")";
      return {sample.id, label, prov, std::nullopt};
    }
    case PipelineVariant::majority_vote: {
      std::vector<Prediction> votes;
      std::vector<int> labels;
      votes.reserve(spec.members.size());
      for (const auto& m : spec.members) {
        votes.push_back(m->predict(sample));
        labels.push_back(votes.back().label);
      }
      std::map<int, std::size_t> counts;
      for (int l : labels) ++counts[l];
      std::size_t top = 0;
      for (const auto& [_, c] : counts) top = std::max(top, c);
      const bool tie =
          std::count_if(counts.begin(), counts.end(),
                        [&](const auto& kv) { return kv.second == top; }) > 1;
      int winner = majority_vote(labels, priority);
      return {sample.id, winner, vote_provenance(votes, tie, winner), std::nullopt};
    }
  }
  throw ConfigError("pipelines: unreachable variant");
}

}  // namespace

PredictionSet run_pipeline(const PipelineSpec& spec, const LabeledDataset& ds,
                           const BatchOptions& options) {
  validate_pipeline(spec, ds.label_space);
  if (options.parallelism < 1) {
    throw ConfigError("pipelines: parallelism must be >= 1");
  }

  // Router coverage is checked up front so gaps fail fast and deterministically.
  if (!spec.router.empty()) {
    for (const auto& s : ds.samples) {
      if (spec.router.find(s.platform) == spec.router.end()) {
        throw BackendError(ErrorCode::router_gap,
                           "pipelines: '" + spec.name + "' router has no member for platform " +
                               to_string(s.platform) + " (sample '" + s.id + "')");
      }
    }
  }

  std::vector<std::size_t> priority = spec.tie_break;
  if (priority.empty()) {
    priority.resize(spec.members.size());
    for (std::size_t i = 0; i < priority.size(); ++i) priority[i] = i;
  }

  const std::size_t n = ds.size();
  std::vector<Prediction> results(n);
  std::vector<std::string> failures(n);
  std::exception_ptr fatal;
  std::mutex fatal_mutex;

  parallel_indexed(n, options.parallelism, [&](std::size_t i) {
    try {
      results[i] = classify_sample(spec, ds.samples[i], priority);
    } catch (const ConfigError&) {
      std::scoped_lock lock(fatal_mutex);
      if (!fatal) fatal = std::current_exception();
    } catch (const std::exception& e) {
      failures[i] = e.what();
    }
  });
  if (fatal) std::rethrow_exception(fatal);

  std::size_t failed = 0;
  std::string first_failure;
  for (const auto& f : failures) {
    if (!f.empty()) {
      ++failed;
      if (first_failure.empty()) first_failure = f;
    }
  }
  if (failed > 0 &&
      static_cast<double>(failed) > options.failure_ceiling * static_cast<double>(n)) {
    throw BackendError(ErrorCode::batch_failed,
                       "pipelines: '" + spec.name + "': " + std::to_string(failed) + " of " +
                           std::to_string(n) + " samples failed (ceiling " +
                           std::to_string(options.failure_ceiling) + "); first: " + first_failure);
  }

  PredictionSet set(spec.name);
  for (std::size_t i = 0; i < n; ++i) {
    if (!failures[i].empty()) {
      set.add({ds.samples[i].id, options.abstention_label,
               spec.name + "[failed:" + failures[i] + "]", std::nullopt});
    } else {
      set.add(std::move(results[i]));
    }
  }
  return set;
}

}  // namespace htc
