#pragma once

// Job DAG model: blocks, tasks, reference counts and peer groups.

#include <algorithm>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "lerc/error.hpp"

namespace lerc {

/// One partition of one RDD of one job. Identity is the whole triple.
struct BlockRef {
  std::string job;
  std::string rdd;
  std::uint32_t partition = 0;

  auto operator<=>(const BlockRef&) const = default;
  bool operator==(const BlockRef&) const = default;
};

inline std::string to_string(const BlockRef& ref) {
  return ref.job + "/" + ref.rdd + ":" + std::to_string(ref.partition);
}

}  // namespace lerc

template <>
struct std::hash<lerc::BlockRef> {
  std::size_t operator()(const lerc::BlockRef& ref) const noexcept {
    std::size_t h = std::hash<std::string>{}(ref.job);
    h ^= std::hash<std::string>{}(ref.rdd) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    h ^= std::hash<std::uint32_t>{}(ref.partition) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    return h;
  }
};

namespace lerc {

enum class Tier : std::uint8_t { memory, disk, none };

constexpr std::string_view to_string(Tier tier) {
  switch (tier) {
    case Tier::memory: return "memory";
    case Tier::disk: return "disk";
    case Tier::none: return "none";
  }
  return "none";
}

inline std::optional<Tier> parse_tier(std::string_view s) {
  if (s == "memory") return Tier::memory;
  if (s == "disk") return Tier::disk;
  if (s == "none") return Tier::none;
  return std::nullopt;
}

struct BlockMeta {
  BlockRef ref;
  double size = 1.0;
  bool materialized = false;
  Tier tier = Tier::none;

  // tier in {memory, disk} <=> materialized
  bool consistent() const { return materialized == (tier != Tier::none) && size > 0.0; }
};

/// A block with no producing task. A source that starts unmaterialized
/// (tier none) is inserted into memory at `insert_at`.
struct SourceBlock {
  BlockRef ref;
  double size = 1.0;
  Tier tier = Tier::disk;
  std::optional<int> worker;
  std::optional<double> insert_at;

  BlockMeta meta() const { return {ref, size, tier != Tier::none, tier}; }
};

struct TaskSpec {
  std::string task_id;
  std::vector<BlockRef> inputs;  // the task's peer set
  BlockRef output;
  double output_size = 1.0;
  double compute_cost = 0.0;
};

struct JobDag {
  std::string job_id;
  std::vector<SourceBlock> sources;
  std::vector<TaskSpec> tasks;
};

enum class GroupLabel : std::uint8_t { complete, incomplete };

struct PeerGroup {
  std::string task_id;
  std::vector<BlockRef> members;
  GroupLabel label = GroupLabel::complete;
};

struct Diagnostic {
  ErrorCode code;
  std::string message;
  std::optional<std::size_t> task;    // index into JobDag::tasks
  std::optional<std::size_t> source;  // index into JobDag::sources
};

/// Every structural problem in `dag`; empty means valid.
inline std::vector<Diagnostic> diagnose_dag(const JobDag& dag) {
  std::vector<Diagnostic> out;
  std::unordered_map<BlockRef, std::size_t> source_index;
  // block -> producing task index
  std::unordered_map<BlockRef, std::size_t> producer;

  auto check_job = [&](const BlockRef& ref, std::optional<std::size_t> task,
                       std::optional<std::size_t> source) {
    if (ref.job != dag.job_id) {
      out.push_back({ErrorCode::InvalidBlock,
                     "block " + to_string(ref) + " is outside job namespace '" + dag.job_id + "'",
                     task, source});
    }
  };

  for (std::size_t i = 0; i < dag.sources.size(); ++i) {
    const auto& src = dag.sources[i];
    check_job(src.ref, std::nullopt, i);
    if (!(src.size > 0.0)) {
      out.push_back({ErrorCode::InvalidBlock, "source " + to_string(src.ref) + " has non-positive size",
                     std::nullopt, i});
    }
    if (src.tier == Tier::none && !src.insert_at) {
      out.push_back({ErrorCode::InvalidBlock,
                     "source " + to_string(src.ref) + " is unmaterialized and has no insert_at",
                     std::nullopt, i});
    }
    if (src.tier != Tier::none && src.insert_at) {
      out.push_back({ErrorCode::InvalidBlock,
                     "source " + to_string(src.ref) + " is already materialized but has insert_at",
                     std::nullopt, i});
    }
    if (src.insert_at && *src.insert_at < 0.0) {
      out.push_back({ErrorCode::InvalidBlock, "source " + to_string(src.ref) + " has negative insert_at",
                     std::nullopt, i});
    }
    if (!source_index.emplace(src.ref, i).second) {
      out.push_back({ErrorCode::DuplicateProducer, "source " + to_string(src.ref) + " declared twice",
                     std::nullopt, i});
    }
  }

  std::unordered_set<std::string> task_ids;
  for (std::size_t t = 0; t < dag.tasks.size(); ++t) {
    const auto& task = dag.tasks[t];
    if (!task_ids.insert(task.task_id).second) {
      out.push_back({ErrorCode::InvalidTask, "duplicate task id '" + task.task_id + "'", t, std::nullopt});
    }
    if (task.inputs.empty()) {
      out.push_back({ErrorCode::InvalidTask, "task '" + task.task_id + "' has no inputs", t, std::nullopt});
    }
    std::unordered_set<BlockRef> seen;
    for (const auto& in : task.inputs) {
      check_job(in, t, std::nullopt);
      if (!seen.insert(in).second) {
        out.push_back({ErrorCode::InvalidTask,
                       "task '" + task.task_id + "' lists input " + to_string(in) + " twice", t,
                       std::nullopt});
      }
    }
    check_job(task.output, t, std::nullopt);
    if (!(task.output_size > 0.0)) {
      out.push_back({ErrorCode::InvalidBlock, "task '" + task.task_id + "' has non-positive output size", t,
                     std::nullopt});
    }
    if (task.compute_cost < 0.0) {
      out.push_back({ErrorCode::InvalidTask, "task '" + task.task_id + "' has negative compute cost", t,
                     std::nullopt});
    }
    if (source_index.contains(task.output)) {
      out.push_back({ErrorCode::DuplicateProducer,
                     "block " + to_string(task.output) + " is a source and also produced by task '" +
                         task.task_id + "'",
                     t, std::nullopt});
    } else if (auto [it, inserted] = producer.emplace(task.output, t); !inserted) {
      out.push_back({ErrorCode::DuplicateProducer,
                     "block " + to_string(task.output) + " produced by both '" +
                         dag.tasks[it->second].task_id + "' and '" + task.task_id + "'",
                     t, std::nullopt});
    }
  }

  for (std::size_t t = 0; t < dag.tasks.size(); ++t) {
    const auto& task = dag.tasks[t];
    for (const auto& in : task.inputs) {
      if (in == task.output) {
        out.push_back({ErrorCode::CyclicDependency,
                       "task '" + task.task_id + "' consumes its own output " + to_string(in), t,
                       std::nullopt});
      } else if (!source_index.contains(in) && !producer.contains(in)) {
        out.push_back({ErrorCode::DanglingBlock,
                       "task '" + task.task_id + "' reads " + to_string(in) +
                           ", which is neither a source nor produced by any task",
                       t, std::nullopt});
      }
    }
  }

  // Kahn over the task graph; whatever cannot be peeled sits on or behind a cycle.
  std::vector<std::size_t> indegree(dag.tasks.size(), 0);
  std::vector<std::vector<std::size_t>> consumers(dag.tasks.size());
  for (std::size_t t = 0; t < dag.tasks.size(); ++t) {
    for (const auto& in : dag.tasks[t].inputs) {
      auto it = producer.find(in);
      if (it == producer.end() || it->second == t) continue;
      consumers[it->second].push_back(t);
      ++indegree[t];
    }
  }
  std::queue<std::size_t> ready;
  for (std::size_t t = 0; t < dag.tasks.size(); ++t) {
    if (indegree[t] == 0) ready.push(t);
  }
  std::size_t peeled = 0;
  while (!ready.empty()) {
    auto t = ready.front();
    ready.pop();
    ++peeled;
    for (auto c : consumers[t]) {
      if (--indegree[c] == 0) ready.push(c);
    }
  }
  if (peeled != dag.tasks.size()) {
    std::string ids;
    std::optional<std::size_t> first;
    for (std::size_t t = 0; t < dag.tasks.size(); ++t) {
      if (indegree[t] == 0) continue;
      if (!first) first = t;
      if (!ids.empty()) ids += ", ";
      ids += dag.tasks[t].task_id;
    }
    out.push_back({ErrorCode::CyclicDependency, "dependency cycle through tasks: " + ids, first,
                   std::nullopt});
  }
  return out;
}

/// Throws the first diagnostic as an Error.
inline void validate_dag(const JobDag& dag) {
  auto diags = diagnose_dag(dag);
  if (!diags.empty()) throw Error(diags.front().code, "job '" + dag.job_id + "': " + diags.front().message);
}

/// Every block named by the DAG (sources first, then task outputs).
inline std::vector<BlockRef> all_blocks(const JobDag& dag) {
  std::vector<BlockRef> blocks;
  blocks.reserve(dag.sources.size() + dag.tasks.size());
  for (const auto& s : dag.sources) blocks.push_back(s.ref);
  for (const auto& t : dag.tasks) blocks.push_back(t.output);
  return blocks;
}

/// count(b) = number of tasks that read b and whose output is not yet materialized.
inline std::map<BlockRef, int> reference_counts(const JobDag& dag,
                                                const std::unordered_set<BlockRef>& materialized) {
  std::map<BlockRef, int> counts;
  for (const auto& b : all_blocks(dag)) counts.emplace(b, 0);
  for (const auto& task : dag.tasks) {
    if (materialized.contains(task.output)) continue;
    for (const auto& in : task.inputs) ++counts[in];
  }
  return counts;
}

/// One group per task, in task order, all labelled complete.
inline std::vector<PeerGroup> peer_groups(const JobDag& dag) {
  std::vector<PeerGroup> groups;
  groups.reserve(dag.tasks.size());
  for (const auto& task : dag.tasks) groups.push_back({task.task_id, task.inputs, GroupLabel::complete});
  return groups;
}

}  // namespace lerc
