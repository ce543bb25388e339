#pragma once

// Dense indexing of a workload forest. Block ids cover sources and task
// outputs of every job; group ids are global task indices in job order.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "lerc/dag.hpp"
#include "lerc/error.hpp"

namespace lerc {

using BlockId = std::uint32_t;
using GroupId = std::uint32_t;

struct GroupInfo {
  std::size_t job = 0;
  std::size_t task = 0;
  std::vector<BlockId> members;
  BlockId output = 0;
};

struct SourceLocation {
  std::size_t job = 0;
  std::size_t index = 0;
};

class Catalog {
 public:
  /// Validates every job and that job ids (hence block namespaces) are disjoint.
  explicit Catalog(std::vector<JobDag> jobs) : jobs_(std::move(jobs)) {
    std::unordered_set<std::string> job_ids;
    for (const auto& job : jobs_) {
      validate_dag(job);
      if (!job_ids.insert(job.job_id).second) {
        throw Error(ErrorCode::InvalidBlock, "job id '" + job.job_id + "' used by more than one job");
      }
    }
    for (std::size_t j = 0; j < jobs_.size(); ++j) {
      const auto& job = jobs_[j];
      for (std::size_t s = 0; s < job.sources.size(); ++s) {
        auto id = add_block(job.sources[s].ref, job.sources[s].size);
        source_of_[id] = SourceLocation{j, s};
      }
      for (const auto& task : job.tasks) add_block(task.output, task.output_size);
    }
    producer_.assign(refs_.size(), std::nullopt);
    groups_of_.assign(refs_.size(), {});
    for (std::size_t j = 0; j < jobs_.size(); ++j) {
      job_first_group_.push_back(static_cast<GroupId>(groups_.size()));
      for (std::size_t t = 0; t < jobs_[j].tasks.size(); ++t) {
        const auto& task = jobs_[j].tasks[t];
        GroupInfo g{j, t, {}, index_.at(task.output)};
        for (const auto& in : task.inputs) g.members.push_back(index_.at(in));
        auto gid = static_cast<GroupId>(groups_.size());
        producer_[g.output] = gid;
        for (auto m : g.members) groups_of_[m].push_back(gid);
        groups_.push_back(std::move(g));
      }
    }
  }

  const std::vector<JobDag>& jobs() const { return jobs_; }
  std::size_t block_count() const { return refs_.size(); }
  std::size_t group_count() const { return groups_.size(); }

  const BlockRef& ref(BlockId b) const { return refs_.at(b); }
  double size(BlockId b) const { return sizes_.at(b); }

  std::optional<BlockId> find(const BlockRef& ref) const {
    auto it = index_.find(ref);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  BlockId id(const BlockRef& ref) const {
    auto b = find(ref);
    if (!b) throw Error(ErrorCode::UnknownBlock, to_string(ref));
    return *b;
  }

  bool valid(BlockId b) const { return b < refs_.size(); }

  const GroupInfo& group(GroupId g) const { return groups_.at(g); }
  const TaskSpec& task(GroupId g) const { return jobs_[groups_.at(g).job].tasks[groups_[g].task]; }
  std::span<const GroupId> groups_of(BlockId b) const { return groups_of_.at(b); }
  std::optional<GroupId> producer(BlockId b) const { return producer_.at(b); }

  GroupId group_of(std::size_t job, std::size_t task) const {
    return job_first_group_.at(job) + static_cast<GroupId>(task);
  }

  std::optional<GroupId> find_task(const std::string& job_id, const std::string& task_id) const {
    for (std::size_t j = 0; j < jobs_.size(); ++j) {
      if (jobs_[j].job_id != job_id) continue;
      for (std::size_t t = 0; t < jobs_[j].tasks.size(); ++t) {
        if (jobs_[j].tasks[t].task_id == task_id) return group_of(j, t);
      }
    }
    return std::nullopt;
  }

  std::optional<SourceLocation> source(BlockId b) const {
    auto it = source_of_.find(b);
    if (it == source_of_.end()) return std::nullopt;
    return it->second;
  }

 private:
  BlockId add_block(const BlockRef& ref, double size) {
    auto id = static_cast<BlockId>(refs_.size());
    index_.emplace(ref, id);
    refs_.push_back(ref);
    sizes_.push_back(size);
    return id;
  }

  std::vector<JobDag> jobs_;
  std::vector<BlockRef> refs_;
  std::vector<double> sizes_;
  std::unordered_map<BlockRef, BlockId> index_;
  std::unordered_map<BlockId, SourceLocation> source_of_;
  std::vector<GroupInfo> groups_;
  std::vector<GroupId> job_first_group_;
  std::vector<std::optional<GroupId>> producer_;
  std::vector<std::vector<GroupId>> groups_of_;
};

}  // namespace lerc
