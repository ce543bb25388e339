#pragma once

// From-scratch recomputation of reference counts, effective reference counts
// and group labels. Nothing here is incremental; the simulator and tests use
// these to check the incrementally maintained PolicyState.

#include <map>
#include <unordered_set>
#include <vector>

#include "lerc/catalog.hpp"
#include "lerc/dag.hpp"

namespace lerc {

/// count(b) = tasks t with b in t.inputs, t.output unmaterialized, and every
/// materialized input of t resident in memory.
inline std::map<BlockRef, int> effective_reference_count_oracle(const JobDag& dag,
                                                                const std::unordered_set<BlockRef>& materialized,
                                                                const std::unordered_set<BlockRef>& resident) {
  std::map<BlockRef, int> counts;
  for (const auto& b : all_blocks(dag)) counts.emplace(b, 0);
  for (const auto& task : dag.tasks) {
    if (materialized.contains(task.output)) continue;
    bool effective = true;
    for (const auto& in : task.inputs) {
      if (materialized.contains(in) && !resident.contains(in)) {
        effective = false;
        break;
      }
    }
    if (!effective) continue;
    for (const auto& in : task.inputs) ++counts[in];
  }
  return counts;
}

inline std::vector<int> rc_oracle(const Catalog& catalog, const std::vector<bool>& materialized) {
  std::vector<int> rc(catalog.block_count(), 0);
  for (GroupId g = 0; g < catalog.group_count(); ++g) {
    const auto& info = catalog.group(g);
    if (materialized[info.output]) continue;
    for (auto m : info.members) ++rc[m];
  }
  return rc;
}

/// complete iff every materialized member is in memory (anywhere in the cluster).
inline std::vector<GroupLabel> label_oracle(const Catalog& catalog, const std::vector<bool>& materialized,
                                            const std::vector<bool>& in_memory) {
  std::vector<GroupLabel> labels(catalog.group_count(), GroupLabel::complete);
  for (GroupId g = 0; g < catalog.group_count(); ++g) {
    for (auto m : catalog.group(g).members) {
      if (materialized[m] && !in_memory[m]) {
        labels[g] = GroupLabel::incomplete;
        break;
      }
    }
  }
  return labels;
}

inline std::vector<int> erc_oracle(const Catalog& catalog, const std::vector<bool>& materialized,
                                   const std::vector<bool>& in_memory) {
  std::vector<int> erc(catalog.block_count(), 0);
  auto labels = label_oracle(catalog, materialized, in_memory);
  for (GroupId g = 0; g < catalog.group_count(); ++g) {
    const auto& info = catalog.group(g);
    if (materialized[info.output] || labels[g] != GroupLabel::complete) continue;
    for (auto m : info.members) ++erc[m];
  }
  return erc;
}

}  // namespace lerc
