#pragma once

// All-or-nothing staircase: run one zip job repeatedly, caching one more input
// block each round in the order A:0, B:0, A:1, B:1, ...

#include <cstddef>
#include <vector>

#include "lerc/simulator.hpp"
#include "lerc/workloads.hpp"

namespace lerc {

struct StaircasePoint {
  std::size_t cached = 0;
  double total_task_time = 0.0;
  double makespan = 0.0;
  double hit_ratio = 0.0;
  double effective_hit_ratio = 0.0;
  SimReport report;
};

/// Returns 2 * partitions + 1 points. The cache is sized so that nothing is
/// ever evicted; only the initial residency varies between rounds.
inline std::vector<StaircasePoint> staircase_experiment(ClusterConfig config, std::size_t partitions = 10,
                                                        double block_size = 1.0,
                                                        PolicyKind policy = PolicyKind::lru) {
  std::vector<StaircasePoint> out;
  const std::size_t blocks = 2 * partitions;
  for (std::size_t cached = 0; cached <= blocks; ++cached) {
    auto dag = gen_zip(partitions, block_size);
    for (auto& s : dag.sources) {
      // position in the caching order A:0, B:0, A:1, B:1, ...
      const std::size_t pos = 2 * s.ref.partition + (s.ref.rdd == "B" ? 1 : 0);
      s.tier = pos < cached ? Tier::memory : Tier::disk;
    }
    double everything = 0.0;
    for (const auto& s : dag.sources) everything += s.size;
    for (const auto& t : dag.tasks) everything += t.output_size;
    config.cache_capacity_per_worker = everything;
    auto report = run({dag}, config, policy);
    out.push_back({cached, report.total_task_time, report.makespan, report.hit_ratio, report.effective_hit_ratio, report});
  }
  return out;
}

}  // namespace lerc
