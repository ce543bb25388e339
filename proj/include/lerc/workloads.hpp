#pragma once

// Built-in workloads: the two-coalesce example, zip jobs, a multi-tenant zip
// mix, and random DAGs for property tests. All generators are deterministic
// in their arguments.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "lerc/dag.hpp"
#include "lerc/error.hpp"
#include "lerc/simulator.hpp"

namespace lerc {

struct Fig1Workload {
  JobDag dag;
  ClusterConfig config;  // one worker, 3-entry cache, both tasks runnable at once
  BlockRef pending_insert;
};

/// Two coalesce tasks {a,b}->x and {c,d}->y over unit blocks. a, b, c start in
/// a 3-entry cache, d is on disk, and e is inserted before either task runs.
inline Fig1Workload gen_fig1() {
  const std::string job = "fig1";
  auto blk = [&](const char* rdd) { return BlockRef{job, rdd, 0}; };
  Fig1Workload w;
  w.dag.job_id = job;
  w.dag.sources = {
      {blk("a"), 1.0, Tier::memory, 0, std::nullopt},
      {blk("b"), 1.0, Tier::memory, 0, std::nullopt},
      {blk("c"), 1.0, Tier::memory, 0, std::nullopt},
      {blk("d"), 1.0, Tier::disk, 0, std::nullopt},
      {blk("e"), 1.0, Tier::none, 0, 0.0},
  };
  w.dag.tasks = {
      {"task1", {blk("a"), blk("b")}, blk("x"), 1.0, 2.0},
      {"task2", {blk("c"), blk("d")}, blk("y"), 1.0, 2.0},
  };
  w.config.workers = 1;
  w.config.slots_per_worker = 2;
  w.config.cache_capacity_per_worker = 3.0;
  w.pending_insert = blk("e");
  return w;
}

struct ZipOptions {
  std::string job_id = "zip";
  double block_size = 1.0;
  std::optional<double> output_size;  // defaults to block_size
  Tier tier = Tier::disk;             // Tier::none loads every source at insert_at
  double insert_at = 0.0;
};

/// Sources A:0..n-1 and B:0..n-1; task zip_i reads {A:i, B:i} and writes C:i.
/// Compute cost is one memory read of the task's input.
inline JobDag gen_zip(std::size_t n, const ZipOptions& opt) {
  if (n < 1) throw Error(ErrorCode::InvalidPlan, "zip needs at least one partition");
  if (!(opt.block_size > 0.0)) throw Error(ErrorCode::InvalidPlan, "zip block size must be positive");
  JobDag dag;
  dag.job_id = opt.job_id;
  std::optional<double> at;
  if (opt.tier == Tier::none) at = opt.insert_at;
  for (const char* rdd : {"A", "B"}) {
    for (std::size_t i = 0; i < n; ++i) {
      dag.sources.push_back({{opt.job_id, rdd, static_cast<std::uint32_t>(i)}, opt.block_size, opt.tier, std::nullopt, at});
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    auto p = static_cast<std::uint32_t>(i);
    dag.tasks.push_back({"zip_" + std::to_string(i),
                         {{opt.job_id, "A", p}, {opt.job_id, "B", p}},
                         {opt.job_id, "C", p},
                         opt.output_size.value_or(opt.block_size),
                         2.0 * opt.block_size});
  }
  return dag;
}

inline JobDag gen_zip(std::size_t n, double block_size = 1.0) {
  ZipOptions opt;
  opt.block_size = block_size;
  return gen_zip(n, opt);
}

struct MultiTenantOptions {
  std::size_t tenants = 10;
  std::size_t partitions = 20;
  double file_size = 40.0;
  std::optional<double> output_size;  // defaults to two blocks: a zipped pair
  double load_interval = 0.0;         // time between consecutive block loads of one tenant
  double arrival_gap = 1.0;           // tenant t starts loading at t * arrival_gap
  double arrival_jitter = 1.0;        // plus U[0, arrival_jitter) drawn from seed
  std::uint64_t seed = 0;
};

/// `tenants` independent zip jobs over two files of `file_size` each, all
/// submitted at time 0. Tenant t's input blocks are loaded into the cache
/// starting at t * arrival_gap (+ jitter), first file before second file, one
/// block every load_interval. Equal load times interleave across tenants.
inline std::vector<JobDag> gen_multi_tenant(const MultiTenantOptions& opt) {
  if (opt.tenants < 1 || opt.partitions < 1) throw Error(ErrorCode::InvalidPlan, "tenants and partitions must be >= 1");
  if (!(opt.file_size > 0.0)) throw Error(ErrorCode::InvalidPlan, "file size must be positive");
  if (opt.load_interval < 0.0 || opt.arrival_gap < 0.0 || opt.arrival_jitter < 0.0) {
    throw Error(ErrorCode::InvalidPlan, "load times must be non-negative");
  }
  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> jitter(0.0, 1.0);
  std::vector<JobDag> jobs;
  for (std::size_t t = 0; t < opt.tenants; ++t) {
    const double start = static_cast<double>(t) * opt.arrival_gap + opt.arrival_jitter * jitter(rng);
    ZipOptions z;
    z.job_id = "tenant" + std::to_string(t);
    z.block_size = opt.file_size / static_cast<double>(opt.partitions);
    z.output_size = opt.output_size.value_or(2.0 * z.block_size);
    z.tier = Tier::none;
    z.insert_at = 0.0;
    auto dag = gen_zip(opt.partitions, z);
    for (std::size_t k = 0; k < dag.sources.size(); ++k) {
      dag.sources[k].insert_at = start + static_cast<double>(k) * opt.load_interval;
    }
    jobs.push_back(std::move(dag));
  }
  return jobs;
}

inline std::vector<JobDag> gen_multi_tenant(std::size_t tenants = 10, std::size_t partitions = 20,
                                            double file_size = 40.0) {
  MultiTenantOptions opt;
  opt.tenants = tenants;
  opt.partitions = partitions;
  opt.file_size = file_size;
  return gen_multi_tenant(opt);
}

inline double total_input_size(const std::vector<JobDag>& jobs) {
  double total = 0.0;
  for (const auto& j : jobs) {
    for (const auto& s : j.sources) total += s.size;
  }
  return total;
}

/// Random valid DAG built in topological order: each task reads distinct
/// blocks that already exist, so no cycle can form. Sources start in memory,
/// on disk, or unmaterialized with a load time.
inline JobDag gen_random_dag(std::uint64_t seed, std::size_t max_tasks, std::size_t max_fanin) {
  if (max_tasks < 1 || max_fanin < 1) throw Error(ErrorCode::InvalidPlan, "random DAG bounds must be >= 1");
  std::mt19937_64 rng(seed);
  auto uniform = [&](std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
  };
  JobDag dag;
  dag.job_id = "rand" + std::to_string(seed);
  const auto ntasks = uniform(1, max_tasks);
  const auto nsources = uniform(1, std::max<std::size_t>(2, max_tasks / 2));
  std::vector<BlockRef> pool;
  for (std::size_t s = 0; s < nsources; ++s) {
    SourceBlock src;
    src.ref = {dag.job_id, "src", static_cast<std::uint32_t>(s)};
    src.size = static_cast<double>(uniform(1, 3));
    switch (uniform(0, 2)) {
      case 0: src.tier = Tier::memory; break;
      case 1: src.tier = Tier::disk; break;
      default:
        src.tier = Tier::none;
        src.insert_at = static_cast<double>(uniform(0, 4));
        break;
    }
    pool.push_back(src.ref);
    dag.sources.push_back(std::move(src));
  }
  for (std::size_t t = 0; t < ntasks; ++t) {
    TaskSpec task;
    task.task_id = "t" + std::to_string(t);
    const auto fanin = uniform(1, std::min(max_fanin, pool.size()));
    std::vector<std::size_t> idx(pool.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::shuffle(idx.begin(), idx.end(), rng);
    for (std::size_t k = 0; k < fanin; ++k) task.inputs.push_back(pool[idx[k]]);
    task.output = {dag.job_id, "out", static_cast<std::uint32_t>(t)};
    task.output_size = static_cast<double>(uniform(1, 3));
    task.compute_cost = static_cast<double>(uniform(0, 3));
    pool.push_back(task.output);
    dag.tasks.push_back(std::move(task));
  }
  return dag;
}

}  // namespace lerc
