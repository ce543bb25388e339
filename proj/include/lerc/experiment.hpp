#pragma once

// Experiment plans: the cartesian product policy x capacity x repetition over
// one workload, plus the built-in recipes (fig1, staircase, multitenant).
//
// Cell index = (policy_index * capacities + capacity_index) * reps + rep.
// Each cell's simulator seed is derived from (seed_base, cell index). The
// workload seed depends only on (seed_base, rep), so every policy in a
// repetition sees the same workload.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <nlohmann/json.hpp>

#include "lerc/dag.hpp"
#include "lerc/error.hpp"
#include "lerc/policy.hpp"
#include "lerc/simulator.hpp"
#include "lerc/staircase.hpp"
#include "lerc/workload_io.hpp"
#include "lerc/workloads.hpp"

namespace lerc {

enum class WorkloadKind { fig1_coalesce, zip_job, multi_tenant_zip, random_dag, file };

constexpr std::string_view to_string(WorkloadKind kind) {
  switch (kind) {
    case WorkloadKind::fig1_coalesce: return "fig1";
    case WorkloadKind::zip_job: return "zip";
    case WorkloadKind::multi_tenant_zip: return "multitenant";
    case WorkloadKind::random_dag: return "random";
    case WorkloadKind::file: return "file";
  }
  return "file";
}

struct WorkloadSpec {
  WorkloadKind kind = WorkloadKind::zip_job;
  std::size_t partitions = 10;  // zip
  double block_size = 1.0;      // zip
  MultiTenantOptions tenants;   // multitenant; its seed is replaced per repetition
  std::size_t max_tasks = 30;   // random
  std::size_t max_fanin = 3;    // random
  std::string path;             // file
  std::string label;            // CSV workload column; defaults to the kind name

  std::string name() const { return label.empty() ? std::string(to_string(kind)) : label; }
};

/// Builds the workload; `seed` drives the randomized kinds.
inline std::vector<JobDag> build_workload(const WorkloadSpec& spec, std::uint64_t seed) {
  switch (spec.kind) {
    case WorkloadKind::fig1_coalesce: return {gen_fig1().dag};
    case WorkloadKind::zip_job: return {gen_zip(spec.partitions, spec.block_size)};
    case WorkloadKind::multi_tenant_zip: {
      auto opt = spec.tenants;
      opt.seed = seed;
      return gen_multi_tenant(opt);
    }
    case WorkloadKind::random_dag: return {gen_random_dag(seed, spec.max_tasks, spec.max_fanin)};
    case WorkloadKind::file: return read_workload_file(spec.path).jobs;
  }
  return {};
}

/// Cluster shape each built-in workload is meant to run on.
inline ClusterConfig default_cluster(WorkloadKind kind) {
  ClusterConfig c;
  switch (kind) {
    case WorkloadKind::fig1_coalesce: c = gen_fig1().config; break;
    case WorkloadKind::multi_tenant_zip:
      c.workers = 3;
      c.slots_per_worker = 1;
      break;
    default: break;
  }
  return c;
}

/// A cache size: absolute units per worker, or a fraction of the workload's
/// total input split evenly across workers.
struct CapacitySpec {
  double value = 0.0;
  bool fraction = false;

  double per_worker(double total_input, int workers) const {
    return fraction ? value * total_input / static_cast<double>(workers) : value;
  }
  std::string label() const {
    if (!fraction) return detail::format_number(value);
    return detail::format_number(std::round(value * 1e6) / 1e4) + "%";
  }
};

/// "12.5" is absolute; "50%" is a fraction of total input.
inline CapacitySpec parse_capacity(std::string_view s) {
  CapacitySpec c;
  std::string_view num = s;
  if (!s.empty() && s.back() == '%') {
    c.fraction = true;
    num = s.substr(0, s.size() - 1);
  }
  double v = 0.0;
  auto res = std::from_chars(num.data(), num.data() + num.size(), v);
  if (num.empty() || res.ec != std::errc{} || res.ptr != num.data() + num.size() || !(v >= 0.0)) {
    throw Error(ErrorCode::InvalidPlan, "bad capacity '" + std::string(s) + "'");
  }
  c.value = c.fraction ? v / 100.0 : v;
  return c;
}

struct ExperimentPlan {
  WorkloadSpec workload;
  std::vector<PolicyKind> policies{PolicyKind::lru, PolicyKind::lrc, PolicyKind::lerc};
  std::vector<CapacitySpec> capacities;
  std::size_t reps = 1;
  std::uint64_t seed_base = 0;
  ClusterConfig cluster;  // cache capacity and seed are set per cell
  std::string out;        // empty: stdout

  void validate() const {
    if (policies.empty()) throw Error(ErrorCode::InvalidPlan, "no policies");
    if (capacities.empty()) throw Error(ErrorCode::InvalidPlan, "no capacities");
    if (reps < 1) throw Error(ErrorCode::InvalidPlan, "reps must be >= 1");
    cluster.validate();
  }
  std::size_t cells() const { return policies.size() * capacities.size() * reps; }
};

inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t cell_seed(std::uint64_t seed_base, std::size_t cell) { return mix_seed(seed_base, 2 * cell); }
inline std::uint64_t workload_seed(std::uint64_t seed_base, std::size_t rep) {
  return mix_seed(seed_base, 2 * rep + 1);
}

struct CellResult {
  std::size_t cell = 0;
  std::string workload;
  PolicyKind policy = PolicyKind::lru;
  std::string capacity;  // as given: "50%" or absolute units
  std::size_t rep = 0;
  std::uint64_t seed = 0;
  SimReport report;
};

/// Runs one cell. Cells are independent, so any subset may be re-run alone.
/// If `messages` is given, it receives the cell's protocol log as JSONL.
inline CellResult run_cell(const ExperimentPlan& plan, std::size_t cell, std::string* messages = nullptr) {
  if (cell >= plan.cells()) throw Error(ErrorCode::InvalidPlan, "cell " + std::to_string(cell) + " out of range");
  const auto rep = cell % plan.reps;
  const auto cap_i = (cell / plan.reps) % plan.capacities.size();
  const auto pol_i = cell / (plan.reps * plan.capacities.size());
  CellResult r;
  r.cell = cell;
  r.workload = plan.workload.name();
  r.policy = plan.policies[pol_i];
  r.capacity = plan.capacities[cap_i].label();
  r.rep = rep;
  r.seed = cell_seed(plan.seed_base, cell);
  auto jobs = build_workload(plan.workload, workload_seed(plan.seed_base, rep));
  auto config = plan.cluster;
  config.cache_capacity_per_worker = plan.capacities[cap_i].per_worker(total_input_size(jobs), config.workers);
  config.seed = r.seed;
  Simulator sim(std::move(jobs), config, r.policy);
  r.report = sim.run();
  if (messages) *messages = sim.log().to_jsonl(sim.catalog());
  return r;
}

/// Every cell, ordered by cell index.
inline std::vector<CellResult> run_plan(const ExperimentPlan& plan) {
  plan.validate();
  std::vector<CellResult> out;
  out.reserve(plan.cells());
  for (std::size_t c = 0; c < plan.cells(); ++c) out.push_back(run_cell(plan, c));
  return out;
}

inline constexpr std::string_view kCsvHeader =
    "workload,policy,capacity,rep,seed,makespan,hit_ratio,effective_hit_ratio,broadcasts,reports,evictions";

inline std::string csv_row(const CellResult& r) {
  using detail::format_number;
  std::ostringstream os;
  os << r.workload << ',' << to_string(r.policy) << ',' << r.capacity << ',' << r.rep << ',' << r.seed << ','
     << format_number(r.report.makespan) << ',' << format_number(r.report.hit_ratio) << ','
     << format_number(r.report.effective_hit_ratio) << ',' << r.report.broadcasts << ',' << r.report.reports << ','
     << r.report.evictions;
  return os.str();
}

inline std::string to_csv(const std::vector<CellResult>& rows) {
  std::string out(kCsvHeader);
  out += '\n';
  for (const auto& r : rows) {
    out += csv_row(r);
    out += '\n';
  }
  return out;
}

inline nlohmann::json to_json(const SimReport& r) {
  nlohmann::json j;
  j["policy"] = r.policy;
  j["capacity"] = r.capacity;
  j["makespan"] = r.makespan;
  j["total_task_time"] = r.total_task_time;
  j["accesses"] = r.accesses;
  j["hits"] = r.hits;
  j["effective_hits"] = r.effective_hits;
  j["hit_ratio"] = r.hit_ratio;
  j["effective_hit_ratio"] = r.effective_hit_ratio;
  j["broadcasts"] = r.broadcasts;
  j["max_group_broadcasts"] = r.max_group_broadcasts;
  j["groups"] = r.groups;
  j["reports"] = r.reports;
  j["messages"] = r.messages;
  j["evictions"] = r.evictions;
  auto victims = nlohmann::json::array();
  for (const auto& v : r.victims) victims.push_back(to_string(v));
  j["victims"] = victims;
  return j;
}

inline nlohmann::json to_json(const CellResult& r) {
  nlohmann::json j;
  j["cell"] = r.cell;
  j["workload"] = r.workload;
  j["policy"] = to_string(r.policy);
  j["capacity"] = r.capacity;
  j["rep"] = r.rep;
  j["seed"] = r.seed;
  j["report"] = to_json(r.report);
  return j;
}

struct Stat {
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
};

struct SummaryRow {
  PolicyKind policy = PolicyKind::lru;
  std::string capacity;
  std::size_t n = 0;
  Stat makespan;
  Stat hit_ratio;
  Stat effective_hit_ratio;
};

/// mean/min/max per (policy, capacity), in plan order.
inline std::vector<SummaryRow> summarize(const std::vector<CellResult>& rows) {
  std::vector<SummaryRow> out;
  std::map<std::pair<PolicyKind, std::string>, std::size_t> index;
  auto fold = [](Stat& s, double v, std::size_t n) {
    if (n == 0) {
      s = {v, v, v};
      return;
    }
    s.mean += v;
    s.min = std::min(s.min, v);
    s.max = std::max(s.max, v);
  };
  for (const auto& r : rows) {
    auto [it, fresh] = index.emplace(std::pair(r.policy, r.capacity), out.size());
    if (fresh) out.push_back({r.policy, r.capacity, 0, {}, {}, {}});
    auto& s = out[it->second];
    fold(s.makespan, r.report.makespan, s.n);
    fold(s.hit_ratio, r.report.hit_ratio, s.n);
    fold(s.effective_hit_ratio, r.report.effective_hit_ratio, s.n);
    ++s.n;
  }
  for (auto& s : out) {
    const auto n = static_cast<double>(s.n);
    s.makespan.mean /= n;
    s.hit_ratio.mean /= n;
    s.effective_hit_ratio.mean /= n;
  }
  return out;
}

inline std::string format_summary(const std::vector<SummaryRow>& rows) {
  std::ostringstream os;
  os << "policy,capacity,n,makespan_mean,makespan_min,makespan_max,hit_ratio_mean,hit_ratio_min,hit_ratio_max,"
        "effective_hit_ratio_mean,effective_hit_ratio_min,effective_hit_ratio_max\n";
  for (const auto& s : rows) {
    os << to_string(s.policy) << ',' << s.capacity << ',' << s.n;
    for (const auto* st : {&s.makespan, &s.hit_ratio, &s.effective_hit_ratio}) {
      os << ',' << detail::format_number(st->mean) << ',' << detail::format_number(st->min) << ','
         << detail::format_number(st->max);
    }
    os << '\n';
  }
  return os.str();
}

// ---- recipes ----

struct Fig1Result {
  SimReport report;
  std::vector<BlockRef> victims;  // evicted to make room for e
};

inline Fig1Result run_fig1(PolicyKind policy, TieBreak tie_break = TieBreak::lru_fallback, std::uint64_t seed = 0) {
  auto w = gen_fig1();
  w.config.tie_break = tie_break;
  w.config.seed = seed;
  Fig1Result r;
  Simulator sim({w.dag}, w.config, policy);
  const auto e = sim.catalog().id(w.pending_insert);
  bool seen = false;
  sim.set_observer([&](const Simulator& s) {
    if (seen || s.tiers()[e] == Tier::none) return;
    seen = true;
    r.victims = s.victims();
  });
  r.report = sim.run();
  return r;
}

inline std::string fig1_csv(const Fig1Result& r, std::uint64_t seed) {
  CellResult cell;
  cell.workload = "fig1";
  cell.policy = parse_policy(r.report.policy);
  cell.capacity = detail::format_number(r.report.capacity);
  cell.seed = seed;
  cell.report = r.report;
  std::string victims;
  for (const auto& v : r.victims) {
    if (!victims.empty()) victims += ';';
    victims += v.rdd + ":" + std::to_string(v.partition);
  }
  return std::string(kCsvHeader) + ",victims\n" + csv_row(cell) + "," + victims + "\n";
}

inline std::string staircase_csv(const std::vector<StaircasePoint>& points) {
  std::string out = "cached,total_task_time,makespan,hit_ratio,effective_hit_ratio\n";
  for (const auto& p : points) {
    out += std::to_string(p.cached) + "," + detail::format_number(p.total_task_time) + "," +
           detail::format_number(p.makespan) + "," + detail::format_number(p.hit_ratio) + "," +
           detail::format_number(p.effective_hit_ratio) + "\n";
  }
  return out;
}

/// 10 tenants x 20 partitions, LRU / LRC / LERC, caches at 33-83% of total input.
inline ExperimentPlan multitenant_plan(std::size_t reps = 10, std::uint64_t seed_base = 0) {
  ExperimentPlan plan;
  plan.workload.kind = WorkloadKind::multi_tenant_zip;
  plan.policies = {PolicyKind::lru, PolicyKind::lrc, PolicyKind::lerc};
  for (double f : {0.33, 0.50, 0.66, 0.83}) plan.capacities.push_back({f, true});
  plan.reps = reps;
  plan.seed_base = seed_base;
  plan.cluster = default_cluster(WorkloadKind::multi_tenant_zip);
  return plan;
}

}  // namespace lerc
