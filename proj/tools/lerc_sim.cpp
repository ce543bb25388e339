// lerc-sim: run cache-policy simulations, experiment plans and recipes.
//
// Exit codes: 0 success, 1 invalid input (bad workload, plan or flags),
// 2 runtime failure (I/O, deadlock, capacity).

#include <cstdint>
#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lerc/catalog.hpp"
#include "lerc/experiment.hpp"
#include "lerc/staircase.hpp"
#include "lerc/workload_io.hpp"
#include "lerc/workloads.hpp"

namespace {

using namespace lerc;

constexpr int kOk = 0;
constexpr int kInvalid = 1;
constexpr int kRuntime = 2;

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::IOFailure:
    case ErrorCode::Deadlock:
    case ErrorCode::InsufficientCapacity:
      return kRuntime;
    default:
      return kInvalid;
  }
}

void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
  } else {
    write_text_file(path, text);
  }
}

std::vector<std::string> split_list(const std::vector<std::string>& items) {
  std::vector<std::string> out;
  for (const auto& item : items) {
    std::stringstream ss(item);
    std::string part;
    while (std::getline(ss, part, ',')) {
      if (!part.empty()) out.push_back(part);
    }
  }
  return out;
}

WorkloadSpec workload_from_arg(const std::string& arg) {
  WorkloadSpec spec;
  if (arg == "fig1") {
    spec.kind = WorkloadKind::fig1_coalesce;
  } else if (arg == "zip") {
    spec.kind = WorkloadKind::zip_job;
  } else if (arg == "multitenant") {
    spec.kind = WorkloadKind::multi_tenant_zip;
  } else if (arg == "random") {
    spec.kind = WorkloadKind::random_dag;
  } else {
    spec.kind = WorkloadKind::file;
    spec.path = arg;
    auto slash = arg.find_last_of('/');
    spec.label = slash == std::string::npos ? arg : arg.substr(slash + 1);
  }
  return spec;
}

struct ClusterFlags {
  std::optional<int> workers;
  std::optional<int> slots;
  std::optional<double> mem_cost;
  std::optional<double> disk_cost;
  std::optional<double> latency;
  std::string tie_break = "lru-fallback";

  void add_to(CLI::App* app) {
    app->add_option("--workers", workers, "Number of workers");
    app->add_option("--slots", slots, "Task slots per worker");
    app->add_option("--mem-cost", mem_cost, "Time per unit read from memory");
    app->add_option("--disk-cost", disk_cost, "Time per unit read from disk");
    app->add_option("--latency", latency, "Driver<->worker message latency");
    app->add_option("--tie-break", tie_break, "lru-fallback | random")->capture_default_str();
  }
  ClusterConfig apply(ClusterConfig c) const {
    if (workers) c.workers = *workers;
    if (slots) c.slots_per_worker = *slots;
    if (mem_cost) c.mem_read_cost = *mem_cost;
    if (disk_cost) c.disk_read_cost = *disk_cost;
    if (latency) c.broadcast_latency = *latency;
    c.tie_break = parse_tie_break(tie_break);
    return c;
  }
};

std::string plan_output(const std::vector<CellResult>& rows, const std::string& format) {
  if (format == "csv") return to_csv(rows);
  auto arr = nlohmann::json::array();
  for (const auto& r : rows) arr.push_back(to_json(r));
  return arr.dump(2) + "\n";
}

// ---- validate ----

int cmd_validate(const std::string& path) {
  ParsedWorkload parsed;
  try {
    parsed = read_workload_file(path);
  } catch (const Error& e) {
    std::cerr << path << ": " << e.what() << "\n";
    return exit_code(e.code());
  }
  std::size_t problems = 0;
  for (std::size_t j = 0; j < parsed.jobs.size(); ++j) {
    const auto& lines = parsed.lines[j];
    for (const auto& d : diagnose_dag(parsed.jobs[j])) {
      std::size_t line = lines.job;
      if (d.task) line = lines.tasks.at(*d.task);
      if (d.source) line = lines.sources.at(*d.source);
      std::cerr << path << ":" << line << ": " << to_string(d.code) << ": " << d.message << "\n";
      ++problems;
    }
  }
  if (problems == 0) {
    try {
      Catalog catalog(parsed.jobs);
    } catch (const Error& e) {
      std::cerr << path << ": " << e.what() << "\n";
      return kInvalid;
    }
  }
  if (problems > 0) return kInvalid;
  std::size_t tasks = 0;
  for (const auto& j : parsed.jobs) tasks += j.tasks.size();
  std::cout << path << ": ok (" << parsed.jobs.size() << " jobs, " << tasks << " tasks)\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulate DAG-aware cache eviction policies on a cluster"};
  app.require_subcommand(1);

  // run
  auto* run_cmd = app.add_subcommand("run", "Run a policy x capacity x repetition plan");
  std::string workload_arg;
  std::vector<std::string> policy_args{"lru,lrc,lerc"};
  std::vector<std::string> capacity_args;
  std::size_t reps = 1;
  std::uint64_t seed = 0;
  std::string format = "csv";
  std::string out;
  std::string summary_out;
  std::string messages_out;
  ClusterFlags run_cluster;
  run_cmd->add_option("--workload", workload_arg, "Workload file, or fig1 | zip | multitenant | random")->required();
  run_cmd->add_option("--policy", policy_args, "Comma-separated policies: lru,lfu,lrc,lerc,sticky")
      ->capture_default_str();
  run_cmd->add_option("--capacity", capacity_args, "Cache size per worker (units) or N% of total input")
      ->required();
  run_cmd->add_option("--reps", reps, "Repetitions per (policy, capacity)")->capture_default_str();
  run_cmd->add_option("--seed", seed, "Seed base")->capture_default_str();
  run_cmd->add_option("--format", format, "csv | json")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
  run_cmd->add_option("--out", out, "Output file (default stdout)");
  run_cmd->add_option("--summary", summary_out, "Write mean/min/max per (policy, capacity) as CSV");
  run_cmd->add_option("--messages", messages_out, "Write the protocol message log (JSONL); single-cell plans only");
  run_cluster.add_to(run_cmd);

  // validate
  auto* validate_cmd = app.add_subcommand("validate", "Parse and check a workload file");
  std::string validate_path;
  validate_cmd->add_option("file", validate_path, "Workload file")->required();

  // gen
  auto* gen_cmd = app.add_subcommand("gen", "Write a generated workload in the workload file format");
  std::string gen_kind;
  std::size_t gen_partitions = 10;
  double gen_block = 1.0;
  std::size_t gen_tenants = 10;
  double gen_file_size = 40.0;
  std::uint64_t gen_seed = 0;
  std::size_t gen_max_tasks = 30;
  std::size_t gen_max_fanin = 3;
  std::string gen_out;
  gen_cmd->add_option("kind", gen_kind, "fig1 | zip | multitenant | random")
      ->required()
      ->check(CLI::IsMember({"fig1", "zip", "multitenant", "random"}));
  gen_cmd->add_option("--partitions", gen_partitions, "zip / multitenant partitions")->capture_default_str();
  gen_cmd->add_option("--block-size", gen_block, "zip block size")->capture_default_str();
  gen_cmd->add_option("--tenants", gen_tenants, "multitenant tenant count")->capture_default_str();
  gen_cmd->add_option("--file-size", gen_file_size, "multitenant size of each input file")->capture_default_str();
  gen_cmd->add_option("--seed", gen_seed, "Seed for randomized generators")->capture_default_str();
  gen_cmd->add_option("--max-tasks", gen_max_tasks, "random DAG task bound")->capture_default_str();
  gen_cmd->add_option("--max-fanin", gen_max_fanin, "random DAG fan-in bound")->capture_default_str();
  gen_cmd->add_option("--out", gen_out, "Output file (default stdout)");

  // fig1
  auto* fig1_cmd = app.add_subcommand("fig1", "Two coalesce tasks, one insertion into a full 3-entry cache");
  std::string fig1_policy = "lerc";
  std::string fig1_tie = "lru-fallback";
  std::uint64_t fig1_seed = 0;
  std::string fig1_format = "csv";
  std::string fig1_out;
  fig1_cmd->add_option("--policy", fig1_policy, "Eviction policy")->capture_default_str();
  fig1_cmd->add_option("--tie-break", fig1_tie, "lru-fallback | random")->capture_default_str();
  fig1_cmd->add_option("--seed", fig1_seed, "Tie-break seed")->capture_default_str();
  fig1_cmd->add_option("--format", fig1_format, "csv | json")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();
  fig1_cmd->add_option("--out", fig1_out, "Output file (default stdout)");

  // staircase
  auto* stair_cmd = app.add_subcommand("staircase", "Cache one more zip input per round; report task time");
  std::size_t stair_partitions = 10;
  double stair_block = 1.0;
  std::string stair_out;
  ClusterFlags stair_cluster;
  stair_cmd->add_option("--partitions", stair_partitions, "Zip partitions")->capture_default_str();
  stair_cmd->add_option("--block-size", stair_block, "Block size")->capture_default_str();
  stair_cmd->add_option("--out", stair_out, "Output file (default stdout)");
  stair_cluster.add_to(stair_cmd);

  // multitenant
  auto* mt_cmd = app.add_subcommand("multitenant", "10 zip tenants; LRU, LRC, LERC over a cache-size sweep");
  std::size_t mt_reps = 10;
  std::uint64_t mt_seed = 0;
  std::string mt_format = "csv";
  std::string mt_out;
  std::string mt_summary;
  ClusterFlags mt_cluster;
  mt_cmd->add_option("--reps", mt_reps, "Repetitions per cell")->capture_default_str();
  mt_cmd->add_option("--seed", mt_seed, "Seed base")->capture_default_str();
  mt_cmd->add_option("--format", mt_format, "csv | json")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
  mt_cmd->add_option("--out", mt_out, "Output file (default stdout)");
  mt_cmd->add_option("--summary", mt_summary, "Summary CSV path (default stderr)");
  mt_cluster.add_to(mt_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kInvalid;
  }

  try {
    if (*validate_cmd) return cmd_validate(validate_path);

    if (*gen_cmd) {
      std::vector<JobDag> jobs;
      if (gen_kind == "fig1") {
        jobs = {gen_fig1().dag};
      } else if (gen_kind == "zip") {
        jobs = {gen_zip(gen_partitions, gen_block)};
      } else if (gen_kind == "multitenant") {
        MultiTenantOptions opt;
        opt.tenants = gen_tenants;
        opt.partitions = gen_partitions;
        opt.file_size = gen_file_size;
        opt.seed = gen_seed;
        jobs = gen_multi_tenant(opt);
      } else {
        jobs = {gen_random_dag(gen_seed, gen_max_tasks, gen_max_fanin)};
      }
      emit(gen_out, format_workload(jobs));
      return kOk;
    }

    if (*fig1_cmd) {
      auto r = run_fig1(parse_policy(fig1_policy), parse_tie_break(fig1_tie), fig1_seed);
      if (fig1_format == "csv") {
        emit(fig1_out, fig1_csv(r, fig1_seed));
      } else {
        auto j = to_json(r.report);
        auto victims = nlohmann::json::array();
        for (const auto& v : r.victims) victims.push_back(to_string(v));
        j["victims_for_e"] = victims;
        emit(fig1_out, j.dump(2) + "\n");
      }
      return kOk;
    }

    if (*stair_cmd) {
      auto config = stair_cluster.apply(ClusterConfig{});
      emit(stair_out, staircase_csv(staircase_experiment(config, stair_partitions, stair_block)));
      return kOk;
    }

    if (*mt_cmd) {
      auto plan = multitenant_plan(mt_reps, mt_seed);
      plan.cluster = mt_cluster.apply(plan.cluster);
      auto rows = run_plan(plan);
      emit(mt_out, plan_output(rows, mt_format));
      auto summary = format_summary(summarize(rows));
      if (mt_summary.empty()) {
        std::cerr << summary;
      } else {
        write_text_file(mt_summary, summary);
      }
      return kOk;
    }

    // run
    ExperimentPlan plan;
    plan.workload = workload_from_arg(workload_arg);
    plan.policies.clear();
    for (const auto& p : split_list(policy_args)) plan.policies.push_back(parse_policy(p));
    for (const auto& c : split_list(capacity_args)) plan.capacities.push_back(parse_capacity(c));
    plan.reps = reps;
    plan.seed_base = seed;
    plan.cluster = run_cluster.apply(default_cluster(plan.workload.kind));
    plan.out = out;
    plan.validate();
    if (!messages_out.empty() && plan.cells() != 1) {
      throw Error(ErrorCode::InvalidPlan, "--messages needs exactly one policy, capacity and repetition");
    }
    auto rows = run_plan(plan);
    emit(plan.out, plan_output(rows, format));
    if (!summary_out.empty()) write_text_file(summary_out, format_summary(summarize(rows)));
    if (!messages_out.empty()) {
      std::string log;
      run_cell(plan, 0, &log);
      write_text_file(messages_out, log);
    }
    return kOk;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntime;
  }
}
