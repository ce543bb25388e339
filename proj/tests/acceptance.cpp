// Acceptance suite: one PASS/FAIL line per criterion; exit status is the
// number of failures.

#include <chrono>
#include <cstdio>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "lerc/experiment.hpp"
#include "lerc/oracle.hpp"
#include "lerc/simulator.hpp"
#include "lerc/staircase.hpp"
#include "lerc/workloads.hpp"

using namespace lerc;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Every run feeding criterion 5.
struct BroadcastTally {
  std::size_t runs = 0;
  std::size_t violations = 0;
  std::size_t worst_per_group = 0;
  std::string first_violation;

  void add(const SimReport& r, const std::string& where) {
    ++runs;
    worst_per_group = std::max(worst_per_group, r.max_group_broadcasts);
    if (r.max_group_broadcasts > 1 || r.broadcasts > r.groups) {
      if (violations++ == 0) first_violation = where;
    }
  }
};

int failures = 0;

void verdict(int id, bool pass, const std::string& detail) {
  std::printf("%s criterion %d: %s\n", pass ? "PASS" : "FAIL", id, detail.c_str());
  std::fflush(stdout);
  failures += pass ? 0 : 1;
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

void fig1_lerc(BroadcastTally& tally) {
  auto t0 = Clock::now();
  auto r = run_fig1(PolicyKind::lerc);
  const double secs = seconds_since(t0);
  tally.add(r.report, "fig1 lerc");
  const bool victim_c = r.victims.size() == 1 && r.victims[0] == BlockRef{"fig1", "c", 0};
  const bool pass = victim_c && r.report.effective_hit_ratio == 0.5 && secs < 1.0;
  std::string victims;
  for (const auto& v : r.victims) victims += (victims.empty() ? "" : " ") + v.rdd;
  verdict(1, pass,
          "fig1 LERC victim=[" + victims + "] effective_hit_ratio=" + fmt("%.4f", r.report.effective_hit_ratio) +
              " (want c, 0.5) time=" + fmt("%.3fs", secs) + " (< 1s)");
}

void fig1_lrc_random(BroadcastTally& tally) {
  auto t0 = Clock::now();
  const int n = 10000;
  double eff = 0.0;
  int wrong = 0;
  for (int seed = 0; seed < n; ++seed) {
    auto r = run_fig1(PolicyKind::lrc, TieBreak::random, static_cast<std::uint64_t>(seed));
    tally.add(r.report, "fig1 lrc seed " + std::to_string(seed));
    eff += r.report.effective_hit_ratio;
    if (r.victims.size() != 1 || r.victims[0].rdd != "c") ++wrong;
  }
  const double secs = seconds_since(t0);
  const double mean_pp = 100.0 * eff / n;
  const double wrong_pp = 100.0 * wrong / n;
  const bool pass = std::abs(mean_pp - 16.7) <= 1.0 && std::abs(wrong_pp - 66.7) <= 1.5 && secs < 30.0;
  verdict(2, pass,
          "fig1 LRC random tie-break over " + std::to_string(n) + " seeds: mean effective=" + fmt("%.2f%%", mean_pp) +
              " (16.7 +/- 1.0) wrong-victim=" + fmt("%.2f%%", wrong_pp) + " (66.7 +/- 1.5) time=" +
              fmt("%.2fs", secs) + " (< 30s)");
}

void staircase(BroadcastTally& tally) {
  auto t0 = Clock::now();
  auto pts = staircase_experiment(ClusterConfig{});
  const double secs = seconds_since(t0);
  bool ok = pts.size() == 21;
  std::string why;
  for (const auto& p : pts) tally.add(p.report, "staircase " + std::to_string(p.cached));
  for (std::size_t k = 0; ok && k <= 9; ++k) {
    if (pts[2 * k + 1].total_task_time != pts[2 * k].total_task_time) {
      ok = false;
      why = " odd step " + std::to_string(2 * k + 1) + " not flat";
    } else if (!(pts[2 * k + 2].total_task_time < pts[2 * k].total_task_time)) {
      ok = false;
      why = " no drop at " + std::to_string(2 * k + 2);
    }
  }
  for (std::size_t i = 1; ok && i < pts.size(); ++i) {
    if (std::abs((pts[i].hit_ratio - pts[i - 1].hit_ratio) - 1.0 / 20.0) > 1e-12) {
      ok = false;
      why = " hit ratio step " + std::to_string(i) + " != 1/20";
    }
  }
  ok = ok && secs < 5.0;
  verdict(3, ok,
          "staircase total task time " + fmt("%g", pts.front().total_task_time) + " -> " +
              fmt("%g", pts.back().total_task_time) + ", flat odd steps, strict even drops, +1/20 hit ratio per step" +
              why + " time=" + fmt("%.3fs", secs) + " (< 5s)");
}

void multitenant(BroadcastTally& tally) {
  auto t0 = Clock::now();
  auto plan = multitenant_plan(10, 0);
  auto rows = run_plan(plan);
  const double secs = seconds_since(t0);
  for (const auto& r : rows) tally.add(r.report, "multitenant cell " + std::to_string(r.cell));
  std::map<std::pair<std::string, PolicyKind>, const SummaryRow*> cell;
  auto summary = summarize(rows);
  for (const auto& s : summary) cell[{s.capacity, s.policy}] = &s;

  bool ok = secs < 120.0;
  std::string detail;
  std::size_t idx = 0;
  for (const auto& cap : plan.capacities) {
    const auto label = cap.label();
    const auto* lru = cell.at({label, PolicyKind::lru});
    const auto* lrc = cell.at({label, PolicyKind::lrc});
    const auto* lerc = cell.at({label, PolicyKind::lerc});
    const bool makespan = lerc->makespan.mean < lrc->makespan.mean && lrc->makespan.mean < lru->makespan.mean;
    const bool hit = lrc->hit_ratio.mean >= lerc->hit_ratio.mean && lerc->hit_ratio.mean >= lru->hit_ratio.mean;
    const bool eff = lerc->effective_hit_ratio.mean >= lrc->effective_hit_ratio.mean &&
                     lrc->effective_hit_ratio.mean >= lru->effective_hit_ratio.mean;
    const bool strict = idx >= 2 || (lerc->effective_hit_ratio.mean > lrc->effective_hit_ratio.mean &&
                                     lerc->effective_hit_ratio.mean > lru->effective_hit_ratio.mean);
    const bool lru_low = lru->effective_hit_ratio.mean < 0.05;
    ok = ok && makespan && hit && eff && strict && lru_low;
    char buf[320];
    std::snprintf(buf, sizeof buf,
                  "\n    %s makespan lru/lrc/lerc=%.1f/%.1f/%.1f%s hit=%.3f/%.3f/%.3f%s eff=%.3f/%.3f/%.3f%s%s",
                  label.c_str(), lru->makespan.mean, lrc->makespan.mean, lerc->makespan.mean, makespan ? "" : " [x]",
                  lru->hit_ratio.mean, lrc->hit_ratio.mean, lerc->hit_ratio.mean, hit ? "" : " [x]",
                  lru->effective_hit_ratio.mean, lrc->effective_hit_ratio.mean, lerc->effective_hit_ratio.mean,
                  eff && strict ? "" : " [x]", lru_low ? "" : " [lru eff >= 5%]");
    detail += buf;
    ++idx;
  }
  verdict(4, ok,
          "multi-tenant 10 tenants x 20 partitions, 10 reps, " + std::to_string(rows.size()) +
              " runs: LERC < LRC < LRU makespan, hit LRC >= LERC >= LRU, effective LERC >= LRC >= LRU "
              "(strict at two smallest), LRU effective < 5%; time=" +
              fmt("%.2fs", secs) + " (< 120s)" + detail);
}

void message_bound(const BroadcastTally& tally) {
  verdict(5, tally.violations == 0 && tally.runs > 0,
          "over " + std::to_string(tally.runs) + " runs: max broadcasts per peer group = " +
              std::to_string(tally.worst_per_group) + " (<= 1), total broadcasts <= peer groups" +
              (tally.violations ? "; first violation: " + tally.first_violation : ""));
}

void oracle_equivalence() {
  auto t0 = Clock::now();
  const PolicyKind kinds[] = {PolicyKind::lru, PolicyKind::lfu, PolicyKind::lrc, PolicyKind::lerc, PolicyKind::sticky};
  std::size_t checks = 0, mismatches = 0, bound_breaks = 0;
  std::string first;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    auto dag = gen_random_dag(seed, 30, 3);
    ClusterConfig c;
    c.workers = 1 + static_cast<int>(seed % 3);
    c.slots_per_worker = 1 + static_cast<int>(seed % 2);
    c.cache_capacity_per_worker = 4 + static_cast<double>(seed % 5);
    c.broadcast_latency = seed % 4 == 0 ? 0.5 : 0.0;
    c.tie_break = seed % 2 ? TieBreak::random : TieBreak::lru_fallback;
    c.seed = seed;
    // keep the initially resident set within every worker's cache
    double mem = 0;
    for (auto& s : dag.sources) {
      if (s.tier == Tier::memory && (mem += s.size) > c.cache_capacity_per_worker) s.tier = Tier::disk;
    }
    Simulator sim({dag}, c, kinds[seed % 5]);
    sim.set_observer([&](const Simulator& s) {
      const auto mat = s.materialized();
      const auto mem_now = s.in_memory();
      const auto rc = rc_oracle(s.catalog(), mat);
      const auto erc = erc_oracle(s.catalog(), mat, mem_now);
      for (int w = 0; w < c.workers; ++w) {
        const auto& eng = s.engine(w);
        for (BlockId b = 0; b < s.catalog().block_count(); ++b) {
          ++checks;
          if (eng.rc(b) != rc[b] || eng.erc(b) != erc[b] || s.master().rc(b) != rc[b]) {
            if (mismatches++ == 0) {
              first = "seed " + std::to_string(seed) + " worker " + std::to_string(w) + " block " +
                      to_string(s.catalog().ref(b)) + " t=" + fmt("%g", s.now());
            }
          }
          if (eng.erc(b) < 0 || eng.erc(b) > eng.rc(b)) ++bound_breaks;
        }
      }
    });
    sim.run();
  }
  const double secs = seconds_since(t0);
  verdict(6, mismatches == 0 && bound_breaks == 0 && secs < 60.0,
          "1000 random workloads (<= 30 tasks, all policies, 1-3 workers): " + std::to_string(checks) +
              " quiescent (worker, block) checks, rc/erc mismatches=" + std::to_string(mismatches) +
              ", erc > rc=" + std::to_string(bound_breaks) + (first.empty() ? "" : " first at " + first) +
              " time=" + fmt("%.2fs", secs) + " (< 60s)");
}

void determinism() {
  auto plan = multitenant_plan(2, 12345);
  plan.cluster.tie_break = TieBreak::random;
  plan.cluster.broadcast_latency = 0.5;
  bool same = true;
  std::size_t compared = 0;
  for (std::size_t cell = 0; cell < plan.cells(); ++cell) {
    same = same && csv_row(run_cell(plan, cell)) == csv_row(run_cell(plan, cell));
    ++compared;
  }
  auto fig1 = fig1_csv(run_fig1(PolicyKind::lrc, TieBreak::random, 99), 99);
  same = same && fig1 == fig1_csv(run_fig1(PolicyKind::lrc, TieBreak::random, 99), 99);
  verdict(7, same, std::to_string(compared) + " plan cells and one fig1 row re-run with identical seeds: byte-identical CSV rows");
}

}  // namespace

int main() {
  BroadcastTally tally;
  try {
    fig1_lerc(tally);
    fig1_lrc_random(tally);
    staircase(tally);
    multitenant(tally);
    message_bound(tally);
    oracle_equivalence();
    determinism();
  } catch (const std::exception& e) {
    std::printf("FAIL: uncaught error: %s\n", e.what());
    return 100;
  }
  std::printf("%d failure(s)\n", failures);
  return failures;
}
