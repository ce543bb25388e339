#pragma once

// Discrete-event simulation of a cluster of workers, each with a bounded
// memory cache backed by disk, running the tasks of one or more job DAGs.
//
// Cost model: a task reads its inputs in parallel, so it runs at memory speed
// only if every input is in memory when it starts; otherwise the slowest
// (disk) read paces the whole input:
//
//   duration = compute_cost + sum(input sizes) * (all inputs in memory ? mem_read_cost : disk_read_cost)
//
// Event order at equal timestamps: message deliveries, block insertions, task
// completions, then task dispatch; remaining ties go by sequence number.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <queue>
#include <set>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "lerc/catalog.hpp"
#include "lerc/dag.hpp"
#include "lerc/error.hpp"
#include "lerc/oracle.hpp"
#include "lerc/policy.hpp"
#include "lerc/protocol.hpp"

namespace lerc {

struct ClusterConfig {
  int workers = 1;
  int slots_per_worker = 1;
  double cache_capacity_per_worker = 0.0;
  double mem_read_cost = 1.0;
  double disk_read_cost = 10.0;
  double broadcast_latency = 0.0;
  std::uint64_t seed = 0;
  TieBreak tie_break = TieBreak::lru_fallback;

  void validate() const {
    if (workers < 1) throw Error(ErrorCode::InvalidConfig, "workers must be >= 1");
    if (slots_per_worker < 1) throw Error(ErrorCode::InvalidConfig, "slots_per_worker must be >= 1");
    if (!(cache_capacity_per_worker >= 0.0)) throw Error(ErrorCode::InvalidConfig, "negative cache capacity");
    if (!(mem_read_cost > 0.0)) throw Error(ErrorCode::InvalidConfig, "mem_read_cost must be > 0");
    if (!(disk_read_cost > mem_read_cost)) {
      throw Error(ErrorCode::InvalidConfig, "disk_read_cost must exceed mem_read_cost");
    }
    if (!(broadcast_latency >= 0.0)) throw Error(ErrorCode::InvalidConfig, "negative broadcast latency");
  }
};

enum class EventKind : std::uint8_t { message_delivery, block_insert, task_finish, eviction, task_start };

struct SimEvent {
  double time = 0.0;
  EventKind kind = EventKind::task_start;
  std::uint64_t seq = 0;
  std::uint32_t index = 0;  // message slot, block id or group id depending on kind

  auto order() const { return std::tuple(time, static_cast<int>(kind), seq); }
};

struct AccessRecord {
  GroupId task = 0;
  BlockId block = 0;
  bool hit = false;
  bool effective = false;
};

/// hit: the block is in memory. effective: hit, and every materialized peer
/// of the block w.r.t. this task is in memory too.
inline AccessRecord classify_access(const Catalog& catalog, GroupId task, BlockId block,
                                    std::span<const Tier> tiers) {
  AccessRecord r{task, block, tiers[block] == Tier::memory, false};
  if (!r.hit) return r;
  r.effective = std::all_of(catalog.group(task).members.begin(), catalog.group(task).members.end(),
                            [&](BlockId m) { return tiers[m] == Tier::none || tiers[m] == Tier::memory; });
  return r;
}

struct SimReport {
  std::string policy;
  double capacity = 0.0;
  double makespan = 0.0;
  double total_task_time = 0.0;
  std::size_t accesses = 0;
  std::size_t hits = 0;
  std::size_t effective_hits = 0;
  double hit_ratio = 0.0;
  double effective_hit_ratio = 0.0;
  std::size_t broadcasts = 0;  // fan-out rounds
  std::size_t max_group_broadcasts = 0;  // most fan-outs that flipped any one group
  std::size_t groups = 0;
  std::size_t reports = 0;
  std::size_t messages = 0;
  std::size_t evictions = 0;
  std::vector<BlockRef> victims;  // in eviction order

  bool operator==(const SimReport&) const = default;
};

class Simulator {
 public:
  using Observer = std::function<void(const Simulator&)>;

  Simulator(std::vector<JobDag> workloads, ClusterConfig config, PolicyKind policy)
      : catalog_(std::move(workloads)), config_(validated(config)), policy_(policy),
        master_(catalog_, config_.workers, config_.broadcast_latency) {
    for (int w = 0; w < config_.workers; ++w) {
      trackers_.emplace_back(w, PolicyEngine(catalog_, policy_, config_.cache_capacity_per_worker,
                                             config_.tie_break, derive_seed(config_.seed, w)));
      free_slots_.push_back(config_.slots_per_worker);
    }
    const auto nb = catalog_.block_count();
    tier_.assign(nb, Tier::none);
    home_.assign(nb, -1);
    for (BlockId b = 0; b < nb; ++b) {
      auto src = catalog_.source(b);
      if (!src) continue;
      const auto& s = catalog_.jobs()[src->job].sources[src->index];
      tier_[b] = s.tier;
      home_[b] = s.worker ? *s.worker : static_cast<int>(s.ref.partition % static_cast<std::uint32_t>(config_.workers));
      if (home_[b] >= config_.workers) {
        throw Error(ErrorCode::InvalidConfig, to_string(s.ref) + " placed on worker " + std::to_string(home_[b]) +
                                                  " but the cluster has " + std::to_string(config_.workers));
      }
    }
    started_.assign(catalog_.group_count(), false);
    finished_.assign(catalog_.group_count(), false);
    executor_.assign(catalog_.group_count(), -1);
    remaining_inputs_.assign(catalog_.group_count(), 0);
    for (GroupId g = 0; g < catalog_.group_count(); ++g) {
      for (auto m : catalog_.group(g).members) remaining_inputs_[g] += tier_[m] == Tier::none;
    }
  }

  Simulator(const Simulator&) = delete;
  Simulator& operator=(const Simulator&) = delete;

  /// Called after every event that leaves no message in flight.
  void set_observer(Observer obs) { observer_ = std::move(obs); }

  SimReport run() {
    if (ran_) throw Error(ErrorCode::InvalidConfig, "simulator already ran");
    ran_ = true;
    setup();
    notify();
    while (!queue_.empty()) {
      auto ev = queue_.top();
      queue_.pop();
      now_ = ev.time;
      switch (ev.kind) {
        case EventKind::message_delivery: deliver(ev.index); break;
        case EventKind::block_insert: insert_source(ev.index); break;
        case EventKind::task_finish: finish_task(ev.index); break;
        case EventKind::task_start: dispatch(); break;
        case EventKind::eviction: break;
      }
      ++events_;
      notify();
    }
    if (completed_ != catalog_.group_count()) {
      throw Error(ErrorCode::Deadlock, std::to_string(catalog_.group_count() - completed_) +
                                           " tasks never became runnable");
    }
    return report();
  }

  const Catalog& catalog() const { return catalog_; }
  const ClusterConfig& config() const { return config_; }
  const MessageLog& log() const { return log_; }
  const std::vector<AccessRecord>& accesses() const { return records_; }
  const std::vector<BlockRef>& victims() const { return victims_; }
  std::span<const Tier> tiers() const { return tier_; }
  int home(BlockId b) const { return home_.at(b); }
  const PolicyEngine& engine(int worker) const { return trackers_.at(static_cast<std::size_t>(worker)).engine(); }
  const PeerTrackerMaster& master() const { return master_; }
  double now() const { return now_; }
  std::size_t events() const { return events_; }
  std::size_t in_flight() const { return in_flight_; }
  bool running(GroupId g) const { return started_.at(g) && !finished_.at(g); }

  std::vector<bool> materialized() const {
    std::vector<bool> out(tier_.size());
    for (std::size_t b = 0; b < tier_.size(); ++b) out[b] = tier_[b] != Tier::none;
    return out;
  }
  std::vector<bool> in_memory() const {
    std::vector<bool> out(tier_.size());
    for (std::size_t b = 0; b < tier_.size(); ++b) out[b] = tier_[b] == Tier::memory;
    return out;
  }

 private:
  static std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  static ClusterConfig validated(ClusterConfig config) {
    config.validate();
    return config;
  }

  PolicyEngine& local(int worker) { return trackers_[static_cast<std::size_t>(worker)].engine(); }

  void push(EventKind kind, double time, std::uint32_t index) { queue_.push({time, kind, seq_++, index}); }

  void schedule_dispatch() {
    if (dispatch_pending_ && *dispatch_pending_ == now_) return;
    dispatch_pending_ = now_;
    push(EventKind::task_start, now_, 0);
  }

  void send(ProtocolMessage m) {
    log_.record(m);
    pending_.push_back(std::move(m));
    ++in_flight_;
    push(EventKind::message_delivery, pending_.back().deliver_at, static_cast<std::uint32_t>(pending_.size() - 1));
  }

  void setup() {
    // Profiles carry the groups' labels as of submission: a group whose
    // already-materialized member is not in memory starts incomplete.
    auto labels = label_oracle(catalog_, materialized(), in_memory());
    for (std::size_t j = 0; j < catalog_.jobs().size(); ++j) {
      std::vector<GroupLabel> initial;
      for (std::size_t t = 0; t < catalog_.jobs()[j].tasks.size(); ++t) initial.push_back(labels[catalog_.group_of(j, t)]);
      for (auto& m : master_.broadcast_peer_profile(j, initial, 0.0)) {
        log_.record(m);
        trackers_[static_cast<std::size_t>(m.dst)].on_profile(m);
      }
    }

    for (const auto& job : catalog_.jobs()) {
      for (const auto& s : job.sources) {
        if (s.tier != Tier::memory) continue;
        auto b = catalog_.id(s.ref);
        auto& eng = local(home_[b]);
        if (eng.free_space() + 1e-9 < catalog_.size(b)) {
          throw Error(ErrorCode::InsufficientCapacity,
                      "initially resident blocks overflow worker " + std::to_string(home_[b]));
        }
        eng.insert(b);
      }
    }

    if (policy_ == PolicyKind::sticky) {
      for (int w = 0; w < config_.workers; ++w) {
        std::vector<GroupId> broken;
        for (GroupId g = 0; g < catalog_.group_count(); ++g) {
          if (labels[g] == GroupLabel::incomplete) broken.push_back(g);
        }
        for (auto b : local(w).sticky_followups(broken)) {
          if (local(w).resident(b)) evict(w, b);
        }
      }
    }

    // Insertions at equal times interleave across jobs: by position within the
    // job's insertion list, then by job order.
    std::vector<std::tuple<double, std::size_t, std::size_t, BlockId>> inserts;
    for (std::size_t j = 0; j < catalog_.jobs().size(); ++j) {
      std::size_t pos = 0;
      for (const auto& s : catalog_.jobs()[j].sources) {
        if (s.insert_at) inserts.emplace_back(*s.insert_at, pos++, j, catalog_.id(s.ref));
      }
    }
    std::sort(inserts.begin(), inserts.end());
    for (const auto& [t, pos, j, b] : inserts) push(EventKind::block_insert, t, b);

    for (GroupId g = 0; g < catalog_.group_count(); ++g) {
      if (remaining_inputs_[g] == 0) make_ready(g);
    }
    schedule_dispatch();
  }

  void make_ready(GroupId g) {
    const auto& info = catalog_.group(g);
    ready_.emplace(now_, info.task, info.job, g);
  }

  void materialize(BlockId b, int worker, Tier tier) {
    tier_[b] = tier;
    home_[b] = worker;
    for (auto g : catalog_.groups_of(b)) {
      if (--remaining_inputs_[g] == 0) make_ready(g);
    }
  }

  void evict(int worker, BlockId b) {
    auto flipped = local(worker).on_block_evicted(b);
    tier_[b] = Tier::disk;
    ++evictions_;
    victims_.push_back(catalog_.ref(b));
    after_left_memory(worker, b, flipped);
  }

  void after_left_memory(int worker, BlockId b, const std::vector<GroupId>& flipped) {
    auto& tracker = trackers_[static_cast<std::size_t>(worker)];
    if (auto report = tracker.report_eviction(b, flipped, now_, config_.broadcast_latency)) send(std::move(*report));
    for (auto m : tracker.engine().sticky_followups(flipped)) {
      if (tracker.engine().resident(m)) evict(worker, m);
    }
  }

  /// Puts a freshly materialized block into `worker`'s memory, spilling it to
  /// disk if pinned blocks leave no room.
  void place(int worker, BlockId b) {
    auto& eng = local(worker);
    auto result = eng.admit(b);
    for (const auto& ev : result.evictions) {
      tier_[ev.block] = Tier::disk;
      ++evictions_;
      victims_.push_back(catalog_.ref(ev.block));
    }
    materialize(b, worker, result.inserted ? Tier::memory : Tier::disk);
    // Reports go out after the whole decision so followups see final
    // residency; a sticky followup may evict b itself.
    for (const auto& ev : result.evictions) after_left_memory(worker, ev.block, ev.newly_incomplete);
    if (!result.inserted) after_left_memory(worker, b, eng.on_left_memory(b));
  }

  void insert_source(BlockId b) {
    place(home_[b], b);
    schedule_dispatch();
  }

  int choose_worker(GroupId g) const {
    int best = -1;
    std::tuple<double, double, int> best_score{};
    for (int w = 0; w < config_.workers; ++w) {
      if (free_slots_[static_cast<std::size_t>(w)] == 0) continue;
      double mem_bytes = 0.0, home_bytes = 0.0;
      for (auto m : catalog_.group(g).members) {
        if (home_[m] != w) continue;
        home_bytes += catalog_.size(m);
        if (tier_[m] == Tier::memory) mem_bytes += catalog_.size(m);
      }
      std::tuple<double, double, int> score{mem_bytes, home_bytes, free_slots_[static_cast<std::size_t>(w)]};
      if (best < 0 || score > best_score) {
        best = w;
        best_score = score;
      }
    }
    return best;
  }

  void dispatch() {
    dispatch_pending_.reset();
    while (!ready_.empty()) {
      auto it = ready_.begin();
      auto g = std::get<3>(*it);
      int w = choose_worker(g);
      if (w < 0) break;
      ready_.erase(it);
      start_task(g, w);
    }
  }

  void start_task(GroupId g, int worker) {
    const auto& info = catalog_.group(g);
    const auto& task = catalog_.task(g);
    bool all_memory = true;
    double input_size = 0.0;
    for (auto m : info.members) {
      auto rec = classify_access(catalog_, g, m, tier_);
      records_.push_back(rec);
      all_memory = all_memory && rec.hit;
      input_size += catalog_.size(m);
    }
    for (auto m : info.members) {
      auto& eng = local(home_[m]);
      eng.on_access(m);
      if (tier_[m] == Tier::memory) eng.pin(m);
    }
    const double duration =
        task.compute_cost + input_size * (all_memory ? config_.mem_read_cost : config_.disk_read_cost);
    total_task_time_ += duration;
    started_[g] = true;
    executor_[g] = worker;
    --free_slots_[static_cast<std::size_t>(worker)];
    push(EventKind::task_finish, now_ + duration, g);
  }

  void finish_task(GroupId g) {
    const auto& info = catalog_.group(g);
    const int worker = executor_[g];
    for (auto m : info.members) {
      auto& eng = local(home_[m]);
      if (eng.pinned(m)) eng.unpin(m);
    }
    finished_[g] = true;
    ++completed_;
    makespan_ = std::max(makespan_, now_);
    ++free_slots_[static_cast<std::size_t>(worker)];

    local(worker).on_task_complete(g);
    for (auto& m : master_.on_task_complete(g, worker, now_)) send(std::move(m));
    place(worker, info.output);
    schedule_dispatch();
  }

  void deliver(std::uint32_t slot) {
    auto m = std::move(pending_[slot]);
    --in_flight_;
    switch (m.kind) {
      case MessageKind::eviction_report:
        for (auto& out : master_.on_eviction_report(m, now_)) send(std::move(out));
        break;
      case MessageKind::eviction_broadcast: {
        auto flipped = trackers_[static_cast<std::size_t>(m.dst)].on_broadcast(m);
        for (auto b : local(m.dst).sticky_followups(flipped)) {
          if (local(m.dst).resident(b)) evict(m.dst, b);
        }
        break;
      }
      case MessageKind::erc_update:
        trackers_[static_cast<std::size_t>(m.dst)].on_erc_update(m);
        break;
      case MessageKind::peer_profile_broadcast:
        break;
    }
  }

  void notify() {
    if (observer_ && in_flight_ == 0) observer_(*this);
  }

  SimReport report() const {
    SimReport r;
    r.policy = std::string(to_string(policy_));
    r.capacity = config_.cache_capacity_per_worker;
    r.makespan = makespan_;
    r.total_task_time = total_task_time_;
    r.accesses = records_.size();
    for (const auto& rec : records_) {
      r.hits += rec.hit;
      r.effective_hits += rec.effective;
    }
    if (r.accesses > 0) {
      r.hit_ratio = static_cast<double>(r.hits) / static_cast<double>(r.accesses);
      r.effective_hit_ratio = static_cast<double>(r.effective_hits) / static_cast<double>(r.accesses);
    }
    r.broadcasts = log_.broadcast_rounds();
    for (const auto& [g, n] : log_.broadcasts_per_group()) r.max_group_broadcasts = std::max(r.max_group_broadcasts, n);
    r.groups = catalog_.group_count();
    r.reports = log_.count(MessageKind::eviction_report);
    r.messages = log_.records().size();
    r.evictions = evictions_;
    r.victims = victims_;
    return r;
  }

  struct EventAfter {
    bool operator()(const SimEvent& a, const SimEvent& b) const { return a.order() > b.order(); }
  };

  Catalog catalog_;
  ClusterConfig config_;
  PolicyKind policy_;
  PeerTrackerMaster master_;
  std::vector<PeerTracker> trackers_;
  std::vector<int> free_slots_;
  std::vector<Tier> tier_;
  std::vector<int> home_;
  std::vector<bool> started_;
  std::vector<bool> finished_;
  std::vector<int> executor_;
  std::vector<int> remaining_inputs_;
  // (ready time, position in job, job index, group)
  std::set<std::tuple<double, std::size_t, std::size_t, GroupId>> ready_;
  std::priority_queue<SimEvent, std::vector<SimEvent>, EventAfter> queue_;
  std::vector<ProtocolMessage> pending_;
  std::vector<AccessRecord> records_;
  std::vector<BlockRef> victims_;
  MessageLog log_;
  Observer observer_;
  std::optional<double> dispatch_pending_;
  double now_ = 0.0;
  double makespan_ = 0.0;
  double total_task_time_ = 0.0;
  std::uint64_t seq_ = 0;
  std::size_t completed_ = 0;
  std::size_t evictions_ = 0;
  std::size_t events_ = 0;
  std::size_t in_flight_ = 0;
  bool ran_ = false;
};

inline SimReport run(std::vector<JobDag> workloads, const ClusterConfig& config, PolicyKind policy) {
  Simulator sim(std::move(workloads), config, policy);
  return sim.run();
}

}  // namespace lerc
