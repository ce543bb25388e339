#pragma once

// Bounded memory store with pluggable eviction: LRU, LFU, LRC, LERC, Sticky.
//
// Every policy keeps the same bookkeeping (recency, frequency, reference
// counts, effective reference counts, peer-group labels); they differ only in
// the key used to rank eviction candidates.

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lerc/catalog.hpp"
#include "lerc/dag.hpp"
#include "lerc/error.hpp"

namespace lerc {

enum class PolicyKind { lru, lfu, lrc, lerc, sticky };
enum class TieBreak { lru_fallback, random };

constexpr std::string_view to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::lru: return "lru";
    case PolicyKind::lfu: return "lfu";
    case PolicyKind::lrc: return "lrc";
    case PolicyKind::lerc: return "lerc";
    case PolicyKind::sticky: return "sticky";
  }
  return "lru";
}

constexpr std::string_view to_string(TieBreak tb) {
  return tb == TieBreak::random ? "random" : "lru-fallback";
}

inline PolicyKind parse_policy(std::string_view name) {
  if (name == "lru") return PolicyKind::lru;
  if (name == "lfu") return PolicyKind::lfu;
  if (name == "lrc") return PolicyKind::lrc;
  if (name == "lerc") return PolicyKind::lerc;
  if (name == "sticky") return PolicyKind::sticky;
  throw Error(ErrorCode::UnknownPolicy, "'" + std::string(name) + "' (expected lru|lfu|lrc|lerc|sticky)");
}

inline TieBreak parse_tie_break(std::string_view name) {
  if (name == "lru-fallback") return TieBreak::lru_fallback;
  if (name == "random") return TieBreak::random;
  throw Error(ErrorCode::InvalidConfig, "tie-break '" + std::string(name) + "' (expected lru-fallback|random)");
}

struct CacheState {
  double capacity = 0.0;
  std::map<BlockId, double> resident;
  double used = 0.0;
};

struct PolicyState {
  std::uint64_t clock = 0;
  std::vector<std::uint64_t> recency;  // last access tick, 0 = never
  std::vector<std::uint64_t> frequency;
  std::vector<int> rc;
  std::vector<int> erc;
  std::vector<GroupLabel> labels;
  std::vector<bool> known;    // group profile received
  std::vector<bool> retired;  // group's task completed
};

struct EvictionDecision {
  std::vector<BlockId> victims;
  double freed = 0.0;
};

struct Eviction {
  BlockId block = 0;
  std::vector<GroupId> newly_incomplete;
};

struct AdmitResult {
  bool inserted = false;
  std::vector<Eviction> evictions;
};

class PolicyEngine {
 public:
  PolicyEngine(const Catalog& catalog, PolicyKind kind, double capacity,
               TieBreak tie_break = TieBreak::lru_fallback, std::uint64_t seed = 0)
      : catalog_(&catalog), kind_(kind), tie_break_(tie_break), rng_(seed) {
    if (!(capacity >= 0.0)) throw Error(ErrorCode::InvalidConfig, "negative cache capacity");
    cache_.capacity = capacity;
    const auto nb = catalog.block_count();
    const auto ng = catalog.group_count();
    state_.recency.assign(nb, 0);
    state_.frequency.assign(nb, 0);
    state_.rc.assign(nb, 0);
    state_.erc.assign(nb, 0);
    state_.labels.assign(ng, GroupLabel::complete);
    state_.known.assign(ng, false);
    state_.retired.assign(ng, false);
    pins_.assign(nb, 0);
  }

  PolicyKind kind() const { return kind_; }
  TieBreak tie_break() const { return tie_break_; }
  const CacheState& cache() const { return cache_; }
  const PolicyState& state() const { return state_; }
  const Catalog& catalog() const { return *catalog_; }

  bool resident(BlockId b) const { return cache_.resident.contains(b); }
  int rc(BlockId b) const { return state_.rc.at(b); }
  int erc(BlockId b) const { return state_.erc.at(b); }
  std::uint64_t frequency(BlockId b) const { return state_.frequency.at(b); }
  std::uint64_t last_access(BlockId b) const { return state_.recency.at(b); }
  GroupLabel label(GroupId g) const { return state_.labels.at(g); }
  bool retired(GroupId g) const { return state_.retired.at(g); }
  double free_space() const { return cache_.capacity - cache_.used; }

  /// Registers a peer group from a profile. Its task's reference counts
  /// every member; a complete group also counts as effective.
  void register_group(GroupId g, GroupLabel initial) {
    check_group(g);
    if (state_.known[g]) return;
    state_.known[g] = true;
    state_.labels[g] = initial;
    for (auto m : catalog_->group(g).members) {
      ++state_.rc[m];
      if (initial == GroupLabel::complete) ++state_.erc[m];
    }
  }

  void on_access(BlockId b) {
    check_block(b);
    state_.recency[b] = ++state_.clock;
    ++state_.frequency[b];
  }
  void on_access(const BlockRef& ref) { on_access(catalog_->id(ref)); }

  /// Makes `b` resident. Caller must have made room.
  void insert(BlockId b) {
    check_block(b);
    if (resident(b)) return;
    const double size = catalog_->size(b);
    if (cache_.used + size > cache_.capacity + kSlack) {
      throw Error(ErrorCode::InsufficientCapacity,
                  "inserting " + to_string(catalog_->ref(b)) + " would overflow the cache");
    }
    cache_.resident.emplace(b, size);
    cache_.used += size;
    state_.recency[b] = ++state_.clock;
  }

  void pin(BlockId b) { ++pins_.at(b); }
  void unpin(BlockId b) {
    if (pins_.at(b) > 0) --pins_[b];
  }
  bool pinned(BlockId b) const { return pins_.at(b) > 0; }

  /// Victims that free at least `needed`, chosen greedily one at a time by the
  /// policy key. Choosing a victim is simulated before choosing the next, so
  /// label flips it causes are visible to later picks.
  std::optional<EvictionDecision> try_choose_victims(double needed, std::optional<BlockId> exclude = {}) {
    if (needed > cache_.capacity + kSlack) {
      throw Error(ErrorCode::InsufficientCapacity, "need " + std::to_string(needed) + " of capacity " +
                                                       std::to_string(cache_.capacity));
    }
    EvictionDecision decision;
    if (needed <= kSlack) return decision;
    PolicyState scratch = state_;
    std::vector<bool> gone(catalog_->block_count(), false);
    auto evictable = [&](BlockId b) { return !gone[b] && pins_[b] == 0 && (!exclude || *exclude != b); };

    std::vector<BlockId> pending;
    while (decision.freed + kSlack < needed || !pending.empty()) {
      BlockId victim;
      if (!pending.empty()) {
        victim = pending.back();
        pending.pop_back();
        if (!evictable(victim)) continue;
      } else {
        auto pick = pick_victim(scratch, evictable);
        if (!pick) return std::nullopt;
        victim = *pick;
      }
      gone[victim] = true;
      decision.victims.push_back(victim);
      decision.freed += catalog_->size(victim);
      auto flipped = flip_groups(scratch, victim);
      if (kind_ == PolicyKind::sticky) {
        for (auto m : resident_members(flipped)) {
          if (evictable(m)) pending.push_back(m);
        }
      }
    }
    return decision;
  }

  EvictionDecision choose_victims(double needed, std::optional<BlockId> exclude = {}) {
    auto d = try_choose_victims(needed, exclude);
    if (!d) {
      throw Error(ErrorCode::InsufficientCapacity,
                  "cannot free " + std::to_string(needed) + " even evicting every unpinned block");
    }
    return *d;
  }

  /// Evicts enough to fit `b` and inserts it. Returns inserted = false, with
  /// nothing evicted, when pinned blocks leave too little room.
  AdmitResult admit(BlockId b) {
    check_block(b);
    AdmitResult result;
    if (resident(b)) {
      result.inserted = true;
      return result;
    }
    const double size = catalog_->size(b);
    if (size > cache_.capacity + kSlack) {
      throw Error(ErrorCode::InsufficientCapacity, to_string(catalog_->ref(b)) + " is larger than the cache");
    }
    auto decision = try_choose_victims(std::max(0.0, cache_.used + size - cache_.capacity), b);
    if (!decision) return result;
    for (auto v : decision->victims) result.evictions.push_back({v, on_block_evicted(v)});
    insert(b);
    result.inserted = true;
    return result;
  }

  /// Removes a resident block and marks every live complete group containing
  /// it incomplete. Returns the newly incomplete groups.
  std::vector<GroupId> on_block_evicted(BlockId b) {
    check_block(b);
    auto it = cache_.resident.find(b);
    if (it == cache_.resident.end()) {
      throw Error(ErrorCode::UnknownBlock, to_string(catalog_->ref(b)) + " is not resident");
    }
    cache_.used -= it->second;
    cache_.resident.erase(it);
    if (cache_.resident.empty()) cache_.used = 0.0;
    return flip_groups(state_, b);
  }

  /// Same label update for a materialized block known to be out of memory
  /// elsewhere (an eviction notice, or an output written straight to disk).
  std::vector<GroupId> on_left_memory(BlockId b) {
    check_block(b);
    return flip_groups(state_, b);
  }

  /// The task producing group `g` finished: its references are consumed.
  void on_task_complete(GroupId g) {
    check_group(g);
    if (!state_.known[g]) throw Error(ErrorCode::UnknownTask, "group " + std::to_string(g) + " not profiled");
    if (state_.retired[g]) {
      throw Error(ErrorCode::DoubleComplete, "task '" + catalog_->task(g).task_id + "' completed twice");
    }
    state_.retired[g] = true;
    for (auto m : catalog_->group(g).members) {
      --state_.rc[m];
      if (state_.labels[g] == GroupLabel::complete) --state_.erc[m];
    }
  }

  /// Resident, unpinned members of `groups`; non-empty only under sticky.
  std::vector<BlockId> sticky_followups(std::span<const GroupId> groups) const {
    std::vector<BlockId> out;
    if (kind_ != PolicyKind::sticky) return out;
    for (auto m : resident_members(groups)) {
      if (pins_[m] == 0 && std::find(out.begin(), out.end(), m) == out.end()) out.push_back(m);
    }
    return out;
  }

 private:
  static constexpr double kSlack = 1e-9;
  using Key = std::array<std::int64_t, 2>;

  void check_block(BlockId b) const {
    if (!catalog_->valid(b)) throw Error(ErrorCode::UnknownBlock, "block id " + std::to_string(b));
  }
  void check_group(GroupId g) const {
    if (g >= catalog_->group_count()) throw Error(ErrorCode::UnknownTask, "group id " + std::to_string(g));
  }

  std::vector<GroupId> flip_groups(PolicyState& st, BlockId b) const {
    std::vector<GroupId> flipped;
    for (auto g : catalog_->groups_of(b)) {
      if (!st.known[g] || st.retired[g] || st.labels[g] != GroupLabel::complete) continue;
      st.labels[g] = GroupLabel::incomplete;
      for (auto m : catalog_->group(g).members) --st.erc[m];
      flipped.push_back(g);
    }
    return flipped;
  }

  std::vector<BlockId> resident_members(std::span<const GroupId> groups) const {
    std::vector<BlockId> out;
    for (auto g : groups) {
      for (auto m : catalog_->group(g).members) {
        if (resident(m)) out.push_back(m);
      }
    }
    return out;
  }

  Key key(const PolicyState& st, BlockId b) const {
    switch (kind_) {
      case PolicyKind::lru:
        return {static_cast<std::int64_t>(st.recency[b]), 0};
      case PolicyKind::lfu:
        return {static_cast<std::int64_t>(st.frequency[b]), 0};
      case PolicyKind::lrc:
        return {st.rc[b], 0};
      case PolicyKind::lerc:
        // unreferenced blocks go before anything still referenced
        return {st.rc[b] > 0 ? 1 : 0, st.erc[b]};
      case PolicyKind::sticky: {
        bool broken = false;
        for (auto g : catalog_->groups_of(b)) {
          if (st.known[g] && !st.retired[g] && st.labels[g] == GroupLabel::incomplete) {
            broken = true;
            break;
          }
        }
        return {broken ? 0 : 1, st.rc[b]};
      }
    }
    return {0, 0};
  }

  template <class Pred>
  std::optional<BlockId> pick_victim(const PolicyState& st, Pred&& evictable) {
    std::optional<BlockId> best;
    Key best_key{};
    std::vector<BlockId> ties;
    for (const auto& [b, size] : cache_.resident) {
      if (!evictable(b)) continue;
      auto k = key(st, b);
      if (!best || k < best_key) {
        best = b;
        best_key = k;
        ties.assign(1, b);
      } else if (k == best_key) {
        ties.push_back(b);
        if (st.recency[b] < st.recency[*best]) best = b;
      }
    }
    if (best && tie_break_ == TieBreak::random && ties.size() > 1) {
      std::uniform_int_distribution<std::size_t> pick(0, ties.size() - 1);
      return ties[pick(rng_)];
    }
    return best;
  }

  const Catalog* catalog_;
  PolicyKind kind_;
  TieBreak tie_break_;
  std::mt19937_64 rng_;
  CacheState cache_;
  PolicyState state_;
  std::vector<int> pins_;
};

}  // namespace lerc
