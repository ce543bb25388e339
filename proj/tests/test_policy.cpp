#include <algorithm>
#include <map>
#include <memory>
#include <random>

#include <gtest/gtest.h>

#include "lerc/catalog.hpp"
#include "lerc/oracle.hpp"
#include "lerc/policy.hpp"
#include "lerc/workloads.hpp"

using namespace lerc;

namespace {

// Owns the catalog an engine points into.
struct Store {
  std::unique_ptr<Catalog> catalog;
  std::unique_ptr<PolicyEngine> engine;
  std::vector<bool> materialized;
  std::vector<bool> memory;

  Store(std::vector<JobDag> jobs, PolicyKind kind, double capacity, TieBreak tb = TieBreak::lru_fallback,
        std::uint64_t seed = 0)
      : catalog(std::make_unique<Catalog>(std::move(jobs))),
        engine(std::make_unique<PolicyEngine>(*catalog, kind, capacity, tb, seed)) {
    materialized.assign(catalog->block_count(), false);
    memory.assign(catalog->block_count(), false);
    for (const auto& job : catalog->jobs()) {
      for (const auto& s : job.sources) {
        auto b = catalog->id(s.ref);
        materialized[b] = s.tier != Tier::none;
        memory[b] = s.tier == Tier::memory;
      }
    }
    auto labels = label_oracle(*catalog, materialized, memory);
    for (GroupId g = 0; g < catalog->group_count(); ++g) engine->register_group(g, labels[g]);
    for (BlockId b = 0; b < catalog->block_count(); ++b) {
      if (memory[b]) engine->insert(b);
    }
  }

  BlockId id(const std::string& rdd, std::uint32_t p = 0) const {
    return catalog->id({catalog->jobs()[0].job_id, rdd, p});
  }

  void expect_oracle(const std::string& where) const {
    auto rc = rc_oracle(*catalog, materialized);
    auto erc = erc_oracle(*catalog, materialized, memory);
    for (BlockId b = 0; b < catalog->block_count(); ++b) {
      ASSERT_EQ(engine->rc(b), rc[b]) << where << " rc " << to_string(catalog->ref(b));
      ASSERT_EQ(engine->erc(b), erc[b]) << where << " erc " << to_string(catalog->ref(b));
      ASSERT_LE(0, engine->erc(b));
      ASSERT_LE(engine->erc(b), engine->rc(b));
    }
  }
};

}  // namespace

TEST(Policy, ParsesNames) {
  for (auto k : {PolicyKind::lru, PolicyKind::lfu, PolicyKind::lrc, PolicyKind::lerc, PolicyKind::sticky}) {
    EXPECT_EQ(parse_policy(to_string(k)), k);
  }
  EXPECT_THROW(parse_policy("fifo"), Error);
  EXPECT_EQ(parse_tie_break("random"), TieBreak::random);
  EXPECT_EQ(parse_tie_break("lru-fallback"), TieBreak::lru_fallback);
  EXPECT_THROW(parse_tie_break("coin"), Error);
}

TEST(Policy, LruRecencyFollowsAccessOrder) {
  Store s({gen_fig1().dag}, PolicyKind::lru, 3);
  auto a = s.id("a"), b = s.id("b"), c = s.id("c");
  s.engine->on_access(a);
  s.engine->on_access(b);
  s.engine->on_access(a);
  EXPECT_LT(s.engine->last_access(b), s.engine->last_access(a));
  // c was only inserted, before any access: oldest
  EXPECT_EQ(s.engine->choose_victims(1).victims, std::vector<BlockId>{c});
  s.engine->on_access(c);
  EXPECT_EQ(s.engine->choose_victims(1).victims, std::vector<BlockId>{b});
}

TEST(Policy, LfuCountsAccesses) {
  Store s({gen_fig1().dag}, PolicyKind::lfu, 3);
  auto a = s.id("a"), b = s.id("b"), c = s.id("c");
  for (int i = 0; i < 3; ++i) s.engine->on_access(a);
  s.engine->on_access(b);
  s.engine->on_access(c);
  s.engine->on_access(c);
  EXPECT_EQ(s.engine->frequency(a), 3u);
  EXPECT_EQ(s.engine->choose_victims(1).victims, std::vector<BlockId>{b});
}

TEST(Policy, AccessLeavesReferenceCountsAlone) {
  Store s({gen_fig1().dag}, PolicyKind::lerc, 3);
  s.expect_oracle("before");
  for (BlockId b = 0; b < s.catalog->block_count(); ++b) s.engine->on_access(b);
  s.expect_oracle("after");
  EXPECT_THROW(s.engine->on_access(BlockId{9999}), Error);
}

TEST(Policy, Fig1InitialEffectiveCounts) {
  auto w = gen_fig1();
  std::unordered_set<BlockRef> materialized, resident;
  for (const auto& src : w.dag.sources) {
    if (src.tier != Tier::none) materialized.insert(src.ref);
    if (src.tier == Tier::memory) resident.insert(src.ref);
  }
  auto erc = effective_reference_count_oracle(w.dag, materialized, resident);
  EXPECT_EQ(erc.at({"fig1", "a", 0}), 1);
  EXPECT_EQ(erc.at({"fig1", "b", 0}), 1);
  EXPECT_EQ(erc.at({"fig1", "c", 0}), 0);

  Store s({w.dag}, PolicyKind::lerc, 3);
  EXPECT_EQ(s.engine->erc(s.id("a")), 1);
  EXPECT_EQ(s.engine->erc(s.id("b")), 1);
  EXPECT_EQ(s.engine->erc(s.id("c")), 0);
  EXPECT_EQ(s.engine->rc(s.id("c")), 1);
}

TEST(Policy, AllInputsResidentMakesErcEqualRc) {
  auto dag = gen_zip(5);
  for (auto& src : dag.sources) src.tier = Tier::memory;
  Store s({dag}, PolicyKind::lerc, 100);
  for (BlockId b = 0; b < s.catalog->block_count(); ++b) EXPECT_EQ(s.engine->erc(b), s.engine->rc(b));
}

TEST(Policy, Fig1LercEvictsC) {
  Store s({gen_fig1().dag}, PolicyKind::lerc, 3);
  auto r = s.engine->admit(s.id("e"));
  EXPECT_TRUE(r.inserted);
  ASSERT_EQ(r.evictions.size(), 1u);
  EXPECT_EQ(r.evictions[0].block, s.id("c"));
  // {c, d} was already incomplete (d on disk): no new notice
  EXPECT_TRUE(r.evictions[0].newly_incomplete.empty());
}

TEST(Policy, Fig1LrcRandomTieBreakIsUniform) {
  std::map<std::string, int> count;
  const int n = 6000;
  for (int seed = 0; seed < n; ++seed) {
    Store s({gen_fig1().dag}, PolicyKind::lrc, 3, TieBreak::random, static_cast<std::uint64_t>(seed));
    auto d = s.engine->choose_victims(1, s.id("e"));
    ASSERT_EQ(d.victims.size(), 1u);
    ++count[s.catalog->ref(d.victims[0]).rdd];
  }
  EXPECT_EQ(count.size(), 3u);
  for (const char* v : {"a", "b", "c"}) EXPECT_NEAR(count[v] / double(n), 1.0 / 3.0, 0.025) << v;
}

TEST(Policy, EmptyRequestNeedsNoVictims) {
  Store s({gen_zip(2)}, PolicyKind::lerc, 4);
  auto d = s.engine->choose_victims(0);
  EXPECT_TRUE(d.victims.empty());
  EXPECT_EQ(d.freed, 0.0);
}

TEST(Policy, CapacityErrors) {
  Store s({gen_fig1().dag}, PolicyKind::lru, 3);
  EXPECT_THROW(s.engine->choose_victims(4), Error);
  for (auto rdd : {"a", "b", "c"}) s.engine->pin(s.id(rdd));
  EXPECT_FALSE(s.engine->try_choose_victims(1).has_value());
  try {
    s.engine->choose_victims(1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InsufficientCapacity);
  }
  auto r = s.engine->admit(s.id("e"));
  EXPECT_FALSE(r.inserted);
  EXPECT_TRUE(r.evictions.empty());

  auto dag = gen_zip(1, 5.0);
  Store big({dag}, PolicyKind::lru, 3);
  EXPECT_THROW(big.engine->admit(big.id("A")), Error);
}

TEST(Policy, TaskCompletionConsumesReferences) {
  auto dag = gen_zip(10);
  for (auto& src : dag.sources) src.tier = Tier::memory;
  Store s({dag}, PolicyKind::lrc, 100);
  auto g = *s.catalog->find_task("zip", "zip_0");
  EXPECT_EQ(s.engine->rc(s.id("A", 0)), 1);
  s.engine->on_task_complete(g);
  EXPECT_EQ(s.engine->rc(s.id("A", 0)), 0);
  EXPECT_EQ(s.engine->rc(s.id("B", 0)), 0);
  EXPECT_EQ(s.engine->rc(s.id("A", 1)), 1);
  try {
    s.engine->on_task_complete(g);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DoubleComplete);
  }
  EXPECT_THROW(s.engine->on_task_complete(GroupId{999}), Error);
}

TEST(Policy, CompletingIncompleteGroupLeavesErc) {
  Store s({gen_fig1().dag}, PolicyKind::lerc, 3);
  auto g2 = *s.catalog->find_task("fig1", "task2");
  EXPECT_EQ(s.engine->label(g2), GroupLabel::incomplete);
  const int erc_c = s.engine->erc(s.id("c"));
  s.engine->on_task_complete(g2);
  EXPECT_EQ(s.engine->erc(s.id("c")), erc_c);
  EXPECT_EQ(s.engine->rc(s.id("c")), 0);
}

TEST(Policy, UnprofiledTaskIsUnknown) {
  Catalog cat({gen_zip(2)});
  PolicyEngine eng(cat, PolicyKind::lrc, 4);
  try {
    eng.on_task_complete(0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnknownTask);
  }
}

TEST(Policy, EvictingLastResidentPeerFlipsGroupOnce) {
  // d not yet computed: {c, d} is complete while c is in memory
  auto w = gen_fig1();
  w.dag.sources[3].tier = Tier::none;
  w.dag.sources[3].insert_at = 5.0;
  Store s({w.dag}, PolicyKind::lerc, 3);
  auto g2 = *s.catalog->find_task("fig1", "task2");
  EXPECT_EQ(s.engine->label(g2), GroupLabel::complete);
  EXPECT_EQ(s.engine->erc(s.id("c")), 1);
  auto flipped = s.engine->on_block_evicted(s.id("c"));
  EXPECT_EQ(flipped, std::vector<GroupId>{g2});
  EXPECT_EQ(s.engine->label(g2), GroupLabel::incomplete);
  EXPECT_EQ(s.engine->erc(s.id("c")), 0);
  EXPECT_TRUE(s.engine->on_left_memory(s.id("c")).empty());
  EXPECT_THROW(s.engine->on_block_evicted(s.id("c")), Error);
}

TEST(Policy, EvictingBlockInNoGroupFlipsNothing) {
  Store s({gen_fig1().dag}, PolicyKind::lerc, 3);
  s.engine->admit(s.id("e"));
  EXPECT_TRUE(s.engine->on_block_evicted(s.id("e")).empty());
}

TEST(Policy, UnreferencedBlocksGoFirst) {
  auto dag = gen_zip(3);
  for (auto& src : dag.sources) src.tier = Tier::memory;
  for (auto kind : {PolicyKind::lrc, PolicyKind::lerc}) {
    Store s({dag}, kind, 6);
    s.engine->on_access(s.id("A", 2));
    s.engine->on_access(s.id("B", 2));
    s.engine->on_task_complete(*s.catalog->find_task("zip", "zip_2"));
    auto d = s.engine->choose_victims(2);
    std::sort(d.victims.begin(), d.victims.end());
    EXPECT_EQ(d.victims, (std::vector<BlockId>{s.id("A", 2), s.id("B", 2)})) << to_string(kind);
  }
}

TEST(Policy, LercPrefersPartnerOfBrokenPair) {
  auto dag = gen_zip(3);
  for (auto& src : dag.sources) src.tier = Tier::memory;
  Store s({dag}, PolicyKind::lerc, 6);
  // A:0 is the oldest; once it goes, B:0 has no effective reference left
  auto d = s.engine->choose_victims(2);
  EXPECT_EQ(d.victims, (std::vector<BlockId>{s.id("A", 0), s.id("B", 0)}));
  Store lrc({dag}, PolicyKind::lrc, 6);
  d = lrc.engine->choose_victims(2);
  EXPECT_EQ(d.victims, (std::vector<BlockId>{lrc.id("A", 0), lrc.id("A", 1)}));
}

TEST(Policy, StickyEvictsWholeGroup) {
  auto dag = gen_zip(3);
  for (auto& src : dag.sources) src.tier = Tier::memory;
  Store s({dag}, PolicyKind::sticky, 6);
  auto d = s.engine->choose_victims(1);
  ASSERT_EQ(d.victims.size(), 2u);
  EXPECT_EQ(d.victims[0], s.id("A", 0));
  EXPECT_EQ(d.victims[1], s.id("B", 0));
  auto flipped = s.engine->on_block_evicted(s.id("A", 1));
  EXPECT_EQ(s.engine->sticky_followups(flipped), std::vector<BlockId>{s.id("B", 1)});
}

// The LERC victim minimizes erc over evictable resident blocks, and every
// pick is resident and frees enough.
TEST(Policy, VictimsAreResidentArgmins) {
  std::mt19937_64 rng(11);
  for (std::uint64_t seed = 1; seed <= 300; ++seed) {
    auto dag = gen_random_dag(seed, 20, 3);
    for (auto& src : dag.sources) {
      src.tier = Tier::memory;
      src.insert_at.reset();
    }
    double total = 0;
    for (const auto& src : dag.sources) total += src.size;
    Store s({dag}, PolicyKind::lerc, total);
    for (BlockId b = 0; b < s.catalog->block_count(); ++b) {
      if (s.memory[b] && rng() % 3 == 0) {
        s.engine->on_block_evicted(b);
        s.memory[b] = false;
      }
    }
    if (s.engine->cache().resident.empty()) continue;
    int min_erc = 1 << 30;
    for (const auto& [b, size] : s.engine->cache().resident) min_erc = std::min(min_erc, s.engine->erc(b));
    auto d = s.engine->choose_victims(1e-6);
    ASSERT_EQ(d.victims.size(), 1u);
    EXPECT_TRUE(s.engine->resident(d.victims[0]));
    EXPECT_EQ(s.engine->erc(d.victims[0]), min_erc) << "seed " << seed;
    const double need = std::min(s.engine->cache().used, 2.5);
    auto big = s.engine->choose_victims(need);
    EXPECT_GE(big.freed + 1e-9, need);
    for (auto v : big.victims) EXPECT_TRUE(s.engine->resident(v));
  }
}

// Random evictions and completions on one engine: rc/erc always match the
// from-scratch oracle and labels never go back to complete.
TEST(Policy, IncrementalCountsMatchOracle) {
  std::mt19937_64 rng(3);
  for (std::uint64_t seed = 1; seed <= 300; ++seed) {
    auto dag = gen_random_dag(seed, 30, 3);
    for (auto& src : dag.sources) {
      if (src.tier == Tier::none) src.tier = Tier::memory;
      src.insert_at.reset();
    }
    Store s({dag}, PolicyKind::lerc, 1e9);
    s.expect_oracle("initial");
    std::vector<bool> done(s.catalog->group_count(), false);
    std::vector<GroupLabel> seen(s.catalog->group_count(), GroupLabel::complete);
    for (int step = 0; step < 60; ++step) {
      if (rng() % 2 == 0 && !s.engine->cache().resident.empty()) {
        auto it = s.engine->cache().resident.begin();
        std::advance(it, static_cast<long>(rng() % s.engine->cache().resident.size()));
        auto b = it->first;
        s.engine->on_block_evicted(b);
        s.memory[b] = false;
      } else {
        std::vector<GroupId> ready;
        for (GroupId g = 0; g < s.catalog->group_count(); ++g) {
          if (done[g]) continue;
          bool ok = true;
          for (auto m : s.catalog->group(g).members) ok = ok && s.materialized[m];
          if (ok) ready.push_back(g);
        }
        if (ready.empty()) continue;
        auto g = ready[rng() % ready.size()];
        done[g] = true;
        s.engine->on_task_complete(g);
        auto out = s.catalog->group(g).output;
        s.materialized[out] = true;
        s.engine->insert(out);
        s.memory[out] = true;
      }
      s.expect_oracle("seed " + std::to_string(seed) + " step " + std::to_string(step));
      for (GroupId g = 0; g < s.catalog->group_count(); ++g) {
        if (seen[g] == GroupLabel::incomplete) {
          ASSERT_EQ(s.engine->label(g), GroupLabel::incomplete);
        }
        seen[g] = s.engine->label(g);
      }
    }
  }
}
