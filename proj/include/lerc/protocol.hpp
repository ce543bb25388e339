#pragma once

// Driver <-> worker peer-tracking protocol.
//
// The driver (PeerTrackerMaster) profiles the peer groups of each submitted
// job and sends the profile to every worker. Each worker (PeerTracker) keeps
// its own complete/incomplete label per group. Evicting a block that sits in
// at least one locally complete group produces one report to the driver; the
// driver fans it out to every other worker unless the groups involved were
// already incomplete at the driver. Labels only ever go complete -> incomplete,
// so each group triggers at most one fan-out.

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "lerc/catalog.hpp"
#include "lerc/dag.hpp"
#include "lerc/policy.hpp"

namespace lerc {

using NodeId = int;
inline constexpr NodeId kDriver = -1;
inline constexpr NodeId kAllWorkers = -2;

enum class MessageKind { peer_profile_broadcast, eviction_report, eviction_broadcast, erc_update };

constexpr std::string_view to_string(MessageKind kind) {
  switch (kind) {
    case MessageKind::peer_profile_broadcast: return "peer_profile_broadcast";
    case MessageKind::eviction_report: return "eviction_report";
    case MessageKind::eviction_broadcast: return "eviction_broadcast";
    case MessageKind::erc_update: return "erc_update";
  }
  return "unknown";
}

inline std::string node_name(NodeId id) {
  if (id == kDriver) return "driver";
  if (id == kAllWorkers) return "ALL";
  return "worker-" + std::to_string(id);
}

struct ProtocolMessage {
  MessageKind kind = MessageKind::eviction_report;
  NodeId src = kDriver;
  NodeId dst = kDriver;
  double sent = 0.0;
  double deliver_at = 0.0;
  std::optional<BlockId> block;     // exactly one for eviction_report / eviction_broadcast
  std::vector<GroupId> groups;      // profiled, flipped, or retired groups
  std::vector<GroupLabel> labels;   // initial labels, parallel to groups (profiles only)
  std::uint64_t round = 0;          // fan-out id shared by the messages of one broadcast
};

class MessageLog {
 public:
  void record(const ProtocolMessage& m) { records_.push_back(m); }
  void record(std::span<const ProtocolMessage> ms) { records_.insert(records_.end(), ms.begin(), ms.end()); }

  const std::vector<ProtocolMessage>& records() const { return records_; }

  std::size_t count(MessageKind kind) const {
    std::size_t n = 0;
    for (const auto& m : records_) n += m.kind == kind;
    return n;
  }

  /// Distinct fan-outs (one eviction notice sent to all other workers).
  std::size_t broadcast_rounds() const { return rounds_per_group_and_total().second; }

  /// Number of distinct fan-outs that flipped each group.
  std::map<GroupId, std::size_t> broadcasts_per_group() const { return rounds_per_group_and_total().first; }

  /// One JSON object per line: time, kind, src, dst, payload summary.
  std::string to_jsonl(const Catalog& catalog) const {
    std::string out;
    for (const auto& m : records_) {
      nlohmann::json j;
      j["time"] = m.sent;
      j["deliver_at"] = m.deliver_at;
      j["kind"] = to_string(m.kind);
      j["src"] = node_name(m.src);
      j["dst"] = node_name(m.dst);
      if (m.block) j["block"] = to_string(catalog.ref(*m.block));
      if (!m.groups.empty()) {
        auto tasks = nlohmann::json::array();
        for (auto g : m.groups) tasks.push_back(catalog.jobs()[catalog.group(g).job].job_id + "/" + catalog.task(g).task_id);
        j["groups"] = tasks;
      }
      if (m.kind == MessageKind::eviction_broadcast) j["round"] = m.round;
      out += j.dump();
      out += '\n';
    }
    return out;
  }

 private:
  std::pair<std::map<GroupId, std::size_t>, std::size_t> rounds_per_group_and_total() const {
    std::map<std::uint64_t, const ProtocolMessage*> rounds;
    for (const auto& m : records_) {
      if (m.kind == MessageKind::eviction_broadcast) rounds.emplace(m.round, &m);
    }
    std::map<GroupId, std::size_t> per_group;
    for (const auto& [round, m] : rounds) {
      for (auto g : m->groups) ++per_group[g];
    }
    return {per_group, rounds.size()};
  }

  std::vector<ProtocolMessage> records_;
};

/// Driver side: authoritative reference counts and the global group labels.
class PeerTrackerMaster {
 public:
  PeerTrackerMaster(const Catalog& catalog, int workers, double latency = 0.0)
      : catalog_(&catalog), workers_(workers), latency_(latency) {
    if (workers < 1) throw Error(ErrorCode::InvalidConfig, "need at least one worker");
    if (latency < 0.0) throw Error(ErrorCode::InvalidConfig, "negative broadcast latency");
    labels_.assign(catalog.group_count(), GroupLabel::complete);
    known_.assign(catalog.group_count(), false);
    retired_.assign(catalog.group_count(), false);
    rc_.assign(catalog.block_count(), 0);
  }

  int workers() const { return workers_; }
  double latency() const { return latency_; }
  GroupLabel label(GroupId g) const { return labels_.at(g); }
  int rc(BlockId b) const { return rc_.at(b); }

  /// One profile message per worker carrying every group of `job`.
  std::vector<ProtocolMessage> broadcast_peer_profile(std::size_t job, std::span<const GroupLabel> initial,
                                                      double now = 0.0) {
    const auto ntasks = catalog_->jobs().at(job).tasks.size();
    if (initial.size() != ntasks) throw Error(ErrorCode::InvalidConfig, "profile label count mismatch");
    ProtocolMessage proto;
    proto.kind = MessageKind::peer_profile_broadcast;
    proto.src = kDriver;
    proto.sent = now;
    proto.deliver_at = now + latency_;
    for (std::size_t t = 0; t < ntasks; ++t) {
      auto g = catalog_->group_of(job, t);
      known_[g] = true;
      labels_[g] = initial[t];
      for (auto m : catalog_->group(g).members) ++rc_[m];
      proto.groups.push_back(g);
      proto.labels.push_back(initial[t]);
    }
    std::vector<ProtocolMessage> out;
    for (NodeId w = 0; w < workers_; ++w) {
      out.push_back(proto);
      out.back().dst = w;
    }
    return out;
  }

  /// Fans a report out to every worker except its sender, if it flips any
  /// group that is still complete at the driver.
  std::vector<ProtocolMessage> on_eviction_report(const ProtocolMessage& report, double now) {
    std::vector<ProtocolMessage> out;
    if (report.kind != MessageKind::eviction_report || !report.block) return out;
    std::vector<GroupId> flipped;
    for (auto g : catalog_->groups_of(*report.block)) {
      if (!known_[g] || retired_[g] || labels_[g] != GroupLabel::complete) continue;
      labels_[g] = GroupLabel::incomplete;
      flipped.push_back(g);
    }
    if (flipped.empty() || workers_ == 1) return out;
    const auto round = ++rounds_;
    for (NodeId w = 0; w < workers_; ++w) {
      if (w == report.src) continue;
      ProtocolMessage m;
      m.kind = MessageKind::eviction_broadcast;
      m.src = kDriver;
      m.dst = w;
      m.sent = now;
      m.deliver_at = now + latency_;
      m.block = report.block;
      m.groups = flipped;
      m.round = round;
      out.push_back(std::move(m));
    }
    return out;
  }

  /// Retires the group and tells every worker except the executor.
  std::vector<ProtocolMessage> on_task_complete(GroupId g, NodeId executor, double now) {
    if (!known_.at(g)) throw Error(ErrorCode::UnknownTask, "group " + std::to_string(g) + " not profiled");
    if (retired_[g]) throw Error(ErrorCode::DoubleComplete, catalog_->task(g).task_id);
    retired_[g] = true;
    for (auto m : catalog_->group(g).members) --rc_[m];
    std::vector<ProtocolMessage> out;
    for (NodeId w = 0; w < workers_; ++w) {
      if (w == executor) continue;
      ProtocolMessage m;
      m.kind = MessageKind::erc_update;
      m.src = kDriver;
      m.dst = w;
      m.sent = now;
      m.deliver_at = now + latency_;
      m.groups = {g};
      out.push_back(std::move(m));
    }
    return out;
  }

 private:
  const Catalog* catalog_;
  int workers_;
  double latency_;
  std::uint64_t rounds_ = 0;
  std::vector<GroupLabel> labels_;
  std::vector<bool> known_;
  std::vector<bool> retired_;
  std::vector<int> rc_;
};

/// Worker side: owns the local policy engine, whose labels are the worker's
/// view of group completeness.
class PeerTracker {
 public:
  PeerTracker(NodeId id, PolicyEngine engine) : id_(id), engine_(std::move(engine)) {}

  NodeId id() const { return id_; }
  PolicyEngine& engine() { return engine_; }
  const PolicyEngine& engine() const { return engine_; }

  void on_profile(const ProtocolMessage& m) {
    for (std::size_t i = 0; i < m.groups.size(); ++i) engine_.register_group(m.groups[i], m.labels[i]);
  }

  /// A report for the driver, if the local eviction flipped any complete group.
  std::optional<ProtocolMessage> report_eviction(BlockId b, std::span<const GroupId> newly_incomplete, double now,
                                                 double latency) const {
    if (newly_incomplete.empty()) return std::nullopt;
    ProtocolMessage m;
    m.kind = MessageKind::eviction_report;
    m.src = id_;
    m.dst = kDriver;
    m.sent = now;
    m.deliver_at = now + latency;
    m.block = b;
    m.groups.assign(newly_incomplete.begin(), newly_incomplete.end());
    return m;
  }

  /// Applies a fan-out; returns the groups that were complete here.
  std::vector<GroupId> on_broadcast(const ProtocolMessage& m) { return engine_.on_left_memory(*m.block); }

  void on_erc_update(const ProtocolMessage& m) {
    for (auto g : m.groups) engine_.on_task_complete(g);
  }

 private:
  NodeId id_;
  PolicyEngine engine_;
};

/// Evicts `block` from worker `worker` (or, if it is not resident there,
/// records that it left memory), then runs the report / fan-out exchange to
/// completion with immediate delivery. Returns every message exchanged.
inline std::vector<ProtocolMessage> report_and_broadcast_eviction(PeerTrackerMaster& master,
                                                                  std::span<PeerTracker> workers, NodeId worker,
                                                                  BlockId block, double now = 0.0) {
  auto& tracker = workers[static_cast<std::size_t>(worker)];
  auto flipped = tracker.engine().resident(block) ? tracker.engine().on_block_evicted(block)
                                                  : tracker.engine().on_left_memory(block);
  std::vector<ProtocolMessage> out;
  auto report = tracker.report_eviction(block, flipped, now, 0.0);
  if (!report) return out;
  out.push_back(*report);
  for (auto& m : master.on_eviction_report(*report, now)) {
    workers[static_cast<std::size_t>(m.dst)].on_broadcast(m);
    out.push_back(std::move(m));
  }
  return out;
}

}  // namespace lerc
