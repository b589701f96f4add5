#pragma once

// Deterministic discrete-event driver. Events fire in (time, seq) order;
// ties resolve by insertion order, so a run never consumes randomness.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <future>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "gwsus/catalog.hpp"
#include "gwsus/energy.hpp"
#include "gwsus/error.hpp"
#include "gwsus/event.hpp"
#include "gwsus/protocol.hpp"
#include "gwsus/topology.hpp"

namespace gwsus {

inline constexpr double kSecondsPerDay = 86400.0;

struct ScenarioConfig {
  double horizon = 7 * kSecondsPerDay;
  ProtocolMode mode = ProtocolMode::Push;
  HierarchySpec hierarchy;
  std::optional<Topology> topology;  // when set, replaces `hierarchy`
  std::vector<UpdateArtifact> releases;
  PollSchedule poll;
  MessageSizes sizes;
  ApprovalPolicy approval = AutoApproveAll{};
  std::uint64_t seed = 0;

  bool operator==(const ScenarioConfig&) const = default;
};

inline Topology resolve_topology(const ScenarioConfig& config) {
  Topology topo = config.topology ? *config.topology : build_hierarchy(config.hierarchy);
  if (!topo.origin()) throw Error(ErrorCode::InvalidConfig, "topology: no origin node");
  for (const Node& n : topo.nodes()) {
    if (!topo.connected(n.id)) {
      throw Error(ErrorCode::InvalidConfig, "topology: node " + std::to_string(n.id.value) + " is not registered");
    }
  }
  return topo;
}

inline void validate(const ScenarioConfig& config) {
  if (!(config.horizon > 0.0) || !std::isfinite(config.horizon)) {
    throw Error(ErrorCode::InvalidConfig, "horizon must be a positive finite number of seconds");
  }
  validate(config.poll);
  validate(config.sizes);
  validate(config.approval);
  std::set<UpdateId> seen;
  for (const UpdateArtifact& a : config.releases) {
    try {
      validate(a);
    } catch (const Error& e) {
      throw Error(ErrorCode::InvalidConfig, std::string("releases: ") + e.what());
    }
    if (!seen.insert(a.id).second) {
      throw Error(ErrorCode::InvalidConfig, "releases: duplicate update id " + std::to_string(a.id.value));
    }
    if (a.release_time >= config.horizon) {
      throw Error(ErrorCode::InvalidConfig,
                  "releases: update " + std::to_string(a.id.value) + " released at or after the horizon");
    }
  }
}

struct TraceRow {
  double time = 0.0;  // send instant
  NodeId src;
  NodeId dst;
  MessageKind kind = MessageKind::PollCheck;
  std::uint64_t size = 0;
  double duration = 0.0;
  bool registration = false;

  bool operator==(const TraceRow&) const = default;
};

struct RunResult {
  ScenarioConfig config;
  Topology topology;
  std::map<NodeId, ActivityLedger> ledgers;
  std::map<NodeId, double> energy;
  double total_energy = 0.0;
  double active_energy = 0.0;  // total_energy minus the all-idle baseline
  std::map<MessageKind, std::uint64_t> message_counts;
  std::uint64_t registration_messages = 0;
  std::uint64_t post_registration_messages = 0;
  std::uint64_t payload_bytes = 0;
  std::map<NodeId, ClientInventory> inventories;  // every non-origin node
  std::vector<TraceRow> trace;

  std::uint64_t count(MessageKind kind) const {
    auto it = message_counts.find(kind);
    return it == message_counts.end() ? 0 : it->second;
  }
  std::uint64_t total_messages() const { return registration_messages + post_registration_messages; }

  bool operator==(const RunResult&) const = default;
};

inline RunResult run(const ScenarioConfig& config) {
  validate(config);
  RunResult result;
  result.config = config;
  result.topology = resolve_topology(config);
  const Topology& topo = result.topology;

  const ProtocolContext ctx{topo, config.mode, config.sizes, config.approval, config.poll};
  ProtocolState state = initial_state(topo);

  std::priority_queue<Event, std::vector<Event>, EventLater> queue;
  std::uint64_t seq = 0;
  auto schedule = [&](double time, EventKind kind) { queue.push(Event{time, seq++, std::move(kind)}); };

  for (const Node& n : topo.nodes()) {
    if (n.kind != NodeKind::Origin) schedule(0.0, Register{n.id});
  }
  std::map<double, std::vector<UpdateArtifact>> batches;
  for (const UpdateArtifact& a : config.releases) batches[a.release_time].push_back(a);
  for (auto& [time, artifacts] : batches) {
    std::sort(artifacts.begin(), artifacts.end(), [](const auto& x, const auto& y) { return x.id < y.id; });
    schedule(time, Publish{artifacts});
  }
  if (config.mode == ProtocolMode::Pull && config.poll.phase < config.horizon) {
    for (const Node& n : topo.nodes()) {
      if (n.kind != NodeKind::Origin) schedule(config.poll.phase, PollFire{n.id});
    }
  }

  for (const Node& n : topo.nodes()) result.ledgers[n.id] = ActivityLedger{};

  while (!queue.empty()) {
    const Event ev = queue.top();
    queue.pop();
    if (ev.time >= config.horizon) break;
    StepOutput out = apply_event(ctx, state, ev);
    for (const PhaseRecord& p : out.phases) accrue(result.ledgers[p.node], p.phase, p.duration);
    for (std::size_t i = 0; i < out.messages.size(); ++i) {
      Message& m = out.messages[i];
      const double d = out.phases[2 * i].duration;
      result.trace.push_back({ev.time, m.src, m.dst, m.kind, m.size, d, m.registration});
      ++result.message_counts[m.kind];
      ++(m.registration ? result.registration_messages : result.post_registration_messages);
      if (m.kind == MessageKind::DownloadPayload) result.payload_bytes += m.size;
      schedule(ev.time + d, MessageArrival{std::move(m)});
    }
    for (Timer& t : out.timers) {
      if (t.time < config.horizon) schedule(t.time, std::move(t.kind));
    }
  }

  std::map<NodeId, PowerProfile> powers;
  for (const Node& n : topo.nodes()) {
    ActivityLedger& ledger = result.ledgers[n.id];
    ledger.t_total = config.horizon;
    check(ledger);
    powers[n.id] = n.power;
    result.energy[n.id] = node_energy(ledger, n.power);
    result.active_energy += gwsus::active_energy(ledger, n.power);
    if (n.kind != NodeKind::Origin) result.inventories[n.id] = state.nodes[n.id.value].inventory;
  }
  result.total_energy = total_energy(result.ledgers, powers);
  return result;
}

/// Runs the pull and push arms of `config` concurrently.
inline std::pair<RunResult, RunResult> run_pull_and_push(ScenarioConfig config) {
  ScenarioConfig pull = config;
  pull.mode = ProtocolMode::Pull;
  config.mode = ProtocolMode::Push;
  auto pull_run = std::async(std::launch::async, [pull] { return run(pull); });
  RunResult push_result = run(config);
  return {pull_run.get(), std::move(push_result)};
}

// ---------------------------------------------------------------------------
// Built-in experiments

struct ScenarioParams {
  HierarchySpec hierarchy;
  std::uint32_t horizon_days = 7;
  ProtocolMode mode = ProtocolMode::Push;
  PollSchedule poll;
  MessageSizes sizes;
  ApprovalPolicy approval = AutoApproveAll{};
  std::uint64_t metadata_size = kDefaultMetadataBytes;
  std::uint64_t payload_size = kDefaultPayloadBytes;
  std::uint64_t seed = 0;
};

namespace detail {
inline ScenarioConfig base_config(const ScenarioParams& p) {
  ScenarioConfig c;
  c.horizon = p.horizon_days * kSecondsPerDay;
  c.mode = p.mode;
  c.hierarchy = p.hierarchy;
  c.poll = p.poll;
  c.sizes = p.sizes;
  c.approval = p.approval;
  c.seed = p.seed;
  return c;
}
}  // namespace detail

/// One release per day, one second after midnight, so the same day's poll
/// picks it up.
inline ScenarioConfig scenario_daily(const ScenarioParams& p = {}) {
  ScenarioConfig c = detail::base_config(p);
  for (std::uint32_t day = 0; day < p.horizon_days; ++day) {
    c.releases.push_back({UpdateId{day + 1}, UpdateClassification::Definition, p.metadata_size, p.payload_size,
                          day * kSecondsPerDay + 1.0});
  }
  return c;
}

/// A single release on day 3 at 12:00.
inline ScenarioConfig scenario_weekly(const ScenarioParams& p = {}) {
  ScenarioConfig c = detail::base_config(p);
  c.releases.push_back({UpdateId{1}, UpdateClassification::Security, p.metadata_size, p.payload_size,
                        3 * kSecondsPerDay + 12 * 3600.0});
  return c;
}

// ---------------------------------------------------------------------------
// Cumulative energy curves and comparison

struct EnergySample {
  double time = 0.0;
  double cumulative = 0.0;  // J
  bool operator==(const EnergySample&) const = default;
};

/// Cumulative system energy over [0, horizon]. Idle draw grows linearly;
/// each transfer adds its active surplus linearly over its duration (clipped
/// to the horizon). Sampled at every transfer boundary and every midnight,
/// which pins the piecewise-linear curve exactly.
inline std::vector<EnergySample> cumulative_energy(const RunResult& r) {
  const double horizon = r.config.horizon;
  double idle_rate = 0.0;
  for (const Node& n : r.topology.nodes()) idle_rate += n.power.p_idle;

  // slope changes of the active-surplus term
  std::map<double, double> slope_delta;
  for (const TraceRow& row : r.trace) {
    const PowerProfile& s = r.topology.at(row.src).power;
    const PowerProfile& d = r.topology.at(row.dst).power;
    const double surplus = row.duration * ((s.p_tx - s.p_idle) + (d.p_rx - d.p_idle));
    const double end = std::min(row.time + row.duration, horizon);
    if (surplus == 0.0 || end <= row.time) continue;
    const double rate = surplus / (end - row.time);
    slope_delta[row.time] += rate;
    slope_delta[end] -= rate;
  }
  std::set<double> samples{0.0, horizon};
  for (double t = kSecondsPerDay; t < horizon; t += kSecondsPerDay) samples.insert(t);
  for (const auto& [t, _] : slope_delta) samples.insert(t);

  std::vector<EnergySample> out;
  double active = 0.0;
  double slope = 0.0;
  double last = 0.0;
  auto next_change = slope_delta.begin();
  for (double t : samples) {
    active += slope * (t - last);
    last = t;
    while (next_change != slope_delta.end() && next_change->first <= t) {
      slope += next_change->second;
      ++next_change;
    }
    out.push_back({t, idle_rate * t + active});
  }
  return out;
}

struct ComparisonReport {
  ProtocolMode mode_a = ProtocolMode::Pull;
  ProtocolMode mode_b = ProtocolMode::Push;
  double energy_a = 0.0;
  double energy_b = 0.0;
  double energy_delta = 0.0;      // a - b, from the active terms (idle baselines are equal)
  double energy_delta_rel = 0.0;  // (a - b) / a
  std::uint64_t messages_a = 0;
  std::uint64_t messages_b = 0;
  std::map<MessageKind, std::pair<std::uint64_t, std::uint64_t>> messages_by_kind;
  std::uint64_t payload_bytes_a = 0;
  std::uint64_t payload_bytes_b = 0;
  std::vector<EnergySample> series_a;
  std::vector<EnergySample> series_b;
};

inline ComparisonReport compare(const RunResult& a, const RunResult& b) {
  ScenarioConfig aligned = b.config;
  aligned.mode = a.config.mode;
  if (!(aligned == a.config)) {
    throw Error(ErrorCode::IncomparableRuns, "run configurations differ beyond the protocol mode");
  }
  ComparisonReport rep;
  rep.mode_a = a.config.mode;
  rep.mode_b = b.config.mode;
  rep.energy_a = a.total_energy;
  rep.energy_b = b.total_energy;
  rep.energy_delta = a.active_energy - b.active_energy;
  rep.energy_delta_rel = a.total_energy == 0.0 ? 0.0 : rep.energy_delta / a.total_energy;
  rep.messages_a = a.total_messages();
  rep.messages_b = b.total_messages();
  for (MessageKind k : kAllMessageKinds) rep.messages_by_kind[k] = {a.count(k), b.count(k)};
  rep.payload_bytes_a = a.payload_bytes;
  rep.payload_bytes_b = b.payload_bytes;
  rep.series_a = cumulative_energy(a);
  rep.series_b = cumulative_energy(b);
  return rep;
}

}  // namespace gwsus
