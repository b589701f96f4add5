#pragma once

// Pull and push update-distribution state machines.
//
// Pull: every non-origin node polls its parent on a fixed schedule. A poll is
// a PollCheck answered by a CatalogResponse carrying the entries the poller
// has not seen; the exchange happens whether or not anything is new.
//
// Push: the origin signals its children when it publishes. A signalled node
// runs one CatalogRequest/CatalogResponse exchange, downloads what it needs,
// and, if it is an update server, signals its own children once its
// downloads have completed.
//
// Shared rules:
//  - Every node synchronizes once at registration (CatalogRequest/Response).
//  - A server only offers entries whose payload it already holds.
//  - A server that is synchronizing holds incoming catalog checks from its
//    children and answers them when its own synchronization finishes.
//  - Each DownloadPayload is followed by a StatusReport to the parent.
//
// The step function is a pure transition over (context, state, event): the
// protocol layer owns no timers; follow-up events are returned to the caller.

#include <algorithm>
#include <cstdint>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "gwsus/catalog.hpp"
#include "gwsus/energy.hpp"
#include "gwsus/error.hpp"
#include "gwsus/event.hpp"
#include "gwsus/topology.hpp"

namespace gwsus {

enum class ProtocolMode { Pull, Push };

constexpr std::string_view to_string(ProtocolMode mode) { return mode == ProtocolMode::Pull ? "pull" : "push"; }

struct PollSchedule {
  double period = 86400.0;  // seconds
  double phase = 54000.0;   // first poll instant; 15:00 with a daily period

  bool operator==(const PollSchedule&) const = default;
};

inline void validate(const PollSchedule& s) {
  if (!(s.period > 0.0)) throw Error(ErrorCode::InvalidConfig, "poll.period must be > 0");
  if (!(s.phase >= 0.0) || !(s.phase < s.period)) {
    throw Error(ErrorCode::InvalidConfig, "poll.phase must lie in [0, period)");
  }
}

/// Poll instants in [0, horizon).
inline std::vector<double> poll_times(const PollSchedule& s, double horizon) {
  std::vector<double> times;
  for (std::uint64_t k = 0;; ++k) {
    const double t = s.phase + static_cast<double>(k) * s.period;
    if (t >= horizon) break;
    times.push_back(t);
  }
  return times;
}

struct MessageSizes {
  std::uint64_t signal = 64;
  std::uint64_t poll_check = 512;
  std::uint64_t catalog_request = 512;
  std::uint64_t status_report = 512;
  std::uint64_t download_request = 512;
  std::uint64_t catalog_header = 256;

  bool operator==(const MessageSizes&) const = default;
};

inline void validate(const MessageSizes& s) {
  const std::uint64_t others[] = {s.poll_check, s.catalog_request, s.status_report, s.download_request,
                                  s.catalog_header};
  if (s.signal == 0) throw Error(ErrorCode::InvalidConfig, "sizes.signal must be > 0");
  for (std::uint64_t v : others) {
    if (v == 0) throw Error(ErrorCode::InvalidConfig, "sizes: every message size must be > 0");
    if (s.signal > v) throw Error(ErrorCode::InvalidConfig, "sizes.signal must be the smallest message size");
  }
}

inline double transfer_time(const Message& msg, double bandwidth) {
  if (!(bandwidth > 0.0)) throw Error(ErrorCode::ZeroBandwidth, "transfer over a link with bandwidth <= 0");
  return static_cast<double>(std::max<std::uint64_t>(msg.size, 1)) / bandwidth;
}

/// Read-only inputs shared by every step of one run.
struct ProtocolContext {
  const Topology& topology;
  ProtocolMode mode = ProtocolMode::Push;
  MessageSizes sizes;
  ApprovalPolicy policy;
  PollSchedule poll;
};

struct NodeState {
  Catalog catalog;  // metadata as advertised by the parent
  ClientInventory inventory;
  bool awaiting_response = false;
  bool resync = false;
  std::set<UpdateId> signalled_while_syncing;
  std::set<UpdateId> in_flight;
  std::vector<Message> deferred;           // children's catalog checks held while syncing
  std::set<UpdateId> pending_forward;      // signalled ids not yet re-signalled downstream
  std::set<UpdateId> newly_installed;      // installed since the last downstream signal
  std::set<double> rechecks;               // scheduled approval wake-ups
  std::uint64_t polls = 0;

  bool syncing() const { return awaiting_response || !in_flight.empty(); }
  bool operator==(const NodeState&) const = default;
};

struct ProtocolState {
  OriginStore origin;
  std::vector<NodeState> nodes;  // indexed by NodeId

  bool operator==(const ProtocolState&) const = default;
};

inline ProtocolState initial_state(const Topology& topology) {
  ProtocolState s;
  s.nodes.resize(topology.size());
  return s;
}

struct PhaseRecord {
  NodeId node;
  Phase phase = Phase::Tx;
  double duration = 0.0;
  bool operator==(const PhaseRecord&) const = default;
};

struct Timer {
  double time = 0.0;
  EventKind kind;
  bool operator==(const Timer&) const = default;
};

struct StepOutput {
  std::vector<Message> messages;
  std::vector<PhaseRecord> phases;  // one Tx and one Rx record per message, same order
  std::vector<Timer> timers;

  bool operator==(const StepOutput&) const = default;
};

namespace detail {

inline NodeId parent_of(const ProtocolContext& ctx, NodeId node) {
  const Node& n = ctx.topology.at(node);
  if (!n.parent) throw Error(ErrorCode::Unregistered, "node " + std::to_string(node.value) + " has no parent");
  return *n.parent;
}

inline bool is_origin(const ProtocolContext& ctx, NodeId node) {
  return ctx.topology.at(node).kind == NodeKind::Origin;
}

inline std::vector<UpdateId> to_vector(const std::set<UpdateId>& ids) { return {ids.begin(), ids.end()}; }

/// Entries `node` is able to serve: everything published at the origin,
/// otherwise the catalog entries whose payload the node holds.
inline std::vector<UpdateArtifact> offered(const ProtocolContext& ctx, const ProtocolState& state, NodeId node) {
  if (is_origin(ctx, node)) return state.origin.catalog.entries();
  std::vector<UpdateArtifact> out;
  const NodeState& ns = state.nodes[node.value];
  for (const UpdateArtifact& a : ns.catalog.entries()) {
    if (ns.inventory.installed.contains(a.id)) out.push_back(a);
  }
  return out;
}

class Emitter {
 public:
  explicit Emitter(const ProtocolContext& ctx) : ctx_(ctx) {}

  void send(Message m) {
    const double d = transfer_time(m, ctx_.topology.link_bandwidth(m.src, m.dst));
    out.phases.push_back({m.src, Phase::Tx, d});
    out.phases.push_back({m.dst, Phase::Rx, d});
    out.messages.push_back(std::move(m));
  }

  StepOutput out;

 private:
  const ProtocolContext& ctx_;
};

}  // namespace detail

/// One UpdateSignal per registered child of `sender`.
inline std::vector<Message> broadcast_signal(const ProtocolContext& ctx, NodeId sender,
                                             const std::set<UpdateId>& ids) {
  std::vector<Message> out;
  for (NodeId child : ctx.topology.at(sender).children) {
    out.push_back(Message{MessageKind::UpdateSignal, ctx.sizes.signal, sender, child, detail::to_vector(ids), {}, false});
  }
  return out;
}

class ProtocolMachine {
 public:
  ProtocolMachine(const ProtocolContext& ctx, ProtocolState& state) : ctx_(ctx), state_(state), emit_(ctx) {}

  StepOutput step(const Event& ev) {
    std::visit([&](const auto& k) { on(ev.time, k); }, ev.kind);
    return std::move(emit_.out);
  }

  // Individual transitions, exposed for unit tests.
  void poll_tick(NodeId node, double now) {
    if (ctx_.mode != ProtocolMode::Pull || detail::is_origin(ctx_, node)) {
      throw Error(ErrorCode::UnknownEvent, "poll on node " + std::to_string(node.value) + " outside pull mode");
    }
    ++state_.nodes[node.value].polls;
    start_sync(node, MessageKind::PollCheck, false);
    emit_.out.timers.push_back({now + ctx_.poll.period, PollFire{node}});
  }

  void handle_signal(NodeId node, const Message& msg, double now) {
    (void)now;
    if (ctx_.mode != ProtocolMode::Push) {
      throw Error(ErrorCode::UnknownEvent, "UpdateSignal received in pull mode");
    }
    NodeState& ns = state_.nodes[node.value];
    if (ctx_.topology.at(node).kind == NodeKind::UpdateServer) {
      ns.pending_forward.insert(msg.ids.begin(), msg.ids.end());
    }
    if (ns.syncing()) {
      // Resolved in finish_sync: only ids the running exchange missed cost a new one.
      ns.signalled_while_syncing.insert(msg.ids.begin(), msg.ids.end());
      return;
    }
    start_sync(node, MessageKind::CatalogRequest, false);
  }

 private:
  void on(double, const Register& e) { start_sync(e.node, MessageKind::CatalogRequest, true); }

  void on(double now, const Publish& e) {
    std::set<UpdateId> ids;
    for (const UpdateArtifact& a : e.artifacts) {
      publish(state_.origin, a);
      ids.insert(a.id);
    }
    if (ctx_.mode == ProtocolMode::Push) {
      const NodeId origin = *ctx_.topology.origin();
      for (Message& m : broadcast_signal(ctx_, origin, ids)) emit_.send(std::move(m));
    }
    (void)now;
  }

  void on(double now, const PollFire& e) { poll_tick(e.node, now); }

  void on(double now, const ApprovalRecheck& e) {
    NodeState& ns = state_.nodes[e.node.value];
    ns.rechecks.erase(now);
    if (ns.awaiting_response) return;  // the pending response re-audits anyway
    // Downloads started here end in finish_sync via DownloadPayload.
    request_needed(e.node, now, false);
  }

  void on(double now, const MessageArrival& e) {
    const Message& m = e.msg;
    switch (m.kind) {
      case MessageKind::PollCheck:
      case MessageKind::CatalogRequest: {
        if (!detail::is_origin(ctx_, m.dst) && state_.nodes[m.dst.value].syncing()) {
          state_.nodes[m.dst.value].deferred.push_back(m);
        } else {
          answer_catalog_check(m);
        }
        break;
      }
      case MessageKind::CatalogResponse: {
        NodeState& ns = state_.nodes[m.dst.value];
        for (const UpdateArtifact& a : m.entries) ns.catalog.insert(a);
        ns.awaiting_response = false;
        request_needed(m.dst, now, m.registration);
        if (!ns.syncing()) finish_sync(m.dst);
        break;
      }
      case MessageKind::DownloadRequest: {
        const UpdateId id = m.ids.front();
        emit_.send(Message{MessageKind::DownloadPayload, payload_size(m.dst, id), m.dst, m.src, {id}, {},
                           m.registration});
        break;
      }
      case MessageKind::DownloadPayload: {
        NodeState& ns = state_.nodes[m.dst.value];
        const UpdateId id = m.ids.front();
        ns.in_flight.erase(id);
        record_result(ns.inventory, id, InstallOutcome::Installed);
        ns.newly_installed.insert(id);
        emit_.send(Message{MessageKind::StatusReport, ctx_.sizes.status_report, m.dst, m.src, {id}, {},
                           m.registration});
        if (!ns.syncing()) finish_sync(m.dst);
        break;
      }
      case MessageKind::StatusReport:
        break;
      case MessageKind::UpdateSignal:
        handle_signal(m.dst, m, now);
        break;
    }
  }

  void start_sync(NodeId node, MessageKind kind, bool registration) {
    NodeState& ns = state_.nodes[node.value];
    if (ns.syncing()) {
      ns.resync = true;
      return;
    }
    ns.awaiting_response = true;
    const std::uint64_t size = kind == MessageKind::PollCheck ? ctx_.sizes.poll_check : ctx_.sizes.catalog_request;
    emit_.send(Message{kind, size, node, detail::parent_of(ctx_, node), detail::to_vector(ns.catalog.ids()), {},
                       registration});
  }

  void answer_catalog_check(const Message& request) {
    const std::set<UpdateId> known(request.ids.begin(), request.ids.end());
    std::vector<UpdateArtifact> delta;
    std::uint64_t size = ctx_.sizes.catalog_header;
    for (const UpdateArtifact& a : detail::offered(ctx_, state_, request.dst)) {
      if (known.contains(a.id)) continue;
      size += a.metadata_size;
      delta.push_back(a);
    }
    emit_.send(Message{MessageKind::CatalogResponse, size, request.dst, request.src, {}, std::move(delta),
                       request.registration});
  }

  void request_needed(NodeId node, double now, bool registration) {
    NodeState& ns = state_.nodes[node.value];
    ns.inventory.needed = audit(ns.catalog, ns.inventory, ctx_.policy, now);
    for (UpdateId id : ns.inventory.needed) {
      if (!ns.in_flight.insert(id).second) continue;
      emit_.send(Message{MessageKind::DownloadRequest, ctx_.sizes.download_request, node,
                         detail::parent_of(ctx_, node), {id}, {}, registration});
    }
    if (ctx_.mode != ProtocolMode::Push) return;
    for (const UpdateArtifact& a : ns.catalog.entries()) {
      if (ns.inventory.installed.contains(a.id) || ns.inventory.failed.contains(a.id)) continue;
      const auto from = approval_time(ctx_.policy, a);
      if (from && *from > now && ns.rechecks.insert(*from).second) {
        emit_.out.timers.push_back({*from, ApprovalRecheck{node}});
      }
    }
  }

  void finish_sync(NodeId node) {
    NodeState& ns = state_.nodes[node.value];
    if (ctx_.mode == ProtocolMode::Push && ctx_.topology.at(node).kind == NodeKind::UpdateServer) {
      std::set<UpdateId> forward;
      for (UpdateId id : ns.pending_forward) {
        if (ns.inventory.installed.contains(id)) forward.insert(id);
      }
      forward.insert(ns.newly_installed.begin(), ns.newly_installed.end());
      for (UpdateId id : forward) ns.pending_forward.erase(id);
      if (!forward.empty()) {
        for (Message& m : broadcast_signal(ctx_, node, forward)) emit_.send(std::move(m));
      }
    }
    ns.newly_installed.clear();
    std::vector<Message> held = std::move(ns.deferred);
    ns.deferred.clear();
    for (const Message& m : held) answer_catalog_check(m);
    const bool missed = std::any_of(ns.signalled_while_syncing.begin(), ns.signalled_while_syncing.end(),
                                    [&](UpdateId id) { return !ns.catalog.contains(id); });
    ns.signalled_while_syncing.clear();
    if (ns.resync || missed) {
      ns.resync = false;
      start_sync(node, MessageKind::CatalogRequest, false);
    }
  }

  std::uint64_t payload_size(NodeId server, UpdateId id) const {
    if (detail::is_origin(ctx_, server)) {
      auto it = state_.origin.payloads.find(id);
      if (it != state_.origin.payloads.end()) return it->second.size;
    } else if (const UpdateArtifact* a = state_.nodes[server.value].catalog.find(id);
               a && state_.nodes[server.value].inventory.installed.contains(id)) {
      return a->payload_size;
    }
    throw Error(ErrorCode::UnknownEvent,
                "node " + std::to_string(server.value) + " asked for update " + std::to_string(id.value) +
                    " it does not hold");
  }

  const ProtocolContext& ctx_;
  ProtocolState& state_;
  detail::Emitter emit_;
};

/// Applies one event to `state` in place.
inline StepOutput apply_event(const ProtocolContext& ctx, ProtocolState& state, const Event& ev) {
  if (ev.kind.valueless_by_exception()) throw Error(ErrorCode::UnknownEvent, "valueless event");
  return ProtocolMachine(ctx, state).step(ev);
}

/// Pure form of apply_event: identical (state, event) yields identical output.
inline std::pair<ProtocolState, StepOutput> run_protocol_step(const ProtocolContext& ctx, ProtocolState state,
                                                              const Event& ev) {
  StepOutput out = apply_event(ctx, state, ev);
  return {std::move(state), std::move(out)};
}

}  // namespace gwsus
