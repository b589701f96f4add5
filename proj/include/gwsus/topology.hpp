#pragma once

// Distribution hierarchy: one origin at the root, update servers that cache
// and re-serve updates, and clients at the leaves. Links are parent/child
// registrations with a single scalar bandwidth.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gwsus/energy.hpp"
#include "gwsus/error.hpp"
#include "gwsus/ids.hpp"

namespace gwsus {

enum class NodeKind { Origin, UpdateServer, Client };

constexpr std::string_view to_string(NodeKind kind) {
  switch (kind) {
    case NodeKind::Origin: return "origin";
    case NodeKind::UpdateServer: return "server";
    case NodeKind::Client: return "client";
  }
  return "unknown";
}

/// Maximum number of chained update servers between any node and the origin.
inline constexpr std::size_t kMaxServerLevels = 3;

struct Node {
  NodeId id;
  NodeKind kind = NodeKind::Client;
  std::optional<NodeId> parent;
  PowerProfile power;
  double uplink_bandwidth = 0.0;  // bytes/s towards parent, 0 while unregistered
  std::vector<NodeId> children;   // registration order

  bool operator==(const Node&) const = default;
};

class Topology {
 public:
  NodeId add_node(NodeKind kind, const PowerProfile& power) {
    if (kind == NodeKind::Origin && origin_) {
      throw Error(ErrorCode::DuplicateOrigin, "topology already has origin " + std::to_string(origin_->value));
    }
    validate(power);
    const NodeId id{static_cast<std::uint32_t>(nodes_.size())};
    nodes_.push_back(Node{id, kind, std::nullopt, power, 0.0, {}});
    if (kind == NodeKind::Origin) origin_ = id;
    return id;
  }

  /// Attaches `child` below `parent`. On any error the topology is left
  /// untouched.
  void register_node(NodeId child, NodeId parent, double bandwidth) {
    const Node& c = at(child);
    const Node& p = at(parent);
    if (child == parent) {
      throw Error(ErrorCode::CycleDetected, "node " + std::to_string(child.value) + " cannot parent itself");
    }
    if (c.kind == NodeKind::Origin) {
      throw Error(ErrorCode::InvalidParent, "origin cannot register under another node");
    }
    if (c.parent) {
      throw Error(ErrorCode::AlreadyRegistered, "node " + std::to_string(child.value) + " already has parent " +
                                                    std::to_string(c.parent->value));
    }
    if (p.kind == NodeKind::Client) {
      throw Error(ErrorCode::InvalidParent, "node " + std::to_string(parent.value) + " is a client");
    }
    if (!(bandwidth > 0.0) || !std::isfinite(bandwidth)) {
      throw Error(ErrorCode::ZeroBandwidth, "link bandwidth must be positive");
    }
    // child has no parent, so it roots its own subtree; a cycle appears
    // exactly when parent lies inside that subtree.
    std::size_t above = 0;
    for (std::optional<NodeId> cur = parent; cur; cur = nodes_[cur->value].parent) {
      if (*cur == child) {
        throw Error(ErrorCode::CycleDetected,
                    "node " + std::to_string(parent.value) + " is a descendant of " + std::to_string(child.value));
      }
      if (nodes_[cur->value].kind == NodeKind::UpdateServer) ++above;
    }
    const std::size_t chain = above + servers_below(child);
    if (chain > kMaxServerLevels) {
      throw Error(ErrorCode::DepthExceeded, "server chain of " + std::to_string(chain) + " exceeds " +
                                                std::to_string(kMaxServerLevels) + " levels");
    }
    Node& cm = nodes_[child.value];
    cm.parent = parent;
    cm.uplink_bandwidth = bandwidth;
    nodes_[parent.value].children.push_back(child);
  }

  /// Update servers on the path from `node` (inclusive) up to the origin.
  std::size_t server_depth(NodeId node) const {
    std::size_t depth = 0;
    std::optional<NodeId> cur = node;
    for (; cur; cur = at(*cur).parent) {
      const Node& n = nodes_[cur->value];
      if (n.kind == NodeKind::Origin) return depth;
      if (n.kind == NodeKind::UpdateServer) ++depth;
    }
    throw Error(ErrorCode::Unregistered, "node " + std::to_string(node.value) + " is not connected to the origin");
  }

  /// Number of links between `node` and the origin.
  std::size_t hops_to_origin(NodeId node) const {
    std::size_t hops = 0;
    for (std::optional<NodeId> cur = node; cur; cur = at(*cur).parent) {
      if (nodes_[cur->value].kind == NodeKind::Origin) return hops;
      ++hops;
    }
    throw Error(ErrorCode::Unregistered, "node " + std::to_string(node.value) + " is not connected to the origin");
  }

  bool connected(NodeId node) const {
    for (std::optional<NodeId> cur = node; cur; cur = at(*cur).parent) {
      if (nodes_[cur->value].kind == NodeKind::Origin) return true;
    }
    return false;
  }

  /// Bandwidth of the link joining two adjacent nodes, in either direction.
  double link_bandwidth(NodeId a, NodeId b) const {
    const Node& na = at(a);
    const Node& nb = at(b);
    if (na.parent == b) return na.uplink_bandwidth;
    if (nb.parent == a) return nb.uplink_bandwidth;
    throw Error(ErrorCode::UnknownNode,
                "no link between " + std::to_string(a.value) + " and " + std::to_string(b.value));
  }

  const Node& at(NodeId id) const {
    if (id.value >= nodes_.size()) {
      throw Error(ErrorCode::UnknownNode, "node " + std::to_string(id.value));
    }
    return nodes_[id.value];
  }

  std::optional<NodeId> origin() const { return origin_; }
  const std::vector<Node>& nodes() const { return nodes_; }
  std::size_t size() const { return nodes_.size(); }

  std::size_t edge_count() const {
    return static_cast<std::size_t>(
        std::count_if(nodes_.begin(), nodes_.end(), [](const Node& n) { return n.parent.has_value(); }));
  }

  bool operator==(const Topology&) const = default;

 private:
  std::size_t servers_below(NodeId id) const {
    const Node& n = nodes_[id.value];
    std::size_t best = 0;
    for (NodeId c : n.children) best = std::max(best, servers_below(c));
    return best + (n.kind == NodeKind::UpdateServer ? 1 : 0);
  }

  std::vector<Node> nodes_;
  std::optional<NodeId> origin_;
};

/// Regular hierarchy used by the built-in scenarios: servers_per_level[0]
/// servers hang off the origin, each further level attaches round-robin to
/// the previous one, and clients_per_server clients sit under every server
/// of the deepest level. workgroup_clients attach straight to the origin.
struct HierarchySpec {
  std::vector<std::size_t> servers_per_level{1};
  std::size_t clients_per_server = 10;
  std::size_t workgroup_clients = 0;
  double bandwidth = 1048576.0;  // bytes/s on every link
  PowerProfile origin_power = default_server_power();
  PowerProfile server_power = default_server_power();
  PowerProfile client_power = default_client_power();

  bool operator==(const HierarchySpec&) const = default;
};

inline Topology build_hierarchy(const HierarchySpec& spec) {
  if (spec.servers_per_level.empty() && spec.workgroup_clients == 0) {
    throw Error(ErrorCode::InvalidConfig, "hierarchy.servers_per_level: no servers and no workgroup clients");
  }
  if (spec.servers_per_level.size() > kMaxServerLevels) {
    throw Error(ErrorCode::InvalidConfig, "hierarchy.servers_per_level: more than " +
                                              std::to_string(kMaxServerLevels) + " levels");
  }
  for (std::size_t count : spec.servers_per_level) {
    if (count == 0) throw Error(ErrorCode::InvalidConfig, "hierarchy.servers_per_level: level with 0 servers");
  }
  if (!(spec.bandwidth > 0.0)) throw Error(ErrorCode::InvalidConfig, "hierarchy.bandwidth must be > 0");

  Topology topo;
  const NodeId origin = topo.add_node(NodeKind::Origin, spec.origin_power);
  std::vector<NodeId> previous{origin};
  for (std::size_t count : spec.servers_per_level) {
    std::vector<NodeId> level;
    for (std::size_t i = 0; i < count; ++i) {
      const NodeId s = topo.add_node(NodeKind::UpdateServer, spec.server_power);
      topo.register_node(s, previous[i % previous.size()], spec.bandwidth);
      level.push_back(s);
    }
    previous = std::move(level);
  }
  if (!spec.servers_per_level.empty()) {
    for (NodeId server : previous) {
      for (std::size_t i = 0; i < spec.clients_per_server; ++i) {
        const NodeId c = topo.add_node(NodeKind::Client, spec.client_power);
        topo.register_node(c, server, spec.bandwidth);
      }
    }
  }
  for (std::size_t i = 0; i < spec.workgroup_clients; ++i) {
    const NodeId c = topo.add_node(NodeKind::Client, spec.client_power);
    topo.register_node(c, origin, spec.bandwidth);
  }
  return topo;
}

}  // namespace gwsus
