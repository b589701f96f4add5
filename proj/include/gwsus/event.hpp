#pragma once

#include <cstdint>
#include <string_view>
#include <variant>
#include <vector>

#include "gwsus/catalog.hpp"
#include "gwsus/ids.hpp"

namespace gwsus {

enum class MessageKind {
  PollCheck,
  CatalogRequest,
  CatalogResponse,
  StatusReport,
  UpdateSignal,
  DownloadRequest,
  DownloadPayload,
};

inline constexpr MessageKind kAllMessageKinds[] = {
    MessageKind::PollCheck,      MessageKind::CatalogRequest,  MessageKind::CatalogResponse,
    MessageKind::StatusReport,   MessageKind::UpdateSignal,    MessageKind::DownloadRequest,
    MessageKind::DownloadPayload,
};

constexpr std::string_view to_string(MessageKind kind) {
  switch (kind) {
    case MessageKind::PollCheck: return "PollCheck";
    case MessageKind::CatalogRequest: return "CatalogRequest";
    case MessageKind::CatalogResponse: return "CatalogResponse";
    case MessageKind::StatusReport: return "StatusReport";
    case MessageKind::UpdateSignal: return "UpdateSignal";
    case MessageKind::DownloadRequest: return "DownloadRequest";
    case MessageKind::DownloadPayload: return "DownloadPayload";
  }
  return "Unknown";
}

struct Message {
  MessageKind kind = MessageKind::PollCheck;
  std::uint64_t size = 0;  // bytes on the wire
  NodeId src;
  NodeId dst;
  // PollCheck/CatalogRequest: ids already in the requester's catalog.
  // UpdateSignal: announced ids. DownloadRequest/DownloadPayload: the one id.
  std::vector<UpdateId> ids;
  std::vector<UpdateArtifact> entries;  // CatalogResponse only
  bool registration = false;            // part of a node's initial synchronization

  bool operator==(const Message&) const = default;
};

// Event payloads. Register starts a node's initial catalog synchronization;
// ApprovalRecheck wakes a push-mode node when a deferred approval opens.
struct Register {
  NodeId node;
  bool operator==(const Register&) const = default;
};
struct Publish {
  std::vector<UpdateArtifact> artifacts;
  bool operator==(const Publish&) const = default;
};
struct PollFire {
  NodeId node;
  bool operator==(const PollFire&) const = default;
};
struct MessageArrival {
  Message msg;
  bool operator==(const MessageArrival&) const = default;
};
struct ApprovalRecheck {
  NodeId node;
  bool operator==(const ApprovalRecheck&) const = default;
};

using EventKind = std::variant<Register, Publish, PollFire, MessageArrival, ApprovalRecheck>;

struct Event {
  double time = 0.0;
  std::uint64_t seq = 0;
  EventKind kind;

  bool operator==(const Event&) const = default;
};

/// Strict weak order by (time, seq); use with a max-heap via std::greater.
struct EventLater {
  bool operator()(const Event& a, const Event& b) const {
    if (a.time != b.time) return a.time > b.time;
    return a.seq > b.seq;
  }
};

}  // namespace gwsus
