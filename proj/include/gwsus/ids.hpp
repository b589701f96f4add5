#pragma once

#include <compare>
#include <cstdint>
#include <functional>

namespace gwsus {

struct NodeId {
  std::uint32_t value = 0;
  auto operator<=>(const NodeId&) const = default;
};

struct UpdateId {
  std::uint32_t value = 0;
  auto operator<=>(const UpdateId&) const = default;
};

}  // namespace gwsus

template <>
struct std::hash<gwsus::NodeId> {
  std::size_t operator()(gwsus::NodeId id) const noexcept { return std::hash<std::uint32_t>{}(id.value); }
};

template <>
struct std::hash<gwsus::UpdateId> {
  std::size_t operator()(gwsus::UpdateId id) const noexcept { return std::hash<std::uint32_t>{}(id.value); }
};
