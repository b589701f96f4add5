#pragma once

// Published updates, per-node catalogs (metadata only) and inventories, and
// the approval policy that gates which catalog entries a node may download.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <variant>
#include <vector>

#include "gwsus/error.hpp"
#include "gwsus/ids.hpp"

namespace gwsus {

enum class UpdateClassification { Critical, Definition, Security, Rollup, ServicePack, Tool };

constexpr std::string_view to_string(UpdateClassification c) {
  switch (c) {
    case UpdateClassification::Critical: return "Critical";
    case UpdateClassification::Definition: return "Definition";
    case UpdateClassification::Security: return "Security";
    case UpdateClassification::Rollup: return "Rollup";
    case UpdateClassification::ServicePack: return "ServicePack";
    case UpdateClassification::Tool: return "Tool";
  }
  return "Unknown";
}

inline constexpr std::uint64_t kDefaultMetadataBytes = 2 * 1024;
inline constexpr std::uint64_t kDefaultPayloadBytes = 10 * 1024 * 1024;

/// Descriptor of one published update. Holds sizes only; no payload bytes
/// are ever materialized.
struct UpdateArtifact {
  UpdateId id;
  UpdateClassification classification = UpdateClassification::Security;
  std::uint64_t metadata_size = kDefaultMetadataBytes;
  std::uint64_t payload_size = kDefaultPayloadBytes;
  double release_time = 0.0;

  bool operator==(const UpdateArtifact&) const = default;
};

inline void validate(const UpdateArtifact& a) {
  const std::string who = "update " + std::to_string(a.id.value);
  if (a.metadata_size == 0) throw Error(ErrorCode::InvalidArtifact, who + ": metadata_size must be > 0");
  if (a.payload_size == 0) throw Error(ErrorCode::InvalidArtifact, who + ": payload_size must be > 0");
  if (a.metadata_size > a.payload_size) {
    throw Error(ErrorCode::InvalidArtifact, who + ": metadata_size exceeds payload_size");
  }
  if (!(a.release_time >= 0.0)) throw Error(ErrorCode::InvalidArtifact, who + ": negative release_time");
}

/// Metadata entries ordered by (release_time, id).
class Catalog {
 public:
  /// Returns false if the id is already present.
  bool insert(const UpdateArtifact& a) {
    if (contains(a.id)) return false;
    auto pos = std::upper_bound(entries_.begin(), entries_.end(), a, [](const auto& x, const auto& y) {
      return std::tie(x.release_time, x.id) < std::tie(y.release_time, y.id);
    });
    entries_.insert(pos, a);
    ids_.insert(a.id);
    return true;
  }

  bool contains(UpdateId id) const { return ids_.contains(id); }
  const std::vector<UpdateArtifact>& entries() const { return entries_; }
  const std::set<UpdateId>& ids() const { return ids_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  const UpdateArtifact* find(UpdateId id) const {
    auto it = std::find_if(entries_.begin(), entries_.end(), [id](const auto& e) { return e.id == id; });
    return it == entries_.end() ? nullptr : &*it;
  }

  bool operator==(const Catalog&) const = default;

 private:
  std::vector<UpdateArtifact> entries_;
  std::set<UpdateId> ids_;
};

struct Payload {
  std::uint64_t size = 0;
  bool operator==(const Payload&) const = default;
};

/// The origin's store: published metadata in the catalog, payloads kept apart.
struct OriginStore {
  Catalog catalog;
  std::map<UpdateId, Payload> payloads;

  bool operator==(const OriginStore&) const = default;
};

inline void publish(OriginStore& store, const UpdateArtifact& artifact) {
  validate(artifact);
  if (!store.catalog.insert(artifact)) {
    throw Error(ErrorCode::DuplicateUpdateId, "update " + std::to_string(artifact.id.value) + " already published");
  }
  store.payloads.emplace(artifact.id, Payload{artifact.payload_size});
}

struct ClientInventory {
  std::set<UpdateId> installed;
  std::set<UpdateId> failed;
  std::set<UpdateId> needed;

  bool operator==(const ClientInventory&) const = default;
};

struct AutoApproveAll {
  bool operator==(const AutoApproveAll&) const = default;
};
struct AutoApproveAfterDelay {
  double delay = 0.0;  // seconds after release_time
  bool operator==(const AutoApproveAfterDelay&) const = default;
};
struct DenyList {
  std::set<UpdateId> denied;
  bool operator==(const DenyList&) const = default;
};

using ApprovalPolicy = std::variant<AutoApproveAll, AutoApproveAfterDelay, DenyList>;

inline void validate(const ApprovalPolicy& policy) {
  if (const auto* d = std::get_if<AutoApproveAfterDelay>(&policy); d && !(d->delay >= 0.0)) {
    throw Error(ErrorCode::InvalidConfig, "approval delay must be >= 0");
  }
}

/// Instant from which `artifact` is approved, or nothing if never.
inline std::optional<double> approval_time(const ApprovalPolicy& policy, const UpdateArtifact& artifact) {
  if (std::holds_alternative<AutoApproveAll>(policy)) return artifact.release_time;
  if (const auto* d = std::get_if<AutoApproveAfterDelay>(&policy)) return artifact.release_time + d->delay;
  if (std::get<DenyList>(policy).denied.contains(artifact.id)) return std::nullopt;
  return artifact.release_time;
}

inline bool approved(const ApprovalPolicy& policy, const UpdateArtifact& artifact, double now) {
  const auto from = approval_time(policy, artifact);
  return from && now >= *from;
}

/// Ids in the catalog that are approved at `now` and neither installed nor
/// failed. Callers store the result as the inventory's needed set.
inline std::set<UpdateId> audit(const Catalog& local_catalog, const ClientInventory& inventory,
                                const ApprovalPolicy& policy, double now) {
  std::set<UpdateId> needed;
  for (const UpdateArtifact& a : local_catalog.entries()) {
    if (inventory.installed.contains(a.id) || inventory.failed.contains(a.id)) continue;
    if (approved(policy, a, now)) needed.insert(a.id);
  }
  return needed;
}

enum class InstallOutcome { Installed, Failed };

inline void record_result(ClientInventory& inventory, UpdateId id, InstallOutcome outcome) {
  if (inventory.needed.erase(id) == 0) {
    throw Error(ErrorCode::NotNeeded, "update " + std::to_string(id.value) + " is not in the needed set");
  }
  (outcome == InstallOutcome::Installed ? inventory.installed : inventory.failed).insert(id);
}

}  // namespace gwsus
