#pragma once

// Per-node energy accounting. A node is idle, transmitting or receiving at
// any instant; its energy over a run is
//
//   E = P_idle * (t_total - t_tx - t_rx) + P_tx * t_tx + P_rx * t_rx
//
// with powers in watts and times in seconds.

#include <cmath>
#include <map>
#include <string>

#include "gwsus/error.hpp"
#include "gwsus/ids.hpp"

namespace gwsus {

struct PowerProfile {
  double p_idle = 0.0;  // W
  double p_tx = 0.0;    // W
  double p_rx = 0.0;    // W

  bool operator==(const PowerProfile&) const = default;
};

inline PowerProfile default_server_power() { return {10.0, 15.0, 12.0}; }
inline PowerProfile default_client_power() { return {2.0, 3.0, 2.5}; }

inline void validate(const PowerProfile& p) {
  auto finite_nonneg = [](double v) { return std::isfinite(v) && v >= 0.0; };
  if (!finite_nonneg(p.p_idle) || !finite_nonneg(p.p_tx) || !finite_nonneg(p.p_rx)) {
    throw Error(ErrorCode::InvalidConfig, "power profile values must be finite and >= 0");
  }
  if (p.p_tx < p.p_idle || p.p_rx < p.p_idle) {
    throw Error(ErrorCode::InvalidConfig, "power profile: active power below idle power");
  }
}

enum class Phase { Tx, Rx };

struct ActivityLedger {
  double t_total = 0.0;
  double t_tx = 0.0;
  double t_rx = 0.0;

  bool operator==(const ActivityLedger&) const = default;
};

inline void accrue(ActivityLedger& ledger, Phase phase, double duration) {
  if (!(duration >= 0.0)) {
    throw Error(ErrorCode::NegativeDuration, "accrued duration " + std::to_string(duration));
  }
  (phase == Phase::Tx ? ledger.t_tx : ledger.t_rx) += duration;
}

inline void check(const ActivityLedger& ledger) {
  if (ledger.t_tx < 0.0 || ledger.t_rx < 0.0 || ledger.t_tx + ledger.t_rx > ledger.t_total) {
    throw Error(ErrorCode::InvalidLedger,
                "t_tx=" + std::to_string(ledger.t_tx) + " t_rx=" + std::to_string(ledger.t_rx) +
                    " t_total=" + std::to_string(ledger.t_total));
  }
}

inline double node_energy(const ActivityLedger& ledger, const PowerProfile& power) {
  check(ledger);
  const double idle = ledger.t_total - ledger.t_tx - ledger.t_rx;
  return power.p_idle * idle + power.p_tx * ledger.t_tx + power.p_rx * ledger.t_rx;
}

/// Energy above the all-idle baseline P_idle * t_total. Two runs over the
/// same nodes and horizon differ in energy by exactly the difference of their
/// active energies, without cancelling the large idle term.
inline double active_energy(const ActivityLedger& ledger, const PowerProfile& power) {
  check(ledger);
  return (power.p_tx - power.p_idle) * ledger.t_tx + (power.p_rx - power.p_idle) * ledger.t_rx;
}

/// Sums node_energy over every node. Both maps must hold the same key set.
/// Summation follows NodeId order so the result is reproducible bit for bit.
inline double total_energy(const std::map<NodeId, ActivityLedger>& ledgers,
                           const std::map<NodeId, PowerProfile>& powers) {
  if (ledgers.size() != powers.size()) {
    throw Error(ErrorCode::KeyMismatch, "ledger and power maps differ in size");
  }
  double sum = 0.0;
  auto p = powers.begin();
  for (const auto& [id, ledger] : ledgers) {
    if (p->first != id) {
      throw Error(ErrorCode::KeyMismatch, "node " + std::to_string(id.value) + " missing a power profile");
    }
    sum += node_energy(ledger, p->second);
    ++p;
  }
  return sum;
}

}  // namespace gwsus
