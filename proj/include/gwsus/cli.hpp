#pragma once

// Command-line front end: argument parsing, scenario files, CSV output.

#include <yaml-cpp/yaml.h>

#include <CLI11.hpp>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "gwsus/error.hpp"
#include "gwsus/simulator.hpp"

namespace gwsus::cli {

enum class ScenarioSource { Daily, Weekly, File };
enum class ModeSelection { Pull, Push, Both };

struct ExperimentSpec {
  ScenarioSource scenario = ScenarioSource::Weekly;
  std::filesystem::path scenario_file;
  ModeSelection mode = ModeSelection::Both;
  std::filesystem::path out = "out";
  std::uint64_t seed = 0;
  std::optional<std::size_t> servers;
  std::optional<std::size_t> clients_per_server;
  std::optional<double> bandwidth;
  std::optional<std::uint64_t> signal_bytes;
  std::optional<std::uint32_t> horizon_days;

  bool operator==(const ExperimentSpec&) const = default;
};

/// Thrown by parse_args for --help; carries the rendered help text.
struct HelpRequested {
  std::string text;
};

inline ExperimentSpec parse_args(std::vector<std::string> args) {
  CLI::App app{"Simulate pull vs push software-update distribution and account per-node energy.", "gwsus_sim"};
  ExperimentSpec spec;
  std::vector<std::string> scenario{"weekly"};
  std::string mode = "both";
  std::string out = spec.out.string();

  app.add_option("--scenario", scenario, "daily | weekly | file PATH")->expected(1, 2);
  app.add_option("--mode", mode, "pull | push | both");
  app.add_option("--out", out, "output directory");
  app.add_option("--seed", spec.seed, "seed recorded with the run configuration");
  app.add_option("--servers", spec.servers, "update servers directly below the origin");
  app.add_option("--clients-per-server", spec.clients_per_server, "clients under each leaf server");
  app.add_option("--bandwidth", spec.bandwidth, "link bandwidth in bytes/second");
  app.add_option("--signal-bytes", spec.signal_bytes, "size of an update signal in bytes");
  app.add_option("--horizon-days", spec.horizon_days, "simulated horizon in days");

  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    throw HelpRequested{app.help()};
  } catch (const CLI::ParseError& e) {
    throw Error(ErrorCode::UsageError, e.what());
  }

  if (scenario[0] == "daily" && scenario.size() == 1) {
    spec.scenario = ScenarioSource::Daily;
  } else if (scenario[0] == "weekly" && scenario.size() == 1) {
    spec.scenario = ScenarioSource::Weekly;
  } else if (scenario[0] == "file" && scenario.size() == 2) {
    spec.scenario = ScenarioSource::File;
    spec.scenario_file = scenario[1];
  } else {
    std::string joined;
    for (const auto& s : scenario) joined += (joined.empty() ? "" : " ") + s;
    throw Error(ErrorCode::UsageError, "--scenario: expected daily, weekly or file PATH, got '" + joined + "'");
  }

  if (mode == "pull") {
    spec.mode = ModeSelection::Pull;
  } else if (mode == "push") {
    spec.mode = ModeSelection::Push;
  } else if (mode == "both") {
    spec.mode = ModeSelection::Both;
  } else {
    throw Error(ErrorCode::UsageError, "--mode: expected pull, push or both, got '" + mode + "'");
  }
  if (spec.bandwidth && !(*spec.bandwidth > 0.0)) {
    throw Error(ErrorCode::UsageError, "--bandwidth: must be > 0");
  }
  spec.out = out;
  return spec;
}

inline ExperimentSpec parse_args(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return parse_args(std::move(args));
}

// ---------------------------------------------------------------------------
// Scenario files: a flat YAML mapping. Every key is optional; omitted keys
// keep the built-in defaults. See scenarios/*.yaml.

namespace detail {

inline const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys{
      "horizon_days",     "horizon_s",       "mode",          "seed",
      "servers_per_level", "clients_per_server", "workgroup_clients", "bandwidth_bps",
      "origin_power",     "server_power",    "client_power",  "poll_period_s",
      "poll_phase_s",     "signal_bytes",    "poll_check_bytes", "catalog_request_bytes",
      "status_report_bytes", "download_request_bytes", "catalog_header_bytes", "approval",
      "approval_delay_s", "deny",            "releases"};
  return keys;
}

inline PowerProfile read_power(const YAML::Node& n, const std::string& key) {
  if (!n.IsSequence() || n.size() != 3) {
    throw Error(ErrorCode::InvalidConfig, key + ": expected [idle_w, tx_w, rx_w]");
  }
  return {n[0].as<double>(), n[1].as<double>(), n[2].as<double>()};
}

inline UpdateClassification read_classification(const std::string& s) {
  for (auto c : {UpdateClassification::Critical, UpdateClassification::Definition, UpdateClassification::Security,
                 UpdateClassification::Rollup, UpdateClassification::ServicePack, UpdateClassification::Tool}) {
    if (s == to_string(c)) return c;
  }
  throw Error(ErrorCode::InvalidConfig, "releases: unknown classification '" + s + "'");
}

}  // namespace detail

inline ScenarioConfig parse_scenario(const std::string& text) {
  ScenarioConfig c;
  c.hierarchy = HierarchySpec{};
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("scenario file: ") + e.what());
  }
  if (root.IsNull()) return c;
  if (!root.IsMap()) throw Error(ErrorCode::InvalidConfig, "scenario file: top level must be a mapping");

  try {
    for (const auto& kv : root) {
      const std::string key = kv.first.as<std::string>();
      if (!detail::known_keys().contains(key)) {
        throw Error(ErrorCode::InvalidConfig, "scenario file: unknown key '" + key + "'");
      }
    }
    if (root["horizon_days"]) c.horizon = root["horizon_days"].as<double>() * kSecondsPerDay;
    if (root["horizon_s"]) c.horizon = root["horizon_s"].as<double>();
    if (root["mode"]) {
      const auto m = root["mode"].as<std::string>();
      if (m != "pull" && m != "push") throw Error(ErrorCode::InvalidConfig, "mode: expected pull or push");
      c.mode = m == "pull" ? ProtocolMode::Pull : ProtocolMode::Push;
    }
    if (root["seed"]) c.seed = root["seed"].as<std::uint64_t>();

    HierarchySpec& h = c.hierarchy;
    if (root["servers_per_level"]) h.servers_per_level = root["servers_per_level"].as<std::vector<std::size_t>>();
    if (root["clients_per_server"]) h.clients_per_server = root["clients_per_server"].as<std::size_t>();
    if (root["workgroup_clients"]) h.workgroup_clients = root["workgroup_clients"].as<std::size_t>();
    if (root["bandwidth_bps"]) h.bandwidth = root["bandwidth_bps"].as<double>();
    if (root["origin_power"]) h.origin_power = detail::read_power(root["origin_power"], "origin_power");
    if (root["server_power"]) h.server_power = detail::read_power(root["server_power"], "server_power");
    if (root["client_power"]) h.client_power = detail::read_power(root["client_power"], "client_power");

    if (root["poll_period_s"]) c.poll.period = root["poll_period_s"].as<double>();
    if (root["poll_phase_s"]) c.poll.phase = root["poll_phase_s"].as<double>();

    if (root["signal_bytes"]) c.sizes.signal = root["signal_bytes"].as<std::uint64_t>();
    if (root["poll_check_bytes"]) c.sizes.poll_check = root["poll_check_bytes"].as<std::uint64_t>();
    if (root["catalog_request_bytes"]) c.sizes.catalog_request = root["catalog_request_bytes"].as<std::uint64_t>();
    if (root["status_report_bytes"]) c.sizes.status_report = root["status_report_bytes"].as<std::uint64_t>();
    if (root["download_request_bytes"]) {
      c.sizes.download_request = root["download_request_bytes"].as<std::uint64_t>();
    }
    if (root["catalog_header_bytes"]) c.sizes.catalog_header = root["catalog_header_bytes"].as<std::uint64_t>();

    if (root["approval"]) {
      const auto a = root["approval"].as<std::string>();
      if (a == "auto") {
        c.approval = AutoApproveAll{};
      } else if (a == "delay") {
        if (!root["approval_delay_s"]) throw Error(ErrorCode::InvalidConfig, "approval: delay needs approval_delay_s");
        c.approval = AutoApproveAfterDelay{root["approval_delay_s"].as<double>()};
      } else if (a == "deny") {
        DenyList deny;
        if (root["deny"]) {
          for (auto id : root["deny"].as<std::vector<std::uint32_t>>()) deny.denied.insert(UpdateId{id});
        }
        c.approval = deny;
      } else {
        throw Error(ErrorCode::InvalidConfig, "approval: expected auto, delay or deny");
      }
    }

    if (const YAML::Node releases = root["releases"]) {
      if (!releases.IsSequence()) throw Error(ErrorCode::InvalidConfig, "releases: expected a list");
      for (const auto& r : releases) {
        if (!r["id"] || !r["time_s"]) throw Error(ErrorCode::InvalidConfig, "releases: id and time_s are required");
        UpdateArtifact a;
        a.id = UpdateId{r["id"].as<std::uint32_t>()};
        a.release_time = r["time_s"].as<double>();
        if (r["classification"]) a.classification = detail::read_classification(r["classification"].as<std::string>());
        if (r["metadata_bytes"]) a.metadata_size = r["metadata_bytes"].as<std::uint64_t>();
        if (r["payload_bytes"]) a.payload_size = r["payload_bytes"].as<std::uint64_t>();
        c.releases.push_back(a);
      }
    }
  } catch (const YAML::Exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("scenario file: ") + e.what());
  }
  return c;
}

inline ScenarioConfig load_scenario_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::InvalidConfig, "scenario file '" + path.string() + "' cannot be read");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

/// Resolves the experiment into one scenario configuration. The mode field
/// is left as configured; execute() sets it per arm.
inline ScenarioConfig build_config(const ExperimentSpec& spec) {
  ScenarioConfig c;
  if (spec.scenario == ScenarioSource::File) {
    c = load_scenario_file(spec.scenario_file);
    if (spec.servers) c.hierarchy.servers_per_level = {*spec.servers};
    if (spec.clients_per_server) c.hierarchy.clients_per_server = *spec.clients_per_server;
    if (spec.bandwidth) c.hierarchy.bandwidth = *spec.bandwidth;
    if (spec.signal_bytes) c.sizes.signal = *spec.signal_bytes;
    if (spec.horizon_days) c.horizon = *spec.horizon_days * kSecondsPerDay;
  } else {
    ScenarioParams p;
    if (spec.servers) p.hierarchy.servers_per_level = {*spec.servers};
    if (spec.clients_per_server) p.hierarchy.clients_per_server = *spec.clients_per_server;
    if (spec.bandwidth) p.hierarchy.bandwidth = *spec.bandwidth;
    if (spec.signal_bytes) p.sizes.signal = *spec.signal_bytes;
    if (spec.horizon_days) p.horizon_days = *spec.horizon_days;
    c = spec.scenario == ScenarioSource::Daily ? scenario_daily(p) : scenario_weekly(p);
  }
  c.seed = spec.seed;
  return c;
}

// ---------------------------------------------------------------------------
// CSV output

/// Shortest round-trip decimal form, independent of locale.
inline std::string format_number(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return ec == std::errc{} ? std::string(buf, end) : std::string("nan");
}

inline void write_energy_summary(std::ostream& os, const RunResult& r) {
  os << "node_id,kind,t_total_s,t_tx_s,t_rx_s,energy_j\n";
  for (const Node& n : r.topology.nodes()) {
    const ActivityLedger& l = r.ledgers.at(n.id);
    os << n.id.value << ',' << to_string(n.kind) << ',' << format_number(l.t_total) << ','
       << format_number(l.t_tx) << ',' << format_number(l.t_rx) << ',' << format_number(r.energy.at(n.id)) << '\n';
  }
}

inline void write_messages(std::ostream& os, const RunResult& r) {
  os << "time_s,src,dst,kind,size_bytes\n";
  for (const TraceRow& row : r.trace) {
    os << format_number(row.time) << ',' << row.src.value << ',' << row.dst.value << ',' << to_string(row.kind)
       << ',' << row.size << '\n';
  }
}

inline void write_cumulative(std::ostream& os, const std::vector<const RunResult*>& runs) {
  os << "time_s,mode,cumulative_j\n";
  for (const RunResult* r : runs) {
    for (const EnergySample& s : cumulative_energy(*r)) {
      os << format_number(s.time) << ',' << to_string(r->config.mode) << ',' << format_number(s.cumulative) << '\n';
    }
  }
}

inline void write_comparison(std::ostream& os, const RunResult& pull, const RunResult& push) {
  const ComparisonReport rep = compare(pull, push);
  os << "metric,pull,push,delta,delta_pct\n";
  auto row = [&](const std::string& metric, double a, double b, double delta) {
    os << metric << ',' << format_number(a) << ',' << format_number(b) << ',' << format_number(delta) << ','
       << format_number(a == 0.0 ? 0.0 : 100.0 * delta / a) << '\n';
  };
  auto count_row = [&](const std::string& metric, std::uint64_t a, std::uint64_t b) {
    row(metric, static_cast<double>(a), static_cast<double>(b), static_cast<double>(a) - static_cast<double>(b));
  };
  row("total_energy_j", rep.energy_a, rep.energy_b, rep.energy_delta);
  count_row("messages_total", rep.messages_a, rep.messages_b);
  count_row("messages_post_registration", pull.post_registration_messages, push.post_registration_messages);
  count_row("payload_bytes", rep.payload_bytes_a, rep.payload_bytes_b);
  for (const auto& [kind, counts] : rep.messages_by_kind) {
    count_row("messages_" + std::string(to_string(kind)), counts.first, counts.second);
  }
}

inline std::string summary_line(const RunResult& r) {
  return std::string(to_string(r.config.mode)) + " total_energy_j=" + format_number(r.total_energy) +
         " messages=" + std::to_string(r.total_messages()) + " payload_bytes=" + std::to_string(r.payload_bytes);
}

namespace detail {
template <typename Fn>
void write_file(const std::filesystem::path& path, Fn&& fn) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error(ErrorCode::InvalidConfig, "cannot write '" + path.string() + "'");
  fn(os);
  if (!os) throw Error(ErrorCode::InvalidConfig, "write to '" + path.string() + "' failed");
}
}  // namespace detail

/// Runs the experiment and writes its CSV files. A single-mode run writes
/// energy_summary.csv and messages.csv into the output directory; `both`
/// writes them under pull/ and push/ and adds comparison.csv at the top.
inline int execute(const ExperimentSpec& spec, std::ostream& out, std::ostream& err) {
  try {
    ScenarioConfig config = build_config(spec);
    std::vector<RunResult> runs;
    if (spec.mode == ModeSelection::Both) {
      auto [pull, push] = run_pull_and_push(config);
      runs.push_back(std::move(pull));
      runs.push_back(std::move(push));
    } else {
      config.mode = spec.mode == ModeSelection::Pull ? ProtocolMode::Pull : ProtocolMode::Push;
      runs.push_back(run(config));
    }

    std::error_code ec;
    std::filesystem::create_directories(spec.out, ec);
    if (ec) throw Error(ErrorCode::InvalidConfig, "cannot create '" + spec.out.string() + "': " + ec.message());

    std::vector<const RunResult*> ptrs;
    for (const RunResult& r : runs) {
      std::filesystem::path dir = spec.out;
      if (runs.size() > 1) {
        dir /= std::string(to_string(r.config.mode));
        std::filesystem::create_directories(dir, ec);
        if (ec) throw Error(ErrorCode::InvalidConfig, "cannot create '" + dir.string() + "': " + ec.message());
      }
      detail::write_file(dir / "energy_summary.csv", [&](std::ostream& os) { write_energy_summary(os, r); });
      detail::write_file(dir / "messages.csv", [&](std::ostream& os) { write_messages(os, r); });
      ptrs.push_back(&r);
    }
    detail::write_file(spec.out / "cumulative_energy.csv", [&](std::ostream& os) { write_cumulative(os, ptrs); });
    if (runs.size() > 1) {
      detail::write_file(spec.out / "comparison.csv",
                         [&](std::ostream& os) { write_comparison(os, runs[0], runs[1]); });
    }

    for (const RunResult& r : runs) out << summary_line(r) << '\n';
    if (runs.size() > 1) {
      const double delta = compare(runs[0], runs[1]).energy_delta;
      out << "delta_j=" << format_number(delta)
          << " delta_pct=" << format_number(runs[0].total_energy == 0.0 ? 0.0 : 100.0 * delta / runs[0].total_energy)
          << '\n';
    }
    return 0;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.code() == ErrorCode::UsageError ? 2 : 1;
  }
}

/// Full entry point used by the gwsus_sim binary.
inline int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  ExperimentSpec spec;
  try {
    spec = parse_args(argc, argv);
  } catch (const HelpRequested& h) {
    out << h.text;
    return 0;
  } catch (const Error& e) {
    err << "usage error: " << e.what() << "\nRun with --help for the list of flags.\n";
    return 2;
  }
  return execute(spec, out, err);
}

}  // namespace gwsus::cli
