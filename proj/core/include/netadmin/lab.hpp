#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "netadmin/config.hpp"
#include "netadmin/ipv4.hpp"
#include "netadmin/profile.hpp"

// Loopback lab orchestration: writes per-component directories and configs,
// spawns the component binaries as separate processes and polls their health.
namespace netadmin::lab {

// Component exit codes understood by the orchestrator.
inline constexpr int kExitConfig = 2;
inline constexpr int kExitPortInUse = 3;

inline constexpr EpochSeconds kSeededEpoch = 1'700'000'000;

struct LabUser {
  std::string name;
  std::string password;
  policy::Group group;
  std::vector<std::string> owned;  // CIDRs
};

// Fixed roster: admin (superuser), alice and carol (faculty), bob (staff),
// mallory (faculty; the compromised account). carol owns campus space
// outside the research subnet.
const std::vector<LabUser>& roster();
const LabUser& user(std::string_view name);

struct LabOptions {
  ProfileMode mode = ProfileMode::vulnerable;
  std::filesystem::path dir;
  std::filesystem::path tools_dir;  // empty: directory of the running binary
  std::optional<std::uint64_t> seed;
  std::string host = "127.0.0.1";
  int base_port = 0;  // 0: pick free ports
  std::chrono::milliseconds health_timeout{15000};
};

struct Component {
  std::string name;
  int pid = -1;
  Endpoint endpoint;               // port 0 for the sealed store
  std::filesystem::path socket;    // sealed store only
  std::vector<std::string> argv;
  std::filesystem::path log;
};

struct Topology {
  ProfileMode mode = ProfileMode::vulnerable;
  std::filesystem::path dir;
  std::optional<std::uint64_t> seed;
  std::vector<Component> components;

  Endpoint gatekeeper;  // monolith or front end: where users connect
  Endpoint firewall;
  Endpoint backend;     // hardened only
  std::filesystem::path gatekeeper_dir;  // monolith or front-end app dir
  std::filesystem::path gatekeeper_config;
  std::filesystem::path sealed_dir;      // hardened only
  std::filesystem::path sealed_socket;   // hardened only
  std::string firewall_key_id;
  Ipv4Cidr research_subnet;

  const Component* find(std::string_view name) const;
  Component* find(std::string_view name);
  std::size_t process_count() const { return components.size(); }

  std::string to_json() const;
  static Topology from_json(std::string_view text);
  void save() const;  // <dir>/topology.json
  static Topology load(const std::filesystem::path& dir);
};

bool is_loopback(std::string_view host);
// Binds port 0 and returns what the kernel chose.
int pick_free_port(const std::string& host);
std::filesystem::path default_tools_dir();

// Throws PortInUse or ComponentUnhealthy (reason = component name). On
// failure every process started so far is stopped again.
Topology up(const LabOptions& options);
// SIGTERM, then SIGKILL after a grace period; removes the sealed socket.
void down(Topology& topology);
// Stops and respawns one component with its original argv.
void restart(Topology& topology, std::string_view name,
             std::chrono::milliseconds timeout = std::chrono::milliseconds(15000));
bool alive(int pid);

}  // namespace netadmin::lab
