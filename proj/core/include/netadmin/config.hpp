#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "netadmin/hardening.hpp"
#include "netadmin/ipv4.hpp"
#include "netadmin/policy.hpp"
#include "netadmin/profile.hpp"
#include "netadmin/rule.hpp"

namespace netadmin {

struct UserRecord {
  std::string username;
  policy::Group group = policy::Group::faculty;
  std::string password;
  std::vector<Ipv4Cidr> owned_ips;
};

struct Endpoint {
  std::string host = "127.0.0.1";
  int port = 0;

  std::string to_string() const { return host + ":" + std::to_string(port); }
};

// Everything one lab component needs to know, loaded from a line-oriented
// `key = value` file:
//
//   profile = vulnerable | hardened        (LAB_PROFILE overrides)
//   listen = 127.0.0.1:18080
//   backend = 127.0.0.1:18081              hardened front -> back
//   firewall = 127.0.0.1:18090
//   firewall.key_id = netadmin-master
//   firewall.key_file = fw_api.key         vulnerable, relative to appdir
//   sealed.socket = /path/sealed.sock      hardened back end
//   channel.key_id = front-back
//   channel.key_hex = <64 hex>             hardened front/back
//   research_subnet = 10.10.0.0/16
//   allowlist = 22,80,443,53
//   limits.max_owner / limits.max_description / limits.max_record
//   store = rules.db   audit = audit.log   session.ttl = 3600
//   clock.fixed = 1700000000               optional frozen clock
//   user.<name> = <group>,<password>,<cidr>[;cidr...]
struct LabProfile {
  ProfileMode mode = ProfileMode::vulnerable;
  policy::PortAllowlist allowlist;
  hardening::FieldLimits limits;
  Ipv4Cidr research_subnet{0x0A0A0000u, 16};

  Endpoint listen;
  Endpoint backend;
  Endpoint firewall;
  std::string firewall_key_id = "netadmin-master";
  std::filesystem::path key_file = "fw_api.key";
  std::filesystem::path sealed_socket;
  std::string channel_key_id = "front-back";
  std::string channel_key_hex;

  std::filesystem::path appdir = ".";
  std::filesystem::path store_path = "rules.db";
  std::filesystem::path audit_path = "audit.log";
  EpochSeconds session_ttl = 3600;
  std::optional<EpochSeconds> fixed_clock;

  std::map<std::string, UserRecord> users;

  // Relative paths resolve against appdir.
  std::filesystem::path resolve(const std::filesystem::path& p) const;
  const UserRecord* find_user(std::string_view name) const;
};

// Throws Error{Config} naming the offending line.
LabProfile parse_config(std::string_view text, const std::filesystem::path& appdir);
// Reads the file, uses its directory as appdir and applies LAB_PROFILE.
LabProfile load_config(const std::filesystem::path& path);
std::string render_config(const LabProfile& profile);

}  // namespace netadmin
