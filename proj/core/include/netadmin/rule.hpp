#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace netadmin {

using EpochSeconds = std::int64_t;

// One year as the lab counts it (365 days, leap years ignored).
inline constexpr EpochSeconds kRuleLifetime = 31'536'000;

enum class Protocol { tcp, udp };
enum class Action { allow, deny };
enum class RuleStatus { active, inactive };

std::string_view to_string(Protocol p);
std::string_view to_string(Action a);
std::string_view to_string(RuleStatus s);
std::optional<Protocol> parse_protocol(std::string_view text);
std::optional<Action> parse_action(std::string_view text);
std::optional<RuleStatus> parse_status(std::string_view text);

// A single firewall rule as NetAdmin stores it.
//
// `ip` stays textual: the legacy pipeline stores whatever the form carried,
// and only the strict path requires it to parse as an Ipv4Cidr. Likewise
// `description` is opaque bytes.
struct FirewallRule {
  std::uint64_t id = 0;  // 0 = unassigned
  std::string owner;
  std::string ip;
  int port = 0;
  Protocol protocol = Protocol::tcp;
  Action action = Action::allow;
  RuleStatus status = RuleStatus::active;
  EpochSeconds created = 0;
  EpochSeconds expires = 0;
  std::string description;

  bool operator==(const FirewallRule&) const = default;
};

}  // namespace netadmin
