#pragma once

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "netadmin/ipv4.hpp"
#include "netadmin/profile.hpp"
#include "netadmin/recordstore.hpp"
#include "netadmin/rule.hpp"

// Who may create, change or see which rule.
namespace netadmin::policy {

enum class Group { faculty, staff, superuser };
enum class SourceNetwork { campus, research_subnet, vpn };
enum class Reason { ok, port_not_allowlisted, ip_not_owned, vpn_denied, expired_rule, not_rule_owner };

std::string_view to_string(Group g);
std::string_view to_string(SourceNetwork n);
std::string_view to_string(Reason r);
std::optional<Group> parse_group(std::string_view text);
std::optional<SourceNetwork> parse_source_network(std::string_view text);
std::optional<Reason> parse_reason(std::string_view text);

struct UserIdentity {
  std::string username;
  Group group = Group::faculty;
  std::vector<Ipv4Cidr> owned_ips;  // ignored for superusers
  SourceNetwork source_network = SourceNetwork::campus;

  bool is_superuser() const noexcept { return group == Group::superuser; }
  // False for text that does not parse as IPv4/CIDR.
  bool owns(std::string_view ip) const;
};

struct PortAllowlist {
  std::set<int> ports{22, 80, 443, 53};

  bool contains(int port) const { return ports.count(port) != 0; }
};

struct PolicyDecision {
  bool allowed = true;
  Reason reason = Reason::ok;

  static PolicyDecision ok() { return {}; }
  static PolicyDecision deny(Reason r) { return {false, r}; }
  bool operator==(const PolicyDecision&) const = default;
};

// Superusers always pass. Everyone else needs an allowlisted port. The
// hardened profile additionally refuses VPN origins and IPs the user does not
// own; the vulnerable profile trusts the submitted form for the IP.
PolicyDecision authorize_submission(const UserIdentity& user, const FirewallRule& rule,
                                    const PortAllowlist& allowlist, ProfileMode mode);

PolicyDecision authorize_toggle(const UserIdentity& user, const FirewallRule& rule);

std::vector<FirewallRule> visible_rules(const UserIdentity& user, const std::vector<FirewallRule>& rules);
std::vector<FirewallRule> visible_rules(const UserIdentity& user, const store::StoreFile& store);

}  // namespace netadmin::policy
