#include "netadmin/policy.hpp"

#include <algorithm>

namespace netadmin::policy {

std::string_view to_string(Group g) {
  switch (g) {
    case Group::faculty: return "faculty";
    case Group::staff: return "staff";
    case Group::superuser: return "superuser";
  }
  return "faculty";
}

std::string_view to_string(SourceNetwork n) {
  switch (n) {
    case SourceNetwork::campus: return "campus";
    case SourceNetwork::research_subnet: return "research_subnet";
    case SourceNetwork::vpn: return "vpn";
  }
  return "campus";
}

std::string_view to_string(Reason r) {
  switch (r) {
    case Reason::ok: return "ok";
    case Reason::port_not_allowlisted: return "port_not_allowlisted";
    case Reason::ip_not_owned: return "ip_not_owned";
    case Reason::vpn_denied: return "vpn_denied";
    case Reason::expired_rule: return "expired_rule";
    case Reason::not_rule_owner: return "not_rule_owner";
  }
  return "ok";
}

std::optional<Group> parse_group(std::string_view text) {
  for (auto g : {Group::faculty, Group::staff, Group::superuser}) {
    if (to_string(g) == text) return g;
  }
  return std::nullopt;
}

std::optional<SourceNetwork> parse_source_network(std::string_view text) {
  for (auto n : {SourceNetwork::campus, SourceNetwork::research_subnet, SourceNetwork::vpn}) {
    if (to_string(n) == text) return n;
  }
  return std::nullopt;
}

std::optional<Reason> parse_reason(std::string_view text) {
  for (auto r : {Reason::ok, Reason::port_not_allowlisted, Reason::ip_not_owned, Reason::vpn_denied,
                 Reason::expired_rule, Reason::not_rule_owner}) {
    if (to_string(r) == text) return r;
  }
  return std::nullopt;
}

bool UserIdentity::owns(std::string_view ip) const {
  auto target = Ipv4Cidr::parse(ip);
  if (!target) return false;
  return std::any_of(owned_ips.begin(), owned_ips.end(),
                     [&](const Ipv4Cidr& block) { return block.contains(*target); });
}

PolicyDecision authorize_submission(const UserIdentity& user, const FirewallRule& rule,
                                    const PortAllowlist& allowlist, ProfileMode mode) {
  if (user.is_superuser()) return PolicyDecision::ok();
  if (mode == ProfileMode::hardened && user.source_network == SourceNetwork::vpn) {
    return PolicyDecision::deny(Reason::vpn_denied);
  }
  if (!allowlist.contains(rule.port)) return PolicyDecision::deny(Reason::port_not_allowlisted);
  if (mode == ProfileMode::hardened && !user.owns(rule.ip)) {
    return PolicyDecision::deny(Reason::ip_not_owned);
  }
  return PolicyDecision::ok();
}

PolicyDecision authorize_toggle(const UserIdentity& user, const FirewallRule& rule) {
  if (user.is_superuser() || rule.owner == user.username) return PolicyDecision::ok();
  return PolicyDecision::deny(Reason::not_rule_owner);
}

std::vector<FirewallRule> visible_rules(const UserIdentity& user, const std::vector<FirewallRule>& rules) {
  if (user.is_superuser()) return rules;
  std::vector<FirewallRule> out;
  std::copy_if(rules.begin(), rules.end(), std::back_inserter(out),
               [&](const FirewallRule& r) { return r.owner == user.username; });
  return out;
}

std::vector<FirewallRule> visible_rules(const UserIdentity& user, const store::StoreFile& store) {
  return visible_rules(user, store.rules());
}

}  // namespace netadmin::policy
