#include "netadmin/rule.hpp"

namespace netadmin {

std::string_view to_string(Protocol p) { return p == Protocol::tcp ? "tcp" : "udp"; }
std::string_view to_string(Action a) { return a == Action::allow ? "allow" : "deny"; }
std::string_view to_string(RuleStatus s) {
  return s == RuleStatus::active ? "active" : "inactive";
}

std::optional<Protocol> parse_protocol(std::string_view text) {
  if (text == "tcp") return Protocol::tcp;
  if (text == "udp") return Protocol::udp;
  return std::nullopt;
}

std::optional<Action> parse_action(std::string_view text) {
  if (text == "allow") return Action::allow;
  if (text == "deny") return Action::deny;
  return std::nullopt;
}

std::optional<RuleStatus> parse_status(std::string_view text) {
  if (text == "active") return RuleStatus::active;
  if (text == "inactive") return RuleStatus::inactive;
  return std::nullopt;
}

}  // namespace netadmin
