#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "netadmin/firewall.hpp"
#include "netadmin/gatekeeper.hpp"
#include "netadmin/http.hpp"
#include "netadmin/lab.hpp"

namespace netadmin::redteam {

enum class Attack { record_overflow, stored_injection, form_tamper, key_exfil };

inline constexpr Attack kAllAttacks[] = {Attack::record_overflow, Attack::stored_injection, Attack::form_tamper,
                                         Attack::key_exfil};

std::string_view to_string(Attack a);
// Accepts the report names and the CLI short names (overflow, injection,
// tamper, keyexfil).
std::optional<Attack> parse_attack(std::string_view text);

// One observation. Kinds with a live re-check:
//   firewall_entry   {ip, port[, rule_id]}  entry present in the table
//   store_record     {ip, class}            legacy re-parse of the store has it
//   page_contains    {viewer, needle}       viewer's /rules page has the bytes
//   key_file         {path, fingerprint}    key token still at that path
// Anything else (rejected, scan, ...) is informational.
struct Fact {
  std::string kind;
  std::map<std::string, std::string> data;
};

struct AttackReport {
  Attack attack = Attack::record_overflow;
  ProfileMode profile = ProfileMode::vulnerable;
  bool succeeded = false;
  std::vector<Fact> evidence;
  std::optional<bool> rechecked;  // set by recheck_evidence

  std::string to_json() const;
  static AttackReport from_json(std::string_view text);
};

std::string reports_to_json(const std::vector<AttackReport>& reports);

struct Credentials {
  std::string username;
  std::string password;
};
Credentials credentials_for(std::string_view lab_user);

// Speaks the gatekeeper's user-facing HTTP API. In the hardened profile
// requests are signed with the per-session channel key from /login.
class GatekeeperClient {
 public:
  GatekeeperClient(Endpoint endpoint, ProfileMode mode);

  void login(const Credentials& creds);
  std::uint64_t submit(const gatekeeper::RuleSubmission& sub,
                       policy::SourceNetwork source = policy::SourceNetwork::campus);
  std::string rules_html();
  std::string rules_txt();
  std::string toggle(std::uint64_t id, std::string_view status,
                     policy::SourceNetwork source = policy::SourceNetwork::campus);

  const std::string& token() const noexcept { return token_; }

 private:
  std::string seal(const std::string& form) const;
  std::map<std::string, std::string> headers(policy::SourceNetwork source) const;

  http::Client client_;
  ProfileMode mode_;
  std::string token_;
  std::string channel_key_;
};

firewall::FirewallTable fetch_table(const Endpoint& firewall);

// --- overflow payload -------------------------------------------------------

struct OverflowPayload {
  std::string description;
  std::size_t prefix_length = 0;   // bytes before the description
  std::size_t padding_length = 0;  // filler so prefix + padding = window
  std::string embedded;            // the smuggled record, unterminated
};

// `carrier` is the record the server will write (its description is
// ignored); `embedded` is the record to smuggle in after the window cut.
OverflowPayload build_overflow(const FirewallRule& carrier, const FirewallRule& embedded);

// --- key scan ---------------------------------------------------------------

struct KeyToken {
  std::filesystem::path path;
  std::size_t offset = 0;
  std::string token;
};

// Maximal runs of exactly `length` hex digits in every regular file below
// `root` (or `root` itself when it is a file).
std::vector<KeyToken> scan_for_keys(const std::filesystem::path& root,
                                    std::size_t length = firewall::kSecretHexChars);

// --- attacks ----------------------------------------------------------------

inline constexpr const char* kVictimIp = "130.85.0.5";

AttackReport attack_record_overflow(lab::Topology& lab, const Credentials& attacker);
AttackReport attack_stored_injection(lab::Topology& lab, const Credentials& attacker, const Credentials& viewer);
AttackReport attack_form_tamper(lab::Topology& lab, const Credentials& victim);
AttackReport attack_key_exfil(lab::Topology& lab);

AttackReport run_attack(lab::Topology& lab, Attack attack);

// Re-verifies every re-checkable fact against the live lab.
bool recheck_evidence(const AttackReport& report, const lab::Topology& lab);

// Brings a lab up, runs `attacks` in order, re-checks evidence and tears
// the lab down again.
std::vector<AttackReport> run_suite(const lab::LabOptions& options, const std::vector<Attack>& attacks);

// --- containment workload ---------------------------------------------------

struct WorkloadResult {
  std::size_t submitted = 0;
  std::size_t accepted = 0;
  std::map<std::string, std::size_t> rejected;  // error kind -> count
  std::size_t tampered = 0;                     // requests rewritten by the proxy
  firewall::FirewallTable table;
  std::size_t out_of_subnet = 0;
};

// Random mixed submissions from the whole roster. With `via_proxy` every
// other submission goes through a tamper proxy that moves the ip field
// outside the research subnet.
WorkloadResult run_workload(lab::Topology& lab, std::uint64_t seed, std::size_t submissions, bool via_proxy);

}  // namespace netadmin::redteam
