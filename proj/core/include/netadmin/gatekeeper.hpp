#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "netadmin/config.hpp"
#include "netadmin/firewall.hpp"
#include "netadmin/hardening.hpp"
#include "netadmin/policy.hpp"
#include "netadmin/recordstore.hpp"

// The NetAdmin service: sessions, form handling, policy, rendering and the
// push to the firewall. The vulnerable profile runs it as one monolith that
// reads the firewall key from its own directory. The hardened profile splits
// it into a front end (users, validation, store) and a back end (revalidation
// and the only holder of a subnet-scoped firewall key).
namespace netadmin::gatekeeper {

using Clock = std::function<EpochSeconds()>;
Clock system_clock();
Clock clock_for(const LabProfile& profile);

struct SessionToken {
  std::string token;  // 32 random bytes, hex
  std::string username;
  EpochSeconds issued = 0;
  EpochSeconds ttl = 0;
  std::string channel_key;  // raw; request-signing key (hardened only)

  bool expired(EpochSeconds now) const noexcept { return issued + ttl < now; }
};

class SessionTable {
 public:
  SessionToken issue(const std::string& username, EpochSeconds now, EpochSeconds ttl, bool with_channel_key);
  // Throws AuthRequired for unknown or expired tokens.
  SessionToken lookup(std::string_view token, EpochSeconds now) const;

 private:
  mutable std::mutex mutex_;
  std::map<std::string, SessionToken, std::less<>> sessions_;
};

// Form fields exactly as received; nothing is typed at ingress.
struct RuleSubmission {
  std::string ip;
  std::string port;
  std::string protocol;
  std::string action;
  std::string description;
  std::string expires;

  static RuleSubmission from_form(std::string_view body);
  std::string to_form() const;
};

enum class ToggleAction { activate, deactivate, renew };
std::string_view to_string(ToggleAction a);
std::optional<ToggleAction> parse_toggle_action(std::string_view text);

// --- links between components ---------------------------------------------

class FirewallLink {
 public:
  virtual ~FirewallLink() = default;
  // Returns the firewall generation after the apply.
  virtual std::uint64_t apply(const firewall::ApplyRequest& req) = 0;
};

// Sends plain forms (vulnerable) or signed envelopes (hardened) over HTTP.
std::unique_ptr<FirewallLink> http_firewall_link(const Endpoint& endpoint, ProfileMode mode);
// Calls an in-process Firewall through the same wire encoding.
std::unique_ptr<FirewallLink> local_firewall_link(firewall::Firewall& fw);

// Typed request from front end to back end.
struct BackendRequest {
  std::string actor;
  policy::SourceNetwork source = policy::SourceNetwork::campus;
  firewall::Verb verb = firewall::Verb::create;
  FirewallRule rule;

  std::string to_form() const;
  // Throws BadRequest.
  static BackendRequest from_form(std::string_view body);
};

class BackendLink {
 public:
  virtual ~BackendLink() = default;
  virtual std::uint64_t forward(const BackendRequest& req) = 0;
};

class KeySource {
 public:
  virtual ~KeySource() = default;
  // Raw secret of the firewall key this component pushes with.
  virtual std::string secret() = 0;
};

// Reads `<appdir>/fw_api.key` on every push, as the original did.
std::unique_ptr<KeySource> file_key_source(std::filesystem::path path);
std::unique_ptr<KeySource> sealed_key_source(std::filesystem::path socket, std::string key_id);
std::unique_ptr<KeySource> fixed_key_source(std::string secret);

// --- front end / monolith ---------------------------------------------------

struct ListResult {
  std::vector<FirewallRule> rules;
  std::string html;
  std::string listing;  // store-native records, one per line
};

struct LoginResult {
  std::string token;
  std::string channel_key_hex;  // empty in the vulnerable profile
};

class Gatekeeper {
 public:
  // Vulnerable monolith: pushes straight to the firewall with `key`.
  Gatekeeper(LabProfile profile, Clock clock, std::unique_ptr<FirewallLink> firewall,
             std::unique_ptr<KeySource> key);
  // Hardened front end: forwards typed requests to the back end; holds no
  // firewall key material.
  Gatekeeper(LabProfile profile, Clock clock, std::unique_ptr<BackendLink> backend);

  const LabProfile& profile() const noexcept { return profile_; }
  ProfileMode mode() const noexcept { return profile_.mode; }
  store::StoreFile& store() noexcept { return store_; }
  const store::AuditLog& audit() const noexcept { return audit_; }

  LoginResult login(std::string_view username, std::string_view password);
  SessionToken authenticate(std::string_view token) const;

  // Hardened: `wire` must be a SignedEnvelope keyed by the session's channel
  // key, naming the session token as key_id; returns its body. Vulnerable:
  // returns `wire` unchanged.
  std::string open_request(std::string_view token, std::string_view wire) const;

  std::uint64_t handle_submit(std::string_view token, const RuleSubmission& submission,
                              policy::SourceNetwork source = policy::SourceNetwork::campus);
  ListResult handle_list(std::string_view token);
  RuleStatus handle_toggle(std::string_view token, std::uint64_t rule_id, ToggleAction action,
                           policy::SourceNetwork source = policy::SourceNetwork::campus);

  // Pushes every active stored rule to the firewall, as on a service
  // restart. Returns the number of pushes that succeeded.
  std::size_t sync_from_store();

  policy::UserIdentity identity(const std::string& username, policy::SourceNetwork source) const;

 private:
  FirewallRule legacy_rule(const SessionToken& session, const RuleSubmission& s, EpochSeconds now) const;
  std::uint64_t push(const std::string& actor, policy::SourceNetwork source, firewall::Verb verb,
                     const FirewallRule& rule);
  std::string render_html(const policy::UserIdentity& user, const std::vector<FirewallRule>& rules) const;

  LabProfile profile_;
  Clock clock_;
  store::StoreFile store_;
  store::AuditLog audit_;
  SessionTable sessions_;
  std::unique_ptr<FirewallLink> firewall_;
  std::unique_ptr<KeySource> key_;
  std::unique_ptr<BackendLink> backend_;
  std::mutex push_mutex_;
};

// --- hardened back end --------------------------------------------------------

class Backend {
 public:
  Backend(LabProfile profile, std::unique_ptr<KeySource> key, std::unique_ptr<FirewallLink> firewall);

  // Verifies the envelope under the front/back channel key, revalidates the
  // request independently of the front end and pushes it with the scoped
  // key. Throws EnvelopeInvalid, PolicyDenied, ValidationFailed or the
  // firewall's error.
  std::uint64_t apply(const hardening::SignedEnvelope& env);
  std::uint64_t apply_wire(std::string_view wire);

 private:
  LabProfile profile_;
  std::string channel_key_;
  std::unique_ptr<KeySource> key_;
  std::unique_ptr<FirewallLink> firewall_;
  std::mutex mutex_;
};

// Signs with the channel key from `profile`.
std::unique_ptr<BackendLink> http_backend_link(const LabProfile& profile);
std::unique_ptr<BackendLink> local_backend_link(Backend& backend, const LabProfile& profile);

// Rejects-not-rewrites every submitted field under the hardened rules.
// Throws ValidationFailed with the underlying kind as cause.
FirewallRule validate_submission(const RuleSubmission& s, const std::string& owner, EpochSeconds now,
                                 const hardening::FieldLimits& limits);

}  // namespace netadmin::gatekeeper
