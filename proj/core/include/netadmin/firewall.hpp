#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "netadmin/hardening.hpp"
#include "netadmin/ipv4.hpp"
#include "netadmin/profile.hpp"
#include "netadmin/rule.hpp"

// Simulated border firewall. It never forwards traffic; it is the rule-table
// authority that NetAdmin pushes to, authenticating each call by API key.
namespace netadmin::firewall {

enum class Verb { create, modify, remove };

std::string_view to_string(Verb v);  // "create" / "modify" / "delete"
std::optional<Verb> parse_verb(std::string_view text);

class KeyScope {
 public:
  enum class Kind { master, subnet_limited };

  static KeyScope master();
  static KeyScope subnet_limited(Ipv4Cidr subnet,
                                 std::set<Verb> verbs = {Verb::create, Verb::modify, Verb::remove});
  // "master" or "subnet:<cidr>[:verb+verb...]".
  static std::optional<KeyScope> parse(std::string_view text);

  Kind kind() const noexcept { return kind_; }
  const std::optional<Ipv4Cidr>& subnet() const noexcept { return subnet_; }
  const std::set<Verb>& verbs() const noexcept { return verbs_; }

  bool permits(Verb verb, const Ipv4Cidr& target) const;
  std::string to_string() const;

 private:
  Kind kind_ = Kind::master;
  std::optional<Ipv4Cidr> subnet_;
  std::set<Verb> verbs_{Verb::create, Verb::modify, Verb::remove};
};

inline constexpr std::size_t kSecretBytes = 45;  // 360 bits
inline constexpr std::size_t kSecretHexChars = 2 * kSecretBytes;

struct ApiKey {
  std::string key_id;
  std::string secret;  // kSecretBytes raw bytes
  KeyScope scope;

  std::string secret_hex() const { return hardening::to_hex(secret); }
};

struct TableEntry {
  std::uint64_t rule_id = 0;
  std::string ip;
  int port = 0;
  Protocol protocol = Protocol::tcp;
  Action action = Action::allow;

  bool operator==(const TableEntry&) const = default;
};

struct FirewallTable {
  std::vector<TableEntry> entries;  // ordered by rule_id
  std::uint64_t generation = 0;
};

// Record of one accepted apply; generation is the value it produced.
struct ApplyLogEntry {
  std::uint64_t generation = 0;
  std::string key_id;
  Verb verb = Verb::create;
  std::uint64_t rule_id = 0;
  std::string ip;
};

// Fields of one API call. On the wire this is a form body with keys
// key_id, secret_hex, verb, ip, port, protocol, action, rule_id.
struct ApplyRequest {
  std::string key_id;
  std::string secret;  // raw bytes
  Verb verb = Verb::create;
  std::uint64_t rule_id = 0;
  std::string ip;
  int port = 0;
  Protocol protocol = Protocol::tcp;
  Action action = Action::allow;
};

std::string encode_apply_form(const ApplyRequest& req);
// Throws Error{BadRequest} on missing or unparsable fields.
ApplyRequest decode_apply_form(std::string_view body);

// Client-side framing for the hardened channel: the form body inside a
// SignedEnvelope keyed by the API key's own secret.
std::string seal_apply_request(const ApplyRequest& req);

class Firewall {
 public:
  explicit Firewall(ProfileMode mode);

  ProfileMode mode() const noexcept { return mode_; }

  // Fresh secret from the system CSPRNG, stored here and returned once.
  ApiKey register_key(std::string key_id, KeyScope scope);

  // Vulnerable profile: any registered key may do anything. Hardened
  // profile: plain requests are refused with EnvelopeInvalid; use
  // apply_envelope. Returns the new generation.
  std::uint64_t apply_rule(const ApplyRequest& req);

  // Hardened entry point: verifies the envelope under the secret of the key
  // it names, then applies with scope enforcement.
  std::uint64_t apply_envelope(const hardening::SignedEnvelope& env);

  // Dispatches raw wire bytes according to the profile.
  std::uint64_t apply_wire(std::string_view body);

  // Consistent snapshot at a single generation; does not take the apply lock.
  FirewallTable dump_table() const;
  std::vector<ApplyLogEntry> apply_log() const;

 private:
  std::uint64_t apply_checked(const ApplyRequest& req, bool enforce_scope);
  const ApiKey& authenticate(std::string_view key_id, std::string_view secret) const;

  ProfileMode mode_;
  mutable std::mutex apply_mutex_;
  std::map<std::string, ApiKey> keys_;
  std::map<std::uint64_t, TableEntry> entries_;
  std::uint64_t generation_ = 0;
  std::vector<ApplyLogEntry> log_;
  std::shared_ptr<const FirewallTable> snapshot_;
};

}  // namespace netadmin::firewall
