#include "netadmin/firewall.hpp"

#include <atomic>
#include <charconv>

#include "netadmin/error.hpp"
#include "netadmin/form.hpp"

namespace netadmin::firewall {

std::string_view to_string(Verb v) {
  switch (v) {
    case Verb::create: return "create";
    case Verb::modify: return "modify";
    case Verb::remove: return "delete";
  }
  return "create";
}

std::optional<Verb> parse_verb(std::string_view text) {
  if (text == "create") return Verb::create;
  if (text == "modify") return Verb::modify;
  if (text == "delete") return Verb::remove;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// KeyScope

KeyScope KeyScope::master() { return KeyScope{}; }

KeyScope KeyScope::subnet_limited(Ipv4Cidr subnet, std::set<Verb> verbs) {
  KeyScope s;
  s.kind_ = Kind::subnet_limited;
  s.subnet_ = subnet;
  s.verbs_ = std::move(verbs);
  return s;
}

std::optional<KeyScope> KeyScope::parse(std::string_view text) {
  if (text == "master") return master();
  constexpr std::string_view kPrefix = "subnet:";
  if (text.substr(0, kPrefix.size()) != kPrefix) return std::nullopt;
  text.remove_prefix(kPrefix.size());
  auto colon = text.find(':');
  auto cidr = Ipv4Cidr::parse(text.substr(0, colon));
  if (!cidr) return std::nullopt;
  if (colon == std::string_view::npos) return subnet_limited(*cidr);
  std::set<Verb> verbs;
  auto list = text.substr(colon + 1);
  while (!list.empty()) {
    auto plus = list.find('+');
    auto verb = parse_verb(list.substr(0, plus));
    if (!verb) return std::nullopt;
    verbs.insert(*verb);
    list = plus == std::string_view::npos ? std::string_view{} : list.substr(plus + 1);
  }
  if (verbs.empty()) return std::nullopt;
  return subnet_limited(*cidr, std::move(verbs));
}

bool KeyScope::permits(Verb verb, const Ipv4Cidr& target) const {
  if (kind_ == Kind::master) return true;
  return verbs_.count(verb) && subnet_ && subnet_->contains(target);
}

std::string KeyScope::to_string() const {
  if (kind_ == Kind::master) return "master";
  std::string out = "subnet:" + subnet_->to_string() + ":";
  bool first = true;
  for (auto v : verbs_) {
    if (!first) out += '+';
    out += firewall::to_string(v);
    first = false;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Wire form

std::string encode_apply_form(const ApplyRequest& req) {
  return form::encode({
      {"key_id", req.key_id},
      {"secret_hex", hardening::to_hex(req.secret)},
      {"verb", std::string(to_string(req.verb))},
      {"ip", req.ip},
      {"port", std::to_string(req.port)},
      {"protocol", std::string(netadmin::to_string(req.protocol))},
      {"action", std::string(netadmin::to_string(req.action))},
      {"rule_id", std::to_string(req.rule_id)},
  });
}

namespace {

template <typename T>
std::optional<T> parse_number(std::string_view text) {
  T value{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size()) return std::nullopt;
  return value;
}

Error bad_request(const std::string& what) { return Error(ErrorKind::BadRequest, what); }

}  // namespace

ApplyRequest decode_apply_form(std::string_view body) {
  auto fields = form::decode(body);
  auto get = [&](const char* name) -> const std::string& {
    auto it = fields.find(name);
    if (it == fields.end()) throw bad_request(std::string("missing field ") + name);
    return it->second;
  };
  ApplyRequest req;
  req.key_id = get("key_id");
  auto secret = hardening::from_hex(get("secret_hex"));
  if (!secret) throw bad_request("secret_hex is not hex");
  req.secret = std::move(*secret);
  auto verb = parse_verb(get("verb"));
  if (!verb) throw bad_request("unknown verb");
  req.verb = *verb;
  req.ip = get("ip");
  auto port = parse_number<int>(get("port"));
  if (!port) throw bad_request("port is not a number");
  req.port = *port;
  auto protocol = parse_protocol(get("protocol"));
  if (!protocol) throw bad_request("unknown protocol");
  req.protocol = *protocol;
  auto action = parse_action(get("action"));
  if (!action) throw bad_request("unknown action");
  req.action = *action;
  auto rule_id = parse_number<std::uint64_t>(get("rule_id"));
  if (!rule_id) throw bad_request("rule_id is not a number");
  req.rule_id = *rule_id;
  return req;
}

std::string seal_apply_request(const ApplyRequest& req) {
  return hardening::encode_envelope(
      hardening::sign_envelope(encode_apply_form(req), req.key_id, req.secret));
}

// ---------------------------------------------------------------------------
// Firewall

Firewall::Firewall(ProfileMode mode)
    : mode_(mode), snapshot_(std::make_shared<const FirewallTable>()) {}

ApiKey Firewall::register_key(std::string key_id, KeyScope scope) {
  ApiKey key{std::move(key_id), hardening::random_bytes(kSecretBytes), std::move(scope)};
  std::lock_guard lock(apply_mutex_);
  keys_[key.key_id] = key;
  return key;
}

const ApiKey& Firewall::authenticate(std::string_view key_id, std::string_view secret) const {
  auto it = keys_.find(std::string(key_id));
  // Compare against a dummy of the right length for unknown ids so both
  // failure paths do the same work.
  static const std::string kDummy(kSecretBytes, '\0');
  const std::string& expected = it == keys_.end() ? kDummy : it->second.secret;
  const bool match = hardening::constant_time_equal(expected, secret);
  if (it == keys_.end() || !match) {
    throw Error(ErrorKind::BadKey, "API key rejected");
  }
  return it->second;
}

std::uint64_t Firewall::apply_rule(const ApplyRequest& req) {
  if (mode_ == ProfileMode::hardened) {
    throw Error(ErrorKind::EnvelopeInvalid, "hardened firewall accepts signed envelopes only");
  }
  return apply_checked(req, false);
}

std::uint64_t Firewall::apply_envelope(const hardening::SignedEnvelope& env) {
  std::string secret;
  {
    std::lock_guard lock(apply_mutex_);
    auto it = keys_.find(env.key_id);
    if (it == keys_.end()) throw Error(ErrorKind::EnvelopeInvalid, "envelope names an unknown key");
    secret = it->second.secret;
  }
  if (!hardening::verify_envelope(env, secret)) {
    throw Error(ErrorKind::EnvelopeInvalid, "envelope tag does not verify");
  }
  auto req = decode_apply_form(env.body);
  if (req.key_id != env.key_id) {
    throw Error(ErrorKind::EnvelopeInvalid, "envelope key differs from request key");
  }
  return apply_checked(req, mode_ == ProfileMode::hardened);
}

std::uint64_t Firewall::apply_wire(std::string_view body) {
  if (mode_ == ProfileMode::vulnerable) return apply_rule(decode_apply_form(body));
  auto env = hardening::decode_envelope(body);
  if (!env) throw Error(ErrorKind::EnvelopeInvalid, "body is not a signed envelope");
  return apply_envelope(*env);
}

std::uint64_t Firewall::apply_checked(const ApplyRequest& req, bool enforce_scope) {
  std::lock_guard lock(apply_mutex_);
  const ApiKey& key = authenticate(req.key_id, req.secret);

  auto target = Ipv4Cidr::parse(req.ip);
  if (!target) throw Error(ErrorKind::BadRequest, "ip is not IPv4: " + req.ip);
  if (req.port < 1 || req.port > 65535) throw Error(ErrorKind::BadRequest, "port out of range");

  auto existing = entries_.find(req.rule_id);
  if (req.verb != Verb::create && existing == entries_.end()) {
    throw Error(ErrorKind::UnknownEntry, "no table entry for rule " + std::to_string(req.rule_id));
  }
  if (enforce_scope) {
    if (!key.scope.permits(req.verb, *target)) {
      throw Error(ErrorKind::ScopeViolation,
                  std::string(to_string(req.verb)) + " on " + req.ip + " outside key scope " +
                      key.scope.to_string());
    }
    // The entry being replaced or removed must be in scope too.
    if (existing != entries_.end()) {
      auto old_ip = Ipv4Cidr::parse(existing->second.ip);
      if (!old_ip || !key.scope.permits(req.verb, *old_ip)) {
        throw Error(ErrorKind::ScopeViolation,
                    "existing entry " + existing->second.ip + " outside key scope");
      }
    }
  }

  if (req.verb == Verb::remove) {
    entries_.erase(existing);
  } else {
    entries_[req.rule_id] = TableEntry{req.rule_id, req.ip, req.port, req.protocol, req.action};
  }
  ++generation_;
  log_.push_back(ApplyLogEntry{generation_, req.key_id, req.verb, req.rule_id, req.ip});

  auto snap = std::make_shared<FirewallTable>();
  snap->generation = generation_;
  snap->entries.reserve(entries_.size());
  for (const auto& [id, entry] : entries_) snap->entries.push_back(entry);
  std::atomic_store(&snapshot_, std::shared_ptr<const FirewallTable>(std::move(snap)));
  return generation_;
}

FirewallTable Firewall::dump_table() const { return *std::atomic_load(&snapshot_); }

std::vector<ApplyLogEntry> Firewall::apply_log() const {
  std::lock_guard lock(apply_mutex_);
  return log_;
}

}  // namespace netadmin::firewall
