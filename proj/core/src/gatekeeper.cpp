#include "netadmin/gatekeeper.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <iostream>
#include <sstream>

#include "netadmin/error.hpp"
#include "netadmin/form.hpp"
#include "netadmin/keystore.hpp"

namespace netadmin::gatekeeper {

namespace {

template <typename T>
std::optional<T> canonical_number(std::string_view text) {
  if (text.empty() || (text.size() > 1 && text.front() == '0')) return std::nullopt;
  T value{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) return std::nullopt;
  return value;
}

template <typename T>
T leading_number(std::string_view text) {
  T value{};
  std::from_chars(text.data(), text.data() + text.size(), value);
  return value;
}

Error validation_failed(const Error& inner) {
  Error e(ErrorKind::ValidationFailed, std::string(to_string(inner.kind())) + ": " + inner.what());
  e.with_cause(inner.kind());
  if (inner.offset()) e.at_offset(*inner.offset());
  if (!inner.field().empty()) e.in_field(inner.field());
  if (!inner.reason().empty()) e.with_reason(inner.reason());
  return e;
}

Error validation_failed(const char* field, const std::string& why) {
  return validation_failed(
      std::move(Error(ErrorKind::FieldValidation, std::string(field) + ": " + why).in_field(field)));
}

Error policy_denied(policy::Reason reason) {
  return std::move(Error(ErrorKind::PolicyDenied, "policy denied: " + std::string(policy::to_string(reason)))
                       .with_reason(std::string(policy::to_string(reason))));
}

}  // namespace

Clock system_clock() {
  return [] {
    return std::chrono::duration_cast<std::chrono::seconds>(
               std::chrono::system_clock::now().time_since_epoch())
        .count();
  };
}

Clock clock_for(const LabProfile& profile) {
  if (profile.fixed_clock) {
    const auto t = *profile.fixed_clock;
    return [t] { return t; };
  }
  return system_clock();
}

// ---------------------------------------------------------------------------
// Sessions

SessionToken SessionTable::issue(const std::string& username, EpochSeconds now, EpochSeconds ttl,
                                 bool with_channel_key) {
  SessionToken s;
  s.token = hardening::to_hex(hardening::random_bytes(32));
  s.username = username;
  s.issued = now;
  s.ttl = ttl;
  if (with_channel_key) s.channel_key = hardening::random_bytes(32);
  std::lock_guard lock(mutex_);
  sessions_[s.token] = s;
  return s;
}

SessionToken SessionTable::lookup(std::string_view token, EpochSeconds now) const {
  std::lock_guard lock(mutex_);
  auto it = sessions_.find(token);
  if (it == sessions_.end()) throw Error(ErrorKind::AuthRequired, "unknown session");
  if (it->second.expired(now)) throw Error(ErrorKind::AuthRequired, "session expired");
  return it->second;
}

// ---------------------------------------------------------------------------
// Wire shapes

RuleSubmission RuleSubmission::from_form(std::string_view body) {
  auto f = form::decode(body);
  RuleSubmission s;
  s.ip = f["ip"];
  s.port = f["port"];
  s.protocol = f["protocol"];
  s.action = f["action"];
  s.description = f["description"];
  s.expires = f["expires"];
  return s;
}

std::string RuleSubmission::to_form() const {
  return form::encode({{"ip", ip},
                       {"port", port},
                       {"protocol", protocol},
                       {"action", action},
                       {"description", description},
                       {"expires", expires}});
}

std::string_view to_string(ToggleAction a) {
  switch (a) {
    case ToggleAction::activate: return "active";
    case ToggleAction::deactivate: return "inactive";
    case ToggleAction::renew: return "renew";
  }
  return "active";
}

std::optional<ToggleAction> parse_toggle_action(std::string_view text) {
  if (text == "active" || text == "activate") return ToggleAction::activate;
  if (text == "inactive" || text == "deactivate") return ToggleAction::deactivate;
  if (text == "renew") return ToggleAction::renew;
  return std::nullopt;
}

std::string BackendRequest::to_form() const {
  return form::encode({
      {"actor", actor},
      {"source", std::string(policy::to_string(source))},
      {"verb", std::string(firewall::to_string(verb))},
      {"id", std::to_string(rule.id)},
      {"owner", rule.owner},
      {"ip", rule.ip},
      {"port", std::to_string(rule.port)},
      {"protocol", std::string(netadmin::to_string(rule.protocol))},
      {"action", std::string(netadmin::to_string(rule.action))},
      {"status", std::string(netadmin::to_string(rule.status))},
      {"created", std::to_string(rule.created)},
      {"expires", std::to_string(rule.expires)},
      {"description", rule.description},
  });
}

BackendRequest BackendRequest::from_form(std::string_view body) {
  auto f = form::decode(body);
  auto need = [&](const char* key) -> const std::string& {
    auto it = f.find(key);
    if (it == f.end()) throw Error(ErrorKind::BadRequest, std::string("missing ") + key);
    return it->second;
  };
  BackendRequest r;
  r.actor = need("actor");
  auto source = policy::parse_source_network(need("source"));
  auto verb = firewall::parse_verb(need("verb"));
  auto protocol = parse_protocol(need("protocol"));
  auto action = parse_action(need("action"));
  auto status = parse_status(need("status"));
  if (!source || !verb || !protocol || !action || !status) {
    throw Error(ErrorKind::BadRequest, "malformed back-end request");
  }
  r.source = *source;
  r.verb = *verb;
  r.rule.id = leading_number<std::uint64_t>(need("id"));
  r.rule.owner = need("owner");
  r.rule.ip = need("ip");
  r.rule.port = leading_number<int>(need("port"));
  r.rule.protocol = *protocol;
  r.rule.action = *action;
  r.rule.status = *status;
  r.rule.created = leading_number<EpochSeconds>(need("created"));
  r.rule.expires = leading_number<EpochSeconds>(need("expires"));
  r.rule.description = need("description");
  return r;
}

// ---------------------------------------------------------------------------
// Key sources

namespace {

class FileKeySource final : public KeySource {
 public:
  explicit FileKeySource(std::filesystem::path path) : path_(std::move(path)) {}
  std::string secret() override {
    auto key = keystore::read_key_file(path_);
    if (!key) throw Error(ErrorKind::BadKey, "cannot read firewall key " + path_.string());
    return *key;
  }

 private:
  std::filesystem::path path_;
};

class SealedKeySource final : public KeySource {
 public:
  SealedKeySource(std::filesystem::path socket, std::string key_id)
      : client_(std::move(socket)), key_id_(std::move(key_id)) {}
  std::string secret() override {
    std::lock_guard lock(mutex_);
    if (cached_.empty()) cached_ = client_.fetch(key_id_);
    return cached_;
  }

 private:
  keystore::SealedStoreClient client_;
  std::string key_id_;
  std::mutex mutex_;
  std::string cached_;
};

class FixedKeySource final : public KeySource {
 public:
  explicit FixedKeySource(std::string secret) : secret_(std::move(secret)) {}
  std::string secret() override { return secret_; }

 private:
  std::string secret_;
};

}  // namespace

std::unique_ptr<KeySource> file_key_source(std::filesystem::path path) {
  return std::make_unique<FileKeySource>(std::move(path));
}
std::unique_ptr<KeySource> sealed_key_source(std::filesystem::path socket, std::string key_id) {
  return std::make_unique<SealedKeySource>(std::move(socket), std::move(key_id));
}
std::unique_ptr<KeySource> fixed_key_source(std::string secret) {
  return std::make_unique<FixedKeySource>(std::move(secret));
}

// ---------------------------------------------------------------------------
// Validation

FirewallRule validate_submission(const RuleSubmission& s, const std::string& owner, EpochSeconds now,
                                 const hardening::FieldLimits& limits) {
  FirewallRule rule;
  rule.owner = owner;
  rule.created = now;
  try {
    rule.description = hardening::sanitize_description(s.description, limits);
  } catch (const Error& e) {
    throw validation_failed(e);
  }
  if (owner.size() > limits.max_owner) {
    throw validation_failed(std::move(
        Error(ErrorKind::FieldTooLong, "owner too long").in_field("owner").at_offset(limits.max_owner)));
  }
  if (!Ipv4Cidr::parse(s.ip)) throw validation_failed("ip", "not an IPv4 address or CIDR");
  rule.ip = s.ip;
  auto port = canonical_number<int>(s.port);
  if (!port || *port < 1 || *port > 65535) throw validation_failed("port", "not in 1-65535");
  rule.port = *port;
  if (!s.protocol.empty()) {
    auto p = parse_protocol(s.protocol);
    if (!p) throw validation_failed("protocol", "not tcp or udp");
    rule.protocol = *p;
  }
  if (!s.action.empty()) {
    auto a = parse_action(s.action);
    if (!a) throw validation_failed("action", "not allow or deny");
    rule.action = *a;
  }
  if (s.expires.empty()) {
    rule.expires = now + kRuleLifetime;
  } else {
    auto e = canonical_number<EpochSeconds>(s.expires);
    if (!e || *e <= now || *e > now + kRuleLifetime) {
      throw validation_failed("expires", "must be within one year from now");
    }
    rule.expires = *e;
  }
  rule.status = RuleStatus::active;
  return rule;
}

// ---------------------------------------------------------------------------
// Gatekeeper

Gatekeeper::Gatekeeper(LabProfile profile, Clock clock, std::unique_ptr<FirewallLink> firewall,
                       std::unique_ptr<KeySource> key)
    : profile_(std::move(profile)),
      clock_(std::move(clock)),
      store_(profile_.resolve(profile_.store_path),
             profile_.mode == ProfileMode::vulnerable ? store::SerializeMode::legacy
                                                      : store::SerializeMode::strict,
             profile_.limits),
      audit_(profile_.resolve(profile_.audit_path)),
      firewall_(std::move(firewall)),
      key_(std::move(key)) {}

Gatekeeper::Gatekeeper(LabProfile profile, Clock clock, std::unique_ptr<BackendLink> backend)
    : profile_(std::move(profile)),
      clock_(std::move(clock)),
      store_(profile_.resolve(profile_.store_path),
             profile_.mode == ProfileMode::vulnerable ? store::SerializeMode::legacy
                                                      : store::SerializeMode::strict,
             profile_.limits),
      audit_(profile_.resolve(profile_.audit_path)),
      backend_(std::move(backend)) {}

LoginResult Gatekeeper::login(std::string_view username, std::string_view password) {
  const auto* user = profile_.find_user(username);
  if (!user || !hardening::constant_time_equal(user->password, password)) {
    throw Error(ErrorKind::BadCredentials, "bad credentials");
  }
  const bool hardened = mode() == ProfileMode::hardened;
  auto s = sessions_.issue(user->username, clock_(), profile_.session_ttl, hardened);
  return LoginResult{s.token, hardened ? hardening::to_hex(s.channel_key) : std::string{}};
}

SessionToken Gatekeeper::authenticate(std::string_view token) const {
  return sessions_.lookup(token, clock_());
}

std::string Gatekeeper::open_request(std::string_view token, std::string_view wire) const {
  if (mode() == ProfileMode::vulnerable) return std::string(wire);
  auto session = authenticate(token);
  auto env = hardening::decode_envelope(wire);
  if (!env) throw Error(ErrorKind::EnvelopeInvalid, "request is not a signed envelope");
  if (!hardening::constant_time_equal(env->key_id, session.token) ||
      !hardening::verify_envelope(*env, session.channel_key)) {
    throw Error(ErrorKind::EnvelopeInvalid, "request envelope does not verify");
  }
  return env->body;
}

policy::UserIdentity Gatekeeper::identity(const std::string& username, policy::SourceNetwork source) const {
  const auto* user = profile_.find_user(username);
  if (!user) throw Error(ErrorKind::AuthRequired, "unknown user " + username);
  return policy::UserIdentity{user->username, user->group, user->owned_ips, source};
}

FirewallRule Gatekeeper::legacy_rule(const SessionToken& session, const RuleSubmission& s,
                                     EpochSeconds now) const {
  FirewallRule rule;
  rule.owner = session.username;
  rule.ip = s.ip;
  rule.port = leading_number<int>(s.port);
  rule.protocol = parse_protocol(s.protocol).value_or(Protocol::tcp);
  rule.action = parse_action(s.action).value_or(Action::allow);
  rule.status = RuleStatus::active;
  rule.created = now;
  rule.expires = s.expires.empty() ? now + kRuleLifetime : leading_number<EpochSeconds>(s.expires);
  rule.description = s.description;
  return rule;
}

std::uint64_t Gatekeeper::push(const std::string& actor, policy::SourceNetwork source, firewall::Verb verb,
                               const FirewallRule& rule) {
  std::lock_guard lock(push_mutex_);
  if (backend_) return backend_->forward(BackendRequest{actor, source, verb, rule});
  firewall::ApplyRequest req;
  req.key_id = profile_.firewall_key_id;
  req.secret = key_->secret();
  req.verb = verb;
  req.rule_id = rule.id;
  req.ip = rule.ip;
  req.port = rule.port;
  req.protocol = rule.protocol;
  req.action = rule.action;
  return firewall_->apply(req);
}

std::uint64_t Gatekeeper::handle_submit(std::string_view token, const RuleSubmission& submission,
                                        policy::SourceNetwork source) {
  const auto session = authenticate(token);
  const auto now = clock_();

  if (mode() == ProfileMode::vulnerable) {
    // The form is trusted: the allowlist lived in the browser-side form only.
    FirewallRule rule = legacy_rule(session, submission, now);
    auto lock = store_.lock_exclusive();
    rule = store_.append_rule_locked(std::move(rule));
    audit_.append({now, session.username, "create", rule.id});
    try {
      push(session.username, source, firewall::Verb::create, rule);
    } catch (const Error& e) {
      std::cerr << "netadmin: push of rule " << rule.id << " failed: " << e.what() << '\n';
    }
    return rule.id;
  }

  const auto user = identity(session.username, source);
  FirewallRule rule = validate_submission(submission, session.username, now, profile_.limits);
  auto decision = policy::authorize_submission(user, rule, profile_.allowlist, mode());
  if (!decision.allowed) throw policy_denied(decision.reason);

  auto lock = store_.lock_exclusive();
  rule.id = store_.next_id_locked();
  try {
    store::serialize_rule(rule, store::SerializeMode::strict, profile_.limits);
  } catch (const Error& e) {
    throw validation_failed(e);
  }
  push(session.username, source, firewall::Verb::create, rule);
  rule = store_.append_rule_locked(std::move(rule));
  audit_.append({now, session.username, "create", rule.id});
  return rule.id;
}

std::string Gatekeeper::render_html(const policy::UserIdentity& user,
                                    const std::vector<FirewallRule>& rules) const {
  const bool escape = mode() == ProfileMode::hardened;
  auto cell = [escape](std::string_view text) {
    return "<td>" + (escape ? hardening::escape_markup(text) : std::string(text)) + "</td>";
  };
  std::ostringstream html;
  html << "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\">"
       << "<meta name=\"lab-profile\" content=\"" << to_string(mode()) << "\">"
       << "<title>NetAdmin firewall rules</title></head><body>\n";
  if (mode() == ProfileMode::vulnerable) {
    html << "<div class=\"banner\" style=\"background:#c00;color:#fff\">VULNERABLE LAB MODE</div>\n";
  }
  html << "<h1>Firewall rules for " << hardening::escape_markup(user.username) << "</h1>\n"
       << "<table id=\"rules\">\n<tr><th>ID</th><th>Owner</th><th>IP</th><th>Port</th><th>Protocol</th>"
       << "<th>Action</th><th>Status</th><th>Expires</th><th>Description</th></tr>\n";
  for (const auto& r : rules) {
    html << "<tr data-rule-id=\"" << r.id << "\">" << cell(std::to_string(r.id)) << cell(r.owner)
         << cell(r.ip) << cell(std::to_string(r.port)) << cell(to_string(r.protocol))
         << cell(to_string(r.action)) << cell(to_string(r.status)) << cell(std::to_string(r.expires))
         << cell(r.description) << "</tr>\n";
  }
  html << "</table>\n</body></html>\n";
  return html.str();
}

ListResult Gatekeeper::handle_list(std::string_view token) {
  const auto session = authenticate(token);
  const auto user = identity(session.username, policy::SourceNetwork::campus);
  ListResult out;
  const std::string bytes = store_.read_bytes();

  if (mode() == ProfileMode::vulnerable) {
    for (const auto& rec : store::parse_legacy(bytes)) {
      auto rule = store::rule_from_legacy(rec);
      if (!rule) continue;
      if (!user.is_superuser() && rule->owner != user.username) continue;
      out.listing += rec.raw;
      out.listing += store::kRecordTerminator;
      out.rules.push_back(std::move(*rule));
    }
  } else {
    out.rules = policy::visible_rules(user, store::parse_strict(bytes, profile_.limits));
    for (const auto& r : out.rules) out.listing += store::serialize_rule(r, store::SerializeMode::strict, profile_.limits);
  }
  out.html = render_html(user, out.rules);
  return out;
}

RuleStatus Gatekeeper::handle_toggle(std::string_view token, std::uint64_t rule_id, ToggleAction action,
                                     policy::SourceNetwork source) {
  const auto session = authenticate(token);
  const auto user = identity(session.username, source);
  const auto now = clock_();

  auto lock = store_.lock_exclusive();
  auto rule = store_.find_rule_locked(rule_id);
  if (!rule) throw Error(ErrorKind::UnknownRule, "no rule " + std::to_string(rule_id));
  auto decision = policy::authorize_toggle(user, *rule);
  if (!decision.allowed) throw policy_denied(decision.reason);

  RuleStatus status = rule->status;
  EpochSeconds expires = rule->expires;
  firewall::Verb verb = firewall::Verb::create;
  std::string operation;
  switch (action) {
    case ToggleAction::deactivate:
      if (status == RuleStatus::inactive) return status;
      status = RuleStatus::inactive;
      verb = firewall::Verb::remove;
      operation = "deactivate";
      break;
    case ToggleAction::activate:
      if (status == RuleStatus::active) return status;
      if (rule->expires <= now) throw policy_denied(policy::Reason::expired_rule);
      status = RuleStatus::active;
      verb = firewall::Verb::create;
      operation = "activate";
      break;
    case ToggleAction::renew:
      verb = status == RuleStatus::active ? firewall::Verb::modify : firewall::Verb::create;
      status = RuleStatus::active;
      expires = now + kRuleLifetime;
      operation = "renew";
      break;
  }

  FirewallRule updated = *rule;
  updated.status = status;
  updated.expires = expires;
  if (mode() == ProfileMode::vulnerable) {
    try {
      push(session.username, source, verb, updated);
    } catch (const Error& e) {
      std::cerr << "netadmin: push of rule " << rule_id << " failed: " << e.what() << '\n';
    }
  } else {
    push(session.username, source, verb, updated);
  }
  store_.update_rule_locked(rule_id, status, expires);
  audit_.append({now, session.username, operation, rule_id});
  return status;
}

std::size_t Gatekeeper::sync_from_store() {
  const auto now = clock_();
  std::vector<std::uint64_t> expired;
  store_.expire_sweep(now, &expired);
  for (auto id : expired) audit_.append({now, "system", "expire", id});

  std::size_t pushed = 0;
  const auto rules = store_.rules();
  for (const auto& rule : rules) {
    if (std::find(expired.begin(), expired.end(), rule.id) == expired.end()) continue;
    // Take it off the firewall too; an entry the firewall never had is fine.
    try {
      push(rule.owner, policy::SourceNetwork::campus, firewall::Verb::remove, rule);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::UnknownEntry) {
        std::cerr << "netadmin: removal of expired rule " << rule.id << " failed: " << e.what() << '\n';
      }
    }
  }
  for (const auto& rule : rules) {
    if (rule.status != RuleStatus::active) continue;
    try {
      push(rule.owner, policy::SourceNetwork::campus, firewall::Verb::create, rule);
      audit_.append({now, "system", "load", rule.id});
      ++pushed;
    } catch (const Error& e) {
      std::cerr << "netadmin: reload push of rule " << rule.id << " failed: " << e.what() << '\n';
    }
  }
  return pushed;
}

// ---------------------------------------------------------------------------
// Back end

Backend::Backend(LabProfile profile, std::unique_ptr<KeySource> key, std::unique_ptr<FirewallLink> firewall)
    : profile_(std::move(profile)), key_(std::move(key)), firewall_(std::move(firewall)) {
  auto channel = hardening::from_hex(profile_.channel_key_hex);
  if (!channel || channel->size() < hardening::kMinKeySize) {
    throw Error(ErrorKind::Config, "back end needs channel.key_hex of at least 32 bytes");
  }
  channel_key_ = std::move(*channel);
}

std::uint64_t Backend::apply(const hardening::SignedEnvelope& env) {
  if (env.key_id != profile_.channel_key_id || !hardening::verify_envelope(env, channel_key_)) {
    throw Error(ErrorKind::EnvelopeInvalid, "front-end envelope does not verify");
  }
  const auto req = BackendRequest::from_form(env.body);
  const auto* user = profile_.find_user(req.actor);
  if (!user) throw Error(ErrorKind::AuthRequired, "unknown actor " + req.actor);
  const policy::UserIdentity identity{user->username, user->group, user->owned_ips, req.source};

  // Independent of whatever the front end already checked.
  try {
    store::serialize_rule(req.rule, store::SerializeMode::strict, profile_.limits);
    hardening::sanitize_description(req.rule.description, profile_.limits);
  } catch (const Error& e) {
    throw validation_failed(e);
  }
  if (req.verb != firewall::Verb::remove) {
    auto decision = policy::authorize_submission(identity, req.rule, profile_.allowlist, ProfileMode::hardened);
    if (!decision.allowed) throw policy_denied(decision.reason);
  }
  auto toggle = policy::authorize_toggle(identity, req.rule);
  if (!toggle.allowed) throw policy_denied(toggle.reason);

  std::lock_guard lock(mutex_);
  firewall::ApplyRequest apply;
  apply.key_id = profile_.firewall_key_id;
  apply.secret = key_->secret();
  apply.verb = req.verb;
  apply.rule_id = req.rule.id;
  apply.ip = req.rule.ip;
  apply.port = req.rule.port;
  apply.protocol = req.rule.protocol;
  apply.action = req.rule.action;
  return firewall_->apply(apply);
}

std::uint64_t Backend::apply_wire(std::string_view wire) {
  auto env = hardening::decode_envelope(wire);
  if (!env) throw Error(ErrorKind::EnvelopeInvalid, "request is not a signed envelope");
  return apply(*env);
}

}  // namespace netadmin::gatekeeper
