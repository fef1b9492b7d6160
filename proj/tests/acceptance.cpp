// One line per acceptance criterion; exit status is the number of failures.
#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>

#include "netadmin/error.hpp"
#include "netadmin/firewall.hpp"
#include "netadmin/gatekeeper.hpp"
#include "netadmin/hardening.hpp"
#include "netadmin/lab.hpp"
#include "netadmin/recordstore.hpp"
#include "netadmin/redteam.hpp"
#include "support.hpp"

using namespace netadmin;
using testing_support::TempDir;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

lab::LabOptions lab_options(ProfileMode mode, const TempDir& dir, const std::string& name) {
  lab::LabOptions o;
  o.mode = mode;
  o.dir = dir / name;
  o.tools_dir = NETADMIN_TOOLS_DIR;
  o.seed = 1;
  return o;
}

Outcome verdict_matrix() {
  TempDir dir("acc");
  const auto start = std::chrono::steady_clock::now();
  const std::vector<redteam::Attack> all(std::begin(redteam::kAllAttacks), std::end(redteam::kAllAttacks));
  auto vuln = redteam::run_suite(lab_options(ProfileMode::vulnerable, dir, "v"), all);
  auto hard = redteam::run_suite(lab_options(ProfileMode::hardened, dir, "h"), all);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  bool ok = vuln.size() == 4 && hard.size() == 4 && secs < 60;
  std::ostringstream d;
  d << "vulnerable=";
  for (const auto& r : vuln) {
    ok = ok && r.succeeded && r.rechecked.value_or(false);
    d << (r.succeeded ? 'T' : 'F');
  }
  d << " hardened=";
  for (const auto& r : hard) {
    ok = ok && !r.succeeded;
    d << (r.succeeded ? 'T' : 'F');
  }
  d << " elapsed=" << secs << "s";
  return {ok, d.str()};
}

Outcome window_law() {
  std::mt19937_64 rng(999);
  std::size_t divergences = 0;
  for (int i = 0; i < 10000; ++i) {
    std::string s;
    const auto len = rng() % 2500;
    const unsigned nl_rate = 1 + rng() % 400;  // some inputs almost never break a line
    for (std::size_t k = 0; k < len; ++k) {
      s += rng() % nl_rate == 0 ? '\n' : rng() % 8 == 0 ? '|' : static_cast<char>(rng() & 0xFF);
    }
    auto got = store::parse_legacy(s);
    auto want = testing_support::reference_legacy(s);
    bool same = got.size() == want.size();
    for (std::size_t k = 0; same && k < got.size(); ++k) {
      same = got[k].raw == want[k].raw && got[k].offset == want[k].offset && got[k].fields == want[k].fields &&
             store::to_string(got[k].classification) == want[k].cls;
    }
    divergences += same ? 0 : 1;
  }

  FirewallRule carrier;
  carrier.id = 1;
  carrier.owner = "mallory";
  carrier.ip = "10.10.3.7";
  carrier.port = 443;
  carrier.created = lab::kSeededEpoch;
  carrier.expires = lab::kSeededEpoch + kRuleLifetime;
  FirewallRule embedded = carrier;
  embedded.id = 4242;
  embedded.owner = "admin";
  embedded.ip = redteam::kVictimIp;
  embedded.port = 22;
  carrier.description = redteam::build_overflow(carrier, embedded).description;
  const auto payload = store::serialize_rule(carrier, store::SerializeMode::legacy);
  auto legacy = store::parse_legacy(payload);
  const auto usable = std::count_if(legacy.begin(), legacy.end(), [](auto& r) { return r.usable(); });
  std::string strict = "accepted";
  try {
    store::parse_strict(payload);
  } catch (const Error& e) {
    strict = std::string(to_string(e.kind()));
  }
  std::ostringstream d;
  d << "divergences=" << divergences << "/10000 payload_usable=" << usable << " strict=" << strict;
  return {divergences == 0 && usable >= 2 && strict == "LineTooLong", d.str()};
}

Outcome round_trip() {
  std::mt19937_64 rng(2718);
  std::size_t bad = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto r = testing_support::random_strict_rule(rng);
    const auto bytes = store::serialize_rule(r, store::SerializeMode::strict);
    try {
      auto back = store::parse_strict(bytes);
      if (back.size() != 1 || !(back[0] == r) ||
          store::serialize_rule(back[0], store::SerializeMode::strict) != bytes) {
        ++bad;
      }
    } catch (const Error&) {
      ++bad;
    }
  }
  return {bad == 0, "mismatches=" + std::to_string(bad) + "/1000"};
}

std::size_t outside(const firewall::FirewallTable& table, const Ipv4Cidr& subnet) {
  std::size_t n = 0;
  for (const auto& e : table.entries) {
    auto ip = Ipv4Cidr::parse(e.ip);
    if (!ip || !subnet.contains(*ip)) ++n;
  }
  return n;
}

Outcome containment() {
  TempDir dir("acc");
  auto h = lab::up(lab_options(ProfileMode::hardened, dir, "h"));
  // Only a subnet-scoped key exists anywhere in the hardened lab.
  auto keys = redteam::scan_for_keys(h.dir);
  bool only_scoped = keys.size() == 1 && keys[0].path.filename() == "netadmin-research.key";
  auto hw = redteam::run_workload(h, 11, 500, false);
  const auto h_out = outside(redteam::fetch_table(h.firewall), h.research_subnet);
  lab::down(h);

  auto v = lab::up(lab_options(ProfileMode::vulnerable, dir, "v"));
  auto vw = redteam::run_workload(v, 11, 500, true);
  const auto v_out = outside(redteam::fetch_table(v.firewall), v.research_subnet);
  lab::down(v);

  std::ostringstream d;
  d << "hardened submitted=" << hw.submitted << " entries=" << hw.table.entries.size() << " outside=" << h_out
    << " vulnerable+proxy outside=" << v_out << " tampered=" << vw.tampered;
  return {only_scoped && hw.submitted >= 500 && h_out == 0 && v_out >= 1, d.str()};
}

Outcome key_confinement() {
  TempDir dir("acc");
  auto h = lab::up(lab_options(ProfileMode::hardened, dir, "h"));
  const auto h_tokens = redteam::scan_for_keys(h.gatekeeper_dir).size() + redteam::scan_for_keys(h.gatekeeper_config).size();
  lab::down(h);

  auto v = lab::up(lab_options(ProfileMode::vulnerable, dir, "v"));
  auto found = redteam::scan_for_keys(v.gatekeeper_dir);
  bool replayed = false;
  if (found.size() == 1) {
    firewall::ApplyRequest req;
    req.key_id = v.firewall_key_id;
    req.secret = *hardening::from_hex(found[0].token);
    req.rule_id = 900001;
    req.ip = "130.85.0.99";
    req.port = 3389;
    try {
      const auto before = redteam::fetch_table(v.firewall).generation;
      const auto gen = gatekeeper::http_firewall_link(v.firewall, ProfileMode::vulnerable)->apply(req);
      auto table = redteam::fetch_table(v.firewall);
      replayed = gen == before + 1 && std::any_of(table.entries.begin(), table.entries.end(),
                                                  [](auto& e) { return e.rule_id == 900001; });
    } catch (const Error&) {
    }
  }
  lab::down(v);
  std::ostringstream d;
  d << "hardened_tokens=" << h_tokens << " vulnerable_tokens=" << found.size()
    << " replay=" << (replayed ? "applied" : "refused");
  return {h_tokens == 0 && found.size() == 1 && replayed, d.str()};
}

Outcome envelope_integrity() {
  const std::string key = hardening::random_bytes(32);
  const std::string body = hardening::random_bytes(64);
  const auto env = hardening::sign_envelope(body, "k", key);
  std::size_t flips_accepted = 0;
  for (int bit = 0; bit < 512; ++bit) {
    auto f = env;
    f.body[bit / 8] = static_cast<char>(f.body[bit / 8] ^ (1 << (bit % 8)));
    flips_accepted += hardening::verify_envelope(f, key) ? 1 : 0;
  }
  std::mt19937_64 rng(31337);
  std::size_t false_accepts = 0;
  auto forged = env;
  for (int i = 0; i < 1'000'000; ++i) {
    for (auto& b : forged.mac) b = static_cast<std::uint8_t>(rng());
    false_accepts += hardening::verify_envelope(forged, key) ? 1 : 0;
  }
  const bool genuine = hardening::verify_envelope(env, key);
  std::ostringstream d;
  d << "flips_accepted=" << flips_accepted << "/512 random_tag_accepts=" << false_accepts << "/1000000";
  return {genuine && flips_accepted == 0 && false_accepts == 0, d.str()};
}

Outcome expiry() {
  TempDir dir("acc");
  LabProfile p;
  p.mode = ProfileMode::hardened;
  p.appdir = dir.path();
  p.firewall_key_id = "netadmin-research";
  p.channel_key_hex = hardening::to_hex(hardening::random_bytes(32));
  for (const auto& u : lab::roster()) {
    UserRecord r{u.name, u.group, u.password, {}};
    for (const auto& c : u.owned) r.owned_ips.push_back(*Ipv4Cidr::parse(c));
    p.users[u.name] = r;
  }
  firewall::Firewall fw(ProfileMode::hardened);
  auto key = fw.register_key(p.firewall_key_id, *firewall::KeyScope::parse("subnet:10.10.0.0/16"));
  gatekeeper::Backend backend(p, gatekeeper::fixed_key_source(key.secret), gatekeeper::local_firewall_link(fw));
  EpochSeconds now = lab::kSeededEpoch;
  gatekeeper::Gatekeeper gk(p, [&] { return now; }, gatekeeper::local_backend_link(backend, p));

  gatekeeper::RuleSubmission s;
  s.ip = "10.10.1.40";
  s.port = "443";
  gk.handle_submit(gk.login("alice", lab::user("alice").password).token, s);
  auto status = [&] { return gk.store().rules().at(0).status; };
  const bool at_creation = status() == RuleStatus::active;
  const EpochSeconds day = 86400;
  now = lab::kSeededEpoch + 364 * day;
  gk.sync_from_store();
  const bool at_364 = status() == RuleStatus::active;
  now = lab::kSeededEpoch + 366 * day;
  gk.sync_from_store();
  const bool at_366 = status() == RuleStatus::inactive;
  const auto bytes = gk.store().read_bytes();
  const auto second = gk.store().expire_sweep(now);
  const bool idempotent = second == 0 && gk.store().read_bytes() == bytes;

  std::ostringstream d;
  d << "creation=" << (at_creation ? "active" : "inactive") << " +364d=" << (at_364 ? "active" : "inactive")
    << " +366d=" << (at_366 ? "inactive" : "active") << " second_sweep_changes=" << second;
  return {at_creation && at_364 && at_366 && idempotent, d.str()};
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"verdict-matrix", verdict_matrix},       {"legacy-window-law", window_law},
      {"strict-round-trip", round_trip},        {"subnet-containment", containment},
      {"key-confinement", key_confinement},     {"envelope-integrity", envelope_integrity},
      {"rule-expiry", expiry},
  };
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failures += o.pass ? 0 : 1;
    std::printf("%s %-20s %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
  }
  return failures;
}
