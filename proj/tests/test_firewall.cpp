#include <gtest/gtest.h>

#include <thread>

#include "netadmin/error.hpp"
#include "netadmin/firewall.hpp"
#include "netadmin/keystore.hpp"
#include "support.hpp"

using namespace netadmin;
using namespace netadmin::firewall;

namespace {

ApplyRequest req(const ApiKey& key, Verb verb, std::uint64_t id, std::string ip, int port = 22) {
  ApplyRequest r;
  r.key_id = key.key_id;
  r.secret = key.secret;
  r.verb = verb;
  r.rule_id = id;
  r.ip = std::move(ip);
  r.port = port;
  return r;
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::Io;  // sentinel: nothing thrown
}

std::uint64_t apply_sealed(Firewall& fw, const ApplyRequest& r) { return fw.apply_wire(seal_apply_request(r)); }

}  // namespace

TEST(Scope, ParseAndPermit) {
  auto s = KeyScope::parse("subnet:10.10.0.0/16");
  ASSERT_TRUE(s);
  EXPECT_TRUE(s->permits(Verb::create, *Ipv4Cidr::parse("10.10.9.9")));
  EXPECT_FALSE(s->permits(Verb::create, *Ipv4Cidr::parse("10.11.0.1")));
  EXPECT_FALSE(s->permits(Verb::create, *Ipv4Cidr::parse("10.0.0.0/8")));
  auto ro = KeyScope::parse("subnet:10.10.0.0/16:create");
  ASSERT_TRUE(ro);
  EXPECT_FALSE(ro->permits(Verb::remove, *Ipv4Cidr::parse("10.10.9.9")));
  EXPECT_TRUE(KeyScope::master().permits(Verb::remove, *Ipv4Cidr::parse("130.85.0.5")));
  EXPECT_EQ(KeyScope::parse(s->to_string())->to_string(), s->to_string());
  EXPECT_FALSE(KeyScope::parse("subnet:banana").has_value());
}

TEST(Firewall, KeysAreDistinct90HexChars) {
  Firewall fw(ProfileMode::vulnerable);
  auto a = fw.register_key("a", KeyScope::master());
  auto b = fw.register_key("b", KeyScope::master());
  EXPECT_NE(a.secret, b.secret);
  EXPECT_EQ(a.secret.size(), kSecretBytes);
  EXPECT_EQ(a.secret_hex().size(), 90u);
}

TEST(Firewall, GenerationCountsAcceptedApplies) {
  Firewall fw(ProfileMode::vulnerable);
  auto key = fw.register_key("m", KeyScope::master());
  EXPECT_EQ(fw.apply_rule(req(key, Verb::create, 1, "130.85.0.5")), 1u);
  EXPECT_EQ(fw.apply_rule(req(key, Verb::modify, 1, "130.85.0.5", 443)), 2u);
  auto table = fw.dump_table();
  ASSERT_EQ(table.entries.size(), 1u);
  EXPECT_EQ(table.entries[0].port, 443);
  EXPECT_EQ(table.generation, 2u);

  auto bad = req(key, Verb::create, 2, "1.2.3.4");
  bad.secret[0] ^= 1;
  EXPECT_EQ(kind_of([&] { fw.apply_rule(bad); }), ErrorKind::BadKey);
  EXPECT_EQ(kind_of([&] { fw.apply_rule(req(key, Verb::modify, 9, "1.2.3.4")); }), ErrorKind::UnknownEntry);
  EXPECT_EQ(fw.dump_table().generation, 2u);

  EXPECT_EQ(fw.apply_rule(req(key, Verb::remove, 1, "130.85.0.5")), 3u);
  EXPECT_TRUE(fw.dump_table().entries.empty());
  EXPECT_EQ(fw.apply_log().size(), 3u);
}

TEST(Firewall, HardenedRefusesPlainForms) {
  Firewall fw(ProfileMode::hardened);
  auto key = fw.register_key("r", KeyScope::master());
  EXPECT_EQ(kind_of([&] { fw.apply_rule(req(key, Verb::create, 1, "10.10.1.1")); }), ErrorKind::EnvelopeInvalid);
  EXPECT_EQ(kind_of([&] { fw.apply_wire(encode_apply_form(req(key, Verb::create, 1, "10.10.1.1"))); }),
            ErrorKind::EnvelopeInvalid);
  EXPECT_EQ(apply_sealed(fw, req(key, Verb::create, 1, "10.10.1.1")), 1u);
}

TEST(Firewall, HardenedEnvelopeTamperRejected) {
  Firewall fw(ProfileMode::hardened);
  auto key = fw.register_key("r", KeyScope::master());
  auto wire = seal_apply_request(req(key, Verb::create, 1, "10.10.1.1"));
  auto at = wire.find("10.10.1.1");
  ASSERT_NE(at, std::string::npos);
  wire[at + 1] = '3';
  EXPECT_EQ(kind_of([&] { fw.apply_wire(wire); }), ErrorKind::EnvelopeInvalid);
  EXPECT_EQ(fw.dump_table().generation, 0u);
}

TEST(Firewall, ScopeMatrix) {
  struct Case {
    ProfileMode mode;
    bool scoped;
    const char* ip;
    bool allowed;
  };
  const Case cases[] = {
      {ProfileMode::vulnerable, true, "130.85.0.5", true},  // scope not enforced
      {ProfileMode::vulnerable, false, "130.85.0.5", true},
      {ProfileMode::hardened, true, "10.10.4.4", true},
      {ProfileMode::hardened, true, "130.85.0.5", false},
      {ProfileMode::hardened, true, "10.0.0.0/8", false},
      {ProfileMode::hardened, false, "130.85.0.5", true},
  };
  for (const auto& c : cases) {
    Firewall fw(c.mode);
    auto key = fw.register_key("k", c.scoped ? *KeyScope::parse("subnet:10.10.0.0/16") : KeyScope::master());
    auto r = req(key, Verb::create, 7, c.ip);
    auto call = [&] { c.mode == ProfileMode::hardened ? apply_sealed(fw, r) : fw.apply_rule(r); };
    if (c.allowed) {
      EXPECT_NO_THROW(call()) << c.ip;
    } else {
      EXPECT_EQ(kind_of(call), ErrorKind::ScopeViolation) << c.ip;
      EXPECT_EQ(fw.dump_table().generation, 0u);
    }
  }
}

TEST(Firewall, ApplyFormRoundTrip) {
  ApplyRequest r;
  r.key_id = "k";
  r.secret = std::string("\x01\xff|&=", 5);
  r.verb = Verb::remove;
  r.rule_id = 77;
  r.ip = "10.0.0.1/24";
  r.port = 53;
  r.protocol = Protocol::udp;
  r.action = Action::deny;
  auto back = decode_apply_form(encode_apply_form(r));
  EXPECT_EQ(back.secret, r.secret);
  EXPECT_EQ(back.verb, Verb::remove);
  EXPECT_EQ(back.rule_id, 77u);
  EXPECT_EQ(back.protocol, Protocol::udp);
  EXPECT_EQ(kind_of([] { decode_apply_form("key_id=k"); }), ErrorKind::BadRequest);
}

TEST(Property, ConcurrentAppliesSerialize) {
  Firewall fw(ProfileMode::vulnerable);
  auto key = fw.register_key("m", KeyScope::master());
  std::vector<std::thread> threads;
  for (int t = 0; t < 8; ++t) {
    threads.emplace_back([&, t] {
      for (int i = 0; i < 200; ++i) fw.apply_rule(req(key, Verb::create, t * 1000 + i + 1, "10.0.0.1"));
    });
  }
  std::thread reader([&] {
    for (int i = 0; i < 200; ++i) {
      auto snap = fw.dump_table();
      ASSERT_EQ(snap.entries.size(), snap.generation);  // only creates of fresh ids
    }
  });
  for (auto& t : threads) t.join();
  reader.join();
  auto table = fw.dump_table();
  EXPECT_EQ(table.generation, 1600u);
  EXPECT_EQ(table.entries.size(), 1600u);
  auto log = fw.apply_log();
  for (std::size_t i = 0; i < log.size(); ++i) EXPECT_EQ(log[i].generation, i + 1);
}

TEST(Keystore, FileAndSealedStore) {
  testing_support::TempDir dir("keys");
  const auto secret = hardening::random_bytes(kSecretBytes);
  keystore::write_key_file(dir / "fw.key", secret, std::filesystem::perms::owner_read | std::filesystem::perms::owner_write);
  EXPECT_EQ(keystore::read_key_file(dir / "fw.key"), secret);
  EXPECT_FALSE(keystore::read_key_file(dir / "missing.key").has_value());

  std::filesystem::create_directories(dir / "sealed");
  keystore::write_key_file(dir / "sealed" / "research.key", secret, std::filesystem::perms::owner_read);
  keystore::SealedStoreServer server(dir / "sealed", dir / "sealed" / "s.sock");
  server.bind();
  server.start();
  keystore::SealedStoreClient client(dir / "sealed" / "s.sock");
  EXPECT_TRUE(client.ping());
  EXPECT_EQ(client.fetch("research"), secret);
  EXPECT_EQ(kind_of([&] { client.fetch("nope"); }), ErrorKind::BadKey);
  EXPECT_EQ(kind_of([&] { client.fetch("../fw"); }), ErrorKind::BadKey);
  server.stop();
  EXPECT_EQ(kind_of([&] { client.fetch("research"); }), ErrorKind::LabUnreachable);
}
