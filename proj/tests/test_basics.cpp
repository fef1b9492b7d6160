#include <gtest/gtest.h>

#include "netadmin/config.hpp"
#include "netadmin/error.hpp"
#include "netadmin/form.hpp"
#include "netadmin/ipv4.hpp"
#include "support.hpp"

using namespace netadmin;

TEST(Ipv4, ParseAndContain) {
  auto net = Ipv4Cidr::parse("10.10.0.0/16");
  ASSERT_TRUE(net);
  EXPECT_EQ(net->prefix(), 16);
  EXPECT_TRUE(net->contains(*Ipv4Cidr::parse("10.10.255.1")));
  EXPECT_TRUE(net->contains(*Ipv4Cidr::parse("10.10.3.0/24")));
  EXPECT_FALSE(net->contains(*Ipv4Cidr::parse("10.0.0.0/8")));
  EXPECT_FALSE(net->contains(*Ipv4Cidr::parse("130.85.0.5")));
  EXPECT_EQ(Ipv4Cidr::parse("1.2.3.4")->prefix(), 32);
  EXPECT_TRUE(Ipv4Cidr::parse("0.0.0.0/0")->contains(*Ipv4Cidr::parse("255.255.255.255")));
}

TEST(Ipv4, RejectsNonCanonical) {
  for (const char* bad : {"", "1.2.3", "1.2.3.4.5", "01.2.3.4", "256.1.1.1", "1.2.3.4/33", "1.2.3.4/", " 1.2.3.4",
                          "+1.2.3.4", "1.2.3.4/08", "a.b.c.d"}) {
    EXPECT_FALSE(Ipv4Cidr::parse(bad).has_value()) << bad;
  }
}

TEST(Ipv4, ToStringRoundTrips) {
  for (const char* s : {"10.10.1.5", "10.10.0.0/16", "0.0.0.0/0", "255.255.255.255"}) {
    EXPECT_EQ(Ipv4Cidr::parse(s)->to_string(), s);
  }
}

TEST(Form, EncodeDecode) {
  form::Fields f{{"description", "a b&c=d|<x>"}, {"ip", "10.10.1.5"}};
  const auto body = form::encode(f);
  EXPECT_EQ(body.find('|'), std::string::npos);
  auto back = form::decode(body);
  EXPECT_EQ(back["description"], "a b&c=d|<x>");
  EXPECT_EQ(back["ip"], "10.10.1.5");
  EXPECT_EQ(form::decode("a=1&a=2")["a"], "2");
  EXPECT_EQ(form::decode_component("%zz+%41"), "%zz A");
}

TEST(Config, ParseRender) {
  const std::string text =
      "profile = hardened\n"
      "listen = 127.0.0.1:18080\n"
      "firewall = 127.0.0.1:18090\n"
      "allowlist = 22,443\n"
      "clock.fixed = 1700000000\n"
      "user.alice = faculty,pw,10.10.1.0/24;10.10.9.0/24\n";
  auto p = parse_config(text, "/tmp");
  EXPECT_EQ(p.mode, ProfileMode::hardened);
  EXPECT_EQ(p.listen.port, 18080);
  EXPECT_TRUE(p.allowlist.contains(443));
  EXPECT_FALSE(p.allowlist.contains(80));
  EXPECT_EQ(p.fixed_clock, 1700000000);
  ASSERT_NE(p.find_user("alice"), nullptr);
  EXPECT_EQ(p.find_user("alice")->owned_ips.size(), 2u);
  EXPECT_EQ(p.resolve("rules.db"), std::filesystem::path("/tmp/rules.db"));

  auto again = parse_config(render_config(p), "/tmp");
  EXPECT_EQ(again.mode, p.mode);
  EXPECT_EQ(again.listen.port, p.listen.port);
  EXPECT_EQ(again.allowlist.ports, p.allowlist.ports);
  EXPECT_EQ(again.users.size(), 1u);
}

TEST(Config, BadLineNamesIt) {
  try {
    parse_config("profile = hardened\nlisten = nowhere\n", "/tmp");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Config);
    EXPECT_NE(std::string(e.what()).find('2'), std::string::npos);
  }
}

TEST(Config, EnvironmentOverridesProfile) {
  testing_support::TempDir dir("cfg");
  {
    std::ofstream(dir / "netadmin.conf") << "profile = vulnerable\n";
  }
  ::setenv("LAB_PROFILE", "hardened", 1);
  auto p = load_config(dir / "netadmin.conf");
  ::unsetenv("LAB_PROFILE");
  EXPECT_EQ(p.mode, ProfileMode::hardened);
  EXPECT_EQ(load_config(dir / "netadmin.conf").mode, ProfileMode::vulnerable);
}

TEST(Errors, NamesRoundTrip) {
  for (int k = 0; k <= static_cast<int>(ErrorKind::ProxyBindFailed); ++k) {
    const auto kind = static_cast<ErrorKind>(k);
    EXPECT_EQ(error_kind_from_string(to_string(kind)), kind);
  }
}
