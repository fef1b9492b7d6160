#pragma once

#include <unistd.h>

#include <fstream>

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "netadmin/ipv4.hpp"
#include "netadmin/rule.hpp"

namespace testing_support {

class TempDir {
 public:
  explicit TempDir(const std::string& tag = "t") {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("netadmin-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

// Reference model of the legacy reader, written as a byte-at-a-time state
// machine with no windowed lookahead. Shares no code with the library.
struct RefChunk {
  std::string raw;
  char end = 'n';  // 'n' newline, 'c' cut, 'e' end of input
  std::string cls;  // valid / malformed / overflow_tail
  std::size_t offset = 0;
  std::vector<std::string> fields;
};

inline std::vector<RefChunk> reference_legacy(const std::string& bytes) {
  std::vector<RefChunk> out;
  std::string cur;
  std::size_t start = 0;
  bool prev_cut = false;
  auto emit = [&](char end) {
    RefChunk c;
    c.raw = cur;
    c.end = end;
    c.offset = start;
    std::string f;
    for (char ch : cur) {
      if (ch == '|') {
        c.fields.push_back(f);
        f.clear();
      } else {
        f += ch;
      }
    }
    c.fields.push_back(f);
    c.cls = c.fields.size() != 10 ? "malformed" : prev_cut ? "overflow_tail" : "valid";
    prev_cut = end == 'c';
    out.push_back(std::move(c));
    cur.clear();
  };
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    const char b = bytes[i];
    if (b == '\n') {
      emit('n');
      start = i + 1;
      continue;
    }
    cur += b;
    if (cur.size() == 999) {
      emit('c');
      start = i + 1;
    }
  }
  if (!cur.empty()) emit('e');
  return out;
}

// Random rule inside every strict limit.
inline netadmin::FirewallRule random_strict_rule(std::mt19937_64& rng) {
  using namespace netadmin;
  auto uniform = [&](std::int64_t lo, std::int64_t hi) {
    return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng);
  };
  static const std::string owner_bytes =
      "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789._-@";
  FirewallRule r;
  r.id = static_cast<std::uint64_t>(uniform(1, INT64_MAX));
  const auto owner_len = uniform(1, rng() % 4 == 0 ? 128 : 12);
  for (int i = 0; i < owner_len; ++i) r.owner += owner_bytes[rng() % owner_bytes.size()];
  const int prefix = rng() % 3 == 0 ? static_cast<int>(uniform(0, 32)) : 32;
  r.ip = Ipv4Cidr(static_cast<std::uint32_t>(rng()), prefix).to_string();
  if (prefix == 32 && rng() % 5 == 0) r.ip += "/32";
  r.port = static_cast<int>(uniform(1, 65535));
  r.protocol = rng() % 2 ? Protocol::tcp : Protocol::udp;
  r.action = rng() % 2 ? Action::allow : Action::deny;
  r.status = rng() % 2 ? RuleStatus::active : RuleStatus::inactive;
  r.created = uniform(-4'000'000'000LL, 4'000'000'000LL);
  r.expires = r.created + uniform(1, 3 * kRuleLifetime);
  const auto desc_len = uniform(0, rng() % 3 == 0 ? 256 : 40);
  for (int i = 0; i < desc_len; ++i) {
    char c;
    do {
      c = static_cast<char>(rng() & 0xFF);
    } while (c == '|' || c == '\n');
    r.description += c;
  }
  return r;
}

}  // namespace testing_support
