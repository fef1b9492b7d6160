#include "netadmin/config.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "netadmin/error.hpp"

namespace netadmin {

namespace fs = std::filesystem;

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <typename T>
T number(std::string_view text, std::size_t line) {
  T value{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size()) {
    throw Error(ErrorKind::Config, "line " + std::to_string(line) + ": not a number: " + std::string(text))
        .at_line(line);
  }
  return value;
}

Endpoint endpoint(std::string_view text, std::size_t line) {
  auto colon = text.rfind(':');
  if (colon == std::string_view::npos) {
    throw Error(ErrorKind::Config, "line " + std::to_string(line) + ": expected host:port").at_line(line);
  }
  return Endpoint{std::string(text.substr(0, colon)), number<int>(text.substr(colon + 1), line)};
}

Ipv4Cidr cidr(std::string_view text, std::size_t line) {
  auto parsed = Ipv4Cidr::parse(text);
  if (!parsed) {
    throw Error(ErrorKind::Config, "line " + std::to_string(line) + ": bad CIDR " + std::string(text))
        .at_line(line);
  }
  return *parsed;
}

UserRecord user(std::string name, std::string_view value, std::size_t line) {
  UserRecord u;
  u.username = std::move(name);
  auto c1 = value.find(',');
  auto c2 = c1 == std::string_view::npos ? c1 : value.find(',', c1 + 1);
  if (c2 == std::string_view::npos) {
    throw Error(ErrorKind::Config,
                "line " + std::to_string(line) + ": user needs <group>,<password>,<cidr>[;cidr]")
        .at_line(line);
  }
  auto group = policy::parse_group(trim(value.substr(0, c1)));
  if (!group) throw Error(ErrorKind::Config, "line " + std::to_string(line) + ": unknown group").at_line(line);
  u.group = *group;
  u.password = std::string(value.substr(c1 + 1, c2 - c1 - 1));
  auto cidrs = value.substr(c2 + 1);
  while (!cidrs.empty()) {
    auto semi = cidrs.find(';');
    auto part = trim(cidrs.substr(0, semi));
    if (!part.empty()) u.owned_ips.push_back(cidr(part, line));
    cidrs = semi == std::string_view::npos ? std::string_view{} : cidrs.substr(semi + 1);
  }
  if (u.group != policy::Group::superuser && u.owned_ips.empty()) {
    throw Error(ErrorKind::Config, "line " + std::to_string(line) + ": non-superuser without owned IPs")
        .at_line(line);
  }
  return u;
}

}  // namespace

fs::path LabProfile::resolve(const fs::path& p) const { return p.is_absolute() ? p : appdir / p; }

const UserRecord* LabProfile::find_user(std::string_view name) const {
  auto it = users.find(std::string(name));
  return it == users.end() ? nullptr : &it->second;
}

LabProfile parse_config(std::string_view text, const fs::path& appdir) {
  LabProfile p;
  p.appdir = appdir;
  std::size_t line_no = 0;
  while (!text.empty()) {
    auto nl = text.find('\n');
    auto line = trim(text.substr(0, nl));
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorKind::Config, "line " + std::to_string(line_no) + ": expected key = value")
          .at_line(line_no);
    }
    const std::string key(trim(line.substr(0, eq)));
    const auto value = trim(line.substr(eq + 1));

    if (key == "profile") {
      auto mode = parse_profile_mode(value);
      if (!mode) throw Error(ErrorKind::Config, "unknown profile " + std::string(value)).at_line(line_no);
      p.mode = *mode;
    } else if (key == "listen") {
      p.listen = endpoint(value, line_no);
    } else if (key == "backend") {
      p.backend = endpoint(value, line_no);
    } else if (key == "firewall") {
      p.firewall = endpoint(value, line_no);
    } else if (key == "firewall.key_id") {
      p.firewall_key_id = std::string(value);
    } else if (key == "firewall.key_file") {
      p.key_file = std::string(value);
    } else if (key == "sealed.socket") {
      p.sealed_socket = std::string(value);
    } else if (key == "channel.key_id") {
      p.channel_key_id = std::string(value);
    } else if (key == "channel.key_hex") {
      p.channel_key_hex = std::string(value);
    } else if (key == "research_subnet") {
      p.research_subnet = cidr(value, line_no);
    } else if (key == "allowlist") {
      p.allowlist.ports.clear();
      auto list = value;
      while (!list.empty()) {
        auto comma = list.find(',');
        auto part = trim(list.substr(0, comma));
        if (!part.empty()) p.allowlist.ports.insert(number<int>(part, line_no));
        list = comma == std::string_view::npos ? std::string_view{} : list.substr(comma + 1);
      }
    } else if (key == "limits.max_owner") {
      p.limits.max_owner = number<std::size_t>(value, line_no);
    } else if (key == "limits.max_description") {
      p.limits.max_description = number<std::size_t>(value, line_no);
    } else if (key == "limits.max_record") {
      p.limits.max_record = number<std::size_t>(value, line_no);
    } else if (key == "store") {
      p.store_path = std::string(value);
    } else if (key == "audit") {
      p.audit_path = std::string(value);
    } else if (key == "session.ttl") {
      p.session_ttl = number<EpochSeconds>(value, line_no);
    } else if (key == "clock.fixed") {
      p.fixed_clock = number<EpochSeconds>(value, line_no);
    } else if (key.rfind("user.", 0) == 0 && key.size() > 5) {
      auto u = user(key.substr(5), value, line_no);
      p.users[u.username] = std::move(u);
    } else {
      throw Error(ErrorKind::Config, "line " + std::to_string(line_no) + ": unknown key " + key)
          .at_line(line_no);
    }
  }
  if (!p.limits.consistent()) throw Error(ErrorKind::Config, "field limits do not fit in a record");
  return p;
}

LabProfile load_config(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Config, "cannot read config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  auto profile = parse_config(buf.str(), fs::absolute(path).parent_path());
  if (const char* env = std::getenv("LAB_PROFILE"); env && *env) {
    auto mode = parse_profile_mode(env);
    if (!mode) throw Error(ErrorKind::Config, std::string("LAB_PROFILE must be vulnerable or hardened, got ") + env);
    profile.mode = *mode;
  }
  return profile;
}

std::string render_config(const LabProfile& p) {
  std::ostringstream out;
  out << "profile = " << to_string(p.mode) << '\n';
  if (p.listen.port) out << "listen = " << p.listen.to_string() << '\n';
  if (p.backend.port) out << "backend = " << p.backend.to_string() << '\n';
  if (p.firewall.port) out << "firewall = " << p.firewall.to_string() << '\n';
  out << "firewall.key_id = " << p.firewall_key_id << '\n';
  if (p.mode == ProfileMode::vulnerable) out << "firewall.key_file = " << p.key_file.string() << '\n';
  if (!p.sealed_socket.empty()) out << "sealed.socket = " << p.sealed_socket.string() << '\n';
  if (!p.channel_key_hex.empty()) {
    out << "channel.key_id = " << p.channel_key_id << '\n';
    out << "channel.key_hex = " << p.channel_key_hex << '\n';
  }
  out << "research_subnet = " << p.research_subnet.to_string() << '\n';
  out << "allowlist = ";
  bool first = true;
  for (int port : p.allowlist.ports) {
    out << (first ? "" : ",") << port;
    first = false;
  }
  out << '\n';
  out << "limits.max_owner = " << p.limits.max_owner << '\n';
  out << "limits.max_description = " << p.limits.max_description << '\n';
  out << "limits.max_record = " << p.limits.max_record << '\n';
  out << "store = " << p.store_path.string() << '\n';
  out << "audit = " << p.audit_path.string() << '\n';
  out << "session.ttl = " << p.session_ttl << '\n';
  if (p.fixed_clock) out << "clock.fixed = " << *p.fixed_clock << '\n';
  for (const auto& [name, u] : p.users) {
    out << "user." << name << " = " << policy::to_string(u.group) << ',' << u.password << ',';
    for (std::size_t i = 0; i < u.owned_ips.size(); ++i) {
      out << (i ? ";" : "") << u.owned_ips[i].to_string();
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace netadmin
