#include "netadmin/lab.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netinet/in.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <thread>

#include "netadmin/error.hpp"
#include "netadmin/hardening.hpp"
#include "netadmin/http.hpp"
#include "netadmin/keystore.hpp"

namespace netadmin::lab {

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace std::chrono_literals;

const std::vector<LabUser>& roster() {
  static const std::vector<LabUser> users = {
      {"admin", "admin-pass", policy::Group::superuser, {"10.10.0.0/16"}},
      {"alice", "alice-pass", policy::Group::faculty, {"10.10.1.0/24"}},
      {"bob", "bob-pass", policy::Group::staff, {"10.10.2.0/24"}},
      {"carol", "carol-pass", policy::Group::faculty, {"130.85.12.0/24"}},
      {"mallory", "mallory-pass", policy::Group::faculty, {"10.10.3.0/24"}},
  };
  return users;
}

const LabUser& user(std::string_view name) {
  for (const auto& u : roster()) {
    if (u.name == name) return u;
  }
  throw Error(ErrorKind::Config, "no lab user " + std::string(name));
}

bool is_loopback(std::string_view host) {
  if (host == "localhost") return true;
  auto ip = Ipv4Cidr::parse(host);
  return ip && ip->prefix() == 32 && Ipv4Cidr(0x7F000000u, 8).contains(*ip);
}

int pick_free_port(const std::string& host) {
  int fd = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
  if (fd < 0) throw Error(ErrorKind::Io, "socket() failed");
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = 0;
  ::inet_pton(AF_INET, host == "localhost" ? "127.0.0.1" : host.c_str(), &addr.sin_addr);
  socklen_t len = sizeof(addr);
  if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0 ||
      ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len) != 0) {
    ::close(fd);
    throw Error(ErrorKind::PortInUse, "no free port on " + host);
  }
  ::close(fd);
  return ntohs(addr.sin_port);
}

fs::path default_tools_dir() {
  std::error_code ec;
  auto exe = fs::read_symlink("/proc/self/exe", ec);
  return ec ? fs::current_path() : exe.parent_path();
}

bool alive(int pid) {
  if (pid <= 0) return false;
  int status = 0;
  pid_t r = ::waitpid(pid, &status, WNOHANG);
  if (r == pid) return false;                 // just reaped
  if (r == 0) return true;                    // our child, still running
  return ::kill(pid, 0) == 0 || errno == EPERM;  // not our child
}

namespace {

int spawn(const std::vector<std::string>& argv, const fs::path& log) {
  std::vector<char*> args;
  for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
  args.push_back(nullptr);

  pid_t pid = ::fork();
  if (pid < 0) throw Error(ErrorKind::Io, "fork failed");
  if (pid == 0) {
    ::setsid();
    int out = ::open(log.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
    int in = ::open("/dev/null", O_RDONLY | O_CLOEXEC);
    if (out >= 0) {
      ::dup2(out, 1);
      ::dup2(out, 2);
    }
    if (in >= 0) ::dup2(in, 0);
    ::execv(args[0], args.data());
    _exit(127);
  }
  return pid;
}

std::optional<int> exit_code(int pid) {
  int status = 0;
  if (::waitpid(pid, &status, WNOHANG) != pid) return std::nullopt;
  if (WIFEXITED(status)) return WEXITSTATUS(status);
  return 128 + (WIFSIGNALED(status) ? WTERMSIG(status) : 0);
}

bool healthy(const Component& c) {
  if (!c.socket.empty()) return keystore::SealedStoreClient(c.socket).ping();
  try {
    http::Client client(c.endpoint.host, c.endpoint.port, 500ms);
    return client.get("/health").ok();
  } catch (const Error&) {
    return false;
  }
}

void wait_healthy(const Component& c, std::chrono::milliseconds timeout) {
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  while (true) {
    if (healthy(c)) return;
    if (auto code = exit_code(c.pid)) {
      if (*code == kExitPortInUse) {
        throw Error(ErrorKind::PortInUse, c.name + " could not bind " + c.endpoint.to_string());
      }
      throw std::move(Error(ErrorKind::ComponentUnhealthy,
                            c.name + " exited with status " + std::to_string(*code) + "; see " + c.log.string())
                          .with_reason(c.name));
    }
    if (std::chrono::steady_clock::now() > deadline) {
      throw std::move(
          Error(ErrorKind::ComponentUnhealthy, c.name + " did not become healthy").with_reason(c.name));
    }
    std::this_thread::sleep_for(20ms);
  }
}

void stop_pid(int pid) {
  if (pid <= 0) return;
  if (::kill(pid, SIGTERM) != 0 && errno == ESRCH) {
    ::waitpid(pid, nullptr, WNOHANG);
    return;
  }
  const auto deadline = std::chrono::steady_clock::now() + 3s;
  while (alive(pid)) {
    if (std::chrono::steady_clock::now() > deadline) {
      ::kill(pid, SIGKILL);
      ::waitpid(pid, nullptr, 0);
      return;
    }
    std::this_thread::sleep_for(10ms);
  }
}

void write_file(const fs::path& path, const std::string& text, fs::perms perms) {
  {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
    out << text;
  }
  fs::permissions(path, perms, fs::perm_options::replace);
}

LabProfile base_profile(const LabOptions& o) {
  LabProfile p;
  p.mode = o.mode;
  if (o.seed) p.fixed_clock = kSeededEpoch;
  for (const auto& u : roster()) {
    UserRecord r;
    r.username = u.name;
    r.password = u.password;
    r.group = u.group;
    for (const auto& c : u.owned) r.owned_ips.push_back(*Ipv4Cidr::parse(c));
    p.users[u.name] = r;
  }
  return p;
}

Component launch(std::string name, std::vector<std::string> argv, Endpoint ep, const fs::path& logs,
                 std::chrono::milliseconds timeout) {
  Component c;
  c.name = std::move(name);
  c.argv = std::move(argv);
  c.endpoint = std::move(ep);
  c.log = logs / (c.name + ".log");
  c.pid = spawn(c.argv, c.log);
  try {
    wait_healthy(c, timeout);
  } catch (...) {
    stop_pid(c.pid);
    throw;
  }
  return c;
}

}  // namespace

const Component* Topology::find(std::string_view name) const {
  for (const auto& c : components) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

Component* Topology::find(std::string_view name) {
  for (auto& c : components) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

std::string Topology::to_json() const {
  json comps = json::array();
  for (const auto& c : components) {
    comps.push_back({{"name", c.name},
                     {"pid", c.pid},
                     {"host", c.endpoint.host},
                     {"port", c.endpoint.port},
                     {"socket", c.socket.string()},
                     {"argv", c.argv},
                     {"log", c.log.string()}});
  }
  json doc = {{"profile", netadmin::to_string(mode)},
              {"dir", dir.string()},
              {"components", comps},
              {"gatekeeper", gatekeeper.to_string()},
              {"firewall", firewall.to_string()},
              {"backend", backend.port ? backend.to_string() : ""},
              {"gatekeeper_dir", gatekeeper_dir.string()},
              {"gatekeeper_config", gatekeeper_config.string()},
              {"sealed_dir", sealed_dir.string()},
              {"sealed_socket", sealed_socket.string()},
              {"firewall_key_id", firewall_key_id},
              {"research_subnet", research_subnet.to_string()}};
  if (seed) doc["seed"] = *seed;
  return doc.dump(2);
}

Topology Topology::from_json(std::string_view text) {
  auto doc = json::parse(text, nullptr, false);
  if (!doc.is_object()) throw Error(ErrorKind::Config, "topology file is not JSON");
  auto ep = [](const std::string& s) {
    if (s.empty()) return Endpoint{};
    auto [h, p] = http::split_endpoint(s);
    return Endpoint{h, p};
  };
  Topology t;
  t.mode = parse_profile_mode(doc.value("profile", "vulnerable")).value_or(ProfileMode::vulnerable);
  t.dir = doc.value("dir", "");
  for (const auto& c : doc.value("components", json::array())) {
    Component comp;
    comp.name = c.value("name", "");
    comp.pid = c.value("pid", -1);
    comp.endpoint = Endpoint{c.value("host", "127.0.0.1"), c.value("port", 0)};
    comp.socket = c.value("socket", "");
    comp.argv = c.value("argv", std::vector<std::string>{});
    comp.log = c.value("log", "");
    t.components.push_back(std::move(comp));
  }
  t.gatekeeper = ep(doc.value("gatekeeper", ""));
  t.firewall = ep(doc.value("firewall", ""));
  t.backend = ep(doc.value("backend", ""));
  t.gatekeeper_dir = doc.value("gatekeeper_dir", "");
  t.gatekeeper_config = doc.value("gatekeeper_config", "");
  t.sealed_dir = doc.value("sealed_dir", "");
  t.sealed_socket = doc.value("sealed_socket", "");
  t.firewall_key_id = doc.value("firewall_key_id", "");
  if (auto subnet = Ipv4Cidr::parse(doc.value("research_subnet", "10.10.0.0/16"))) t.research_subnet = *subnet;
  if (doc.contains("seed")) t.seed = doc["seed"].get<std::uint64_t>();
  return t;
}

void Topology::save() const { write_file(dir / "topology.json", to_json() + "\n", fs::perms(0644)); }

Topology Topology::load(const fs::path& dir) {
  std::ifstream in(dir / "topology.json");
  if (!in) throw Error(ErrorKind::Config, "no lab topology in " + dir.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return from_json(buf.str());
}

Topology up(const LabOptions& o) {
  if (!is_loopback(o.host)) throw Error(ErrorKind::Config, "refusing to run the lab on non-loopback " + o.host);
  if (o.dir.empty()) throw Error(ErrorKind::Config, "lab directory required");

  const fs::path dir = fs::absolute(o.dir);
  const fs::path tools = o.tools_dir.empty() ? default_tools_dir() : o.tools_dir;
  fs::create_directories(dir);
  for (const char* sub : {"gatekeeper", "front", "back", "sealed", "firewall", "logs"}) fs::remove_all(dir / sub);
  fs::remove(dir / "topology.json");
  const fs::path logs = dir / "logs";
  fs::create_directories(logs);

  int next_port = o.base_port;
  auto port = [&] { return o.base_port ? next_port++ : pick_free_port(o.host); };

  Topology t;
  t.mode = o.mode;
  t.dir = dir;
  t.seed = o.seed;
  t.firewall = Endpoint{o.host, port()};
  t.gatekeeper = Endpoint{o.host, port()};
  const bool hardened = o.mode == ProfileMode::hardened;
  if (hardened) t.backend = Endpoint{o.host, port()};

  LabProfile base = base_profile(o);
  t.research_subnet = base.research_subnet;

  try {
    fs::create_directories(dir / "firewall");
    std::vector<std::string> fw_argv = {(tools / "firewall-sim").string(), "--profile",
                                        std::string(to_string(o.mode)), "--listen", t.firewall.to_string()};
    if (hardened) {
      t.sealed_dir = dir / "sealed";
      fs::create_directories(t.sealed_dir);
      fs::permissions(t.sealed_dir, fs::perms::owner_all, fs::perm_options::replace);
      t.firewall_key_id = "netadmin-research";
      fw_argv.insert(fw_argv.end(), {"--issue-key", t.firewall_key_id, "--scope",
                                     "subnet:" + base.research_subnet.to_string(), "--key-out",
                                     (t.sealed_dir / (t.firewall_key_id + ".key")).string(), "--key-mode", "0600"});
    } else {
      t.gatekeeper_dir = dir / "gatekeeper";
      fs::create_directories(t.gatekeeper_dir);
      t.firewall_key_id = "netadmin-master";
      fw_argv.insert(fw_argv.end(), {"--issue-key", t.firewall_key_id, "--scope", "master", "--key-out",
                                     (t.gatekeeper_dir / "fw_api.key").string(), "--key-mode", "0644"});
    }
    t.components.push_back(launch("firewall", fw_argv, t.firewall, logs, o.health_timeout));

    if (!hardened) {
      LabProfile p = base;
      p.listen = t.gatekeeper;
      p.firewall = t.firewall;
      p.firewall_key_id = t.firewall_key_id;
      t.gatekeeper_config = t.gatekeeper_dir / "netadmin.conf";
      write_file(t.gatekeeper_config, render_config(p), fs::perms(0644));
      t.components.push_back(launch("gatekeeper",
                                    {(tools / "netadmin-gatekeeper").string(), "--config",
                                     t.gatekeeper_config.string(), "--role", "monolith"},
                                    t.gatekeeper, logs, o.health_timeout));
    } else {
      t.sealed_socket = t.sealed_dir / "store.sock";
      Component sealed;
      sealed.name = "sealed-store";
      sealed.socket = t.sealed_socket;
      sealed.argv = {(tools / "sealed-store").string(), "--keys", t.sealed_dir.string(), "--socket",
                     t.sealed_socket.string()};
      sealed.log = logs / "sealed-store.log";
      sealed.pid = spawn(sealed.argv, sealed.log);
      t.components.push_back(sealed);
      wait_healthy(t.components.back(), o.health_timeout);

      const std::string channel = hardening::to_hex(hardening::random_bytes(32));

      LabProfile back = base;
      back.listen = t.backend;
      back.firewall = t.firewall;
      back.firewall_key_id = t.firewall_key_id;
      back.sealed_socket = t.sealed_socket;
      back.channel_key_hex = channel;
      fs::create_directories(dir / "back");
      fs::permissions(dir / "back", fs::perms::owner_all, fs::perm_options::replace);
      const fs::path back_conf = dir / "back" / "backend.conf";
      write_file(back_conf, render_config(back), fs::perms(0600));
      t.components.push_back(launch("backend",
                                    {(tools / "netadmin-gatekeeper").string(), "--config", back_conf.string(),
                                     "--role", "back"},
                                    t.backend, logs, o.health_timeout));

      LabProfile front = base;
      front.listen = t.gatekeeper;
      front.backend = t.backend;
      front.channel_key_hex = channel;
      t.gatekeeper_dir = dir / "front";
      fs::create_directories(t.gatekeeper_dir);
      t.gatekeeper_config = t.gatekeeper_dir / "netadmin.conf";
      write_file(t.gatekeeper_config, render_config(front), fs::perms(0600));
      t.components.push_back(launch("front",
                                    {(tools / "netadmin-gatekeeper").string(), "--config",
                                     t.gatekeeper_config.string(), "--role", "front"},
                                    t.gatekeeper, logs, o.health_timeout));
    }
  } catch (...) {
    down(t);
    throw;
  }
  t.save();
  return t;
}

void down(Topology& t) {
  for (auto it = t.components.rbegin(); it != t.components.rend(); ++it) {
    stop_pid(it->pid);
    it->pid = -1;
  }
  std::error_code ec;
  if (!t.sealed_socket.empty()) fs::remove(t.sealed_socket, ec);
  if (!t.dir.empty() && fs::exists(t.dir / "topology.json")) t.save();
}

void restart(Topology& t, std::string_view name, std::chrono::milliseconds timeout) {
  Component* c = t.find(name);
  if (!c) throw Error(ErrorKind::Config, "no component " + std::string(name));
  stop_pid(c->pid);
  c->pid = spawn(c->argv, c->log);
  wait_healthy(*c, timeout);
  t.save();
}

}  // namespace netadmin::lab
