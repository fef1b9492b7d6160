// Brings the loopback lab up or down.
#include <CLI11.hpp>
#include <iostream>

#include "netadmin/error.hpp"
#include "netadmin/lab.hpp"

using namespace netadmin;

int main(int argc, char** argv) {
  CLI::App app{"NetAdmin lab orchestrator"};
  app.require_subcommand(1);

  std::string profile = "vulnerable", dir;
  std::optional<std::uint64_t> seed;
  int base_port = 0;
  std::string host = "127.0.0.1";

  auto* up = app.add_subcommand("up", "start every component and wait until healthy");
  up->add_option("--profile", profile)->check(CLI::IsMember({"vulnerable", "hardened"}));
  up->add_option("--seed", seed, "freeze the clock and fix randomness (key secrets excepted)");
  up->add_option("--dir", dir, "lab directory (default ./lab-<profile>)");
  up->add_option("--base-port", base_port, "first port to use; 0 picks free ports");
  up->add_option("--host", host, "loopback address to listen on");

  auto* down = app.add_subcommand("down", "stop every component of a lab");
  down->add_option("--profile", profile)->check(CLI::IsMember({"vulnerable", "hardened"}));
  down->add_option("--dir", dir);

  auto* status = app.add_subcommand("status", "print the recorded topology");
  status->add_option("--profile", profile)->check(CLI::IsMember({"vulnerable", "hardened"}));
  status->add_option("--dir", dir);

  CLI11_PARSE(app, argc, argv);
  if (dir.empty()) dir = "lab-" + profile;

  try {
    if (*up) {
      lab::LabOptions o;
      o.mode = *parse_profile_mode(profile);
      o.dir = dir;
      o.seed = seed;
      o.base_port = base_port;
      o.host = host;
      auto topo = lab::up(o);
      std::cout << topo.to_json() << '\n';
      return 0;
    }
    auto topo = lab::Topology::load(dir);
    if (*down) {
      lab::down(topo);
      std::cerr << "labctl: " << topo.components.size() << " component(s) stopped\n";
      return 0;
    }
    for (const auto& c : topo.components) {
      std::cout << c.name << '\t' << c.pid << '\t' << (lab::alive(c.pid) ? "up" : "down") << '\t'
                << (c.socket.empty() ? c.endpoint.to_string() : c.socket.string()) << '\n';
    }
    return 0;
  } catch (const Error& e) {
    std::cerr << "labctl: " << to_string(e.kind()) << ": " << e.what() << '\n';
    return e.kind() == ErrorKind::PortInUse ? lab::kExitPortInUse : 1;
  }
}
