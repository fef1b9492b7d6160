// NetAdmin service: monolith, hardened front end or hardened back end.
#include <CLI11.hpp>
#include <iostream>

#include "daemon.hpp"
#include "netadmin/config.hpp"
#include "netadmin/gatekeeper.hpp"
#include "netadmin/http.hpp"
#include "netadmin/services.hpp"

using namespace netadmin;

int main(int argc, char** argv) {
  CLI::App app{"NetAdmin gatekeeper"};
  std::string config, role = "monolith";
  app.add_option("--config", config, "config file")->required();
  app.add_option("--role", role, "monolith | front | back")->check(CLI::IsMember({"monolith", "front", "back"}));
  CLI11_PARSE(app, argc, argv);

  return tools::guarded("netadmin-gatekeeper", [&] {
    const auto signals = tools::block_stop_signals();
    LabProfile profile = load_config(config);
    if (role == "monolith" && profile.mode == ProfileMode::hardened) {
      throw Error(ErrorKind::Config, "the hardened profile runs as separate front and back services");
    }
    if (role != "monolith" && profile.mode == ProfileMode::vulnerable) {
      throw Error(ErrorKind::Config, "front/back roles need the hardened profile");
    }

    http::Server server;
    std::unique_ptr<gatekeeper::Gatekeeper> gk;
    std::unique_ptr<gatekeeper::Backend> backend;

    if (role == "back") {
      backend = std::make_unique<gatekeeper::Backend>(
          profile, gatekeeper::sealed_key_source(profile.sealed_socket, profile.firewall_key_id),
          gatekeeper::http_firewall_link(profile.firewall, profile.mode));
      services::mount_backend(server, *backend);
    } else {
      const auto clock = gatekeeper::clock_for(profile);
      if (role == "front") {
        gk = std::make_unique<gatekeeper::Gatekeeper>(profile, clock, gatekeeper::http_backend_link(profile));
      } else {
        gk = std::make_unique<gatekeeper::Gatekeeper>(
            profile, clock, gatekeeper::http_firewall_link(profile.firewall, profile.mode),
            gatekeeper::file_key_source(profile.resolve(profile.key_file)));
      }
      const auto pushed = gk->sync_from_store();
      std::cerr << "netadmin-gatekeeper: loaded store, " << pushed << " rule(s) pushed\n";
      services::mount_gatekeeper(server, *gk);
    }

    server.bind(profile.listen.host, profile.listen.port);
    server.start();
    std::cerr << "netadmin-gatekeeper: " << role << " (" << to_string(profile.mode) << ") on "
              << profile.listen.to_string() << '\n';
    tools::wait_for_stop(signals);
    server.stop();
    return 0;
  });
}
