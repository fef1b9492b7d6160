// Simulated border firewall service.
#include <CLI11.hpp>
#include <filesystem>

#include "daemon.hpp"
#include "netadmin/firewall.hpp"
#include "netadmin/http.hpp"
#include "netadmin/keystore.hpp"
#include "netadmin/services.hpp"

using namespace netadmin;

int main(int argc, char** argv) {
  CLI::App app{"Simulated firewall rule-table authority"};
  std::string profile = "vulnerable", listen = "127.0.0.1:18090";
  std::string key_id, scope = "master", key_out, key_mode = "0600";
  app.add_option("--profile", profile, "vulnerable | hardened");
  app.add_option("--listen", listen, "host:port");
  app.add_option("--issue-key", key_id, "register a key with this id at startup");
  app.add_option("--scope", scope, "master | subnet:<cidr>[:verb+verb]");
  app.add_option("--key-out", key_out, "write the issued secret (hex) here");
  app.add_option("--key-mode", key_mode, "octal permissions of the key file");
  CLI11_PARSE(app, argc, argv);

  return tools::guarded("firewall-sim", [&] {
    auto mode = parse_profile_mode(profile);
    if (!mode) throw Error(ErrorKind::Config, "unknown profile " + profile);
    auto [host, port] = http::split_endpoint(listen);
    const auto signals = tools::block_stop_signals();

    firewall::Firewall fw(*mode);
    if (!key_id.empty()) {
      auto parsed = firewall::KeyScope::parse(scope);
      if (!parsed) throw Error(ErrorKind::Config, "bad key scope " + scope);
      auto key = fw.register_key(key_id, *parsed);
      if (!key_out.empty()) {
        keystore::write_key_file(key_out, key.secret,
                                 static_cast<std::filesystem::perms>(std::stoi(key_mode, nullptr, 8)));
      }
    }

    http::Server server;
    services::mount_firewall(server, fw);
    server.bind(host, port);
    server.start();
    std::cerr << "firewall-sim: " << profile << " on " << host << ':' << server.port() << '\n';
    tools::wait_for_stop(signals);
    server.stop();
    return 0;
  });
}
