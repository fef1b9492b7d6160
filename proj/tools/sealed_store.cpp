// Key holder for the hardened back end: answers over a Unix socket only.
#include <CLI11.hpp>

#include "daemon.hpp"
#include "netadmin/keystore.hpp"

using namespace netadmin;

int main(int argc, char** argv) {
  CLI::App app{"Sealed firewall-key store"};
  std::string keys, socket;
  app.add_option("--keys", keys, "directory holding <key_id>.key files")->required();
  app.add_option("--socket", socket, "Unix socket path")->required();
  CLI11_PARSE(app, argc, argv);

  return tools::guarded("sealed-store", [&] {
    const auto signals = tools::block_stop_signals();
    keystore::SealedStoreServer server(keys, socket);
    server.bind();
    server.start();
    tools::wait_for_stop(signals);
    server.stop();
    return 0;
  });
}
