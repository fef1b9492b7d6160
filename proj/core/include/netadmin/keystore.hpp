#pragma once

#include <atomic>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <thread>

// Firewall API key persistence.
//
// The vulnerable deployment keeps the key as one line of hex in a
// world-readable file next to the application. The hardened deployment
// hands it to a separate key-holder process that answers only over a Unix
// socket inside its own 0700 directory.
namespace netadmin::keystore {

// One line: the secret as lower-case hex, newline-terminated.
void write_key_file(const std::filesystem::path& path, std::string_view secret,
                    std::filesystem::perms perms);
// Raw secret bytes; nullopt if missing or not hex.
std::optional<std::string> read_key_file(const std::filesystem::path& path);

// Line protocol over a stream socket:
//   "PING\n"          -> "PONG\n"
//   "GET <key_id>\n"  -> "OK <hex>\n" | "ERR unknown\n"
// Keys live in `<key_dir>/<key_id>.key`.
class SealedStoreServer {
 public:
  SealedStoreServer(std::filesystem::path key_dir, std::filesystem::path socket_path);
  ~SealedStoreServer();
  SealedStoreServer(const SealedStoreServer&) = delete;
  SealedStoreServer& operator=(const SealedStoreServer&) = delete;

  // Binds the socket (mode 0600). Throws Error{PortInUse} on failure.
  void bind();
  void run();    // blocks until stop()
  void start();  // background thread
  void stop();

 private:
  void serve(int client);

  std::filesystem::path key_dir_;
  std::filesystem::path socket_path_;
  int listen_fd_ = -1;
  int wake_pipe_[2] = {-1, -1};
  std::atomic<bool> stopping_{false};
  std::thread thread_;
};

class SealedStoreClient {
 public:
  explicit SealedStoreClient(std::filesystem::path socket_path);

  bool ping() const;
  // Raw secret bytes. Throws Error{LabUnreachable} or Error{BadKey}.
  std::string fetch(std::string_view key_id) const;

 private:
  std::string roundtrip(std::string_view request) const;

  std::filesystem::path socket_path_;
};

}  // namespace netadmin::keystore
