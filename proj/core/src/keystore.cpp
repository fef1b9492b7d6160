#include "netadmin/keystore.hpp"

#include <poll.h>
#include <sys/socket.h>
#include <sys/stat.h>
#include <sys/un.h>
#include <unistd.h>

#include <fcntl.h>

#include <cctype>
#include <cerrno>
#include <cstring>
#include <fstream>

#include "netadmin/error.hpp"
#include "netadmin/hardening.hpp"

namespace netadmin::keystore {

namespace fs = std::filesystem;

namespace {

sockaddr_un socket_address(const fs::path& path) {
  sockaddr_un addr{};
  addr.sun_family = AF_UNIX;
  const auto& s = path.native();
  if (s.size() >= sizeof(addr.sun_path)) {
    throw Error(ErrorKind::Config, "socket path too long: " + s);
  }
  std::memcpy(addr.sun_path, s.c_str(), s.size() + 1);
  return addr;
}

bool valid_key_id(std::string_view id) {
  if (id.empty() || id.size() > 64) return false;
  for (unsigned char c : id) {
    if (!(std::isalnum(c) || c == '-' || c == '_')) return false;
  }
  return true;
}

std::string read_line(int fd) {
  std::string line;
  char c;
  while (line.size() < 512) {
    auto n = ::read(fd, &c, 1);
    if (n <= 0 || c == '\n') break;
    line += c;
  }
  return line;
}

void write_all(int fd, std::string_view data) {
  while (!data.empty()) {
    auto n = ::write(fd, data.data(), data.size());
    if (n <= 0) {
      if (n < 0 && errno == EINTR) continue;
      return;
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
}

}  // namespace

void write_key_file(const fs::path& path, std::string_view secret, fs::perms perms) {
  {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::Io, "cannot write key file " + path.string());
    out << hardening::to_hex(secret) << '\n';
  }
  fs::permissions(path, perms, fs::perm_options::replace);
}

std::optional<std::string> read_key_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::string line;
  std::getline(in, line);
  while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
  return hardening::from_hex(line);
}

// ---------------------------------------------------------------------------

SealedStoreServer::SealedStoreServer(fs::path key_dir, fs::path socket_path)
    : key_dir_(std::move(key_dir)), socket_path_(std::move(socket_path)) {}

SealedStoreServer::~SealedStoreServer() {
  stop();
  if (listen_fd_ >= 0) ::close(listen_fd_);
  for (int fd : wake_pipe_) {
    if (fd >= 0) ::close(fd);
  }
  std::error_code ec;
  if (!socket_path_.empty()) fs::remove(socket_path_, ec);
}

void SealedStoreServer::bind() {
  std::error_code ec;
  fs::remove(socket_path_, ec);
  listen_fd_ = ::socket(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0);
  if (listen_fd_ < 0) throw Error(ErrorKind::Io, "socket(): " + std::string(std::strerror(errno)));
  auto addr = socket_address(socket_path_);
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0 ||
      ::listen(listen_fd_, 16) != 0) {
    throw Error(ErrorKind::PortInUse, "cannot bind " + socket_path_.string() + ": " + std::strerror(errno));
  }
  ::chmod(socket_path_.c_str(), 0600);
  if (::pipe2(wake_pipe_, O_CLOEXEC) != 0) throw Error(ErrorKind::Io, "pipe2 failed");
}

void SealedStoreServer::run() {
  while (!stopping_) {
    pollfd fds[2] = {{listen_fd_, POLLIN, 0}, {wake_pipe_[0], POLLIN, 0}};
    if (::poll(fds, 2, -1) < 0) {
      if (errno == EINTR) continue;
      break;
    }
    if (fds[1].revents) break;
    if (!(fds[0].revents & POLLIN)) continue;
    int client = ::accept4(listen_fd_, nullptr, nullptr, SOCK_CLOEXEC);
    if (client < 0) continue;
    serve(client);
    ::close(client);
  }
}

void SealedStoreServer::serve(int client) {
  timeval tv{2, 0};
  ::setsockopt(client, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof(tv));
  const std::string line = read_line(client);
  if (line == "PING") {
    write_all(client, "PONG\n");
    return;
  }
  if (line.rfind("GET ", 0) == 0) {
    const std::string id = line.substr(4);
    if (valid_key_id(id)) {
      if (auto secret = read_key_file(key_dir_ / (id + ".key"))) {
        write_all(client, "OK " + hardening::to_hex(*secret) + "\n");
        return;
      }
    }
    write_all(client, "ERR unknown\n");
    return;
  }
  write_all(client, "ERR request\n");
}

void SealedStoreServer::start() {
  thread_ = std::thread([this] { run(); });
}

void SealedStoreServer::stop() {
  if (stopping_.exchange(true)) return;
  if (wake_pipe_[1] >= 0) write_all(wake_pipe_[1], "x");
  if (thread_.joinable()) thread_.join();
  if (listen_fd_ >= 0) ::close(listen_fd_);
  listen_fd_ = -1;
  std::error_code ec;
  if (!socket_path_.empty()) fs::remove(socket_path_, ec);
}

// ---------------------------------------------------------------------------

SealedStoreClient::SealedStoreClient(fs::path socket_path) : socket_path_(std::move(socket_path)) {}

std::string SealedStoreClient::roundtrip(std::string_view request) const {
  int fd = ::socket(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0);
  if (fd < 0) throw Error(ErrorKind::Io, "socket(): " + std::string(std::strerror(errno)));
  auto addr = socket_address(socket_path_);
  if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    ::close(fd);
    throw Error(ErrorKind::LabUnreachable, "sealed store unreachable at " + socket_path_.string());
  }
  timeval tv{2, 0};
  ::setsockopt(fd, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof(tv));
  write_all(fd, request);
  std::string reply = read_line(fd);
  ::close(fd);
  if (reply.empty()) throw Error(ErrorKind::LabUnreachable, "sealed store closed the connection");
  return reply;
}

bool SealedStoreClient::ping() const {
  try {
    return roundtrip("PING\n") == "PONG";
  } catch (const Error&) {
    return false;
  }
}

std::string SealedStoreClient::fetch(std::string_view key_id) const {
  const std::string reply = roundtrip("GET " + std::string(key_id) + "\n");
  if (reply.rfind("OK ", 0) != 0) throw Error(ErrorKind::BadKey, "sealed store has no key " + std::string(key_id));
  auto secret = hardening::from_hex(std::string_view(reply).substr(3));
  if (!secret) throw Error(ErrorKind::BadKey, "sealed store returned a malformed key");
  return *secret;
}

}  // namespace netadmin::keystore
