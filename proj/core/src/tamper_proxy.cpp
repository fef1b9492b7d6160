#include "netadmin/tamper_proxy.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <cstring>

#include "netadmin/error.hpp"
#include "netadmin/form.hpp"
#include "netadmin/http.hpp"

namespace netadmin::redteam {

namespace {

bool send_all(int fd, std::string_view data) {
  while (!data.empty()) {
    auto n = ::send(fd, data.data(), data.size(), MSG_NOSIGNAL);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) return false;
    data.remove_prefix(static_cast<std::size_t>(n));
  }
  return true;
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

// Reads one request (head + Content-Length body) from `fd`, keeping any
// surplus in `buffer`. Returns false on EOF before a full request.
bool read_request(int fd, std::string& buffer, std::string& head, std::string& body) {
  char chunk[8192];
  std::size_t head_end;
  while ((head_end = buffer.find("\r\n\r\n")) == std::string::npos) {
    auto n = ::recv(fd, chunk, sizeof(chunk), 0);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) return false;
    buffer.append(chunk, static_cast<std::size_t>(n));
  }
  head = buffer.substr(0, head_end + 4);
  std::size_t length = 0;
  const std::string lhead = lower(head);
  if (auto pos = lhead.find("\r\ncontent-length:"); pos != std::string::npos) {
    length = std::strtoull(lhead.c_str() + pos + 17, nullptr, 10);
  }
  while (buffer.size() < head.size() + length) {
    auto n = ::recv(fd, chunk, sizeof(chunk), 0);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) return false;
    buffer.append(chunk, static_cast<std::size_t>(n));
  }
  body = buffer.substr(head.size(), length);
  buffer.erase(0, head.size() + length);
  return true;
}

std::string header_value(std::string_view head, std::string_view name) {
  const std::string lhead = lower(head);
  const std::string needle = "\r\n" + lower(name) + ":";
  auto pos = lhead.find(needle);
  if (pos == std::string::npos) return {};
  pos += needle.size();
  auto end = head.find("\r\n", pos);
  std::string value(head.substr(pos, end - pos));
  while (!value.empty() && value.front() == ' ') value.erase(value.begin());
  return value;
}

std::string with_content_length(std::string_view head, std::size_t length) {
  const std::string lhead = lower(head);
  auto pos = lhead.find("\r\ncontent-length:");
  if (pos == std::string::npos) return std::string(head);
  auto end = head.find("\r\n", pos + 2);
  return std::string(head.substr(0, pos)) + "\r\nContent-Length: " + std::to_string(length) +
         std::string(head.substr(end));
}

int connect_to(const Endpoint& ep) {
  int fd = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
  if (fd < 0) return -1;
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<std::uint16_t>(ep.port));
  ::inet_pton(AF_INET, ep.host == "localhost" ? "127.0.0.1" : ep.host.c_str(), &addr.sin_addr);
  if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    ::close(fd);
    return -1;
  }
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  return fd;
}

}  // namespace

std::string rewrite_form(std::string_view body, const std::vector<RewriteRule>& rules, std::size_t* hits) {
  std::string out;
  out.reserve(body.size());
  std::size_t start = 0;
  while (start <= body.size()) {
    auto amp = body.find('&', start);
    auto pair = body.substr(start, amp == std::string_view::npos ? std::string_view::npos : amp - start);
    auto eq = pair.find('=');
    const std::string key = form::decode_component(pair.substr(0, eq));
    const RewriteRule* match = nullptr;
    for (const auto& r : rules) {
      if (eq != std::string_view::npos && r.field == key) match = &r;
    }
    if (match) {
      out.append(pair.substr(0, eq + 1));
      out += form::encode_component(match->value);
      if (hits) ++*hits;
    } else {
      out.append(pair);
    }
    if (amp == std::string_view::npos) break;
    out += '&';
    start = amp + 1;
  }
  return out;
}

std::string rewrite_body(std::string_view body, std::string_view content_type,
                         const std::vector<RewriteRule>& rules, std::size_t* hits) {
  if (rules.empty()) return std::string(body);
  if (content_type.find(http::kEnvelopeType) == 0) {
    // key_id \0 mac(32) \0 body
    auto nul = body.find('\0');
    if (nul == std::string_view::npos || body.size() < nul + 34) return std::string(body);
    const std::size_t form_at = nul + 34;
    return std::string(body.substr(0, form_at)) + rewrite_form(body.substr(form_at), rules, hits);
  }
  if (content_type.find(http::kFormType) == 0) return rewrite_form(body, rules, hits);
  return std::string(body);
}

TamperProxy::TamperProxy(std::string host, Endpoint upstream, std::vector<RewriteRule> rules)
    : host_(std::move(host)), upstream_(std::move(upstream)), rules_(std::move(rules)) {}

TamperProxy::~TamperProxy() { stop(); }

void TamperProxy::start(int port) {
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
  if (listen_fd_ < 0) throw Error(ErrorKind::ProxyBindFailed, "socket() failed");
  int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<std::uint16_t>(port));
  ::inet_pton(AF_INET, host_ == "localhost" ? "127.0.0.1" : host_.c_str(), &addr.sin_addr);
  socklen_t len = sizeof(addr);
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0 || ::listen(listen_fd_, 64) != 0 ||
      ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len) != 0) {
    const std::string why = std::strerror(errno);
    ::close(listen_fd_);
    listen_fd_ = -1;
    throw Error(ErrorKind::ProxyBindFailed, "tamper proxy cannot bind " + host_ + ":" + std::to_string(port) + ": " + why);
  }
  port_ = ntohs(addr.sin_port);
  if (::pipe2(wake_pipe_, O_CLOEXEC) != 0) throw Error(ErrorKind::ProxyBindFailed, "pipe2 failed");
  acceptor_ = std::thread([this] { accept_loop(); });
}

void TamperProxy::stop() {
  if (stopping_.exchange(true)) return;
  if (wake_pipe_[1] >= 0) (void)!::write(wake_pipe_[1], "x", 1);
  if (acceptor_.joinable()) acceptor_.join();
  {
    std::lock_guard lock(mutex_);
    for (int fd : open_fds_) ::shutdown(fd, SHUT_RDWR);
  }
  std::vector<std::thread> workers;
  {
    std::lock_guard lock(mutex_);
    workers.swap(workers_);
  }
  for (auto& w : workers) w.join();
  if (listen_fd_ >= 0) ::close(listen_fd_);
  for (int fd : wake_pipe_) {
    if (fd >= 0) ::close(fd);
  }
  listen_fd_ = wake_pipe_[0] = wake_pipe_[1] = -1;
}

std::vector<TamperProxy::Exchange> TamperProxy::exchanges() const {
  std::lock_guard lock(mutex_);
  return exchanges_;
}

std::size_t TamperProxy::rewritten_count() const {
  std::lock_guard lock(mutex_);
  return static_cast<std::size_t>(
      std::count_if(exchanges_.begin(), exchanges_.end(), [](const Exchange& e) { return e.rewritten; }));
}

void TamperProxy::accept_loop() {
  while (!stopping_) {
    pollfd fds[2] = {{listen_fd_, POLLIN, 0}, {wake_pipe_[0], POLLIN, 0}};
    if (::poll(fds, 2, -1) < 0) {
      if (errno == EINTR) continue;
      return;
    }
    if (fds[1].revents) return;
    int client = ::accept4(listen_fd_, nullptr, nullptr, SOCK_CLOEXEC);
    if (client < 0) continue;
    int one = 1;
    ::setsockopt(client, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    std::lock_guard lock(mutex_);
    open_fds_.insert(client);
    workers_.emplace_back([this, client] { serve(client); });
  }
}

void TamperProxy::serve(int client) {
  int upstream = connect_to(upstream_);
  if (upstream < 0) {
    std::lock_guard lock(mutex_);
    open_fds_.erase(client);
    ::close(client);
    return;
  }
  {
    std::lock_guard lock(mutex_);
    open_fds_.insert(upstream);
  }

  // Responses flow back verbatim.
  std::thread pump([client, upstream] {
    char buf[16384];
    while (true) {
      auto n = ::recv(upstream, buf, sizeof(buf), 0);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0 || !send_all(client, std::string_view(buf, static_cast<std::size_t>(n)))) break;
    }
    ::shutdown(client, SHUT_WR);
  });

  std::string buffer, head, body;
  while (!stopping_ && read_request(client, buffer, head, body)) {
    std::size_t hits = 0;
    std::string new_body = rewrite_body(body, header_value(head, "Content-Type"), rules_, &hits);
    std::string new_head = hits ? with_content_length(head, new_body.size()) : head;
    Exchange ex{head + body, new_head + new_body, hits > 0};
    {
      std::lock_guard lock(mutex_);
      exchanges_.push_back(ex);
    }
    if (!send_all(upstream, ex.forwarded)) break;
  }
  ::shutdown(upstream, SHUT_WR);
  pump.join();
  std::lock_guard lock(mutex_);
  open_fds_.erase(client);
  open_fds_.erase(upstream);
  ::close(client);
  ::close(upstream);
}

}  // namespace netadmin::redteam
