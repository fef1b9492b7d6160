#pragma once

#include <atomic>
#include <cstddef>
#include <mutex>
#include <set>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "netadmin/config.hpp"

// In-path HTTP relay that rewrites named form fields of client requests.
// Responses are relayed untouched. With no rules it is a byte-exact relay.
namespace netadmin::redteam {

struct RewriteRule {
  std::string field;  // form key to match
  std::string value;  // replacement (unencoded)
};

// Replaces the value of every matching `key=value` pair; all other bytes are
// kept as they were. Adds 1 to *hits per replaced pair.
std::string rewrite_form(std::string_view body, const std::vector<RewriteRule>& rules, std::size_t* hits = nullptr);

// Form bodies are rewritten directly. Envelope bodies get the form after the
// mac rewritten and keep the original mac.
std::string rewrite_body(std::string_view body, std::string_view content_type,
                         const std::vector<RewriteRule>& rules, std::size_t* hits = nullptr);

class TamperProxy {
 public:
  struct Exchange {
    std::string original;   // request as received from the client
    std::string forwarded;  // request as sent upstream
    bool rewritten = false;
  };

  TamperProxy(std::string host, Endpoint upstream, std::vector<RewriteRule> rules = {});
  ~TamperProxy();
  TamperProxy(const TamperProxy&) = delete;
  TamperProxy& operator=(const TamperProxy&) = delete;

  // Listens on `port` (0: any). Throws Error{ProxyBindFailed}.
  void start(int port = 0);
  void stop();

  Endpoint endpoint() const { return Endpoint{host_, port_}; }
  std::vector<Exchange> exchanges() const;
  std::size_t rewritten_count() const;

 private:
  void accept_loop();
  void serve(int client);

  std::string host_;
  Endpoint upstream_;
  std::vector<RewriteRule> rules_;
  int port_ = 0;
  int listen_fd_ = -1;
  int wake_pipe_[2] = {-1, -1};
  std::atomic<bool> stopping_{false};
  std::thread acceptor_;

  mutable std::mutex mutex_;
  std::vector<std::thread> workers_;
  std::set<int> open_fds_;
  std::vector<Exchange> exchanges_;
};

}  // namespace netadmin::redteam
