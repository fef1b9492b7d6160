#pragma once

#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "netadmin/error.hpp"

// Thin HTTP layer over cpp-httplib so the rest of the code base never
// includes it directly.
namespace netadmin::http {

struct Request {
  std::string method;
  std::string path;
  std::map<std::string, std::string> headers;  // lower-cased names
  std::vector<std::string> matches;            // regex captures, [0] = whole path
  std::string body;

  std::string header(std::string_view name) const;
};

struct Response {
  int status = 200;
  std::string content_type = "text/plain";
  std::string body;
};

using Handler = std::function<Response(const Request&)>;

// JSON error body with kind, cause, reason, field, offset, line and message.
Response error_response(const Error& e);
int status_for(ErrorKind kind);
// Rebuilds the Error carried in a non-2xx response. Falls back to
// `fallback` when the body is not one of ours.
Error error_from_response(int status, std::string_view body, ErrorKind fallback = ErrorKind::BadRequest);

class Server {
 public:
  Server();
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  // `pattern` is a regular expression over the path. Handlers that throw
  // netadmin::Error produce error_response(); other exceptions give 500.
  void get(const std::string& pattern, Handler h);
  void post(const std::string& pattern, Handler h);

  // Throws Error{PortInUse} when the socket cannot be bound. Port 0 picks a
  // free port; see port().
  void bind(const std::string& host, int port);
  int port() const noexcept { return port_; }

  void start();        // background thread
  void run();          // blocks until stop()
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  int port_ = 0;
};

struct Result {
  int status = 0;
  std::string body;
  std::string content_type;

  bool ok() const noexcept { return status >= 200 && status < 300; }
};

class Client {
 public:
  Client(std::string host, int port,
         std::chrono::milliseconds timeout = std::chrono::milliseconds(5000));
  ~Client();
  Client(const Client&) = delete;
  Client& operator=(const Client&) = delete;

  // Throw Error{LabUnreachable} on connection failure.
  Result get(const std::string& path, const std::map<std::string, std::string>& headers = {});
  Result post(const std::string& path, const std::string& body, const std::string& content_type,
              const std::map<std::string, std::string>& headers = {});

  const std::string& host() const noexcept { return host_; }
  int port() const noexcept { return port_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::string host_;
  int port_;
};

// Parses "host:port".
std::pair<std::string, int> split_endpoint(std::string_view endpoint);

inline constexpr const char* kFormType = "application/x-www-form-urlencoded";
inline constexpr const char* kEnvelopeType = "application/x-netadmin-envelope";
inline constexpr const char* kSourceNetworkHeader = "X-Lab-Source-Network";

}  // namespace netadmin::http
