#include "netadmin/http.hpp"

#include <httplib.h>

#include <algorithm>
#include <cctype>
#include <json.hpp>
#include <thread>

namespace netadmin::http {

using json = nlohmann::json;

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

}  // namespace

std::string Request::header(std::string_view name) const {
  auto it = headers.find(lower(name));
  return it == headers.end() ? std::string{} : it->second;
}

int status_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::AuthRequired:
    case ErrorKind::BadCredentials: return 401;
    case ErrorKind::BadKey:
    case ErrorKind::PolicyDenied:
    case ErrorKind::ScopeViolation: return 403;
    case ErrorKind::UnknownRule:
    case ErrorKind::UnknownEntry: return 404;
    case ErrorKind::ValidationFailed: return 422;
    case ErrorKind::LockUnavailable: return 503;
    case ErrorKind::Io:
    case ErrorKind::Config: return 500;
    default: return 400;
  }
}

Response error_response(const Error& e) {
  json body = {{"error", to_string(e.kind())}, {"message", e.what()}};
  if (e.cause()) body["cause"] = to_string(*e.cause());
  if (!e.reason().empty()) body["reason"] = e.reason();
  if (!e.field().empty()) body["field"] = e.field();
  if (e.offset()) body["offset"] = *e.offset();
  if (e.line()) body["line"] = *e.line();
  return Response{status_for(e.kind()), "application/json", body.dump()};
}

Error error_from_response(int status, std::string_view body, ErrorKind fallback) {
  auto parsed = json::parse(body, nullptr, false);
  if (parsed.is_object() && parsed.contains("error") && parsed["error"].is_string()) {
    auto kind = error_kind_from_string(parsed["error"].get<std::string>()).value_or(fallback);
    Error e(kind, parsed.value("message", std::string(to_string(kind))));
    if (parsed.contains("cause")) {
      if (auto c = error_kind_from_string(parsed["cause"].get<std::string>())) e.with_cause(*c);
    }
    if (parsed.contains("reason")) e.with_reason(parsed["reason"].get<std::string>());
    if (parsed.contains("field")) e.in_field(parsed["field"].get<std::string>());
    if (parsed.contains("offset")) e.at_offset(parsed["offset"].get<std::size_t>());
    if (parsed.contains("line")) e.at_line(parsed["line"].get<std::size_t>());
    return e;
  }
  return Error(fallback, "HTTP " + std::to_string(status) + ": " + std::string(body.substr(0, 200)));
}

std::pair<std::string, int> split_endpoint(std::string_view endpoint) {
  auto colon = endpoint.rfind(':');
  if (colon == std::string_view::npos) throw Error(ErrorKind::Config, "endpoint needs host:port");
  int port = 0;
  try {
    port = std::stoi(std::string(endpoint.substr(colon + 1)));
  } catch (...) {
    throw Error(ErrorKind::Config, "bad port in endpoint " + std::string(endpoint));
  }
  return {std::string(endpoint.substr(0, colon)), port};
}

// ---------------------------------------------------------------------------
// Server

struct Server::Impl {
  httplib::Server server;
  std::thread thread;
};

namespace {

httplib::Server::Handler wrap(Handler h) {
  return [h = std::move(h)](const httplib::Request& in, httplib::Response& out) {
    Request req;
    req.method = in.method;
    req.path = in.path;
    req.body = in.body;
    for (const auto& [k, v] : in.headers) req.headers[lower(k)] = v;
    for (const auto& m : in.matches) req.matches.push_back(m.str());
    Response res;
    try {
      res = h(req);
    } catch (const Error& e) {
      res = error_response(e);
    } catch (const std::exception& e) {
      res = error_response(Error(ErrorKind::Io, e.what()));
      res.status = 500;
    }
    out.status = res.status;
    out.set_content(res.body, res.content_type);
  };
}

}  // namespace

Server::Server() : impl_(std::make_unique<Impl>()) {
  // SO_REUSEPORT would let a second lab silently share a port.
  impl_->server.set_socket_options([](socket_t sock) {
    int yes = 1;
    ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
  });
  impl_->server.set_keep_alive_max_count(1000);
  impl_->server.set_tcp_nodelay(true);
  // Idle keep-alive connections each pin a worker; the default pool of 8 starves.
  impl_->server.new_task_queue = [] { return new httplib::ThreadPool(64); };
}

Server::~Server() { stop(); }

void Server::get(const std::string& pattern, Handler h) { impl_->server.Get(pattern, wrap(std::move(h))); }
void Server::post(const std::string& pattern, Handler h) { impl_->server.Post(pattern, wrap(std::move(h))); }

void Server::bind(const std::string& host, int port) {
  if (port == 0) {
    port_ = impl_->server.bind_to_any_port(host);
    if (port_ <= 0) throw Error(ErrorKind::PortInUse, "cannot bind any port on " + host);
    return;
  }
  if (!impl_->server.bind_to_port(host, port)) {
    throw Error(ErrorKind::PortInUse, "cannot bind " + host + ":" + std::to_string(port));
  }
  port_ = port;
}

void Server::start() {
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
}

void Server::run() { impl_->server.listen_after_bind(); }

void Server::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

// ---------------------------------------------------------------------------
// Client

struct Client::Impl {
  explicit Impl(const std::string& host, int port) : client(host, port) {}
  httplib::Client client;
};

Client::Client(std::string host, int port, std::chrono::milliseconds timeout)
    : impl_(std::make_unique<Impl>(host, port)), host_(std::move(host)), port_(port) {
  const auto secs = timeout.count() / 1000;
  const auto usecs = (timeout.count() % 1000) * 1000;
  impl_->client.set_connection_timeout(secs, usecs);
  impl_->client.set_read_timeout(secs, usecs);
  impl_->client.set_write_timeout(secs, usecs);
  impl_->client.set_keep_alive(true);
  impl_->client.set_tcp_nodelay(true);
}

Client::~Client() = default;

namespace {

Result to_result(httplib::Result&& r, const std::string& host, int port) {
  if (!r) {
    throw Error(ErrorKind::LabUnreachable,
                host + ":" + std::to_string(port) + " unreachable: " + httplib::to_string(r.error()));
  }
  return Result{r->status, r->body, r->get_header_value("Content-Type")};
}

httplib::Headers to_headers(const std::map<std::string, std::string>& headers) {
  httplib::Headers out;
  for (const auto& [k, v] : headers) out.emplace(k, v);
  return out;
}

}  // namespace

Result Client::get(const std::string& path, const std::map<std::string, std::string>& headers) {
  return to_result(impl_->client.Get(path, to_headers(headers)), host_, port_);
}

Result Client::post(const std::string& path, const std::string& body, const std::string& content_type,
                    const std::map<std::string, std::string>& headers) {
  return to_result(impl_->client.Post(path, to_headers(headers), body, content_type), host_, port_);
}

}  // namespace netadmin::http
