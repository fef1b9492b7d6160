#include "netadmin/services.hpp"

#include <json.hpp>

#include "netadmin/error.hpp"
#include "netadmin/form.hpp"

namespace netadmin::services {

using json = nlohmann::json;

namespace {

http::Response json_reply(const json& body, int status = 200) {
  return http::Response{status, "application/json", body.dump()};
}

http::Response health(std::string_view component, ProfileMode mode) {
  return json_reply({{"component", component}, {"profile", to_string(mode)}, {"ok", true}});
}

}  // namespace

std::string bearer_token(const http::Request& req) {
  const std::string auth = req.header("authorization");
  constexpr std::string_view prefix = "Bearer ";
  if (auth.size() <= prefix.size() || auth.compare(0, prefix.size(), prefix) != 0) {
    throw Error(ErrorKind::AuthRequired, "missing bearer token");
  }
  return auth.substr(prefix.size());
}

policy::SourceNetwork source_network(const http::Request& req) {
  const std::string value = req.header(http::kSourceNetworkHeader);
  if (value.empty()) return policy::SourceNetwork::campus;
  auto net = policy::parse_source_network(value);
  if (!net) throw Error(ErrorKind::BadRequest, "unknown source network " + value);
  return *net;
}

std::string table_to_json(const firewall::FirewallTable& table) {
  json entries = json::array();
  for (const auto& e : table.entries) {
    entries.push_back({{"rule_id", e.rule_id},
                       {"ip", e.ip},
                       {"port", e.port},
                       {"protocol", to_string(e.protocol)},
                       {"action", to_string(e.action)}});
  }
  return json{{"generation", table.generation}, {"entries", entries}}.dump();
}

firewall::FirewallTable table_from_json(std::string_view text) {
  auto doc = json::parse(text, nullptr, false);
  if (!doc.is_object()) throw Error(ErrorKind::BadRequest, "table dump is not JSON");
  firewall::FirewallTable table;
  table.generation = doc.value("generation", std::uint64_t{0});
  for (const auto& e : doc.value("entries", json::array())) {
    firewall::TableEntry entry;
    entry.rule_id = e.value("rule_id", std::uint64_t{0});
    entry.ip = e.value("ip", std::string{});
    entry.port = e.value("port", 0);
    entry.protocol = parse_protocol(e.value("protocol", std::string{"tcp"})).value_or(Protocol::tcp);
    entry.action = parse_action(e.value("action", std::string{"allow"})).value_or(Action::allow);
    table.entries.push_back(std::move(entry));
  }
  return table;
}

void mount_firewall(http::Server& server, firewall::Firewall& fw) {
  server.post("/apply", [&fw](const http::Request& req) {
    return json_reply({{"generation", fw.apply_wire(req.body)}});
  });
  server.get("/table", [&fw](const http::Request&) {
    return http::Response{200, "application/json", table_to_json(fw.dump_table())};
  });
  server.get("/health", [&fw](const http::Request&) { return health("firewall", fw.mode()); });
}

void mount_backend(http::Server& server, gatekeeper::Backend& backend) {
  server.post("/apply", [&backend](const http::Request& req) {
    return json_reply({{"generation", backend.apply_wire(req.body)}});
  });
  server.get("/health", [](const http::Request&) { return health("backend", ProfileMode::hardened); });
}

void mount_gatekeeper(http::Server& server, gatekeeper::Gatekeeper& gk) {
  server.post("/login", [&gk](const http::Request& req) {
    auto f = form::decode(req.body);
    auto res = gk.login(f["username"], f["password"]);
    json body = {{"token", res.token}};
    if (!res.channel_key_hex.empty()) body["channel_key"] = res.channel_key_hex;
    return json_reply(body);
  });
  server.post("/rules", [&gk](const http::Request& req) {
    const auto token = bearer_token(req);
    const auto source = source_network(req);
    auto sub = gatekeeper::RuleSubmission::from_form(gk.open_request(token, req.body));
    return json_reply({{"id", gk.handle_submit(token, sub, source)}}, 201);
  });
  server.get("/rules", [&gk](const http::Request& req) {
    return http::Response{200, "text/html; charset=utf-8", gk.handle_list(bearer_token(req)).html};
  });
  server.get("/rules.txt", [&gk](const http::Request& req) {
    return http::Response{200, "text/plain", gk.handle_list(bearer_token(req)).listing};
  });
  server.post(R"(/rules/(\d+)/toggle)", [&gk](const http::Request& req) {
    const auto token = bearer_token(req);
    const auto source = source_network(req);
    auto f = form::decode(gk.open_request(token, req.body));
    auto action = gatekeeper::parse_toggle_action(f["status"]);
    if (!action) throw Error(ErrorKind::BadRequest, "status must be active, inactive or renew");
    const auto id = std::stoull(req.matches.at(1));
    auto status = gk.handle_toggle(token, id, *action, source);
    return json_reply({{"id", id}, {"status", to_string(status)}});
  });
  server.get("/health", [&gk](const http::Request&) {
    return health(gk.profile().backend.port ? "front" : "gatekeeper", gk.mode());
  });
}

}  // namespace netadmin::services
