#pragma once

#include <string>
#include <string_view>

#include "netadmin/firewall.hpp"
#include "netadmin/gatekeeper.hpp"
#include "netadmin/http.hpp"

// HTTP routes for each lab component.
//
// firewall:   POST /apply, GET /table, GET /health
// gatekeeper: POST /login, POST /rules, GET /rules, GET /rules.txt,
//             POST /rules/<id>/toggle, GET /health
// back end:   POST /apply, GET /health
namespace netadmin::services {

void mount_firewall(http::Server& server, firewall::Firewall& fw);
void mount_gatekeeper(http::Server& server, gatekeeper::Gatekeeper& gk);
void mount_backend(http::Server& server, gatekeeper::Backend& backend);

std::string table_to_json(const firewall::FirewallTable& table);
firewall::FirewallTable table_from_json(std::string_view text);

// "Authorization: Bearer <token>".
std::string bearer_token(const http::Request& req);
// Missing header means campus. Throws BadRequest for unknown values.
policy::SourceNetwork source_network(const http::Request& req);

}  // namespace netadmin::services
