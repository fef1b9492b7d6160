#include <netadmin/recordstore.hpp>

int main() {
  netadmin::FirewallRule r;
  r.id = 1;
  r.owner = "alice";
  r.ip = "10.10.1.5";
  r.port = 22;
  r.created = 1;
  r.expires = 2;
  const auto bytes = netadmin::store::serialize_rule(r, netadmin::store::SerializeMode::strict);
  return netadmin::store::parse_strict(bytes).at(0) == r ? 0 : 1;
}
