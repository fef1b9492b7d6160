// Component-to-component transports used by the gatekeeper and back end.
#include <json.hpp>

#include "netadmin/error.hpp"
#include "netadmin/gatekeeper.hpp"
#include "netadmin/http.hpp"

namespace netadmin::gatekeeper {

namespace {

std::uint64_t generation_from(const http::Result& res) {
  if (!res.ok()) throw http::error_from_response(res.status, res.body);
  auto doc = nlohmann::json::parse(res.body, nullptr, false);
  if (doc.is_discarded() || !doc.contains("generation")) {
    throw Error(ErrorKind::BadRequest, "apply reply without generation");
  }
  return doc["generation"].get<std::uint64_t>();
}

std::string apply_wire(const firewall::ApplyRequest& req, ProfileMode mode) {
  return mode == ProfileMode::hardened ? firewall::seal_apply_request(req) : firewall::encode_apply_form(req);
}

class HttpFirewallLink final : public FirewallLink {
 public:
  HttpFirewallLink(const Endpoint& ep, ProfileMode mode) : client_(ep.host, ep.port), mode_(mode) {}

  std::uint64_t apply(const firewall::ApplyRequest& req) override {
    const auto type = mode_ == ProfileMode::hardened ? http::kEnvelopeType : http::kFormType;
    std::lock_guard lock(mutex_);
    return generation_from(client_.post("/apply", apply_wire(req, mode_), type));
  }

 private:
  http::Client client_;
  ProfileMode mode_;
  std::mutex mutex_;
};

class LocalFirewallLink final : public FirewallLink {
 public:
  explicit LocalFirewallLink(firewall::Firewall& fw) : fw_(fw) {}
  std::uint64_t apply(const firewall::ApplyRequest& req) override {
    return fw_.apply_wire(apply_wire(req, fw_.mode()));
  }

 private:
  firewall::Firewall& fw_;
};

std::string channel_key(const LabProfile& profile) {
  auto key = hardening::from_hex(profile.channel_key_hex);
  if (!key || key->size() < hardening::kMinKeySize) {
    throw Error(ErrorKind::Config, "channel.key_hex must hold at least 32 bytes");
  }
  return *key;
}

std::string seal_backend_request(const BackendRequest& req, const std::string& key_id, const std::string& key) {
  return hardening::encode_envelope(hardening::sign_envelope(req.to_form(), key_id, key));
}

class HttpBackendLink final : public BackendLink {
 public:
  explicit HttpBackendLink(const LabProfile& profile)
      : client_(profile.backend.host, profile.backend.port),
        key_id_(profile.channel_key_id),
        key_(channel_key(profile)) {}

  std::uint64_t forward(const BackendRequest& req) override {
    std::lock_guard lock(mutex_);
    return generation_from(client_.post("/apply", seal_backend_request(req, key_id_, key_), http::kEnvelopeType));
  }

 private:
  http::Client client_;
  std::string key_id_;
  std::string key_;
  std::mutex mutex_;
};

class LocalBackendLink final : public BackendLink {
 public:
  LocalBackendLink(Backend& backend, const LabProfile& profile)
      : backend_(backend), key_id_(profile.channel_key_id), key_(channel_key(profile)) {}

  std::uint64_t forward(const BackendRequest& req) override {
    return backend_.apply_wire(seal_backend_request(req, key_id_, key_));
  }

 private:
  Backend& backend_;
  std::string key_id_;
  std::string key_;
};

}  // namespace

std::unique_ptr<FirewallLink> http_firewall_link(const Endpoint& endpoint, ProfileMode mode) {
  return std::make_unique<HttpFirewallLink>(endpoint, mode);
}

std::unique_ptr<FirewallLink> local_firewall_link(firewall::Firewall& fw) {
  return std::make_unique<LocalFirewallLink>(fw);
}

std::unique_ptr<BackendLink> http_backend_link(const LabProfile& profile) {
  return std::make_unique<HttpBackendLink>(profile);
}

std::unique_ptr<BackendLink> local_backend_link(Backend& backend, const LabProfile& profile) {
  return std::make_unique<LocalBackendLink>(backend, profile);
}

}  // namespace netadmin::gatekeeper
