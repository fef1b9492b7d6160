#include "netadmin/hardening.hpp"

#include <openssl/crypto.h>
#include <openssl/evp.h>
#include <openssl/hmac.h>
#include <openssl/rand.h>

#include <cctype>
#include <cstring>

#include "netadmin/error.hpp"

namespace netadmin::hardening {

namespace {

bool is_ascii_letter(unsigned char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }

Mac compute_mac(std::string_view body, std::string_view key) {
  if (key.size() < kMinKeySize) {
    throw Error(ErrorKind::KeyTooShort,
                "envelope key has " + std::to_string(key.size()) + " bytes, need at least 32");
  }
  Mac mac{};
  unsigned int len = 0;
  HMAC(EVP_sha256(), key.data(), static_cast<int>(key.size()),
       reinterpret_cast<const unsigned char*>(body.data()), body.size(), mac.data(), &len);
  return mac;
}

}  // namespace

std::string sanitize_description(std::string_view desc, const FieldLimits& limits) {
  if (desc.size() > limits.max_description) {
    throw Error(ErrorKind::FieldTooLong,
                "description is " + std::to_string(desc.size()) + " bytes, limit " +
                    std::to_string(limits.max_description))
        .at_offset(limits.max_description)
        .in_field("description");
  }
  for (std::size_t i = 0; i < desc.size(); ++i) {
    const auto c = static_cast<unsigned char>(desc[i]);
    if (c == '|' || c == '\n' || c == '\r') {
      throw Error(ErrorKind::ForbiddenDelimiter,
                  "forbidden delimiter byte at offset " + std::to_string(i))
          .at_offset(i)
          .in_field("description");
    }
    if (c == '<') {
      // A trailing '<' is refused too, otherwise two accepted strings could
      // concatenate into markup.
      const bool last = i + 1 == desc.size();
      const auto next = last ? 0 : static_cast<unsigned char>(desc[i + 1]);
      if (last || is_ascii_letter(next) || next == '/') {
        throw Error(ErrorKind::MarkupRejected, "markup at offset " + std::to_string(i))
            .at_offset(i)
            .in_field("description");
      }
    }
  }
  return std::string(desc);
}

std::string escape_markup(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&#39;"; break;
      default: out += c;
    }
  }
  return out;
}

SignedEnvelope sign_envelope(std::string_view body, std::string_view key_id, std::string_view key) {
  SignedEnvelope env;
  env.key_id = std::string(key_id);
  env.mac = compute_mac(body, key);
  env.body = std::string(body);
  return env;
}

bool verify_envelope(const SignedEnvelope& env, std::string_view key) {
  const Mac expected = compute_mac(env.body, key);
  return CRYPTO_memcmp(expected.data(), env.mac.data(), kMacSize) == 0;
}

std::string encode_envelope(const SignedEnvelope& env) {
  std::string wire;
  wire.reserve(env.key_id.size() + kMacSize + 2 + env.body.size());
  wire += env.key_id;
  wire += '\0';
  wire.append(reinterpret_cast<const char*>(env.mac.data()), kMacSize);
  wire += '\0';
  wire += env.body;
  return wire;
}

std::optional<SignedEnvelope> decode_envelope(std::string_view wire) {
  const auto sep = wire.find('\0');
  if (sep == std::string_view::npos || sep == 0) return std::nullopt;
  if (wire.size() < sep + 1 + kMacSize + 1) return std::nullopt;
  if (wire[sep + 1 + kMacSize] != '\0') return std::nullopt;
  SignedEnvelope env;
  env.key_id = std::string(wire.substr(0, sep));
  std::memcpy(env.mac.data(), wire.data() + sep + 1, kMacSize);
  env.body = std::string(wire.substr(sep + 2 + kMacSize));
  return env;
}

std::string random_bytes(std::size_t count) {
  std::string out(count, '\0');
  if (count && RAND_bytes(reinterpret_cast<unsigned char*>(out.data()), static_cast<int>(count)) != 1) {
    throw Error(ErrorKind::Io, "system randomness source failed");
  }
  return out;
}

std::string to_hex(std::string_view bytes) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (unsigned char c : bytes) {
    out += kDigits[c >> 4];
    out += kDigits[c & 0xF];
  }
  return out;
}

std::optional<std::string> from_hex(std::string_view hex) {
  if (hex.size() % 2) return std::nullopt;
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
  };
  std::string out;
  out.reserve(hex.size() / 2);
  for (std::size_t i = 0; i < hex.size(); i += 2) {
    const int hi = nibble(hex[i]);
    const int lo = nibble(hex[i + 1]);
    if (hi < 0 || lo < 0) return std::nullopt;
    out += static_cast<char>((hi << 4) | lo);
  }
  return out;
}

bool constant_time_equal(std::string_view a, std::string_view b) noexcept {
  if (a.size() != b.size()) return false;
  return a.empty() || CRYPTO_memcmp(a.data(), b.data(), a.size()) == 0;
}

}  // namespace netadmin::hardening
