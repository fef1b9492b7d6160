#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace netadmin::hardening {

// Size limits enforced by the strict record path and the hardened gatekeeper.
struct FieldLimits {
  std::size_t max_owner = 128;
  std::size_t max_description = 256;
  std::size_t max_record = 999;

  // Widest possible serialization of every fixed-width field plus the nine
  // delimiters and the terminator.
  static constexpr std::size_t kFixedFieldOverhead = 20 + 18 + 5 + 3 + 5 + 8 + 20 + 20 + 10;

  constexpr bool consistent() const noexcept {
    return max_record > kFixedFieldOverhead &&
           max_owner + max_description < max_record - kFixedFieldOverhead;
  }
};

// Accepts or rejects a rule description; never rewrites it.
// Throws Error{FieldTooLong | ForbiddenDelimiter | MarkupRejected} with the
// offending byte offset. Length is checked first.
std::string sanitize_description(std::string_view desc, const FieldLimits& limits = {});

// HTML-escapes the five markup metacharacters. Not idempotent: apply once.
std::string escape_markup(std::string_view text);

inline constexpr std::size_t kMacSize = 32;
inline constexpr std::size_t kMinKeySize = 32;
using Mac = std::array<std::uint8_t, kMacSize>;

// HMAC-SHA256 integrity envelope.
//
// Wire form: key_id 0x00 mac(32 raw bytes) 0x00 body. The mac sits at a
// fixed offset so a tampering relay can address body bytes exactly.
struct SignedEnvelope {
  std::string key_id;
  Mac mac{};
  std::string body;
};

// Throws Error{KeyTooShort} when key has fewer than 32 bytes.
SignedEnvelope sign_envelope(std::string_view body, std::string_view key_id, std::string_view key);
bool verify_envelope(const SignedEnvelope& env, std::string_view key);

std::string encode_envelope(const SignedEnvelope& env);
std::optional<SignedEnvelope> decode_envelope(std::string_view wire);

// Byte utilities shared by the key-handling modules.
std::string random_bytes(std::size_t count);
std::string to_hex(std::string_view bytes);
std::optional<std::string> from_hex(std::string_view hex);
bool constant_time_equal(std::string_view a, std::string_view b) noexcept;

}  // namespace netadmin::hardening
