#pragma once

#include <optional>
#include <string_view>

namespace netadmin {

// Global lab switch: faithful-vulnerable or fully-mitigated behaviour.
enum class ProfileMode { vulnerable, hardened };

inline std::string_view to_string(ProfileMode m) {
  return m == ProfileMode::vulnerable ? "vulnerable" : "hardened";
}

inline std::optional<ProfileMode> parse_profile_mode(std::string_view text) {
  if (text == "vulnerable") return ProfileMode::vulnerable;
  if (text == "hardened") return ProfileMode::hardened;
  return std::nullopt;
}

}  // namespace netadmin
