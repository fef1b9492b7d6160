#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace netadmin {

// IPv4 address or CIDR block. A bare address is a /32.
class Ipv4Cidr {
 public:
  Ipv4Cidr() = default;
  Ipv4Cidr(std::uint32_t address, int prefix);

  // Dotted quad with optional "/prefix". Rejects leading zeros, signs,
  // whitespace and anything that is not plain decimal.
  static std::optional<Ipv4Cidr> parse(std::string_view text);

  std::uint32_t address() const noexcept { return address_; }
  int prefix() const noexcept { return prefix_; }
  std::uint32_t mask() const noexcept;
  std::uint32_t network() const noexcept { return address_ & mask(); }

  // True when every address in `other` lies inside this block.
  bool contains(const Ipv4Cidr& other) const noexcept;

  std::string to_string() const;

  friend bool operator==(const Ipv4Cidr&, const Ipv4Cidr&) = default;

 private:
  std::uint32_t address_ = 0;
  int prefix_ = 32;
};

}  // namespace netadmin
