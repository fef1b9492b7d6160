#include "netadmin/ipv4.hpp"

#include <charconv>

namespace netadmin {

namespace {

std::optional<unsigned> parse_decimal(std::string_view text, unsigned max) {
  if (text.empty() || text.size() > 3) return std::nullopt;
  if (text.size() > 1 && text.front() == '0') return std::nullopt;
  unsigned value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) return std::nullopt;
  if (value > max) return std::nullopt;
  return value;
}

}  // namespace

Ipv4Cidr::Ipv4Cidr(std::uint32_t address, int prefix)
    : address_(address), prefix_(prefix) {}

std::optional<Ipv4Cidr> Ipv4Cidr::parse(std::string_view text) {
  int prefix = 32;
  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    auto bits = parse_decimal(text.substr(slash + 1), 32);
    if (!bits) return std::nullopt;
    prefix = static_cast<int>(*bits);
    text = text.substr(0, slash);
  }
  std::uint32_t address = 0;
  for (int octet = 0; octet < 4; ++octet) {
    auto dot = text.find('.');
    if ((octet < 3) != (dot != std::string_view::npos)) return std::nullopt;
    auto part = parse_decimal(text.substr(0, dot), 255);
    if (!part) return std::nullopt;
    address = (address << 8) | *part;
    text = dot == std::string_view::npos ? std::string_view{} : text.substr(dot + 1);
  }
  return Ipv4Cidr(address, prefix);
}

std::uint32_t Ipv4Cidr::mask() const noexcept {
  return prefix_ == 0 ? 0u : ~std::uint32_t{0} << (32 - prefix_);
}

bool Ipv4Cidr::contains(const Ipv4Cidr& other) const noexcept {
  return other.prefix_ >= prefix_ && (other.address_ & mask()) == network();
}

std::string Ipv4Cidr::to_string() const {
  std::string out;
  for (int shift = 24; shift >= 0; shift -= 8) {
    out += std::to_string((address_ >> shift) & 0xFF);
    if (shift) out += '.';
  }
  if (prefix_ != 32) out += "/" + std::to_string(prefix_);
  return out;
}

}  // namespace netadmin
