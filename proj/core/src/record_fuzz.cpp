#include "netadmin/record_fuzz.hpp"

#include <array>
#include <random>

#include "netadmin/recordstore.hpp"

namespace netadmin::store::fuzz {

namespace {

constexpr std::array<std::string_view, 12> kTokens = {
    "tcp", "udp", "allow", "deny", "active", "inactive", "22", "80", "443", "53", "root", "alice"};

std::uint64_t mix(std::uint64_t seed, std::uint64_t iteration) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (iteration + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

class Generator {
 public:
  explicit Generator(std::uint64_t seed) : rng_(seed) {}

  std::size_t below(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_); }
  bool chance(double p) { return std::bernoulli_distribution(p)(rng_); }

  std::string ip() {
    return std::to_string(below(256)) + "." + std::to_string(below(256)) + "." +
           std::to_string(below(256)) + "." + std::to_string(below(256));
  }

  std::string number() { return std::to_string(1 + below(chance(0.5) ? 100 : 2'000'000'000)); }

  std::string letters(std::size_t n) {
    std::string out;
    for (std::size_t i = 0; i < n; ++i) out += static_cast<char>('a' + below(26));
    return out;
  }

  // Free text that occasionally carries field-shaped fragments.
  std::string text(std::size_t target) {
    std::string out;
    while (out.size() < target) {
      switch (below(10)) {
        case 0: case 1: case 2: case 3: out += letters(1 + below(40)); break;
        case 4: out += ' '; break;
        case 5: out += '|'; out += kTokens[below(kTokens.size())]; break;
        case 6: out += '|'; out += number(); break;
        case 7: out += '|'; out += ip(); break;
        case 8: out += static_cast<char>(below(256)); break;
        default: out += number(); break;
      }
    }
    return out;
  }

  std::string record() {
    std::string out = number() + '|' + std::string(kTokens[10 + below(2)]) + '|' + ip() + '|' +
                      std::string(kTokens[6 + below(4)]) + '|' + std::string(kTokens[below(2)]) + '|' +
                      std::string(kTokens[2 + below(2)]) + '|' + std::string(kTokens[4 + below(2)]) + '|' +
                      number() + '|' + number() + '|';
    // Long descriptions are where the readers disagree; make them common.
    out += text(chance(0.5) ? below(1600) : below(200));
    if (chance(0.95)) out += '\n';
    return out;
  }

 private:
  std::mt19937_64 rng_;
};

}  // namespace

std::optional<Divergence> classify(std::string_view input) {
  Divergence d;
  for (const auto& rec : parse_legacy(input)) {
    if (!rec.usable()) continue;
    ++d.legacy_usable;
    if (rec.classification == RecordClass::overflow_tail) ++d.overflow_tails;
  }
  if (d.legacy_usable < 2 || d.overflow_tails == 0) return std::nullopt;
  try {
    parse_strict(input);
    return std::nullopt;
  } catch (const Error& e) {
    d.strict_error = e.kind();
  }
  d.input = std::string(input);
  return d;
}

std::string generate_candidate(std::uint64_t seed, std::uint64_t iteration) {
  Generator gen(mix(seed, iteration));
  std::string out;
  const std::size_t records = 1 + gen.below(3);
  for (std::size_t i = 0; i < records; ++i) out += gen.record();
  return out;
}

std::optional<Divergence> find_divergence(std::uint64_t seed, std::uint64_t max_iterations) {
  for (std::uint64_t i = 0; i < max_iterations; ++i) {
    if (auto d = classify(generate_candidate(seed, i))) {
      d->iteration = i;
      return d;
    }
  }
  return std::nullopt;
}

}  // namespace netadmin::store::fuzz
