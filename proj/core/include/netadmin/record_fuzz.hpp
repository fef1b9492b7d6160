#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "netadmin/error.hpp"

// Differential search over the two store readers. Inputs are generated from
// a field-token dictionary and mutated; the search never sees a hand-built
// overflow payload.
namespace netadmin::store::fuzz {

struct Divergence {
  std::string input;
  std::size_t legacy_usable = 0;
  std::size_t overflow_tails = 0;
  ErrorKind strict_error = ErrorKind::LineTooLong;
  std::uint64_t iteration = 0;
};

// Legacy reader yields >= 2 usable records, at least one of them born from a
// window cut, while the strict reader refuses the same bytes.
std::optional<Divergence> classify(std::string_view input);

std::optional<Divergence> find_divergence(std::uint64_t seed, std::uint64_t max_iterations);

// One generated candidate; exposed so tests can check generator coverage.
std::string generate_candidate(std::uint64_t seed, std::uint64_t iteration);

}  // namespace netadmin::store::fuzz
