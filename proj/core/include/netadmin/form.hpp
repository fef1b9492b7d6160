#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

// application/x-www-form-urlencoded bodies.
namespace netadmin::form {

using Fields = std::vector<std::pair<std::string, std::string>>;

std::string encode(const Fields& fields);
std::string encode_component(std::string_view text);

// Later duplicates win. Malformed percent escapes are kept literally, as
// common servers do.
std::map<std::string, std::string> decode(std::string_view body);
std::string decode_component(std::string_view text);

}  // namespace netadmin::form
