#pragma once

#include <string>

#include <nlohmann/json.hpp>

namespace she {

// Lowercase hex SHA-256 of a byte string.
std::string sha256_hex(const std::string& bytes);

// Digest of the canonical (sorted-key, no-whitespace) serialization of a JSON value.
std::string canonical_json_digest(const nlohmann::json& j);

}  // namespace she
