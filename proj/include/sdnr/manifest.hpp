#pragma once

#include <string>

#include <nlohmann/json.hpp>

namespace sdnr {

inline constexpr const char* kToolVersion = "sdnr 0.1.0";

/// Lowercase hex SHA-256.
std::string sha256_hex(const std::string& data);
std::string sha256_file(const std::string& path);

/// Hash of the compact dump of `manifest`; object keys are already sorted.
std::string manifest_hash(const nlohmann::json& manifest);

}  // namespace sdnr
