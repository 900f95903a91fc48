#pragma once

#include <string>
#include <string_view>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

namespace stormgen {

/// Lower-case hex SHA-256 digest.
std::string sha256_hex(std::string_view bytes);

/// Digest of the canonical (sorted-key, compact) serialization.
std::string json_hash(const nlohmann::json& doc);

/// Digest of the raw bytes of a matrix.
std::string matrix_hash(const Eigen::MatrixXd& m);

}  // namespace stormgen
