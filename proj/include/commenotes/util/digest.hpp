// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The Commenotes Authors

#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace commenotes {

/// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view bytes);

/// Throws std::runtime_error when the file cannot be read.
std::string sha256_file_hex(const std::filesystem::path& path);

/// 128 bits from the OS CSPRNG, hex encoded.
std::string random_token_hex();

}  // namespace commenotes
