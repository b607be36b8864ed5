// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The Commenotes Authors

#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "commenotes/util/jsonl.hpp"
#include "commenotes/util/time.hpp"

namespace commenotes::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitRuntime = 2;

/// Bad flags, missing inputs, or input files that fail validation.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct FileDigest {
  std::string path;  // as given, relative to the data directory
  std::string sha256;
};

/// One per command invocation, written next to its outputs.
struct RunManifest {
  std::string command;
  json config = json::object();
  std::optional<std::uint64_t> seed;
  std::vector<FileDigest> inputs;
  std::vector<FileDigest> outputs;
  std::vector<FileDigest> parents;  // upstream manifests
  Instant started_at{};
  Instant finished_at{};
};

json to_json(const RunManifest& m);

/// Entry point. Returns 0 on success, 1 on validation errors, 2 on runtime
/// failures.
int run(int argc, const char* const* argv);
int run(const std::vector<std::string>& args);

}  // namespace commenotes::cli
