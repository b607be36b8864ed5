// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The Commenotes Authors

#pragma once

#include <cstddef>
#include <filesystem>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace commenotes {

using json = nlohmann::json;

struct NumberedLine {
  std::size_t line_no = 0;  // 1-based
  std::string text;
  bool terminated = true;   // false only for a final line without '\n'
};

/// Reads every non-blank line. Throws std::runtime_error if unreadable.
std::vector<NumberedLine> read_lines(const std::filesystem::path& path);

/// Serializes each object on one line, sorted keys, trailing '\n'.
void write_jsonl(const std::filesystem::path& path, const std::vector<json>& rows);

/// Writes `content` through a temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

std::string read_file(const std::filesystem::path& path);

/// Append-only log. Every append() is a single write() followed by fsync()
/// before it returns, so callers may acknowledge once append() succeeds.
class DurableAppender {
 public:
  explicit DurableAppender(std::filesystem::path path);
  ~DurableAppender();
  DurableAppender(const DurableAppender&) = delete;
  DurableAppender& operator=(const DurableAppender&) = delete;

  void append(std::string_view bytes);
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  int fd_ = -1;
  std::mutex mu_;
};

}  // namespace commenotes
