// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The Commenotes Authors

#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace commenotes {

/// Uniform integer in [0, range) without modulo bias. The standard
/// distributions are implementation-defined, this is not.
inline std::uint64_t uniform_below(std::mt19937_64& engine, std::uint64_t range) {
  const std::uint64_t threshold = (0 - range) % range;
  for (;;) {
    const std::uint64_t r = engine();
    if (r >= threshold) return r % range;
  }
}

/// Fisher-Yates shuffle driven by uniform_below.
template <typename T>
void stable_shuffle(std::vector<T>& items, std::mt19937_64& engine) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(uniform_below(engine, i));
    std::swap(items[i - 1], items[j]);
  }
}

}  // namespace commenotes
