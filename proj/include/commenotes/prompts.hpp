// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The Commenotes Authors

#pragma once

#include <string_view>

namespace commenotes::prompts {

/// Comment-classification template; slots {post_text} and {comment_text}.
std::string_view classify_template();

/// Note-synthesis template; slots {char_limit}, {post_text} and {comments}.
std::string_view synthesize_template();

/// Default cue lexicon for the heuristic classifier.
std::string_view default_cue_lexicon();

}  // namespace commenotes::prompts
