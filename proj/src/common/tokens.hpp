// Copyright 2026 The latentrec Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef LATENTREC_COMMON_TOKENS_HPP_
#define LATENTREC_COMMON_TOKENS_HPP_

namespace latentrec::tokens {

// Reserved ids; every vocabulary starts with these four.
inline constexpr int kPad = 0;
inline constexpr int kBos = 1;
inline constexpr int kEos = 2;
inline constexpr int kSep = 3;
inline constexpr int kNumSpecial = 4;

inline constexpr const char* kPadText = "<pad>";
inline constexpr const char* kBosText = "<bos>";
inline constexpr const char* kEosText = "<eos>";
inline constexpr const char* kSepText = "<sep>";
inline constexpr const char* kSpecialText[kNumSpecial] = {kPadText, kBosText, kEosText, kSepText};

}  // namespace latentrec::tokens

#endif  // LATENTREC_COMMON_TOKENS_HPP_
