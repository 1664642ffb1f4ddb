// Copyright 2026 The latentrec Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef LATENTREC_COMMON_HASH_HPP_
#define LATENTREC_COMMON_HASH_HPP_

#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

namespace latentrec {

// FNV-1a, 64 bit. Stable across platforms, which std::hash is not.
class Fnv1a {
 public:
  void update(std::string_view bytes) {
    for (unsigned char c : bytes) {
      state_ ^= c;
      state_ *= 0x100000001b3ULL;
    }
  }
  void update(const void* data, std::size_t size) {
    update(std::string_view(static_cast<const char*>(data), size));
  }
  std::uint64_t digest() const { return state_; }

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

inline std::uint64_t fnv1a(std::string_view bytes) {
  Fnv1a h;
  h.update(bytes);
  return h.digest();
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace latentrec

#endif  // LATENTREC_COMMON_HASH_HPP_
