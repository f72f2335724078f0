#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace relex {

// 64-bit FNV-1a, used for cache keys and content digests. Not cryptographic;
// collision odds are negligible at the corpus sizes this tool handles.
class Fnv1a {
 public:
  void update(std::string_view data) {
    for (unsigned char c : data) {
      state_ ^= c;
      state_ *= 0x100000001b3ull;
    }
  }

  // Length-prefixes each field so that ("ab","c") and ("a","bc") differ.
  void update_field(std::string_view data) {
    update(std::to_string(data.size()));
    update("\x1f");
    update(data);
    update("\x1e");
  }

  std::uint64_t value() const { return state_; }

  std::string hex() const {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    std::uint64_t v = state_;
    for (int i = 15; i >= 0; --i) {
      out[static_cast<size_t>(i)] = digits[v & 0xf];
      v >>= 4;
    }
    return out;
  }

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ull;
};

inline std::string digest_hex(std::string_view data) {
  Fnv1a h;
  h.update(data);
  return h.hex();
}

}  // namespace relex
