#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>

namespace condfilter {

// FNV-1a 64-bit. Used for provenance digests in reports and task histories,
// not for security.
class Digest {
 public:
  Digest& update(const void* bytes, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(bytes);
    for (std::size_t i = 0; i < len; ++i) {
      hash_ ^= p[i];
      hash_ *= 0x100000001b3ULL;
    }
    return *this;
  }

  template <typename T>
  Digest& update_value(const T& v) {
    return update(&v, sizeof(T));
  }

  std::uint64_t value() const { return hash_; }

  std::string hex() const {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    std::uint64_t h = hash_;
    for (int i = 15; i >= 0; --i) {
      out[static_cast<std::size_t>(i)] = digits[h & 0xf];
      h >>= 4;
    }
    return out;
  }

 private:
  std::uint64_t hash_ = 0xcbf29ce484222325ULL;
};

std::string digest_file(const std::string& path);

}  // namespace condfilter
