#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "tre/error.hpp"

namespace tre {

using symbol_id = std::uint32_t;
using tuple_key = std::uint64_t;

/// Largest context order accepted anywhere in the library.
inline constexpr std::size_t max_context_order = 12;

/// Integer encoding of fixed-length tuples over an alphabet of size A:
/// (s0, ..., s_{k-1}) maps to sum s_i * A^(k-1-i), i.e. big-endian base A.
/// The whole key space A^k must fit in 64 bits.
class tuple_codec {
 public:
  tuple_codec(std::size_t alphabet_size, std::size_t length)
      : alphabet_(alphabet_size), length_(length) {
    if (alphabet_size == 0) throw order_error("alphabet size must be positive");
    space_ = 1;
    for (std::size_t i = 0; i < length; ++i) {
      if (space_ > std::numeric_limits<tuple_key>::max() / alphabet_size)
        throw order_error("tuples of length " + std::to_string(length) +
                          " over " + std::to_string(alphabet_size) +
                          " symbols do not fit a 64-bit key");
      space_ *= alphabet_size;
    }
    high_ = length == 0 ? 1 : space_ / alphabet_size;
  }

  std::size_t alphabet_size() const noexcept { return alphabet_; }
  std::size_t length() const noexcept { return length_; }
  /// Number of distinct keys, A^length.
  tuple_key space() const noexcept { return space_; }
  /// Place value of the first symbol, A^(length-1).
  tuple_key leading_weight() const noexcept { return high_; }

  tuple_key encode(std::span<const symbol_id> tuple) const {
    if (tuple.size() != length_)
      throw bounds_error("tuple length " + std::to_string(tuple.size()) +
                         " does not match codec length " +
                         std::to_string(length_));
    tuple_key key = 0;
    for (symbol_id s : tuple) {
      if (s >= alphabet_)
        throw bounds_error("symbol id " + std::to_string(s) +
                           " outside alphabet of size " +
                           std::to_string(alphabet_));
      key = key * alphabet_ + s;
    }
    return key;
  }

  std::vector<symbol_id> decode(tuple_key key) const {
    std::vector<symbol_id> out(length_);
    for (std::size_t i = length_; i-- > 0;) {
      out[i] = static_cast<symbol_id>(key % alphabet_);
      key /= alphabet_;
    }
    return out;
  }

  /// Key of the same tuple read back to front.
  tuple_key reverse(tuple_key key) const noexcept {
    tuple_key out = 0;
    for (std::size_t i = 0; i < length_; ++i) {
      out = out * alphabet_ + key % alphabet_;
      key /= alphabet_;
    }
    return out;
  }

  /// Key of the first length-1 symbols.
  tuple_key drop_last(tuple_key key) const noexcept { return key / alphabet_; }
  /// Key of the last length-1 symbols.
  tuple_key drop_first(tuple_key key) const noexcept {
    return length_ == 0 ? 0 : key % high_;
  }
  symbol_id last(tuple_key key) const noexcept {
    return static_cast<symbol_id>(key % alphabet_);
  }
  symbol_id first(tuple_key key) const noexcept {
    return static_cast<symbol_id>(key / high_);
  }
  /// Key of (context..., next) given the key of the context prefix.
  tuple_key extend(tuple_key prefix, symbol_id next) const noexcept {
    return prefix * alphabet_ + next;
  }

 private:
  std::size_t alphabet_;
  std::size_t length_;
  tuple_key space_ = 1;
  tuple_key high_ = 1;
};

inline void check_context_order(std::size_t order) {
  if (order > max_context_order)
    throw order_error("context order " + std::to_string(order) +
                      " exceeds the supported maximum of " +
                      std::to_string(max_context_order));
}

}  // namespace tre
