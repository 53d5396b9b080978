#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <memory>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "tre/error.hpp"
#include "tre/tuple_key.hpp"

namespace tre {

/// Finite ordered set of distinct tokens. Token i has id i.
class alphabet {
 public:
  explicit alphabet(std::vector<std::string> symbols)
      : symbols_(std::move(symbols)) {
    if (symbols_.empty()) throw empty_input_error("alphabet must not be empty");
    index_.reserve(symbols_.size());
    for (std::size_t i = 0; i < symbols_.size(); ++i) {
      if (!index_.emplace(symbols_[i], static_cast<symbol_id>(i)).second)
        throw format_error("duplicate alphabet symbol '" + symbols_[i] + "'");
    }
  }

  /// All 256 byte values, id == byte value.
  static alphabet full_bytes() {
    std::vector<std::string> syms;
    syms.reserve(256);
    for (int b = 0; b < 256; ++b) syms.emplace_back(1, static_cast<char>(b));
    return alphabet(std::move(syms));
  }

  /// Abstract alphabet {0, ..., size-1} whose tokens are the decimal ids.
  static alphabet indexed(std::size_t size) {
    std::vector<std::string> syms;
    syms.reserve(size);
    for (std::size_t i = 0; i < size; ++i) syms.push_back(std::to_string(i));
    return alphabet(std::move(syms));
  }

  std::size_t size() const noexcept { return symbols_.size(); }
  const std::string& symbol(symbol_id id) const { return symbols_.at(id); }
  const std::vector<std::string>& symbols() const noexcept { return symbols_; }

  std::optional<symbol_id> find(std::string_view token) const {
    auto it = index_.find(std::string(token));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  /// Printable rendering of a token: non-printable bytes become \xNN.
  std::string display(symbol_id id) const {
    const std::string& s = symbol(id);
    std::string out;
    for (unsigned char c : s) {
      if (c >= 0x20 && c < 0x7f) {
        out.push_back(static_cast<char>(c));
      } else {
        char buf[5];
        std::snprintf(buf, sizeof buf, "\\x%02x", c);
        out += buf;
      }
    }
    return out;
  }

  friend bool operator==(const alphabet& a, const alphabet& b) {
    return a.symbols_ == b.symbols_;
  }

 private:
  std::vector<std::string> symbols_;
  std::unordered_map<std::string, symbol_id> index_;
};

/// Immutable sequence of symbol ids over a shared alphabet.
class sequence {
 public:
  sequence(std::shared_ptr<const alphabet> alpha, std::vector<symbol_id> ids)
      : alphabet_(std::move(alpha)), ids_(std::move(ids)) {
    if (!alphabet_) throw format_error("sequence requires an alphabet");
    const auto n = alphabet_->size();
    for (std::size_t i = 0; i < ids_.size(); ++i) {
      if (ids_[i] >= n)
        throw bounds_error("symbol id " + std::to_string(ids_[i]) +
                           " at position " + std::to_string(i) +
                           " outside alphabet of size " + std::to_string(n));
    }
  }

  std::size_t size() const noexcept { return ids_.size(); }
  std::span<const symbol_id> ids() const noexcept { return ids_; }
  symbol_id operator[](std::size_t i) const noexcept { return ids_[i]; }
  const alphabet& symbols() const noexcept { return *alphabet_; }
  std::size_t alphabet_size() const noexcept { return alphabet_->size(); }
  const std::shared_ptr<const alphabet>& alphabet_ptr() const noexcept {
    return alphabet_;
  }

  /// Leading `length` symbols as a new sequence over the same alphabet.
  sequence prefix(std::size_t length) const {
    if (length > ids_.size())
      throw bounds_error("prefix length " + std::to_string(length) +
                         " exceeds sequence length " +
                         std::to_string(ids_.size()));
    return sequence(alphabet_,
                    std::vector<symbol_id>(ids_.begin(), ids_.begin() + length));
  }

  friend bool operator==(const sequence& a, const sequence& b) {
    return a.ids_ == b.ids_ &&
           (a.alphabet_ == b.alphabet_ || *a.alphabet_ == *b.alphabet_);
  }

 private:
  std::shared_ptr<const alphabet> alphabet_;
  std::vector<symbol_id> ids_;
};

/// Byte stream to sequence. The compact alphabet holds exactly the bytes
/// present, ids assigned in order of first occurrence; `full_alphabet`
/// uses all 256 byte values with id == byte.
inline sequence ingest_bytes(std::span<const std::uint8_t> raw,
                             bool full_alphabet = false) {
  if (raw.empty()) throw empty_input_error("input is empty");
  std::vector<symbol_id> ids(raw.size());
  if (full_alphabet) {
    std::copy(raw.begin(), raw.end(), ids.begin());
    return sequence(std::make_shared<const alphabet>(alphabet::full_bytes()),
                    std::move(ids));
  }
  std::array<int, 256> id_of;
  id_of.fill(-1);
  std::vector<std::string> syms;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    int& slot = id_of[raw[i]];
    if (slot < 0) {
      slot = static_cast<int>(syms.size());
      syms.emplace_back(1, static_cast<char>(raw[i]));
    }
    ids[i] = static_cast<symbol_id>(slot);
  }
  return sequence(std::make_shared<const alphabet>(std::move(syms)),
                  std::move(ids));
}

inline sequence ingest_bytes(std::string_view raw, bool full_alphabet = false) {
  return ingest_bytes(
      std::span<const std::uint8_t>(
          reinterpret_cast<const std::uint8_t*>(raw.data()), raw.size()),
      full_alphabet);
}

/// Each byte is taken as a symbol id directly; used for files written by
/// the generator. Every byte must be below `alphabet_size`.
inline sequence ingest_ids(std::span<const std::uint8_t> raw,
                           std::size_t alphabet_size) {
  if (raw.empty()) throw empty_input_error("input is empty");
  std::vector<symbol_id> ids(raw.begin(), raw.end());
  return sequence(
      std::make_shared<const alphabet>(alphabet::indexed(alphabet_size)),
      std::move(ids));
}

/// Parses a token list (one token per line, blank lines ignored).
inline alphabet parse_token_list(std::string_view text) {
  std::vector<std::string> tokens;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!line.empty()) tokens.emplace_back(line);
    start = end + 1;
  }
  if (tokens.empty()) throw empty_input_error("token list is empty");
  return alphabet(std::move(tokens));
}

/// Splits `text` on whitespace; every token must be declared in `declared`.
inline sequence ingest_tokens(std::string_view text,
                              std::shared_ptr<const alphabet> declared) {
  std::vector<symbol_id> ids;
  std::istringstream in{std::string(text)};
  std::string tok;
  while (in >> tok) {
    auto id = declared->find(tok);
    if (!id) throw format_error("token '" + tok + "' is not in the token list");
    ids.push_back(*id);
  }
  if (ids.empty()) throw empty_input_error("input contains no tokens");
  return sequence(std::move(declared), std::move(ids));
}

inline std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw format_error("cannot open '" + path + "'");
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

inline sequence reverse_sequence(const sequence& s) {
  std::vector<symbol_id> ids(s.ids().rbegin(), s.ids().rend());
  return sequence(s.alphabet_ptr(), std::move(ids));
}

/// The k symbols starting at `position`.
inline std::vector<symbol_id> tuple_at(const sequence& s, std::size_t position,
                                       std::size_t k) {
  if (position > s.size() || k > s.size() - position)
    throw bounds_error("window [" + std::to_string(position) + ", " +
                       std::to_string(position + k) +
                       ") outside sequence of length " +
                       std::to_string(s.size()));
  auto ids = s.ids().subspan(position, k);
  return {ids.begin(), ids.end()};
}

}  // namespace tre
