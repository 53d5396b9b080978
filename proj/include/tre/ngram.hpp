#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <thread>
#include <unordered_map>
#include <utility>
#include <vector>

#include "tre/error.hpp"
#include "tre/sequence.hpp"
#include "tre/tuple_key.hpp"

namespace tre {

/// Exact overlapping-window counts of k-tuples. Entries are kept sorted by
/// key, so iteration order (and anything summed over it) is deterministic.
class ngram_table {
 public:
  using entry = std::pair<tuple_key, std::uint64_t>;

  ngram_table(std::size_t order, std::size_t alphabet_size,
              std::uint64_t window_total, std::vector<entry> entries)
      : codec_(alphabet_size, order),
        window_total_(window_total),
        entries_(std::move(entries)) {
    std::sort(entries_.begin(), entries_.end());
    std::erase_if(entries_, [](const entry& e) { return e.second == 0; });
  }

  std::size_t order() const noexcept { return codec_.length(); }
  std::size_t alphabet_size() const noexcept { return codec_.alphabet_size(); }
  const tuple_codec& codec() const noexcept { return codec_; }
  /// Number of windows the counts were taken over.
  std::uint64_t window_total() const noexcept { return window_total_; }
  /// Nonzero entries, ascending by key.
  std::span<const entry> entries() const noexcept { return entries_; }
  std::size_t distinct() const noexcept { return entries_.size(); }

  std::uint64_t count(tuple_key key) const noexcept {
    auto it = std::lower_bound(entries_.begin(), entries_.end(),
                               entry{key, 0});
    return it != entries_.end() && it->first == key ? it->second : 0;
  }

  std::uint64_t count(std::span<const symbol_id> tuple) const {
    return count(codec_.encode(tuple));
  }

  std::uint64_t sum() const noexcept {
    std::uint64_t s = 0;
    for (const auto& e : entries_) s += e.second;
    return s;
  }

  friend bool operator==(const ngram_table& a, const ngram_table& b) {
    return a.order() == b.order() && a.alphabet_size() == b.alphabet_size() &&
           a.window_total_ == b.window_total_ && a.entries_ == b.entries_;
  }

 private:
  tuple_codec codec_;
  std::uint64_t window_total_;
  std::vector<entry> entries_;
};

namespace detail {

// Key spaces up to this size are counted in a flat array.
inline constexpr tuple_key dense_count_limit = tuple_key{1} << 22;

struct count_sink {
  std::vector<std::uint64_t> dense;
  std::unordered_map<tuple_key, std::uint64_t> sparse;
};

inline void count_windows(std::span<const symbol_id> ids, std::size_t k,
                          const tuple_codec& codec, std::size_t first,
                          std::size_t last, count_sink& sink) {
  const bool dense = !sink.dense.empty();
  const tuple_key high = codec.leading_weight();
  const std::size_t a = codec.alphabet_size();
  tuple_key key = 0;
  for (std::size_t i = first; i < first + k - 1; ++i) key = key * a + ids[i];
  for (std::size_t w = first; w < last; ++w) {
    key = (k == 1 ? 0 : key % high) * a + ids[w + k - 1];
    if (dense)
      ++sink.dense[key];
    else
      ++sink.sparse[key];
  }
}

}  // namespace detail

/// Counts every contiguous k-window of `s`. With threads > 1 the window
/// range is split into chunks (each chunk reads k-1 symbols past its end)
/// and per-chunk tables are merged; the result is identical to threads == 1.
inline ngram_table count_ngrams(const sequence& s, std::size_t k,
                                unsigned threads = 1) {
  if (k == 0) throw order_error("n-gram order must be at least 1");
  if (k > s.size())
    throw order_error("n-gram order " + std::to_string(k) +
                      " exceeds sequence length " + std::to_string(s.size()));
  const tuple_codec codec(s.alphabet_size(), k);
  const std::size_t windows = s.size() - k + 1;
  const bool dense = codec.space() <= detail::dense_count_limit;

  threads = static_cast<unsigned>(
      std::clamp<std::size_t>(threads, 1, windows));
  std::vector<detail::count_sink> sinks(threads);
  for (auto& sink : sinks)
    if (dense) sink.dense.assign(codec.space(), 0);

  const std::size_t step = (windows + threads - 1) / threads;
  if (threads == 1) {
    detail::count_windows(s.ids(), k, codec, 0, windows, sinks[0]);
  } else {
    std::vector<std::jthread> workers;
    for (unsigned t = 0; t < threads; ++t) {
      const std::size_t first = std::min(windows, t * step);
      const std::size_t last = std::min(windows, first + step);
      if (first == last) continue;
      workers.emplace_back([&, t, first, last] {
        detail::count_windows(s.ids(), k, codec, first, last, sinks[t]);
      });
    }
  }

  std::vector<ngram_table::entry> entries;
  if (dense) {
    auto& total = sinks[0].dense;
    for (unsigned t = 1; t < threads; ++t)
      for (tuple_key key = 0; key < codec.space(); ++key)
        total[key] += sinks[t].dense[key];
    for (tuple_key key = 0; key < codec.space(); ++key)
      if (total[key] != 0) entries.emplace_back(key, total[key]);
  } else {
    auto& total = sinks[0].sparse;
    for (unsigned t = 1; t < threads; ++t)
      for (const auto& [key, c] : sinks[t].sparse) total[key] += c;
    entries.assign(total.begin(), total.end());
  }
  return ngram_table(k, s.alphabet_size(), windows, std::move(entries));
}

namespace detail {

template <typename Project>
ngram_table marginal(const ngram_table& t, Project project) {
  if (t.order() == 0)
    throw order_error("cannot marginalize a table of order 0");
  std::unordered_map<tuple_key, std::uint64_t> acc;
  for (const auto& [key, c] : t.entries()) acc[project(key)] += c;
  return ngram_table(t.order() - 1, t.alphabet_size(), t.window_total(),
                     {acc.begin(), acc.end()});
}

}  // namespace detail

/// out[t] = sum over s of T[(t, s)]: how many windows start with t. For a
/// table counted from S this equals the (k-1)-gram count of t, less one
/// when t is the final (k-1)-gram of S.
inline ngram_table start_marginal(const ngram_table& t) {
  const auto& codec = t.codec();
  return detail::marginal(t, [&](tuple_key k) { return codec.drop_last(k); });
}

/// out[t] = sum over s of T[(s, t)]; short by one at the first (k-1)-gram.
inline ngram_table end_marginal(const ngram_table& t) {
  const auto& codec = t.codec();
  return detail::marginal(t, [&](tuple_key k) { return codec.drop_first(k); });
}

/// Counts of the reversed tuples: equals count_ngrams(reverse(S), k).
inline ngram_table reverse_table(const ngram_table& t) {
  std::vector<ngram_table::entry> entries;
  entries.reserve(t.distinct());
  for (const auto& [key, c] : t.entries())
    entries.emplace_back(t.codec().reverse(key), c);
  return ngram_table(t.order(), t.alphabet_size(), t.window_total(),
                     std::move(entries));
}

}  // namespace tre
