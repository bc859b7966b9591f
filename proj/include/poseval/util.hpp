#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace poseval {

/// Error type thrown for every contract violation in this project.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

namespace util {

// --- deterministic 64-bit generator ------------------------------------

/// SplitMix64 stream. Generator identity is pinned (see kPrngId) so that
/// seeded sampling reproduces byte-identically across platforms and
/// reimplementations.
class SplitMix64 {
 public:
  explicit SplitMix64(uint64_t seed) : state_(seed) {}

  uint64_t next() {
    uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, bound). bound must be > 0. Uses plain modulo; the
  /// reduction is part of the pinned generator identity.
  uint64_t bounded(uint64_t bound) {
    if (bound == 0) throw Error("SplitMix64::bounded: bound must be > 0");
    return next() % bound;
  }

 private:
  uint64_t state_;
};

inline constexpr const char* kPrngId = "splitmix64-fisheryates-v1";

/// In-place Fisher-Yates shuffle driven by a SplitMix64 stream.
template <typename T>
void seeded_shuffle(std::vector<T>& v, uint64_t seed) {
  SplitMix64 rng(seed);
  for (size_t i = 0; i + 1 < v.size(); ++i) {
    size_t j = i + static_cast<size_t>(rng.bounded(v.size() - i));
    std::swap(v[i], v[j]);
  }
}

/// First n entries of a Fisher-Yates shuffle (sampling without
/// replacement). Throws if n exceeds the input size.
std::vector<size_t> sample_indices(size_t population, size_t n, uint64_t seed);

// --- content hashing -----------------------------------------------------

/// FNV-1a 64-bit over raw bytes.
uint64_t fnv1a64(std::string_view bytes);

/// Hex-encoded fnv1a64, used as the content-hash format in stores.
std::string content_hash(std::string_view bytes);

/// Mixes a seed with a label hash into a derived stream seed.
uint64_t derive_seed(uint64_t seed, std::string_view label);

// --- exact decimal values ------------------------------------------------

/// Exact decimal number kept as a canonical string; no float rounding.
/// Parsing strips commas, a leading currency symbol, and a trailing
/// period; sign and decimal point are kept. "7.0" and "7" compare equal.
class Decimal {
 public:
  static std::optional<Decimal> parse(std::string_view raw);
  static Decimal from_int(long long v);

  const std::string& str() const { return canonical_; }
  bool operator==(const Decimal& o) const { return canonical_ == o.canonical_; }
  bool operator!=(const Decimal& o) const { return !(*this == o); }

 private:
  std::string canonical_;
};

// --- misc ------------------------------------------------------------------

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);
std::vector<std::string> split_lines(std::string_view text);

/// Splits text into word tokens: maximal alphanumeric runs, lowercased.
std::vector<std::string> word_tokens(std::string_view text);

/// Current UTC time as "YYYY-MM-DDTHH:MM:SSZ".
std::string iso8601_utc_now();

std::string read_file(const std::string& path);

/// Rounds to nearest integer, halves away from zero.
long long round_half_away(double x);

}  // namespace util
}  // namespace poseval
