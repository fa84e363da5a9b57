#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace xlbd {

/// Raised for malformed configs, bad arguments, and missing prerequisites.
/// The CLI maps this to exit code 2; everything else exits 1.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Hashing

inline constexpr std::uint64_t kFnvOffset = 14695981039346656037ull;
inline constexpr std::uint64_t kFnvPrime = 1099511628211ull;

inline std::uint64_t fnv1a(std::string_view s, std::uint64_t h = kFnvOffset) {
  for (unsigned char c : s) {
    h ^= c;
    h *= kFnvPrime;
  }
  return h;
}

inline std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) {
  a ^= b + 0x9e3779b97f4a7c15ull + (a << 6) + (a >> 2);
  return a;
}

// ---------------------------------------------------------------------------
// Deterministic RNG.
//
// splitmix64 with explicit rejection sampling. std::shuffle and the standard
// distributions are implementation-defined, so seeded experiment results
// would not be byte-identical across platforms; this generator is pinned.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("Rng::below: n must be positive");
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t v;
    do {
      v = next();
    } while (v >= limit);
    return v % n;
  }

  /// Uniform real in [0, 1).
  double real() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[below(i)]);
    }
  }

 private:
  std::uint64_t state_;
};

// ---------------------------------------------------------------------------
// UTF-8

/// Decodes UTF-8 to codepoints. Invalid bytes decode as U+FFFD, one per byte,
/// so decoding never fails and offsets stay monotone.
std::u32string decode_utf8(std::string_view s);

std::string encode_utf8(char32_t c);
std::string encode_utf8(std::u32string_view s);

// ---------------------------------------------------------------------------
// Text helpers

struct TokenSpan {
  std::size_t begin = 0;  // byte offset
  std::size_t end = 0;    // byte offset, exclusive
};

/// Whitespace-delimited tokens with byte offsets. Whitespace is ASCII
/// space/tab/CR/LF.
std::vector<TokenSpan> tokenize_ws(std::string_view text);

/// Sentence spans under the canonical splitter: a sentence ends after one of
/// .?!。？！ followed by whitespace or end of text. Each span includes its
/// trailing whitespace, so concatenating all spans reproduces the input.
std::vector<TokenSpan> split_sentences(std::string_view text);

bool is_space(char c);
std::string trim(std::string_view s);
std::string to_lower_ascii(std::string_view s);

/// Collapses every whitespace run to a single space and trims the ends.
std::string collapse_ws(std::string_view s);

std::vector<std::string> split(std::string_view s, char sep);

/// Fixed-format float used in all persisted result rows, so reruns are
/// byte-identical.
std::string format_metric(double v);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);

}  // namespace xlbd
