#include "poseval/util.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

namespace poseval::util {

std::vector<size_t> sample_indices(size_t population, size_t n, uint64_t seed) {
  if (n > population)
    throw Error("sample_indices: n (" + std::to_string(n) +
                ") exceeds population (" + std::to_string(population) + ")");
  std::vector<size_t> idx(population);
  for (size_t i = 0; i < population; ++i) idx[i] = i;
  SplitMix64 rng(seed);
  for (size_t i = 0; i < n && i + 1 < population; ++i) {
    size_t j = i + static_cast<size_t>(rng.bounded(population - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(n);
  return idx;
}

uint64_t fnv1a64(std::string_view bytes) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string content_hash(std::string_view bytes) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(bytes)));
  return std::string(buf);
}

uint64_t derive_seed(uint64_t seed, std::string_view label) {
  // Stir the label hash through one SplitMix64 step so nearby seeds do not
  // produce correlated streams.
  SplitMix64 rng(seed ^ fnv1a64(label));
  return rng.next();
}

// --- Decimal ---------------------------------------------------------------

namespace {

bool consume_prefix(std::string_view& s, std::string_view p) {
  if (s.substr(0, p.size()) == p) {
    s.remove_prefix(p.size());
    return true;
  }
  return false;
}

}  // namespace

std::optional<Decimal> Decimal::parse(std::string_view raw) {
  std::string t = trim(raw);
  std::string_view s = t;
  bool negative = false;
  bool seen_sign = false;
  // sign and currency markers may appear in either order before the digits
  for (;;) {
    if (!seen_sign && consume_prefix(s, "-")) {
      negative = true;
      seen_sign = true;
    } else if (!seen_sign && consume_prefix(s, "+")) {
      seen_sign = true;
    } else if (consume_prefix(s, "$") || consume_prefix(s, "€") ||
               consume_prefix(s, "£")) {
      // currency symbol, drop
    } else {
      break;
    }
  }
  std::string digits;
  digits.reserve(s.size());
  bool seen_dot = false;
  for (char c : s) {
    if (c >= '0' && c <= '9') {
      digits.push_back(c);
    } else if (c == ',') {
      continue;  // thousands separator
    } else if (c == '.') {
      if (seen_dot) return std::nullopt;
      seen_dot = true;
      digits.push_back('.');
    } else {
      return std::nullopt;
    }
  }
  if (seen_dot && !digits.empty() && digits.back() == '.') {
    digits.pop_back();  // trailing period is sentence punctuation
    seen_dot = false;
  }
  if (digits.empty() || digits == ".") return std::nullopt;
  if (digits.find('.') == std::string::npos) seen_dot = false;

  std::string int_part, frac_part;
  if (seen_dot) {
    auto dot = digits.find('.');
    int_part = digits.substr(0, dot);
    frac_part = digits.substr(dot + 1);
  } else {
    int_part = digits;
  }
  for (char c : int_part)
    if (c == '.') return std::nullopt;
  // canonicalize
  size_t nz = int_part.find_first_not_of('0');
  int_part = (nz == std::string::npos) ? "0" : int_part.substr(nz);
  if (int_part.empty()) int_part = "0";
  size_t last = frac_part.find_last_not_of('0');
  frac_part = (last == std::string::npos) ? "" : frac_part.substr(0, last + 1);

  bool is_zero = int_part == "0" && frac_part.empty();
  Decimal d;
  if (negative && !is_zero) d.canonical_.push_back('-');
  d.canonical_ += int_part;
  if (!frac_part.empty()) {
    d.canonical_.push_back('.');
    d.canonical_ += frac_part;
  }
  return d;
}

Decimal Decimal::from_int(long long v) {
  auto d = parse(std::to_string(v));
  return *d;
}

// --- misc --------------------------------------------------------------

std::string trim(std::string_view s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

std::vector<std::string> split_lines(std::string_view text) {
  std::vector<std::string> lines;
  size_t start = 0;
  while (start <= text.size()) {
    size_t nl = text.find('\n', start);
    if (nl == std::string_view::npos) {
      lines.emplace_back(text.substr(start));
      break;
    }
    std::string_view line = text.substr(start, nl - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.emplace_back(line);
    start = nl + 1;
  }
  return lines;
}

std::vector<std::string> word_tokens(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (unsigned char c : text) {
    if (std::isalnum(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::string iso8601_utc_now() {
  std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

long long round_half_away(double x) {
  return static_cast<long long>(x >= 0 ? std::floor(x + 0.5)
                                       : std::ceil(x - 0.5));
}

}  // namespace poseval::util
