#pragma once

// Answer extraction and canonicalization. Two outputs "agree" exactly when
// their canonical forms compare equal under answers_equal.

#include <algorithm>
#include <array>
#include <cctype>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

namespace ttrl {

enum class AnswerKind { rational, decimal, text, unparseable };

/// Serialized stand-in for an answer that could not be parsed.
inline constexpr std::string_view kUnparseableToken = "__UNPARSEABLE__";

/// Reduced fraction with a positive denominator.
struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  friend bool operator==(const Rational&, const Rational&) = default;
};

/// Byte range [begin, end) of the extracted fragment within the raw output.
struct SourceSpan {
  std::size_t begin = 0;
  std::size_t end = 0;

  friend bool operator==(const SourceSpan&, const SourceSpan&) = default;
};

class CanonicalAnswer {
 public:
  CanonicalAnswer() = default;

  static CanonicalAnswer unparseable(SourceSpan span = {}) {
    CanonicalAnswer a;
    a.span_ = span;
    return a;
  }

  /// Reduces num/den; den must be nonzero.
  static CanonicalAnswer rational(std::int64_t num, std::int64_t den, SourceSpan span = {});

  /// A finite decimal too large to hold as a 64-bit fraction. `digits` must
  /// already be in canonical decimal form.
  static CanonicalAnswer decimal(std::string digits, SourceSpan span = {}) {
    CanonicalAnswer a;
    a.kind_ = AnswerKind::decimal;
    a.text_ = std::move(digits);
    a.span_ = span;
    return a;
  }

  /// `normalized` must already be trimmed, case-folded and whitespace-collapsed.
  static CanonicalAnswer text(std::string normalized, SourceSpan span = {}) {
    if (normalized.empty()) return unparseable(span);
    CanonicalAnswer a;
    a.kind_ = AnswerKind::text;
    a.text_ = std::move(normalized);
    a.span_ = span;
    return a;
  }

  AnswerKind kind() const noexcept { return kind_; }
  bool parseable() const noexcept { return kind_ != AnswerKind::unparseable; }
  const Rational& as_rational() const noexcept { return rational_; }
  /// Canonical decimal digits or normalized text, depending on kind.
  const std::string& as_string() const noexcept { return text_; }
  SourceSpan span() const noexcept { return span_; }

  CanonicalAnswer with_span(SourceSpan span) const {
    CanonicalAnswer copy = *this;
    copy.span_ = span;
    return copy;
  }

  /// Wire form: "a" or "a/b" for rationals, decimal digits, text verbatim,
  /// kUnparseableToken otherwise.
  std::string serialize() const {
    switch (kind_) {
      case AnswerKind::rational:
        if (rational_.den == 1) return std::to_string(rational_.num);
        return std::to_string(rational_.num) + "/" + std::to_string(rational_.den);
      case AnswerKind::decimal:
      case AnswerKind::text:
        return text_;
      case AnswerKind::unparseable:
        break;
    }
    return std::string(kUnparseableToken);
  }

  /// Hashable identity: two parseable answers are equal iff their keys are.
  std::string key() const {
    static constexpr std::array<char, 4> tag{'r', 'd', 't', 'u'};
    return std::string(1, tag[static_cast<std::size_t>(kind_)]) + ':' + serialize();
  }

 private:
  AnswerKind kind_ = AnswerKind::unparseable;
  Rational rational_{};
  std::string text_;
  SourceSpan span_{};
};

/// Equality used by every reward. Unparseable equals nothing, itself included.
inline bool answers_equal(const CanonicalAnswer& a, const CanonicalAnswer& b) {
  if (!a.parseable() || !b.parseable() || a.kind() != b.kind()) return false;
  // A decimal-kind value never has a 64-bit reduced form, so it cannot equal a
  // rational-kind value; same-kind comparison is exact.
  if (a.kind() == AnswerKind::rational) return a.as_rational() == b.as_rational();
  return a.as_string() == b.as_string();
}

namespace detail {

using i128 = __int128;

inline bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
inline bool is_digit(char c) { return c >= '0' && c <= '9'; }
inline bool is_word(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_'; }

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

inline i128 gcd128(i128 a, i128 b) {
  if (a < 0) a = -a;
  if (b < 0) b = -b;
  while (b != 0) {
    const i128 t = a % b;
    a = b;
    b = t;
  }
  return a;
}

inline bool fits_i64(i128 v) {
  return v >= std::numeric_limits<std::int64_t>::min() && v <= std::numeric_limits<std::int64_t>::max();
}

/// Reduced fraction if both parts fit in 64 bits after reduction.
inline std::optional<Rational> reduce(i128 num, i128 den) {
  if (den == 0) return std::nullopt;
  if (den < 0) {
    num = -num;
    den = -den;
  }
  const i128 g = gcd128(num, den);
  if (g > 1) {
    num /= g;
    den /= g;
  }
  if (!fits_i64(num) || !fits_i64(den)) return std::nullopt;
  return Rational{static_cast<std::int64_t>(num), static_cast<std::int64_t>(den)};
}

// 10^36 < 2^127, so up to 36 digits can be held exactly.
inline constexpr std::size_t kMaxExactDigits = 36;

inline std::optional<i128> parse_digits(std::string_view digits) {
  if (digits.empty() || digits.size() > kMaxExactDigits) return std::nullopt;
  i128 v = 0;
  for (char c : digits) {
    if (!is_digit(c)) return std::nullopt;
    v = v * 10 + (c - '0');
  }
  return v;
}

/// Optionally-signed integer; nullopt on syntax error or overflow.
inline std::optional<i128> parse_signed_integer(std::string_view s) {
  s = trim(s);
  bool negative = false;
  if (!s.empty() && (s.front() == '-' || s.front() == '+')) {
    negative = s.front() == '-';
    s.remove_prefix(1);
  }
  auto v = parse_digits(s);
  if (!v) return std::nullopt;
  return negative ? -*v : *v;
}

enum class Numeric { no_match, zero_division, overflow };

/// Result of numeric parsing: an answer, or the reason there is none.
struct NumericParse {
  std::optional<CanonicalAnswer> answer;
  Numeric failure = Numeric::no_match;
};

inline NumericParse parse_decimal(std::string_view s) {
  bool negative = false;
  if (!s.empty() && (s.front() == '-' || s.front() == '+')) {
    negative = s.front() == '-';
    s.remove_prefix(1);
  }
  const auto dot = s.find('.');
  std::string_view whole = s.substr(0, dot);
  std::string_view frac = dot == std::string_view::npos ? std::string_view{} : s.substr(dot + 1);
  if (whole.empty() && frac.empty()) return {};
  if (!std::all_of(whole.begin(), whole.end(), is_digit) || !std::all_of(frac.begin(), frac.end(), is_digit)) {
    return {};
  }
  while (!whole.empty() && whole.front() == '0') whole.remove_prefix(1);
  while (!frac.empty() && frac.back() == '0') frac.remove_suffix(1);

  std::string digits(whole);
  digits += frac;
  const bool zero = std::all_of(digits.begin(), digits.end(), [](char c) { return c == '0'; });
  if (zero) return {CanonicalAnswer::rational(0, 1), Numeric::no_match};

  if (digits.size() <= kMaxExactDigits) {
    i128 den = 1;
    for (std::size_t i = 0; i < frac.size(); ++i) den *= 10;
    i128 num = *parse_digits(digits);
    if (auto r = reduce(negative ? -num : num, den)) {
      return {CanonicalAnswer::rational(r->num, r->den), Numeric::no_match};
    }
  }
  std::string canonical = negative ? "-" : "";
  canonical += whole.empty() ? std::string("0") : std::string(whole);
  if (!frac.empty()) {
    canonical += '.';
    canonical += frac;
  }
  return {CanonicalAnswer::decimal(std::move(canonical)), Numeric::no_match};
}

inline NumericParse make_fraction(std::string_view num_text, std::string_view den_text) {
  auto num = parse_signed_integer(num_text);
  auto den = parse_signed_integer(den_text);
  if (!num || !den) return {};
  if (*den == 0) return {std::nullopt, Numeric::zero_division};
  auto r = reduce(*num, *den);
  if (!r) return {std::nullopt, Numeric::overflow};
  return {CanonicalAnswer::rational(r->num, r->den), Numeric::no_match};
}

/// Position just past the brace that closes the group opened at `open`.
inline std::optional<std::size_t> match_brace(std::string_view s, std::size_t open) {
  int depth = 0;
  for (std::size_t i = open; i < s.size(); ++i) {
    if (s[i] == '{') {
      ++depth;
    } else if (s[i] == '}') {
      if (--depth == 0) return i + 1;
    }
  }
  return std::nullopt;
}

/// `\frac{a}{b}` (also \dfrac, \tfrac), optionally signed, spanning all of s.
inline NumericParse parse_latex_fraction(std::string_view s) {
  bool negative = false;
  if (!s.empty() && (s.front() == '-' || s.front() == '+')) {
    negative = s.front() == '-';
    s = trim(s.substr(1));
  }
  for (std::string_view command : {"\\frac", "\\dfrac", "\\tfrac"}) {
    if (!s.starts_with(command)) continue;
    std::size_t pos = command.size();
    if (pos >= s.size() || s[pos] != '{') return {};
    auto num_end = match_brace(s, pos);
    if (!num_end || *num_end >= s.size() || s[*num_end] != '{') return {};
    auto den_end = match_brace(s, *num_end);
    if (!den_end || *den_end != s.size()) return {};
    std::string_view num = s.substr(pos + 1, *num_end - pos - 2);
    std::string_view den = s.substr(*num_end + 1, *den_end - *num_end - 2);
    auto parsed = make_fraction(num, den);
    if (parsed.answer && negative) {
      const Rational r = parsed.answer->as_rational();
      parsed.answer = CanonicalAnswer::rational(-r.num, r.den);
    }
    return parsed;
  }
  return {};
}

inline std::string strip_decorations(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (c == '$' || c == '%') continue;
    if (c == '\\' && i + 1 < s.size() && s[i + 1] == '%') continue;
    // Thousands separators: a comma with a digit on both sides.
    if (c == ',' && i > 0 && i + 1 < s.size() && is_digit(s[i - 1]) && is_digit(s[i + 1])) continue;
    out.push_back(c);
  }
  return out;
}

inline std::string fold_text(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  for (char c : trim(s)) {
    if (is_space(c)) {
      pending_space = true;
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

}  // namespace detail

inline CanonicalAnswer CanonicalAnswer::rational(std::int64_t num, std::int64_t den, SourceSpan span) {
  auto r = detail::reduce(num, den);
  CanonicalAnswer a;
  if (!r) return unparseable(span);
  a.kind_ = AnswerKind::rational;
  a.rational_ = *r;
  a.span_ = span;
  return a;
}

/// Reduces an answer fragment to canonical form. Zero-denominator fractions
/// and fragments that are empty after stripping are unparseable.
inline CanonicalAnswer normalize(std::string_view fragment) {
  using namespace detail;
  const SourceSpan span{0, fragment.size()};
  const std::string stripped = strip_decorations(trim(fragment));
  const std::string_view s = trim(stripped);
  if (s.empty()) return CanonicalAnswer::unparseable(span);

  if (auto frac = parse_latex_fraction(s); frac.answer || frac.failure == Numeric::zero_division) {
    return frac.answer ? frac.answer->with_span(span) : CanonicalAnswer::unparseable(span);
  }
  if (const auto slash = s.find('/'); slash != std::string_view::npos && s.find('/', slash + 1) == std::string_view::npos) {
    auto frac = make_fraction(s.substr(0, slash), s.substr(slash + 1));
    if (frac.answer) return frac.answer->with_span(span);
    if (frac.failure == Numeric::zero_division) return CanonicalAnswer::unparseable(span);
  }
  if (auto dec = parse_decimal(s); dec.answer) return dec.answer->with_span(span);
  return CanonicalAnswer::text(fold_text(s), span);
}

/// Parses a stored label (ground truth or serialized canonical form).
inline CanonicalAnswer parse_label(std::string_view label);

namespace detail {

inline constexpr std::array<std::string_view, 3> kAnswerMarkers{"answer is", "Answer:", "answer:"};

inline std::optional<CanonicalAnswer> from_boxed(std::string_view text) {
  static constexpr std::string_view kBoxed = "\\boxed{";
  std::optional<std::pair<std::size_t, std::size_t>> last;
  for (auto pos = text.find(kBoxed); pos != std::string_view::npos; pos = text.find(kBoxed, pos + 1)) {
    const std::size_t open = pos + kBoxed.size() - 1;
    if (auto close = match_brace(text, open)) last = std::pair{open + 1, *close - 1};
  }
  if (!last) return std::nullopt;
  const auto [begin, end] = *last;
  return normalize(text.substr(begin, end - begin)).with_span({begin, end});
}

inline std::optional<CanonicalAnswer> from_marker(std::string_view text) {
  std::optional<std::size_t> start;
  for (std::string_view marker : kAnswerMarkers) {
    const auto pos = text.rfind(marker);
    if (pos == std::string_view::npos) continue;
    const std::size_t after = pos + marker.size();
    if (!start || after > *start) start = after;
  }
  if (!start) return std::nullopt;
  std::size_t begin = *start;
  while (begin < text.size() && (text[begin] == ':' || (is_space(text[begin]) && text[begin] != '\n'))) ++begin;
  std::size_t end = text.find('\n', begin);
  if (end == std::string_view::npos) end = text.size();
  auto answer = normalize(text.substr(begin, end - begin));
  if (!answer.parseable()) return std::nullopt;
  return answer.with_span({begin, end});
}

/// Scans one numeric token starting at a digit; returns its end.
inline std::size_t scan_number(std::string_view text, std::size_t i) {
  auto digits = [&](std::size_t p) {
    while (p < text.size() && is_digit(text[p])) ++p;
    return p;
  };
  i = digits(i);
  while (i + 1 < text.size() && text[i] == ',' && is_digit(text[i + 1])) {
    const std::size_t next = digits(i + 1);
    if (next - (i + 1) != 3) break;
    i = next;
  }
  if (i + 1 < text.size() && text[i] == '.' && is_digit(text[i + 1])) i = digits(i + 1);
  if (i + 1 < text.size() && text[i] == '/' && is_digit(text[i + 1])) i = digits(i + 1);
  return i;
}

inline std::optional<CanonicalAnswer> from_last_number(std::string_view text) {
  std::optional<SourceSpan> last;
  std::size_t i = 0;
  while (i < text.size()) {
    if (!is_digit(text[i]) || (i > 0 && (is_word(text[i - 1]) || text[i - 1] == '.'))) {
      ++i;
      continue;
    }
    std::size_t begin = i;
    const std::size_t end = scan_number(text, i);
    i = end;
    if (end < text.size() && is_word(text[end])) continue;
    if (begin > 0 && text[begin - 1] == '-' && (begin == 1 || !is_word(text[begin - 2]))) --begin;
    last = SourceSpan{begin, end};
  }
  if (!last) return std::nullopt;
  return normalize(text.substr(last->begin, last->end - last->begin)).with_span(*last);
}

}  // namespace detail

/// Final answer of a raw model output: the last balanced \boxed{...} group,
/// else the rest of the line after the last answer marker, else the last
/// standalone number. Never fails; no answer is reported as unparseable.
inline CanonicalAnswer extract_answer(std::string_view output) {
  if (auto boxed = detail::from_boxed(output)) return *boxed;
  if (auto marked = detail::from_marker(output)) return *marked;
  if (auto number = detail::from_last_number(output)) return *number;
  return CanonicalAnswer::unparseable();
}

inline CanonicalAnswer parse_label(std::string_view label) {
  if (detail::trim(label) == kUnparseableToken) return CanonicalAnswer::unparseable();
  if (label.find("\\boxed{") != std::string_view::npos) return extract_answer(label);
  return normalize(label);
}

}  // namespace ttrl
