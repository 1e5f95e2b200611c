#pragma once

// Text forms of rotation numbers:
//   golden | silver
//   p/q                      exact rational
//   0.61803                  decimal, read as the nearest double
//   (sqrt5-1)/2, sqrt(2)-1, (1+3*sqrt(7))/5     quadratic irrationals
//   [1,2,1,2,...] or 1,2,1,2,...                  partial quotients; a trailing
//                                                 "..." repeats the list

#include <cctype>
#include <string>
#include <string_view>
#include <vector>

#include "siegel/arithmetic.hpp"
#include "siegel/error.hpp"

namespace siegel {

class LiteralError : public PreconditionError {
 public:
  LiteralError(std::string_view text, const std::string& why)
      : PreconditionError("cannot parse rotation number '" + std::string(text) + "': " + why) {}
};

namespace detail {

class LiteralScanner {
 public:
  explicit LiteralScanner(std::string_view s) : s_(s) {}

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool eof() {
    skip_ws();
    return pos_ >= s_.size();
  }
  bool accept(char c) {
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  bool accept(std::string_view word) {
    skip_ws();
    if (s_.substr(pos_, word.size()) == word) {
      pos_ += word.size();
      return true;
    }
    return false;
  }
  bool at_digit() {
    skip_ws();
    return pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]));
  }
  BigInt integer() {
    skip_ws();
    const std::size_t start = pos_;
    while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    if (start == pos_) throw LiteralError(s_, "expected an integer at position " + std::to_string(start));
    std::string_view digits = s_.substr(start, pos_ - start);
    // BigInt reads a leading 0 as octal
    while (digits.size() > 1 && digits.front() == '0') digits.remove_prefix(1);
    return BigInt(std::string(digits));
  }
  std::size_t pos() const { return pos_; }
  std::string_view text() const { return s_; }

 private:
  std::string_view s_;
  std::size_t pos_ = 0;
};

/// p + q*sqrt(d) accumulated over a sum of terms.
struct SurdSum {
  BigInt p = 0;
  BigInt q = 0;
  BigInt d = 0;
};

inline void parse_surd_term(LiteralScanner& sc, SurdSum& acc, int sign) {
  BigInt coef = 1;
  if (sc.at_digit()) {
    coef = sc.integer();
    const bool star = sc.accept('*');
    if (!sc.accept("sqrt")) {
      if (star) throw LiteralError(sc.text(), "expected sqrt after '*'");
      acc.p += sign * coef;
      return;
    }
  } else if (!sc.accept("sqrt")) {
    throw LiteralError(sc.text(), "expected an integer or sqrt at position " + std::to_string(sc.pos()));
  }
  BigInt d;
  if (sc.accept('(')) {
    d = sc.integer();
    if (!sc.accept(')')) throw LiteralError(sc.text(), "missing ')' after sqrt radicand");
  } else {
    d = sc.integer();
  }
  if (acc.q != 0 && acc.d != d) throw LiteralError(sc.text(), "only one distinct radicand is supported");
  acc.d = d;
  acc.q += sign * coef;
}

inline SurdSum parse_surd_sum(LiteralScanner& sc) {
  SurdSum acc;
  int sign = 1;
  if (sc.accept('-')) sign = -1;
  else sc.accept('+');
  parse_surd_term(sc, acc, sign);
  for (;;) {
    if (sc.accept('+')) sign = 1;
    else if (sc.accept('-')) sign = -1;
    else break;
    parse_surd_term(sc, acc, sign);
  }
  return acc;
}

inline bool looks_decimal(std::string_view s) {
  bool digit = false;
  for (char c : s) {
    if (std::isdigit(static_cast<unsigned char>(c))) digit = true;
    else if (c != '.' && c != 'e' && c != 'E' && c != '-' && c != '+') return false;
  }
  return digit;
}

}  // namespace detail

/// "1,2,1,2,..." or "[1,2,...]". Returns the list and whether it repeats.
inline RotationNumber parse_quotients(std::string_view text) {
  detail::LiteralScanner sc(text);
  const bool bracket = sc.accept('[');
  std::vector<BigInt> qs;
  bool periodic = false;
  for (;;) {
    if (sc.accept("...")) {
      periodic = true;
      break;
    }
    qs.push_back(sc.integer());
    if (!sc.accept(',')) break;
  }
  if (bracket && !sc.accept(']')) throw LiteralError(text, "missing ']'");
  if (!sc.eof()) throw LiteralError(text, "trailing characters after quotient list");
  if (qs.empty()) throw LiteralError(text, "empty quotient list");
  return RotationNumber::from_quotients(std::move(qs), periodic);
}

/// Parses any of the forms listed at the top of this header.
inline RotationNumber parse_rotation_number(std::string_view text) {
  std::string_view t = text;
  while (!t.empty() && std::isspace(static_cast<unsigned char>(t.front()))) t.remove_prefix(1);
  while (!t.empty() && std::isspace(static_cast<unsigned char>(t.back()))) t.remove_suffix(1);
  if (t.empty()) throw LiteralError(text, "empty literal");
  if (t == "golden") return RotationNumber::golden();
  if (t == "silver") return RotationNumber::silver();
  if (t.front() == '[' || t.find(',') != std::string_view::npos) return parse_quotients(t);
  if (detail::looks_decimal(t) && t.find('.') != std::string_view::npos) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(std::string(t), &used);
    } catch (const std::exception&) {
      throw LiteralError(text, "bad decimal");
    }
    if (used != t.size()) throw LiteralError(text, "bad decimal");
    return RotationNumber::from_double(v);
  }

  detail::LiteralScanner sc(t);
  detail::SurdSum num;
  if (sc.accept('(')) {
    num = detail::parse_surd_sum(sc);
    if (!sc.accept(')')) throw LiteralError(text, "missing ')'");
  } else {
    num = detail::parse_surd_sum(sc);
  }
  BigInt den = 1;
  if (sc.accept('/')) {
    den = sc.integer();
    if (den == 0) throw LiteralError(text, "zero denominator");
  }
  if (!sc.eof()) throw LiteralError(text, "unexpected text at position " + std::to_string(sc.pos()));
  if (num.q == 0) return RotationNumber::from_rational(num.p, den);
  return RotationNumber::from_quadratic(num.p, num.q, num.d, den);
}

/// Exact rational value of a plain decimal such as "0.60" or "-1.25e-3".
inline BigRational parse_decimal_exact(std::string_view text) {
  std::string s(text);
  std::size_t epos = s.find_first_of("eE");
  long exp10 = 0;
  if (epos != std::string::npos) {
    try {
      std::size_t used = 0;
      exp10 = std::stol(s.substr(epos + 1), &used);
      if (used != s.size() - epos - 1) throw std::invalid_argument("exp");
    } catch (const std::exception&) {
      throw PreconditionError("bad decimal '" + s + "'");
    }
    s.resize(epos);
  }
  bool neg = false;
  if (!s.empty() && (s[0] == '-' || s[0] == '+')) {
    neg = s[0] == '-';
    s.erase(0, 1);
  }
  const std::size_t dot = s.find('.');
  std::string digits = s;
  if (dot != std::string::npos) {
    digits = s.substr(0, dot) + s.substr(dot + 1);
    exp10 -= static_cast<long>(s.size() - dot - 1);
  }
  if (digits.empty() || digits.find_first_not_of("0123456789") != std::string::npos) {
    throw PreconditionError("bad decimal '" + std::string(text) + "'");
  }
  digits.erase(0, std::min(digits.find_first_not_of('0'), digits.size() - 1));  // not octal
  BigInt mant(digits);
  if (neg) mant = -mant;
  BigInt scale = boost::multiprecision::pow(BigInt(10), static_cast<unsigned>(exp10 < 0 ? -exp10 : exp10));
  return exp10 >= 0 ? BigRational(mant * scale) : BigRational(mant, scale);
}

}  // namespace siegel
