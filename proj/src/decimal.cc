#include "nerlp/decimal.h"

#include <algorithm>
#include <cstdlib>
#include <stdexcept>

namespace nerlp {

namespace {

constexpr int kMaxDigits = 36;

Decimal::Mantissa Pow10(int k) {
  Decimal::Mantissa p = 1;
  for (int i = 0; i < k; ++i) p *= 10;
  return p;
}

Decimal::Mantissa MulChecked(Decimal::Mantissa a, Decimal::Mantissa b) {
  Decimal::Mantissa r;
  if (__builtin_mul_overflow(a, b, &r)) throw std::overflow_error("decimal overflow");
  return r;
}

}  // namespace

Decimal::Decimal(Mantissa m, int scale) : mantissa_(m), scale_(scale) {
  while (scale_ > 0 && mantissa_ % 10 == 0) {
    mantissa_ /= 10;
    --scale_;
  }
  while (scale_ < 0) {
    mantissa_ = MulChecked(mantissa_, 10);
    ++scale_;
  }
  if (mantissa_ == 0) scale_ = 0;
}

std::optional<Decimal> Decimal::Parse(std::string_view text) {
  auto is_digit = [](char c) { return c >= '0' && c <= '9'; };
  std::size_t i = 0;
  bool negative = false;
  if (i < text.size() && (text[i] == '-' || text[i] == '+')) {
    negative = text[i] == '-';
    ++i;
  }
  const std::size_t i0 = i;
  Mantissa m = 0;
  int scale = 0;
  int significant = 0;
  bool any_digit = false;
  bool seen_point = false;
  for (; i < text.size(); ++i) {
    const char c = text[i];
    if (is_digit(c)) {
      if (significant >= kMaxDigits) return std::nullopt;
      m = m * 10 + (c - '0');
      if (m != 0) ++significant;
      if (seen_point) ++scale;
      any_digit = true;
    } else if (c == '.' && !seen_point) {
      seen_point = true;
    } else if (c == ',' && !seen_point && i > 0 && is_digit(text[i - 1]) && i + 3 < text.size() &&
               is_digit(text[i + 1]) && is_digit(text[i + 2]) && is_digit(text[i + 3]) &&
               (i + 4 == text.size() || text[i + 4] == ',' || text[i + 4] == '.')) {
      continue;
    } else {
      return std::nullopt;
    }
  }
  if (!any_digit || (!text.empty() && text.back() == '.')) return std::nullopt;
  // The leading group before a separator holds at most three digits.
  if (const auto comma = text.find(','); comma != std::string_view::npos && comma - i0 > 3) {
    return std::nullopt;
  }
  return Decimal(negative ? -m : m, scale);
}

Decimal operator+(const Decimal& a, const Decimal& b) {
  const int scale = std::max(a.scale_, b.scale_);
  const auto am = MulChecked(a.mantissa_, Pow10(scale - a.scale_));
  const auto bm = MulChecked(b.mantissa_, Pow10(scale - b.scale_));
  Decimal::Mantissa r;
  if (__builtin_add_overflow(am, bm, &r)) throw std::overflow_error("decimal overflow");
  return Decimal(r, scale);
}

Decimal operator*(const Decimal& a, const Decimal& b) {
  return Decimal(MulChecked(a.mantissa_, b.mantissa_), a.scale_ + b.scale_);
}

bool operator<(const Decimal& a, const Decimal& b) { return (a - b).mantissa_ < 0; }

std::string Decimal::str() const {
  const bool negative = mantissa_ < 0;
  auto m = negative ? -mantissa_ : mantissa_;
  std::string digits;
  do {
    digits.push_back(static_cast<char>('0' + static_cast<int>(m % 10)));
    m /= 10;
  } while (m != 0);
  while (static_cast<int>(digits.size()) <= scale_) digits.push_back('0');
  std::reverse(digits.begin(), digits.end());
  if (scale_ > 0) digits.insert(digits.end() - scale_, '.');
  return negative ? "-" + digits : digits;
}

double Decimal::to_double() const { return std::strtod(str().c_str(), nullptr); }

}  // namespace nerlp
