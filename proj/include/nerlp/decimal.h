#ifndef NERLP_DECIMAL_H
#define NERLP_DECIMAL_H

#include <optional>
#include <string>
#include <string_view>

namespace nerlp {

// Exact base-10 number: mantissa * 10^-scale, kept normalized (no trailing
// zeros in the mantissa while scale > 0) so equal values compare equal.
class Decimal {
 public:
  __extension__ typedef __int128 Mantissa;

  Decimal() = default;
  static Decimal FromInt(long long v) { return Decimal(v, 0); }

  // Accepts an optional sign, digits with optional "," thousands separators,
  // and an optional fractional part ("12", "-0.320", "1,000", ".5").
  static std::optional<Decimal> Parse(std::string_view text);

  Decimal operator-() const { return Decimal(-mantissa_, scale_); }
  // Throw std::overflow_error when the exact result does not fit.
  friend Decimal operator+(const Decimal& a, const Decimal& b);
  friend Decimal operator-(const Decimal& a, const Decimal& b) { return a + (-b); }
  friend Decimal operator*(const Decimal& a, const Decimal& b);
  friend bool operator==(const Decimal&, const Decimal&) = default;
  friend bool operator<(const Decimal& a, const Decimal& b);

  bool is_zero() const { return mantissa_ == 0; }
  double to_double() const;
  std::string str() const;

  // Divides by 10^k exactly (used for percentages).
  Decimal shifted(int k) const { return Decimal(mantissa_, scale_ + k); }

 private:
  Decimal(Mantissa m, int scale);
  Mantissa mantissa_ = 0;
  int scale_ = 0;
};

}  // namespace nerlp

#endif  // NERLP_DECIMAL_H
