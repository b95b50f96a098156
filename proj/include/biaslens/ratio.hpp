#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace biaslens {

// Exact rational number kept in the form it was built with: 4/10 stays 4/10
// so that window ratios keep their 1/m grid denominator. Equality and
// ordering compare values, not representations.
class Ratio {
 public:
  constexpr Ratio() = default;
  // Throws Error(kInvalidArgument) when den <= 0.
  Ratio(std::int64_t num, std::int64_t den);

  static Ratio integer(std::int64_t value) { return Ratio(value, 1); }

  // Accepts "a/b", integers and plain decimals such as "-0.042".
  static Ratio parse(std::string_view text);

  std::int64_t num() const { return num_; }
  std::int64_t den() const { return den_; }

  double value() const {
    return static_cast<double>(num_) / static_cast<double>(den_);
  }

  Ratio reduced() const;
  // Same value expressed over `den`; throws if not representable.
  Ratio over(std::int64_t den) const;
  bool is_on_grid(std::int64_t den) const;

  std::int64_t floor() const;
  std::int64_t ceil() const;
  // this - floor(this), kept over the same denominator.
  Ratio fractional_part() const;
  Ratio abs() const { return num_ < 0 ? Ratio(-num_, den_) : *this; }

  // "num/den" exactly as stored.
  std::string to_string() const;

  friend Ratio operator-(const Ratio& a, const Ratio& b);
  friend Ratio operator+(const Ratio& a, const Ratio& b);
  friend Ratio operator*(const Ratio& a, std::int64_t k);

  friend bool operator==(const Ratio& a, const Ratio& b);
  friend std::strong_ordering operator<=>(const Ratio& a, const Ratio& b);

 private:
  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

// True when both value and representation match.
inline bool identical(const Ratio& a, const Ratio& b) {
  return a.num() == b.num() && a.den() == b.den();
}

// Shortest decimal text that round-trips the double value.
std::string format_decimal(double value);

}  // namespace biaslens
