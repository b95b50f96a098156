#include "biaslens/ratio.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>
#include <system_error>

#include "biaslens/error.hpp"

namespace biaslens {
namespace {

using Wide = __int128;

std::int64_t narrow(Wide v, const char* what) {
  if (v > std::numeric_limits<std::int64_t>::max() ||
      v < std::numeric_limits<std::int64_t>::min()) {
    throw Error(ErrorCode::kInvalidArgument,
                std::string("rational overflow in ") + what);
  }
  return static_cast<std::int64_t>(v);
}

Wide floor_div(Wide a, Wide b) {
  Wide q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

}  // namespace

Ratio::Ratio(std::int64_t num, std::int64_t den) : num_(num), den_(den) {
  if (den <= 0) {
    throw Error(ErrorCode::kInvalidArgument,
                "ratio denominator must be positive, got " +
                    std::to_string(den));
  }
}

Ratio Ratio::parse(std::string_view text) {
  auto fail = [&]() -> Error {
    return Error(ErrorCode::kInvalidArgument,
                 "not a ratio: '" + std::string(text) + "'");
  };
  if (text.empty()) throw fail();

  auto parse_int = [&](std::string_view s) {
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
      throw fail();
    }
    return v;
  };

  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    std::int64_t num = parse_int(text.substr(0, slash));
    std::int64_t den = parse_int(text.substr(slash + 1));
    if (den <= 0) throw fail();
    return Ratio(num, den);
  }

  bool negative = false;
  std::string_view body = text;
  if (body.front() == '-' || body.front() == '+') {
    negative = body.front() == '-';
    body.remove_prefix(1);
  }
  if (body.empty()) throw fail();
  std::string_view whole = body;
  std::string_view frac;
  if (auto dot = body.find('.'); dot != std::string_view::npos) {
    whole = body.substr(0, dot);
    frac = body.substr(dot + 1);
    if (frac.empty() && whole.empty()) throw fail();
  }
  if (frac.size() > 18) throw fail();
  for (char ch : whole) if (ch < '0' || ch > '9') throw fail();
  for (char ch : frac) if (ch < '0' || ch > '9') throw fail();

  Wide den = 1;
  for (std::size_t i = 0; i < frac.size(); ++i) den *= 10;
  Wide num = whole.empty() ? 0 : parse_int(whole);
  num = num * den + (frac.empty() ? 0 : parse_int(frac));
  if (negative) num = -num;
  return Ratio(narrow(num, "parse"), narrow(den, "parse")).reduced();
}

Ratio Ratio::reduced() const {
  std::int64_t g = std::gcd(num_, den_);
  if (g == 0) return Ratio(0, 1);
  return Ratio(num_ / g, den_ / g);
}

Ratio Ratio::over(std::int64_t den) const {
  if (!is_on_grid(den)) {
    throw Error(ErrorCode::kInvalidArgument,
                to_string() + " is not on the 1/" + std::to_string(den) +
                    " grid");
  }
  return Ratio(narrow(Wide(num_) * den / den_, "over"), den);
}

bool Ratio::is_on_grid(std::int64_t den) const {
  if (den <= 0) return false;
  return (Wide(num_) * den) % den_ == 0;
}

std::int64_t Ratio::floor() const {
  return narrow(floor_div(num_, den_), "floor");
}

std::int64_t Ratio::ceil() const {
  return narrow(-floor_div(-Wide(num_), den_), "ceil");
}

Ratio Ratio::fractional_part() const {
  Wide rem = Wide(num_) - floor_div(num_, den_) * den_;
  return Ratio(narrow(rem, "fractional_part"), den_);
}

std::string Ratio::to_string() const {
  return std::to_string(num_) + "/" + std::to_string(den_);
}

Ratio operator-(const Ratio& a, const Ratio& b) {
  if (a.den_ == b.den_) {
    return Ratio(narrow(Wide(a.num_) - b.num_, "subtract"), a.den_);
  }
  Wide num = Wide(a.num_) * b.den_ - Wide(b.num_) * a.den_;
  Wide den = Wide(a.den_) * b.den_;
  return Ratio(narrow(num, "subtract"), narrow(den, "subtract"));
}

Ratio operator+(const Ratio& a, const Ratio& b) {
  if (a.den_ == b.den_) {
    return Ratio(narrow(Wide(a.num_) + b.num_, "add"), a.den_);
  }
  Wide num = Wide(a.num_) * b.den_ + Wide(b.num_) * a.den_;
  Wide den = Wide(a.den_) * b.den_;
  return Ratio(narrow(num, "add"), narrow(den, "add"));
}

Ratio operator*(const Ratio& a, std::int64_t k) {
  return Ratio(narrow(Wide(a.num_) * k, "multiply"), a.den_);
}

bool operator==(const Ratio& a, const Ratio& b) {
  return Wide(a.num_) * b.den_ == Wide(b.num_) * a.den_;
}

std::strong_ordering operator<=>(const Ratio& a, const Ratio& b) {
  Wide lhs = Wide(a.num_) * b.den_;
  Wide rhs = Wide(b.num_) * a.den_;
  if (lhs < rhs) return std::strong_ordering::less;
  if (lhs > rhs) return std::strong_ordering::greater;
  return std::strong_ordering::equal;
}

std::string format_decimal(double value) {
  if (value == 0.0) return "0";  // folds -0
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

}  // namespace biaslens
