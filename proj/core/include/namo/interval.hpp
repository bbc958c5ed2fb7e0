#pragma once

#include <iosfwd>
#include <limits>

namespace namo {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Time cost interval [lo, hi] in seconds. hi (and lo) may be +inf, which is
/// the "no path" / "no stock region" sentinel.
class CostInterval {
 public:
  constexpr CostInterval() = default;
  CostInterval(double lo, double hi);
  static CostInterval point(double v) { return {v, v}; }
  static CostInterval infinite() { return {kInf, kInf}; }
  static CostInterval zero() { return {0.0, 0.0}; }

  double lo() const { return lo_; }
  double hi() const { return hi_; }
  double width() const { return hi_ - lo_; }
  bool is_infinite() const { return hi_ == kInf; }
  /// Laplace-criterion utility: interval midpoint, +inf if any endpoint is infinite.
  double midpoint() const;

  friend CostInterval operator+(const CostInterval& a, const CostInterval& b);
  /// Scales both endpoints by a non-negative factor (0 * inf = 0).
  friend CostInterval operator*(double k, const CostInterval& a);
  friend bool operator==(const CostInterval&, const CostInterval&) = default;

 private:
  double lo_ = 0.0;
  double hi_ = 0.0;
};

std::ostream& operator<<(std::ostream& os, const CostInterval& c);

}  // namespace namo
