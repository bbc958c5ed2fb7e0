#include "namo/interval.hpp"

#include <cmath>
#include <ostream>

#include "namo/error.hpp"

namespace namo {

CostInterval::CostInterval(double lo, double hi) : lo_(lo), hi_(hi) {
  if (std::isnan(lo) || std::isnan(hi) || lo < 0.0 || lo > hi) throw Error("invalid cost interval");
}

double CostInterval::midpoint() const {
  if (lo_ == kInf || hi_ == kInf) return kInf;
  return 0.5 * (lo_ + hi_);
}

CostInterval operator+(const CostInterval& a, const CostInterval& b) {
  return {a.lo_ + b.lo_, a.hi_ + b.hi_};
}

CostInterval operator*(double k, const CostInterval& a) {
  if (std::isnan(k) || k < 0.0) throw Error("interval scale must be non-negative");
  if (k == 0.0) return CostInterval{};
  return {k * a.lo_, k * a.hi_};
}

std::ostream& operator<<(std::ostream& os, const CostInterval& c) {
  return os << "[" << c.lo() << ", " << c.hi() << "]";
}

}  // namespace namo
