#pragma once

#include <cmath>
#include <cstdint>

namespace bdscale {

/// Neumaier-compensated accumulator. Keeps long running sums accurate to a
/// few ulps of the total, independent of term count.
class CompensatedSum {
 public:
  CompensatedSum() = default;
  explicit CompensatedSum(double initial) : sum_(initial) {}

  void add(double term) {
    const double t = sum_ + term;
    if (!std::isfinite(t)) {  // saturated; compensation is meaningless now
      sum_ = t;
      comp_ = 0.0;
      return;
    }
    if (std::abs(sum_) >= std::abs(term)) {
      comp_ += (sum_ - t) + term;
    } else {
      comp_ += (term - t) + sum_;
    }
    sum_ = t;
  }

  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

/// True when x is a positive normal double (neither saturated to zero nor
/// overflowed); the regime where direct t_n arithmetic is trustworthy.
inline bool in_normal_range(double x) {
  return std::isfinite(x) && std::isnormal(x) && x > 0.0;
}

}  // namespace bdscale
