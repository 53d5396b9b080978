#pragma once

#include <cmath>

namespace tre {

// Neumaier's variant of Kahan summation. Order-dependent like any float
// sum, but the error no longer grows with the number of terms.
class compensated_sum {
 public:
  void add(double x) noexcept {
    const double t = sum_ + x;
    if (std::fabs(sum_) >= std::fabs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }

  void add(const compensated_sum& other) noexcept {
    add(other.sum_);
    add(other.comp_);
  }

  compensated_sum& operator+=(double x) noexcept {
    add(x);
    return *this;
  }

  double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

}  // namespace tre
