#pragma once

#include <cmath>
#include <cstddef>
#include <optional>

namespace earlystop {

// Kahan-compensated accumulator for mean / sample variance. merge() is
// associative up to the compensation error, so trial aggregation does not
// depend on scheduling.
class RunningStat {
 public:
  void add(double x) {
    accumulate(sum_, sum_c_, x);
    accumulate(sumsq_, sumsq_c_, x * x);
    ++count_;
  }

  void merge(const RunningStat& other) {
    accumulate(sum_, sum_c_, other.sum_ + other.sum_c_);
    accumulate(sumsq_, sumsq_c_, other.sumsq_ + other.sumsq_c_);
    count_ += other.count_;
  }

  std::size_t count() const { return count_; }

  double mean() const { return (sum_ + sum_c_) / static_cast<double>(count_); }

  // Unbiased sample variance, clamped at zero against cancellation.
  double sample_variance() const {
    const double n = static_cast<double>(count_);
    const double m = mean();
    const double raw = ((sumsq_ + sumsq_c_) - n * m * m) / (n - 1.0);
    return raw > 0.0 ? raw : 0.0;
  }

  // Normal-approximation 95% half-width; undefined below two samples.
  std::optional<double> ci95() const {
    if (count_ < 2) return std::nullopt;
    return 1.96 * std::sqrt(sample_variance() / static_cast<double>(count_));
  }

 private:
  // Neumaier variant: the running total is sum + comp.
  static void accumulate(double& sum, double& comp, double x) {
    const double t = sum + x;
    if (std::abs(sum) >= std::abs(x)) {
      comp += (sum - t) + x;
    } else {
      comp += (x - t) + sum;
    }
    sum = t;
  }

  double sum_ = 0.0, sum_c_ = 0.0;
  double sumsq_ = 0.0, sumsq_c_ = 0.0;
  std::size_t count_ = 0;
};

}  // namespace earlystop
