#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace ruinsim {

struct Interval {
  double lo;
  double hi;
};

/// Wilson score interval for a binomial proportion.
Interval wilson_interval(std::uint64_t hits, std::uint64_t trials, double z = 1.959963984540054);

/// sup_x |F_n(x) - cdf(x)| for a sample (sorted in place).
double ks_one_sample(std::vector<double>& sample, const std::function<double(double)>& cdf);

/// sup_x |F_n(x) - G_m(x)| for two samples (both sorted in place).
double ks_two_sample(std::vector<double>& a, std::vector<double>& b);

/// Running mean and variance (Welford), mergeable in a fixed order.
class MeanAccumulator {
 public:
  void add(double x) noexcept {
    ++count_;
    const double delta = x - mean_;
    mean_ += delta / static_cast<double>(count_);
    m2_ += delta * (x - mean_);
  }
  void merge(const MeanAccumulator& other) noexcept;

  std::uint64_t count() const noexcept { return count_; }
  double mean() const noexcept { return mean_; }
  double variance() const noexcept {
    return count_ > 1 ? m2_ / static_cast<double>(count_ - 1) : 0.0;
  }
  /// Standard error of the mean.
  double standard_error() const noexcept;

 private:
  std::uint64_t count_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

}  // namespace ruinsim
