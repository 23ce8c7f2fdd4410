#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace wigner {

/// Monte Carlo estimate with its standard error and the number of samples behind it.
struct Estimate {
  double value = 0.0;
  double se = 0.0;
  std::size_t samples = 0;
};

inline constexpr std::size_t kDefaultBatches = 20;

/// Batch-means estimate of the mean of per-sample values, batching by
/// contiguous sample index. Falls back to one batch per sample when there are
/// fewer samples than batches.
Estimate batch_means(std::span<const double> per_sample, std::size_t batches = kDefaultBatches);

/// Batch-means estimate of sum(numerators)/sum(denominators).
Estimate batch_ratio(std::span<const double> numerators, std::span<const double> denominators,
                     std::size_t batches = kDefaultBatches);

/// Difference a - b of independent estimates with combined standard error.
struct Comparison {
  double difference = 0.0;
  double combined_se = 0.0;
  [[nodiscard]] double z_score() const noexcept;
  /// |difference| <= k * combined_se (an exact tie with zero error passes).
  [[nodiscard]] bool within(double k) const noexcept;
};
Comparison compare(const Estimate& a, const Estimate& b) noexcept;

/// Two-sample Kolmogorov-Smirnov distance.
double ks_two_sample(std::vector<double> a, std::vector<double> b);
/// One-sample Kolmogorov-Smirnov distance against a continuous CDF.
double ks_one_sample(std::vector<double> sample, const std::function<double(double)>& cdf);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_se = 0.0;
  double intercept_se = 0.0;
};
/// Weighted least squares y = a + b x with weights 1/sigma^2 (sigma empty: unweighted).
LinearFit linear_fit(std::span<const double> x, std::span<const double> y, std::span<const double> sigma = {});

struct Histogram {
  std::vector<double> edges;
  std::vector<double> counts;
  double total = 0.0;
  /// counts / (total * width) per bin.
  [[nodiscard]] std::vector<double> density() const;
};
Histogram make_histogram(std::span<const double> values, double lo, double hi, std::size_t bins);

double mean_of(std::span<const double> v) noexcept;

}  // namespace wigner
