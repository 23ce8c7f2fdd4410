#include "wigner/sampling_stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numeric>
#include <string>
#include <thread>

#include "wigner/errors.hpp"
#include "wigner/parallel.hpp"

namespace wigner {

unsigned default_worker_count() noexcept {
  if (const char* env = std::getenv("WIGNER_WORKERS")) {
    try {
      const int v = std::stoi(env);
      if (v > 0) return static_cast<unsigned>(v);
    } catch (...) {
    }
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1U : hw;
}

double mean_of(std::span<const double> v) noexcept {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

namespace {

std::vector<std::pair<std::size_t, std::size_t>> batch_ranges(std::size_t n, std::size_t batches) {
  const std::size_t b = std::min(batches, n);
  std::vector<std::pair<std::size_t, std::size_t>> ranges;
  ranges.reserve(b);
  for (std::size_t i = 0; i < b; ++i) ranges.emplace_back(i * n / b, (i + 1) * n / b);
  return ranges;
}

double spread_se(std::span<const double> batch_values) {
  const std::size_t b = batch_values.size();
  if (b < 2) return std::numeric_limits<double>::infinity();
  const double m = mean_of(batch_values);
  double ss = 0.0;
  for (double x : batch_values) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(b - 1) / static_cast<double>(b));
}

}  // namespace

Estimate batch_means(std::span<const double> per_sample, std::size_t batches) {
  Estimate e;
  e.samples = per_sample.size();
  if (per_sample.empty()) return e;
  e.value = mean_of(per_sample);
  std::vector<double> means;
  for (auto [lo, hi] : batch_ranges(per_sample.size(), batches))
    means.push_back(mean_of(per_sample.subspan(lo, hi - lo)));
  // Unequal batch sizes: weight-free spread is adequate at >= 20 batches.
  e.se = spread_se(means);
  return e;
}

Estimate batch_ratio(std::span<const double> numerators, std::span<const double> denominators, std::size_t batches) {
  if (numerators.size() != denominators.size()) throw ConfigError("batch_ratio: size mismatch");
  Estimate e;
  e.samples = numerators.size();
  if (numerators.empty()) return e;
  const double num = std::accumulate(numerators.begin(), numerators.end(), 0.0);
  const double den = std::accumulate(denominators.begin(), denominators.end(), 0.0);
  e.value = den != 0.0 ? num / den : 0.0;
  std::vector<double> ratios;
  for (auto [lo, hi] : batch_ranges(numerators.size(), batches)) {
    double bn = 0.0, bd = 0.0;
    for (std::size_t i = lo; i < hi; ++i) {
      bn += numerators[i];
      bd += denominators[i];
    }
    ratios.push_back(bd != 0.0 ? bn / bd : 0.0);
  }
  e.se = spread_se(ratios);
  return e;
}

double Comparison::z_score() const noexcept {
  if (combined_se == 0.0) return difference == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return difference / combined_se;
}

bool Comparison::within(double k) const noexcept { return std::abs(difference) <= k * combined_se; }

Comparison compare(const Estimate& a, const Estimate& b) noexcept {
  return {a.value - b.value, std::hypot(a.se, b.se)};
}

double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw ConfigError("KS distance needs non-empty samples");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

double ks_one_sample(std::vector<double> sample, const std::function<double(double)>& cdf) {
  if (sample.empty()) throw ConfigError("KS distance needs a non-empty sample");
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

LinearFit linear_fit(std::span<const double> x, std::span<const double> y, std::span<const double> sigma) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n || (!sigma.empty() && sigma.size() != n))
    throw ConfigError("linear_fit: need at least two matching points");
  double sw = 0, swx = 0, swy = 0, swxx = 0, swxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = sigma.empty() ? 1.0 : 1.0 / (sigma[i] * sigma[i]);
    sw += w;
    swx += w * x[i];
    swy += w * y[i];
    swxx += w * x[i] * x[i];
    swxy += w * x[i] * y[i];
  }
  const double det = sw * swxx - swx * swx;
  if (det == 0.0) throw NumericalError("linear_fit: degenerate abscissae");
  LinearFit f;
  f.slope = (sw * swxy - swx * swy) / det;
  f.intercept = (swxx * swy - swx * swxy) / det;
  if (sigma.empty()) {
    double rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = y[i] - f.intercept - f.slope * x[i];
      rss += r * r;
    }
    const double s2 = n > 2 ? rss / static_cast<double>(n - 2) : 0.0;
    f.slope_se = std::sqrt(s2 * sw / det);
    f.intercept_se = std::sqrt(s2 * swxx / det);
  } else {
    f.slope_se = std::sqrt(sw / det);
    f.intercept_se = std::sqrt(swxx / det);
  }
  return f;
}

std::vector<double> Histogram::density() const {
  std::vector<double> d(counts.size(), 0.0);
  if (total <= 0.0) return d;
  for (std::size_t i = 0; i < counts.size(); ++i) d[i] = counts[i] / (total * (edges[i + 1] - edges[i]));
  return d;
}

Histogram make_histogram(std::span<const double> values, double lo, double hi, std::size_t bins) {
  if (!(hi > lo) || bins == 0) throw ConfigError("histogram needs hi > lo and at least one bin");
  Histogram h;
  h.edges.resize(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i) h.edges[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(bins);
  h.counts.assign(bins, 0.0);
  for (double v : values) {
    h.total += 1.0;
    if (v < lo || v >= hi) continue;
    auto b = static_cast<std::size_t>((v - lo) / (hi - lo) * static_cast<double>(bins));
    h.counts[std::min(b, bins - 1)] += 1.0;
  }
  return h;
}

}  // namespace wigner
