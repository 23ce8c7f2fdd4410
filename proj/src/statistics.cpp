#include "wigner/statistics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "wigner/errors.hpp"
#include "wigner/linalg.hpp"

namespace wigner {

namespace {

void require_increasing(std::span<const double> v, const char* what) {
  if (v.empty()) throw ConfigError(std::string(what) + " must not be empty");
  for (std::size_t i = 1; i < v.size(); ++i)
    if (!(v[i] > v[i - 1])) throw ConfigError(std::string(what) + " must be strictly increasing");
}

std::size_t bin_of(std::span<const double> edges, double x) {
  // edges sorted; returns edges.size() when x is outside [front, back)
  if (x < edges.front() || x >= edges.back()) return edges.size();
  auto it = std::upper_bound(edges.begin(), edges.end(), x);
  return static_cast<std::size_t>(it - edges.begin()) - 1;
}

}  // namespace

std::pair<std::size_t, std::size_t> bulk_gap_range(std::size_t n, double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ConfigError("bulk fraction must lie in (0, 1]");
  if (n < 2) return {0, 0};
  const std::size_t gaps = n - 1;
  const auto keep = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(gaps)));
  const std::size_t first = (gaps - std::min(keep, gaps)) / 2;
  return {first, first + std::min(keep, gaps)};
}

// ---------------------------------------------------------------------------

std::vector<LocalLawReport> local_law_scan(const EnsembleConfig& config, std::span<const double> energies,
                                           std::span<const double> eta_grid, std::size_t n_samples,
                                           const LocalLawParams& params, unsigned workers) {
  config.validate();
  if (n_samples == 0) throw ConfigError("local_law_scan needs at least one sample");
  if (!(params.kappa > 0.0) || !(params.K >= 1.0)) throw ConfigError("local law needs kappa > 0 and K >= 1");
  require_increasing(eta_grid, "eta grid");
  const double n = static_cast<double>(config.n);
  for (double eta : eta_grid) {
    if (eta < params.K / n * (1 - 1e-12) || eta > 1.0 / params.K * (1 + 1e-12)) {
      std::ostringstream msg;
      msg << "eta = " << eta << " outside [K/N, 1/K] = [" << params.K / n << ", " << 1.0 / params.K << "]";
      throw ConfigError(msg.str());
    }
  }
  for (double e : energies)
    if (!(std::abs(e) <= 2.0 - params.kappa)) throw DomainError("energy outside the bulk guard |E| <= 2 - kappa");

  const std::size_t cells = energies.size() * eta_grid.size();
  auto per_sample = parallel_map(n_samples, workers, [&](std::size_t s) {
    const auto eigs = sample_eigenvalues(config, s);
    std::vector<double> density(cells);
    for (std::size_t a = 0; a < energies.size(); ++a)
      for (std::size_t b = 0; b < eta_grid.size(); ++b)
        density[a * eta_grid.size() + b] =
            static_cast<double>(count_in_interval(eigs, energies[a], eta_grid[b])) / (n * eta_grid[b]);
    return density;
  });

  std::vector<LocalLawReport> reports;
  reports.reserve(energies.size());
  std::vector<double> dens(n_samples), dev(n_samples);
  for (std::size_t a = 0; a < energies.size(); ++a) {
    LocalLawReport rep;
    rep.energy = energies[a];
    rep.reference_density = semicircle_density(energies[a]);
    rep.sample_count = n_samples;
    for (std::size_t b = 0; b < eta_grid.size(); ++b) {
      for (std::size_t s = 0; s < n_samples; ++s) {
        dens[s] = per_sample[s][a * eta_grid.size() + b];
        dev[s] = std::abs(dens[s] - rep.reference_density);
      }
      LocalLawRow row;
      row.eta = eta_grid[b];
      row.mean_deviation = batch_means(dev);
      row.max_deviation = *std::max_element(dev.begin(), dev.end());
      row.density = batch_means(dens);
      rep.rows.push_back(row);
    }
    reports.push_back(std::move(rep));
  }
  return reports;
}

LocalLawReport local_law_scan(const EnsembleConfig& config, double energy, std::span<const double> eta_grid,
                              std::size_t n_samples, const LocalLawParams& params, unsigned workers) {
  const double e[] = {energy};
  return local_law_scan(config, e, eta_grid, n_samples, params, workers).front();
}

// ---------------------------------------------------------------------------

VectorNorms vector_norms(std::span<const double> weights, double p, double localization_threshold) {
  if (!(p > 2.0)) throw ConfigError("delocalization needs p > 2");
  if (weights.empty()) throw DomainError("empty vector");
  const double n = static_cast<double>(weights.size());
  double sum_p = 0.0, sum_4 = 0.0, max_w = 0.0;
  for (double w : weights) {
    sum_p += std::pow(w, p / 2.0);
    sum_4 += w * w;
    max_w = std::max(max_w, w);
  }
  VectorNorms out;
  out.scaled_p_norm = std::pow(n, 0.5 - 1.0 / p) * std::pow(sum_p, 1.0 / p);
  out.linf = std::sqrt(max_w);
  out.n_linf2 = n * max_w;
  out.n_l4_4 = n * sum_4;
  out.localized = out.scaled_p_norm > localization_threshold;
  return out;
}

DelocalizationReport delocalization_stats(const Spectrum& spectrum, double energy, double K, double p,
                                          double localization_threshold) {
  if (!spectrum.has_vectors()) throw ConfigError("delocalization_stats needs eigenvectors");
  if (!(std::abs(energy) < 2.0)) throw DomainError("delocalization energy must satisfy |E| < 2");
  if (!(K > 0.0)) throw ConfigError("window count K must be positive");
  if (!(p > 2.0)) throw ConfigError("delocalization needs p > 2");
  DelocalizationReport rep;
  rep.energy = energy;
  rep.half_width = K / static_cast<double>(spectrum.size());
  rep.p = p;
  const auto eigs = spectrum.eigenvalues();
  auto lo = std::lower_bound(eigs.begin(), eigs.end(), energy - rep.half_width);
  auto hi = std::upper_bound(eigs.begin(), eigs.end(), energy + rep.half_width);
  for (auto it = lo; it != hi; ++it) {
    const auto a = static_cast<std::size_t>(it - eigs.begin());
    const auto w = spectrum.component_weights(a);
    VectorNorms v = vector_norms(w, p, localization_threshold);
    v.index = a;
    v.eigenvalue = *it;
    rep.vectors.push_back(v);
  }
  return rep;
}

// ---------------------------------------------------------------------------

double occupancy_fraction(std::span<const double> eig, double lo, double hi, double width, int n,
                          std::size_t* hits) {
  if (!(hi > lo)) throw ConfigError("occupancy band must have positive length");
  if (n < 1) throw ConfigError("occupancy needs n >= 1");
  const auto nn = static_cast<std::size_t>(n);
  std::size_t h = 0;
  double covered = 0.0;
  double cur_lo = 0.0, cur_hi = 0.0;
  bool open = false;
  if (eig.size() >= nn) {
    for (std::size_t i = 0; i + nn - 1 < eig.size(); ++i) {
      const double a = std::max(eig[i + nn - 1] - width / 2.0, lo);
      const double b = std::min(eig[i] + width / 2.0, hi);
      if (!(b >= a)) continue;
      ++h;
      // intervals have nondecreasing endpoints in i, so a sweep suffices
      if (open && a <= cur_hi) {
        cur_hi = std::max(cur_hi, b);
      } else {
        if (open) covered += cur_hi - cur_lo;
        cur_lo = a;
        cur_hi = b;
        open = true;
      }
    }
  }
  if (open) covered += cur_hi - cur_lo;
  if (hits) *hits = h;
  return covered / (hi - lo);
}

RepulsionReport level_repulsion_probe(const EnsembleConfig& config, double energy, std::span<const double> epsilons,
                                      int n, std::size_t n_samples, const RepulsionParams& params,
                                      unsigned workers) {
  config.validate();
  if (!config.entries.has_smooth_density() && !params.allow_non_smooth)
    throw ConfigError("level repulsion needs entries with a smooth density (gaussian or laplace)");
  if (!(std::abs(energy) < 2.0)) throw DomainError("repulsion energy must satisfy |E| < 2");
  if (n < 1) throw ConfigError("repulsion order n must be >= 1");
  if (n_samples == 0) throw ConfigError("repulsion probe needs samples");
  if (!(params.band_halfwidth >= 0.0)) throw ConfigError("band half-width must be nonnegative");
  if (std::abs(energy) + params.band_halfwidth >= 2.0) throw DomainError("repulsion band reaches the spectral edge");
  require_increasing(epsilons, "epsilon grid");
  for (double e : epsilons)
    if (!(e > 0.0 && e <= 1.0)) throw ConfigError("epsilon values must lie in (0, 1]");

  const double nd = static_cast<double>(config.n);
  const std::size_t m = epsilons.size();
  struct PerSample {
    std::vector<double> frac;
    std::vector<std::size_t> hits;
  };
  auto per_sample = parallel_map(n_samples, workers, [&](std::size_t s) {
    const auto eigs = sample_eigenvalues(config, s);
    PerSample out{std::vector<double>(m), std::vector<std::size_t>(m)};
    for (std::size_t k = 0; k < m; ++k) {
      const double w = epsilons[k] / nd;
      if (params.band_halfwidth > 0.0) {
        out.frac[k] = occupancy_fraction(eigs, energy - params.band_halfwidth, energy + params.band_halfwidth, w, n,
                                         &out.hits[k]);
      } else {
        const bool hit = static_cast<int>(count_in_interval(eigs, energy, w)) >= n;
        out.frac[k] = hit ? 1.0 : 0.0;
        out.hits[k] = hit ? 1 : 0;
      }
    }
    return out;
  });

  RepulsionReport rep;
  rep.n = n;
  rep.beta = config.beta;
  rep.energy = energy;
  rep.expected_exponent = config.beta == 2 ? double(n) * n : double(n) * (n + 1) / 2.0;
  std::vector<double> col(n_samples);
  std::vector<double> lx, ly, ls;
  for (std::size_t k = 0; k < m; ++k) {
    RepulsionRow row;
    row.epsilon = epsilons[k];
    for (std::size_t s = 0; s < n_samples; ++s) {
      col[s] = per_sample[s].frac[k];
      row.hits += per_sample[s].hits[k];
    }
    row.probability = batch_means(col);
    if (row.probability.value > 0.0) {
      lx.push_back(std::log(row.epsilon));
      ly.push_back(std::log(row.probability.value));
      // a zero batch error would dominate the fit; floor at a Poisson-like error
      const double rel_floor = 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(row.hits, 1)));
      ls.push_back(std::max(row.probability.se / row.probability.value, rel_floor));
    } else {
      rep.widened_uncertainty = true;
    }
    rep.rows.push_back(row);
  }
  if (rep.rows.front().hits < params.min_hits) rep.widened_uncertainty = true;
  if (lx.size() >= 2) {
    rep.fit = linear_fit(lx, ly, ls);
    double width = 1.96 * rep.fit.slope_se;
    if (rep.widened_uncertainty) width *= 2.0;
    rep.slope_ci_low = rep.fit.slope - width;
    rep.slope_ci_high = rep.fit.slope + width;
  } else {
    rep.widened_uncertainty = true;
    rep.fit.slope = std::nan("");
    rep.slope_ci_low = -INFINITY;
    rep.slope_ci_high = INFINITY;
  }
  return rep;
}

// ---------------------------------------------------------------------------

std::vector<double> normalized_bulk_gaps(std::span<const double> eig, double bulk_fraction) {
  const auto [first, last] = bulk_gap_range(eig.size(), bulk_fraction);
  const double n = static_cast<double>(eig.size());
  std::vector<double> gaps;
  gaps.reserve(last - first);
  for (std::size_t i = first; i < last; ++i) gaps.push_back(n * semicircle_density(eig[i]) * (eig[i + 1] - eig[i]));
  return gaps;
}

GapDistribution gap_distribution(const EnsembleConfig& config, double bulk_fraction, std::size_t n_samples,
                                 unsigned workers) {
  config.validate();
  if (!(bulk_fraction > 0.0 && bulk_fraction < 1.0)) throw ConfigError("bulk fraction must lie in (0, 1)");
  if (n_samples == 0) throw ConfigError("gap distribution needs samples");
  auto per_sample = parallel_map(n_samples, workers, [&](std::size_t s) {
    return normalized_bulk_gaps(sample_eigenvalues(config, s), bulk_fraction);
  });
  GapDistribution out;
  out.sample.beta = config.beta;
  out.sample.n = config.n;
  out.sample.sample_count = n_samples;
  out.sample.bulk_fraction = bulk_fraction;
  for (auto& g : per_sample) out.sample.gaps.insert(out.sample.gaps.end(), g.begin(), g.end());
  out.mean = mean_of(out.sample.gaps);
  out.histogram = make_histogram(out.sample.gaps, 0.0, 4.0, 40);
  return out;
}

// ---------------------------------------------------------------------------

double sine_kernel(double x) noexcept {
  const double px = std::numbers::pi * x;
  if (std::abs(px) < 1e-4) return 1.0 - px * px / 6.0 + px * px * px * px / 120.0;
  return std::sin(px) / px;
}

double sine_kernel_determinant(std::span<const double> points) {
  const std::size_t k = points.size();
  if (k == 0) throw ConfigError("sine kernel determinant needs at least one point");
  RealMatrix m(k, k);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j) m(i, j) = sine_kernel(points[i] - points[j]);
  return determinant(m);
}

CorrelationCounts correlation_counts(std::span<const double> eig, int k, double energy, double delta,
                                     std::span<const double> edges) {
  const std::size_t bins = edges.size() - 1;
  const double scale = static_cast<double>(eig.size()) * semicircle_density(energy);
  CorrelationCounts out;
  if (k == 1) {
    out.weights.assign(bins, 0.0);
    out.counts.assign(bins, 0.0);
    const double v_lo = energy - delta, v_hi = energy + delta;
    // x = scale * (lambda - v): bin b is hit for v in [lambda - e_{b+1}/scale, lambda - e_b/scale]
    const double reach = std::max(std::abs(edges.front()), std::abs(edges.back())) / scale;
    auto lo = std::lower_bound(eig.begin(), eig.end(), v_lo - reach);
    auto hi = std::upper_bound(eig.begin(), eig.end(), v_hi + reach);
    for (auto it = lo; it != hi; ++it) {
      for (std::size_t b = 0; b < bins; ++b) {
        const double a = std::max(*it - edges[b + 1] / scale, v_lo);
        const double c = std::min(*it - edges[b] / scale, v_hi);
        if (c > a) {
          out.weights[b] += (c - a) / (2.0 * delta);
          out.counts[b] += 1.0;
        }
      }
    }
    out.origins = 1.0;
    return out;
  }
  const bool folded = k == 2 && edges.front() >= 0.0;
  const std::size_t cells = k == 2 ? bins : bins * bins;
  out.weights.assign(cells, 0.0);
  out.counts.assign(cells, 0.0);
  const double reach = std::max(std::abs(edges.front()), std::abs(edges.back())) / scale;
  auto o_lo = std::lower_bound(eig.begin(), eig.end(), energy - delta);
  auto o_hi = std::upper_bound(eig.begin(), eig.end(), energy + delta);
  for (auto o = o_lo; o != o_hi; ++o) {
    out.origins += 1.0;
    const auto a = static_cast<std::size_t>(o - eig.begin());
    const auto p_lo = static_cast<std::size_t>(std::lower_bound(eig.begin(), eig.end(), *o - reach) - eig.begin());
    const auto p_hi = static_cast<std::size_t>(std::upper_bound(eig.begin(), eig.end(), *o + reach) - eig.begin());
    for (std::size_t p = p_lo; p < p_hi; ++p) {
      if (p == a) continue;
      const double x2 = scale * (eig[p] - *o);
      if (k == 2) {
        const std::size_t b = bin_of(edges, folded ? std::abs(x2) : x2);
        if (b >= bins) continue;
        out.weights[b] += folded ? 0.5 : 1.0;
        out.counts[b] += 1.0;
        continue;
      }
      const std::size_t b2 = bin_of(edges, x2);
      if (b2 >= bins) continue;
      for (std::size_t q = p_lo; q < p_hi; ++q) {
        if (q == a || q == p) continue;
        const std::size_t b3 = bin_of(edges, scale * (eig[q] - *o));
        if (b3 >= bins) continue;
        out.weights[b2 * bins + b3] += 1.0;
        out.counts[b2 * bins + b3] += 1.0;
      }
    }
  }
  return out;
}

CorrelationEstimate merge_correlation(std::span<const CorrelationCounts> per_sample, int k, double energy,
                                      double delta, std::span<const double> edges) {
  const std::size_t bins = edges.size() - 1;
  const std::size_t cells = k == 3 ? bins * bins : bins;
  CorrelationEstimate est;
  est.k = k;
  est.energy = energy;
  est.delta = delta;
  est.edges.assign(edges.begin(), edges.end());
  est.sample_count = per_sample.size();
  est.folded = k == 2 && edges.front() >= 0.0;
  est.values.assign(cells, 0.0);
  est.errors.assign(cells, 0.0);
  est.counts.assign(cells, 0.0);
  std::vector<double> num(per_sample.size()), den(per_sample.size());
  for (std::size_t s = 0; s < per_sample.size(); ++s) {
    den[s] = per_sample[s].origins;
    est.origins += per_sample[s].origins;
  }
  if (k == 1) est.origins = 0.0;
  for (std::size_t c = 0; c < cells; ++c) {
    double area = 0.0;
    if (k == 3) {
      area = (edges[c / bins + 1] - edges[c / bins]) * (edges[c % bins + 1] - edges[c % bins]);
    } else {
      area = edges[c + 1] - edges[c];
    }
    for (std::size_t s = 0; s < per_sample.size(); ++s) {
      num[s] = per_sample[s].weights[c] / area;
      est.counts[c] += per_sample[s].counts[c];
    }
    const Estimate e = batch_ratio(num, den);
    est.values[c] = e.value;
    est.errors[c] = e.se;
    if (est.counts[c] == 0.0) est.widened_uncertainty = true;
  }
  return est;
}

CorrelationEstimate kpoint_correlation(const EnsembleConfig& config, int k, double energy, double delta,
                                       std::span<const double> edges, std::size_t n_samples, double kappa,
                                       unsigned workers) {
  config.validate();
  if (k < 1 || k > 3) throw ConfigError("correlation order k must be 1, 2 or 3");
  if (!(kappa > 0.0) || !(std::abs(energy) < 2.0 - kappa)) throw DomainError("energy outside the bulk guard");
  if (!(delta > 0.0) || std::abs(energy) + delta >= 2.0) throw ConfigError("delta must be positive and inside the bulk");
  if (edges.size() < 2) throw ConfigError("correlation needs at least one bin");
  require_increasing(edges, "bin edges");
  if (n_samples == 0) throw ConfigError("correlation needs samples");
  auto per_sample = parallel_map(n_samples, workers, [&](std::size_t s) {
    return correlation_counts(sample_eigenvalues(config, s), k, energy, delta, edges);
  });
  return merge_correlation(per_sample, k, energy, delta, edges);
}

// ---------------------------------------------------------------------------

GapTestFunction triangle_bump(double center, double halfwidth) {
  if (!(halfwidth > 0.0)) throw ConfigError("triangle bump needs a positive half-width");
  std::ostringstream name;
  name << "triangle(" << center << "," << halfwidth << ")";
  return {name.str(), [center, halfwidth](double t) { return std::max(0.0, 1.0 - std::abs(t - center) / halfwidth); }};
}

GapTestFunction smooth_bump(double lo, double hi) {
  if (!(hi > lo)) throw ConfigError("smooth bump needs lo < hi");
  std::ostringstream name;
  name << "bump(" << lo << "," << hi << ")";
  return {name.str(), [lo, hi](double t) {
            if (t <= lo || t >= hi) return 0.0;
            const double u = (2.0 * t - lo - hi) / (hi - lo);  // in (-1, 1)
            return std::exp(1.0 - 1.0 / (1.0 - u * u));
          }};
}

std::vector<GapTestFunction> default_gap_battery() { return {triangle_bump(1.0, 1.0), smooth_bump(0.5, 1.5)}; }

double gap_observable(std::span<const double> x, const std::function<double(double)>& g, std::size_t n,
                      std::size_t first, std::size_t last) {
  const std::size_t size = x.size();
  if (n < 1) throw DomainError("gap observable needs n >= 1");
  if (first > last) throw DomainError("gap observable index set is inverted");
  if (last > first && last - 1 + n >= size) throw DomainError("gap observable index set overflows the positions");
  const double nd = static_cast<double>(size);
  double sum = 0.0;
  for (std::size_t i = first; i < last; ++i) sum += g(nd * (x[i + n] - x[i]));
  return sum / nd;
}

double gap_observable_bulk(std::span<const double> x, const std::function<double(double)>& g, std::size_t n,
                           double bulk_fraction) {
  auto [first, last] = bulk_gap_range(x.size(), bulk_fraction);
  // keep every i + n inside the positions
  while (last > first && last - 1 + n >= x.size()) --last;
  return gap_observable(x, g, n, first, last);
}

}  // namespace wigner
