#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "wigner/ensembles.hpp"
#include "wigner/parallel.hpp"
#include "wigner/sampling_stats.hpp"
#include "wigner/spectral.hpp"

namespace wigner {

/// Central fraction of indices used for bulk statistics.
inline constexpr double kDefaultBulkFraction = 0.6;

/// Gap indices i (gap between eigenvalue i and i+1, 0-based) covering the
/// central `fraction` of the spectrum: [first, last).
std::pair<std::size_t, std::size_t> bulk_gap_range(std::size_t n, double fraction);

// ---------------------------------------------------------------------------
// Local semicircle law

struct LocalLawParams {
  double kappa = 0.5;  // bulk guard: |E| <= 2 - kappa
  double K = 2.0;      // admissible widths K/N <= eta <= 1/K
};

struct LocalLawRow {
  double eta = 0.0;
  Estimate mean_deviation;  // of |N_I/(N eta) - rho_sc(E)|
  double max_deviation = 0.0;
  Estimate density;  // of N_I/(N eta)
};

struct LocalLawReport {
  double energy = 0.0;
  double reference_density = 0.0;
  std::vector<LocalLawRow> rows;
  std::size_t sample_count = 0;
};

/// Monte Carlo deviation statistic of the windowed eigenvalue density from
/// rho_sc, for every (energy, eta) pair; one report per energy. All energies
/// share the same matrix samples.
std::vector<LocalLawReport> local_law_scan(const EnsembleConfig& config, std::span<const double> energies,
                                           std::span<const double> eta_grid, std::size_t n_samples,
                                           const LocalLawParams& params = {},
                                           unsigned workers = default_worker_count());
LocalLawReport local_law_scan(const EnsembleConfig& config, double energy, std::span<const double> eta_grid,
                              std::size_t n_samples, const LocalLawParams& params = {},
                              unsigned workers = default_worker_count());

// ---------------------------------------------------------------------------
// Delocalization

struct VectorNorms {
  std::size_t index = 0;
  double eigenvalue = 0.0;
  double scaled_p_norm = 0.0;  // N^{1/2 - 1/p} ||v||_p
  double linf = 0.0;           // ||v||_inf
  double n_linf2 = 0.0;        // N ||v||_inf^2
  double n_l4_4 = 0.0;         // N ||v||_4^4
  bool localized = false;
};

/// Norms of a unit vector given its component weights |v_i|^2.
VectorNorms vector_norms(std::span<const double> weights, double p, double localization_threshold = 2.0);

struct DelocalizationReport {
  double energy = 0.0;
  double half_width = 0.0;  // K/N
  double p = 0.0;
  std::vector<VectorNorms> vectors;
};

/// Norm statistics of every eigenvector whose eigenvalue lies within K/N of E.
/// Requires eigenvectors, |E| < 2, p > 2. No eigenvalue in the window is an
/// empty report.
DelocalizationReport delocalization_stats(const Spectrum& spectrum, double energy, double K, double p,
                                          double localization_threshold = 2.0);

// ---------------------------------------------------------------------------
// Level repulsion

struct RepulsionParams {
  /// Window centres are averaged uniformly over [E - band, E + band].
  double band_halfwidth = 0.25;
  std::size_t min_hits = 25;
  bool allow_non_smooth = false;
};

struct RepulsionRow {
  double epsilon = 0.0;
  Estimate probability;  // P(N_I >= n), |I| = epsilon / N
  std::size_t hits = 0;  // index tuples that produced an event
};

struct RepulsionReport {
  int n = 0;
  int beta = 0;
  double energy = 0.0;
  double expected_exponent = 0.0;  // n^2 (hermitian) or n(n+1)/2 (symmetric)
  std::vector<RepulsionRow> rows;
  LinearFit fit;  // log P against log epsilon
  double slope_ci_low = 0.0;
  double slope_ci_high = 0.0;
  bool widened_uncertainty = false;
};

/// Fraction of window centres c in [lo, hi] for which [c - width/2, c + width/2]
/// holds at least n eigenvalues (sorted input). `hits` receives the number of
/// n-tuples of consecutive eigenvalues that fit in a window and reach the band.
double occupancy_fraction(std::span<const double> eigenvalues, double lo, double hi, double width, int n,
                          std::size_t* hits = nullptr);

RepulsionReport level_repulsion_probe(const EnsembleConfig& config, double energy, std::span<const double> epsilons,
                                      int n, std::size_t n_samples, const RepulsionParams& params = {},
                                      unsigned workers = default_worker_count());

// ---------------------------------------------------------------------------
// Gap statistics

struct GapSample {
  std::vector<double> gaps;  // s_i = N rho_sc(lambda_i) (lambda_{i+1} - lambda_i)
  int beta = 0;
  std::size_t n = 0;
  std::size_t sample_count = 0;
  double bulk_fraction = kDefaultBulkFraction;
};

/// Unfolded bulk gaps of one sorted spectrum.
std::vector<double> normalized_bulk_gaps(std::span<const double> eigenvalues, double bulk_fraction = kDefaultBulkFraction);

struct GapDistribution {
  GapSample sample;
  Histogram histogram;
  double mean = 0.0;
};

GapDistribution gap_distribution(const EnsembleConfig& config, double bulk_fraction, std::size_t n_samples,
                                 unsigned workers = default_worker_count());

// ---------------------------------------------------------------------------
// Sine kernel and k-point correlations

/// sin(pi x)/(pi x) with K(0) = 1.
double sine_kernel(double x) noexcept;
/// det[K(x_i - x_j)]_{i,j}.
double sine_kernel_determinant(std::span<const double> points);

struct CorrelationEstimate {
  int k = 0;
  double energy = 0.0;
  double delta = 0.0;
  std::vector<double> edges;
  /// k = 1, 2: one value per bin. k = 3: row-major grid over (x_2 bin, x_3 bin).
  std::vector<double> values;
  std::vector<double> errors;
  std::vector<double> counts;  // raw tuple counts
  std::size_t sample_count = 0;
  double origins = 0.0;  // eigenvalues used as origins (k >= 2)
  bool folded = false;   // k = 2 with non-negative edges: binned by |x|
  bool widened_uncertainty = false;
};

/// Per-sample tuple counts for one sorted spectrum of size N.
struct CorrelationCounts {
  std::vector<double> weights;  // per bin
  std::vector<double> counts;
  double origins = 0.0;
};
CorrelationCounts correlation_counts(std::span<const double> eigenvalues, int k, double energy, double delta,
                                     std::span<const double> edges);
/// Merge per-sample counts (in sample order) into an estimate.
CorrelationEstimate merge_correlation(std::span<const CorrelationCounts> per_sample, int k, double energy,
                                      double delta, std::span<const double> edges);

/// Energy-averaged rescaled k-point correlation function (k in {1,2,3}) with
/// rescaling N rho_sc(E). Requires |E| < 2 - kappa and strictly increasing edges.
CorrelationEstimate kpoint_correlation(const EnsembleConfig& config, int k, double energy, double delta,
                                       std::span<const double> edges, std::size_t n_samples, double kappa = 0.5,
                                       unsigned workers = default_worker_count());

// ---------------------------------------------------------------------------
// Gap observables

struct GapTestFunction {
  std::string name;
  std::function<double(double)> g;
};

/// max(0, 1 - |t - center|/halfwidth).
GapTestFunction triangle_bump(double center = 1.0, double halfwidth = 1.0);
/// C-infinity bump supported on (lo, hi) with peak value 1.
GapTestFunction smooth_bump(double lo = 0.5, double hi = 1.5);
std::vector<GapTestFunction> default_gap_battery();

/// (1/N) sum_{i in [first, last)} G(N (x_{i+n} - x_i)). Throws DomainError if
/// last - 1 + n >= N or first > last.
double gap_observable(std::span<const double> x, const std::function<double(double)>& g, std::size_t n,
                      std::size_t first, std::size_t last);
/// Same with J = bulk gap range of `bulk_fraction`.
double gap_observable_bulk(std::span<const double> x, const std::function<double(double)>& g, std::size_t n,
                           double bulk_fraction = kDefaultBulkFraction);

}  // namespace wigner
