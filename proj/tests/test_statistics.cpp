#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "wigner/errors.hpp"
#include "wigner/oracles.hpp"
#include "wigner/spectral.hpp"
#include "wigner/statistics.hpp"

using namespace wigner;

namespace {

EnsembleConfig goe(std::size_t n, std::uint64_t seed = 1) { return {1, n, {EntryKind::gaussian}, seed}; }
EnsembleConfig gue(std::size_t n, std::uint64_t seed = 1) { return {2, n, {EntryKind::gaussian}, seed}; }

}  // namespace

TEST_CASE("bulk gap range is central") {
  const auto [a, b] = bulk_gap_range(100, 0.6);
  CHECK(b - a >= 58);
  CHECK(b - a <= 61);
  CHECK(a + (b - 1) == doctest::Approx(98).epsilon(0.02));
  CHECK_THROWS_AS(bulk_gap_range(100, 0.0), ConfigError);
  CHECK_THROWS_AS(bulk_gap_range(100, 1.5), ConfigError);
}

TEST_CASE("vector norms of trivial vectors") {
  const std::size_t n = 100;
  std::vector<double> basis(n, 0.0);
  basis[7] = 1.0;
  const auto b = vector_norms(basis, 4.0);
  CHECK(b.scaled_p_norm == doctest::Approx(std::pow(100.0, 0.25)));
  CHECK(b.localized);
  CHECK(b.n_linf2 == doctest::Approx(100.0));
  CHECK(b.n_l4_4 == doctest::Approx(100.0));
  const std::vector<double> flat(n, 1.0 / n);
  for (double p : {3.0, 4.0, 10.0}) {
    const auto f = vector_norms(flat, p);
    CHECK(f.scaled_p_norm == doctest::Approx(1.0).epsilon(1e-13));
    CHECK_FALSE(f.localized);
  }
  CHECK(vector_norms(flat, 4.0).n_l4_4 == doctest::Approx(1.0));
}

TEST_CASE("sine kernel values and determinant examples") {
  CHECK(sine_kernel(0.0) == 1.0);
  CHECK(sine_kernel(1.0) == doctest::Approx(0.0).scale(1.0));
  CHECK(sine_kernel(0.5) == doctest::Approx(2.0 / M_PI));
  // series branch agrees with the direct formula where both are accurate
  for (double x : {1e-3, 3e-3, 1e-2}) CHECK(sine_kernel(x) == doctest::Approx(std::sin(M_PI * x) / (M_PI * x)).epsilon(1e-14));
  const double one[] = {0.3};
  CHECK(sine_kernel_determinant(one) == doctest::Approx(1.0));
  const double half[] = {0.0, 0.5};
  CHECK(sine_kernel_determinant(half) == doctest::Approx(1.0 - 4.0 / (M_PI * M_PI)).epsilon(1e-14));
  CHECK(sine_kernel_determinant(half) == doctest::Approx(0.5947).epsilon(1e-4));
  double prev = 1.0;
  for (double t : {1e-1, 1e-2, 1e-3, 1e-4}) {
    const double pts[] = {0.0, t};
    const double d = sine_kernel_determinant(pts);
    CHECK(d < prev);
    CHECK(d >= 0.0);
    // vanishes quadratically: (pi t)^2 / 3
    if (t <= 1e-2) CHECK(d / (t * t) == doctest::Approx(M_PI * M_PI / 3.0).epsilon(1e-3));
    prev = d;
  }
}

TEST_CASE("sine kernel determinant is permutation and shift invariant") {
  CounterRng r(11, 11);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<double> x(3 + rep % 3);
    for (auto& v : x) v = 4.0 * r.uniform() - 2.0;
    const double d = sine_kernel_determinant(x);
    CHECK(d >= -1e-14);
    auto y = x;
    std::reverse(y.begin(), y.end());
    std::rotate(y.begin(), y.begin() + 1, y.end());
    CHECK(sine_kernel_determinant(y) == doctest::Approx(d).epsilon(1e-12).scale(1.0));
    const double c = 10.0 * r.uniform() - 5.0;
    for (auto& v : y) v += c;
    CHECK(std::abs(sine_kernel_determinant(y) - d) < 1e-12);
  }
}

TEST_CASE("gap observable examples") {
  const std::size_t n = 50;
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = static_cast<double>(i) / n;
  const auto tri = triangle_bump(1.0, 1.0);
  CHECK(gap_observable(x, tri.g, 1, 0, 49) == doctest::Approx(49.0 / 50.0));
  CHECK(gap_observable(x, tri.g, 1, 10, 20) == doctest::Approx(10.0 / 50.0));
  auto one = [](double) { return 1.0; };
  CHECK(gap_observable(x, one, 3, 0, 47) == doctest::Approx(47.0 / 50.0));
  // second neighbours sit at distance 2 where the triangle vanishes
  CHECK(gap_observable(x, tri.g, 2, 0, 48) < 1e-12);
  CHECK_THROWS_AS(gap_observable(x, tri.g, 1, 0, 50), DomainError);
  CHECK_THROWS_AS(gap_observable(x, tri.g, 3, 0, 48), DomainError);
  CHECK_THROWS_AS(gap_observable(x, tri.g, 1, 5, 4), DomainError);
  CHECK(gap_observable(x, tri.g, 1, 5, 5) == 0.0);
}

TEST_CASE("test battery functions") {
  const auto tri = triangle_bump();
  CHECK(tri.g(1.0) == 1.0);
  CHECK(tri.g(0.0) == 0.0);
  CHECK(tri.g(1.5) == doctest::Approx(0.5));
  const auto bump = smooth_bump();
  CHECK(bump.g(1.0) == doctest::Approx(1.0));
  CHECK(bump.g(0.5) == 0.0);
  CHECK(bump.g(1.5) == 0.0);
  CHECK(bump.g(0.51) > 0.0);
  CHECK(bump.g(0.51) < 1e-10);
  CHECK(default_gap_battery().size() == 2);
}

TEST_CASE("occupancy fraction by hand") {
  const std::vector<double> e{0.0, 0.1};
  std::size_t hits = 0;
  CHECK(occupancy_fraction(e, -1.0, 1.0, 0.3, 2, &hits) == doctest::Approx(0.1));
  CHECK(hits == 1);
  CHECK(occupancy_fraction(e, -1.0, 1.0, 0.3, 1) == doctest::Approx(0.2));
  CHECK(occupancy_fraction(e, -1.0, 1.0, 0.05, 2) == 0.0);
  CHECK(occupancy_fraction(e, 0.5, 1.0, 0.3, 1) == 0.0);
}

TEST_CASE("local law at macroscopic and mesoscopic scales") {
  const double macro[] = {0.5};
  const auto big = local_law_scan(goe(1000), 0.0, macro, 12);
  CHECK(big.reference_density == doctest::Approx(1.0 / M_PI));
  CHECK(big.rows[0].mean_deviation.value < 0.02);

  const double meso[] = {50.0 / 400, 0.2};
  const double energies[] = {-1.0, 0.0, 1.2};
  const auto reps = local_law_scan(goe(400), energies, meso, 40);
  REQUIRE(reps.size() == 3);
  for (const auto& r : reps) {
    CHECK(r.sample_count == 40);
    for (const auto& row : r.rows) {
      CHECK(row.mean_deviation.value >= 0.0);
      CHECK(row.max_deviation >= row.mean_deviation.value);
      CHECK(row.mean_deviation.value < 0.05);
    }
  }
}

TEST_CASE("local law argument checks") {
  const double etas[] = {0.1};
  CHECK_THROWS_AS(local_law_scan(goe(100), 1.8, etas, 2), DomainError);
  const double tiny[] = {0.01};
  CHECK_THROWS_AS(local_law_scan(goe(100), 0.0, tiny, 2), ConfigError);
  const double wrong_order[] = {0.2, 0.1};
  CHECK_THROWS_AS(local_law_scan(goe(100), 0.0, wrong_order, 2), ConfigError);
}

TEST_CASE("local law is independent of the worker count") {
  const double etas[] = {0.1, 0.3};
  const auto a = local_law_scan(goe(80), 0.0, etas, 16, {}, 1);
  const auto b = local_law_scan(goe(80), 0.0, etas, 16, {}, 3);
  for (std::size_t i = 0; i < 2; ++i) CHECK(a.rows[i].mean_deviation.value == b.rows[i].mean_deviation.value);
}

TEST_CASE("bulk eigenvectors are delocalized") {
  std::vector<double> l4;
  for (std::uint64_t s = 0; s < 4; ++s) {
    const auto spec = eigen_decompose(sample_wigner(goe(300), s), true);
    const auto rep = delocalization_stats(spec, 0.0, 30.0, 4.0);
    CHECK(rep.half_width == doctest::Approx(0.1));
    for (const auto& v : rep.vectors) {
      CHECK(std::abs(v.eigenvalue) <= 0.1);
      CHECK(v.n_linf2 < 40.0);
      l4.push_back(v.n_l4_4);
    }
  }
  REQUIRE(l4.size() > 20);
  CHECK(mean_of(l4) == doctest::Approx(3.0).epsilon(0.15));
  // a window beyond the spectrum is empty, not an error
  const auto spec = eigen_decompose(sample_wigner(goe(50), 0), true);
  CHECK(delocalization_stats(spec, 1.99, 1e-6, 4.0).vectors.empty());
  CHECK_THROWS_AS(delocalization_stats(spec, 0.0, 2.0, 2.0), ConfigError);
  CHECK_THROWS_AS(delocalization_stats(spec, 2.0, 2.0, 4.0), DomainError);
  CHECK_THROWS_AS(delocalization_stats(Spectrum(std::vector<double>{0.0, 1.0}), 0.0, 2.0, 4.0), ConfigError);
}

TEST_CASE("first order repulsion is linear in epsilon") {
  const double eps[] = {0.1, 0.2, 0.4, 0.8};
  const auto rep = level_repulsion_probe(gue(100), 0.0, eps, 1, 400);
  CHECK(rep.expected_exponent == 1.0);
  CHECK(rep.fit.slope == doctest::Approx(1.0).epsilon(0.15));
  // P(N_I >= 1) ~ rho eps to first order
  CHECK(rep.rows[0].probability.value == doctest::Approx(semicircle_density(0.0) * 0.1).epsilon(0.15));
  CHECK(rep.rows[0].probability.value < rep.rows[3].probability.value);
}

TEST_CASE("repulsion refuses rough entries unless allowed") {
  const double eps[] = {0.5, 1.0};
  EnsembleConfig rad{2, 40, {EntryKind::rademacher}, 1};
  CHECK_THROWS_AS(level_repulsion_probe(rad, 0.0, eps, 2, 10), ConfigError);
  RepulsionParams p;
  p.allow_non_smooth = true;
  const auto r = level_repulsion_probe(rad, 0.0, eps, 2, 10, p);
  CHECK(r.rows.size() == 2);
}

TEST_CASE("unfolded bulk gaps have unit mean and repel") {
  const auto d = gap_distribution(goe(500), kDefaultBulkFraction, 40);
  const auto& s = d.sample.gaps;
  REQUIRE(s.size() > 10000);
  CHECK(d.mean == doctest::Approx(1.0).epsilon(0.02));
  CHECK(std::all_of(s.begin(), s.end(), [](double v) { return v >= 0.0; }));
  const double small = std::count_if(s.begin(), s.end(), [](double v) { return v < 0.05; }) / double(s.size());
  CHECK(small < 0.01);
  CHECK(wigner_surmise_cdf(1, 0.05) == doctest::Approx(0.00196).epsilon(0.01));
  CHECK(ks_one_sample(s, [](double x) { return wigner_surmise_cdf(1, x); }) < 0.05);
}

TEST_CASE("unfolded one-point function is one and two-point function vanishes at zero") {
  std::vector<double> edges;
  for (int i = -20; i <= 20; ++i) edges.push_back(0.1 * i);
  const auto k1 = kpoint_correlation(gue(500), 1, 0.0, 0.1, edges, 30);
  double mean = 0.0;
  for (double v : k1.values) {
    CHECK(v >= 0.0);
    mean += v;
  }
  CHECK(mean / k1.values.size() == doctest::Approx(1.0).epsilon(0.05));

  std::vector<double> e2;
  for (int i = 0; i <= 30; ++i) e2.push_back(0.1 * i);
  const auto k2 = kpoint_correlation(gue(500), 2, 0.0, 0.1, e2, 60);
  CHECK(k2.folded);
  CHECK(k2.values[0] < 0.05);
  // far bins return to the uncorrelated level
  double tail = 0.0;
  for (std::size_t b = 20; b < 30; ++b) tail += k2.values[b];
  CHECK(tail / 10.0 == doctest::Approx(1.0).epsilon(0.1));
  for (double c : k2.counts) CHECK(c == std::round(c));
}

TEST_CASE("three-point estimate is symmetric and nonnegative") {
  std::vector<double> edges;
  for (int i = -6; i <= 6; ++i) edges.push_back(0.5 * i);
  const auto k3 = kpoint_correlation(gue(200), 3, 0.0, 0.1, edges, 20);
  const std::size_t b = edges.size() - 1;
  REQUIRE(k3.values.size() == b * b);
  for (double v : k3.values) CHECK(v >= 0.0);
  // (x2, x3) and (x3, x2) describe the same unordered triple
  for (std::size_t i = 0; i < b; ++i)
    for (std::size_t j = 0; j < b; ++j) CHECK(k3.counts[i * b + j] == k3.counts[j * b + i]);
}

TEST_CASE("correlation accumulators merge independently of worker count") {
  std::vector<double> e2{0.0, 0.5, 1.0, 2.0};
  const auto a = kpoint_correlation(gue(120), 2, 0.0, 0.2, e2, 12, 0.5, 1);
  const auto b = kpoint_correlation(gue(120), 2, 0.0, 0.2, e2, 12, 0.5, 4);
  CHECK(a.values == b.values);
  CHECK(a.errors == b.errors);
  CHECK_THROWS_AS(kpoint_correlation(gue(120), 4, 0.0, 0.2, e2, 2), ConfigError);
  CHECK_THROWS_AS(kpoint_correlation(gue(120), 2, 1.9, 0.05, e2, 2), DomainError);
}

TEST_CASE("gap observables distinguish GOE from GUE") {
  const auto tri = triangle_bump();
  auto observe = [&](const EnsembleConfig& c) {
    std::vector<double> v;
    for (std::uint64_t s = 0; s < 60; ++s) v.push_back(gap_observable_bulk(sample_eigenvalues(c, s), tri.g, 1));
    return batch_means(v);
  };
  const auto d = compare(observe(goe(300)), observe(gue(300)));
  // small gaps are more likely under beta = 1
  CHECK(d.difference > 0.0);
  CHECK(std::abs(d.z_score()) > 5.0);
}
