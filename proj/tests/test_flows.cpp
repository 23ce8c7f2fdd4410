#include <doctest.h>

#include <cmath>
#include <limits>

#include "wigner/errors.hpp"
#include "wigner/flows.hpp"
#include "wigner/oracles.hpp"
#include "wigner/sampling_stats.hpp"
#include "wigner/spectral.hpp"
#include "wigner/statistics.hpp"

using namespace wigner;

namespace {

std::vector<double> perturbed_gamma(const RelaxationPotential& pot, double amplitude, CounterRng& r) {
  std::vector<double> x(pot.gamma().begin(), pot.gamma().end());
  const double n = static_cast<double>(x.size());
  for (auto& v : x) v += amplitude / n * (2.0 * r.uniform() - 1.0);
  std::sort(x.begin(), x.end());
  return x;
}

// direct sum over far k, no extension
double oracle_second(const RelaxationPotential& pot, std::size_t j, double x) {
  double s = 0.0;
  for (std::size_t k = 0; k < pot.size(); ++k)
    if (pot.is_far(j, k)) {
      const double d = std::abs(x - pot.gamma()[k]) + pot.eta();
      s += 1.0 / (d * d);
    }
  return s / static_cast<double>(pot.size());
}

}  // namespace

TEST_CASE("single particle DBM is an OU process with unit stationary variance") {
  const int paths = 10000;
  double s2 = 0.0, s4 = 0.0;
  StepPolicy policy;
  policy.dt_max = 1e-2;
  for (int p = 0; p < paths; ++p) {
    auto st = make_flow_state({0.0}, 2.0, 5, p);
    evolve_dbm(st, 5.0, policy);
    CHECK(st.t == doctest::Approx(5.0));
    s2 += st.x[0] * st.x[0];
    s4 += std::pow(st.x[0], 4);
  }
  // variance at t=5 from x=0 is 1 - e^{-5}
  const double var = s2 / paths, se = std::sqrt((s4 / paths - var * var) / paths);
  CHECK(std::abs(var - (1.0 - std::exp(-5.0))) < 0.05);
  CHECK(std::abs(var - (1.0 - std::exp(-5.0))) < 4.0 * se + 0.005);
}

TEST_CASE("DBM drift repels neighbours and confines") {
  const std::vector<double> x{-0.5, 0.5};
  for (double beta : {1.0, 2.0}) {
    const auto d = dbm_drift(x, beta);
    CHECK(d[1] == doctest::Approx(-beta * 0.5 / 4.0 + beta / 4.0 * 1.0));
    CHECK(d[0] == doctest::Approx(-d[1]));
  }
  const auto far = dbm_drift(std::vector<double>{-10.0, 10.0}, 1.0);
  CHECK(far[1] < 0.0);
}

TEST_CASE("flow state construction checks") {
  CHECK_THROWS_AS(make_flow_state({0.0, 0.0}, 1.0, 0, 0), DomainError);
  CHECK_THROWS_AS(make_flow_state({0.0, 1.0}, 0.5, 0, 0), ConfigError);
  CHECK(is_strictly_ordered(std::vector<double>{1.0, 2.0, 3.0}));
  CHECK_FALSE(is_strictly_ordered(std::vector<double>{1.0, 1.0}));
  CHECK(min_gap(std::vector<double>{0.0, 0.5, 0.6}) == doctest::Approx(0.1));
}

TEST_CASE("every accepted DBM step is ordered") {
  // beta = 2: for beta = 1 the neighbour gap is a 2-dimensional Bessel process and
  // near-collisions down to 1e-11 are routine, which only the adaptive step resolves
  auto st = make_flow_state(classical_locations(60), 2.0, 3, 0);
  for (double& v : st.x) v *= 0.2;  // compressed, stiff start
  const StepPolicy policy;
  for (int k = 0; k < 300; ++k) {
    const double dt = adaptive_step(st.x, policy);
    CHECK(dt <= policy.dt_max);
    st = dbm_step(st, dt);
    REQUIRE(is_strictly_ordered(st.x));
  }
  // a large fixed step from a relaxed start lands exactly and ordered via halving
  auto relaxed = make_flow_state(classical_locations(60), 1.0, 4, 0);
  relaxed = dbm_step(relaxed, 0.05);
  CHECK(relaxed.t == doctest::Approx(0.05));
  CHECK(is_strictly_ordered(relaxed.x));
}

TEST_CASE("exhausted halvings raise a stiffness error with the gap") {
  // confinement term overshoots for dt >> 4/beta, reversing the order
  const auto st = make_flow_state({-1.0, 1.0}, 1.0, 0, 0);
  try {
    (void)dbm_step(st, 1000.0, 2);
    FAIL("expected IntegratorStiffnessError");
  } catch (const IntegratorStiffnessError& e) {
    CHECK(e.min_gap() == doctest::Approx(2.0));
  }
}

TEST_CASE("matrix OU flow endpoints and variance preservation") {
  const EnsembleConfig c{1, 6, {EntryKind::rademacher}, 4};
  const auto h0 = sample_wigner(c, 0);
  const auto same = matrix_ou_flow(h0, 0.0, 9, 0);
  CHECK(same.real() == h0.real());
  const auto v1 = matrix_ou_flow(h0, std::numeric_limits<double>::infinity(), 9, 0);
  const auto v2 = matrix_ou_flow(sample_wigner(c, 1), std::numeric_limits<double>::infinity(), 9, 0);
  CHECK(v1.real() == v2.real());
  CHECK(matrix_ou_flow(h0, 0.3, 9, 0).is_exactly_self_adjoint());
  CHECK_THROWS_AS(matrix_ou_flow(h0, -1.0, 9, 0), DomainError);

  for (int beta : {1, 2}) {
    const EnsembleConfig c2{beta, 2, {EntryKind::rademacher}, 8};
    const int draws = 100000;
    double s2 = 0.0, s4 = 0.0;
    for (int k = 0; k < draws; ++k) {
      const auto h = matrix_ou_flow(sample_wigner(c2, k), 0.3, 10, k);
      const double a = std::norm(h.entry(0, 1));
      s2 += a;
      s4 += a * a;
    }
    const double m = s2 / draws, se = std::sqrt((s4 / draws - m * m) / draws);
    CAPTURE(beta);
    CHECK(std::abs(m - 0.5) < 3.0 * se);
  }
  static_assert(ou_time_for_dbm_time(2.0, 0.3) == 0.3);
  static_assert(dbm_time_for_ou_time(1.0, 0.1) == 0.2);
}

TEST_CASE("DBM spectra match the matrix OU oracle in distribution") {
  const auto rep = ou_oracle_test(EnsembleConfig{1, 40, {EntryKind::gaussian}, 2}, 0.1, 120);
  CHECK(rep.gaps_test > 2000);
  CHECK(rep.ks < 0.06);
}

TEST_CASE("relaxation potential construction") {
  CHECK_THROWS_AS(RelaxationPotential(100, 0.005), DomainError);
  CHECK_THROWS_AS(RelaxationPotential(100, 1.0), DomainError);
  CHECK_NOTHROW(RelaxationPotential::oracle_scale(2, 0.1));
  const RelaxationPotential pot(200, 0.05);
  CHECK(pot.window() == 10);
  CHECK(pot.is_far(0, 10));
  CHECK_FALSE(pot.is_far(0, 9));
}

TEST_CASE("relaxation potential is C1 at the junctions and convex") {
  for (double eta : {0.02, 0.1, 0.3}) {
    const RelaxationPotential pot(150, eta);
    for (std::size_t j = 0; j < pot.size(); j += 7) {
      for (double at : {pot.junctions(j).first, pot.junctions(j).second}) {
        const double h = 1e-12;
        CHECK(std::abs(pot.value(j, at + h) - pot.value(j, at - h)) < 1e-9);
        CHECK(std::abs(pot.first(j, at + h) - pot.first(j, at - h)) < 1e-9);
      }
      for (double x = -3.0; x <= 3.0; x += 0.01) REQUIRE(pot.second(j, x) > 0.0);
    }
  }
}

TEST_CASE("relaxation potential derivatives agree with finite differences and the direct sum") {
  const RelaxationPotential pot(120, 0.1);
  for (std::size_t j : {3u, 40u, 60u, 100u}) {
    const auto [lo, hi] = pot.junctions(j);
    for (int s = 1; s < 10; ++s) {
      const double x = lo + (hi - lo) * s / 10.0;
      // skip points where a far gamma_k is within the stencil
      bool kink = false;
      for (std::size_t k = 0; k < pot.size(); ++k)
        if (pot.is_far(j, k) && std::abs(x - pot.gamma()[k]) < 1e-3) kink = true;
      if (kink) continue;
      const double h = 1e-5;
      const double fd1 = (pot.value(j, x + h) - pot.value(j, x - h)) / (2 * h);
      const double fd2 = (pot.first(j, x + h) - pot.first(j, x - h)) / (2 * h);
      CHECK(pot.first(j, x) == doctest::Approx(fd1).epsilon(1e-6));
      CHECK(pot.second(j, x) == doctest::Approx(fd2).epsilon(1e-6));
      CHECK(pot.second(j, x) == doctest::Approx(oracle_second(pot, j, x)).epsilon(1e-12));
    }
  }
}

TEST_CASE("symmetric grid gives a nearly flat potential at the centre") {
  const RelaxationPotential pot(400, 0.05);
  // gamma_199 = 0; the grid is symmetric about it up to the unmatched top location
  CHECK(pot.gamma()[199] == doctest::Approx(0.0).scale(1.0));
  CHECK(std::abs(pot.first(199, 0.0)) < 5.0 / 400);
}

TEST_CASE("convexity is positive and the bulk curvature scales like 1/eta") {
  for (auto [n, eta] : {std::pair<std::size_t, double>{200, 0.05}, {500, 0.01}, {2000, 0.002}}) {
    const auto c = convexity_bound(RelaxationPotential(n, eta));
    CHECK(c.min_convexity > 0.0);
    CHECK(std::abs(c.x) <= 3.0);
  }
  const std::size_t n = 2000;
  const RelaxationPotential a(n, 1e-2), b(n, 1e-3);
  const double ratio = a.second(n / 2, a.gamma()[n / 2]) / b.second(n / 2, b.gamma()[n / 2]);
  CHECK(ratio == doctest::Approx(0.1).epsilon(0.3));
}

TEST_CASE("drift decomposition identity") {
  CounterRng r(1, 1);
  for (double beta : {1.0, 2.0, 4.0}) {
    const RelaxationPotential pot(80, 0.1);
    for (int rep = 0; rep < 5; ++rep) {
      const auto x = perturbed_gamma(pot, 0.4, r);
      const auto d = dbm_drift(x, beta);
      const auto rd = relaxation_drift(x, beta, pot);
      const auto b = relaxation_b(x, pot);
      for (std::size_t j = 0; j < x.size(); ++j) CHECK(std::abs(d[j] - rd[j] - beta / 2.0 * b[j]) < 1e-12);
    }
  }
}

TEST_CASE("relaxation drift is minus the scaled gradient of the Hamiltonian") {
  CounterRng r(2, 2);
  const RelaxationPotential pot(30, 0.2);
  const auto x = perturbed_gamma(pot, 0.3, r);
  const double beta = 2.0;
  const auto g = omega_gradient(x, beta, pot);
  const auto drift = relaxation_drift(x, beta, pot);
  for (std::size_t j = 0; j < x.size(); ++j) {
    auto xp = x, xm = x;
    const double h = 1e-7;
    xp[j] += h;
    xm[j] -= h;
    const double fd = (omega_hamiltonian(xp, beta, pot) - omega_hamiltonian(xm, beta, pot)) / (2 * h);
    CHECK(g[j] == doctest::Approx(fd).epsilon(1e-5));
    CHECK(drift[j] == doctest::Approx(-g[j] / (2.0 * 30)).epsilon(1e-13));
  }
  auto bad = x;
  std::swap(bad[3], bad[4]);
  CHECK(std::isinf(mu_hamiltonian(bad, 1.0)));
}

TEST_CASE("b nearly cancels at the classical locations") {
  const RelaxationPotential pot(400, 0.05);
  const auto b = relaxation_b(pot.gamma(), pot);
  // the sgn term and W_j' are the same sum away from the window boundary
  const double boundary = 1.0 / (400 * pot.eta());
  const auto [lo, hi] = bulk_gap_range(400, 0.6);
  for (std::size_t j = lo; j < hi; ++j) CHECK(std::abs(b[j]) < 10.0 * boundary);
}

TEST_CASE("b responds to far displacements within the eta^-2 bound") {
  const RelaxationPotential pot(200, 0.1);
  const std::size_t j = 100;
  std::vector<double> x(pot.gamma().begin(), pot.gamma().end());
  const auto b0 = relaxation_b(x, pot);
  const double u = 1e-4;
  for (std::size_t k = 0; k < x.size(); ++k)
    if (pot.is_far(j, k)) x[k] += u;
  const auto b1 = relaxation_b(x, pot);
  CHECK(std::abs(b1[j] - b0[j]) / u <= 1.0 / (pot.eta() * pot.eta()));
  // displacing x_j to the right of its window makes the mean-field pull restoring
  auto y = std::vector<double>(pot.gamma().begin(), pot.gamma().end());
  y[j] = pot.junctions(j).second + 0.01;
  CHECK(pot.first(j, y[j]) - pot.first(j, pot.gamma()[j]) > 0.0);
}

TEST_CASE("lambda and rigidity diagnostics") {
  const RelaxationPotential pot(100, 0.1);
  std::vector<std::vector<double>> samples;
  for (std::uint64_t s = 0; s < 30; ++s) samples.push_back(sample_eigenvalues(EnsembleConfig{1, 100, {}, 5}, s));
  const auto d = lambda_estimate(samples, pot);
  CHECK(d.lambda_hat.value >= 0.0);
  CHECK(d.mean_rigidity.value >= 0.0);
  CHECK(d.mean_rigidity.value < 0.1);
  CHECK(d.b.size() == 100);
  CHECK(d.min_convexity > 0.0);
  samples.pop_back();
  CHECK_THROWS_AS(lambda_estimate(samples, pot), ConfigError);
  CHECK(rigidity(pot.gamma(), pot.gamma()) == 0.0);
}

TEST_CASE("gap statistics are symmetric under reflection about the centre") {
  const auto tri = triangle_bump();
  std::vector<double> left, right;
  const std::size_t n = 100;
  const auto [lo, hi] = bulk_gap_range(n, 0.6);
  const std::size_t mid = (lo + hi) / 2;
  for (std::uint64_t s = 0; s < 200; ++s) {
    auto e = sample_eigenvalues(EnsembleConfig{1, n, {}, 6}, s);
    left.push_back(gap_observable(e, tri.g, 1, lo, mid));
    std::vector<double> reflected(e.rbegin(), e.rend());
    for (auto& v : reflected) v = -v;
    // the reflected spectrum's left half is the original right half
    right.push_back(gap_observable(reflected, tri.g, 1, n - 1 - hi, n - 1 - hi + (mid - lo)));
  }
  const auto cmp = compare(batch_means(left), batch_means(right));
  CHECK(std::abs(cmp.z_score()) < 3.0);
}

TEST_CASE("universality experiment against itself") {
  const double tinf[] = {std::numeric_limits<double>::infinity()};
  const std::size_t orders[] = {1, 2};
  const auto bat = default_gap_battery();
  const auto rep = universality_experiment(EnsembleConfig{1, 60, {EntryKind::rademacher}, 3}, tinf, bat, orders, 150);
  CHECK(rep.rows.size() == 4);
  CHECK(rep.all_within(2.0));
  const double neg[] = {-0.1};
  CHECK_THROWS_AS(universality_experiment(EnsembleConfig{1, 60, {}, 3}, neg, bat, orders, 10), ConfigError);
}

TEST_CASE("DBM leaves the Metropolis mu samples stationary") {
  GibbsSpec spec{2.0, 8, HamiltonianKind::mu};
  MetropolisParams mp;
  mp.n_samples = 300;
  mp.thinning = 5;
  mp.seed = 12;
  const auto chain = metropolis_sample(spec, mp);
  std::vector<double> diff;
  StepPolicy policy;
  policy.dt_max = 2e-4;
  for (std::size_t s = 0; s < chain.samples.size(); ++s) {
    auto st = make_flow_state(chain.samples[s], 2.0, 13, s);
    evolve_dbm(st, 0.5, policy);
    diff.push_back((st.x[4] - st.x[3]) - (chain.samples[s][4] - chain.samples[s][3]));
  }
  const auto e = batch_means(diff);
  CHECK(std::abs(e.value) < 3.0 * e.se + 1e-3);
}

TEST_CASE("relaxation flow leaves the Metropolis omega samples stationary") {
  GibbsSpec spec{1.0, 16, HamiltonianKind::omega, 0.25};
  MetropolisParams mp;
  mp.n_samples = 300;
  mp.thinning = 5;
  mp.seed = 14;
  const auto chain = metropolis_sample(spec, mp);
  const RelaxationPotential pot(16, 0.25);
  StepPolicy policy;
  policy.dt_max = 2e-4;
  std::vector<double> diff;
  for (std::size_t s = 0; s < chain.samples.size(); ++s) {
    auto st = make_flow_state(chain.samples[s], 1.0, 15, s, StreamTag::relaxation_noise);
    evolve_relaxation(st, pot, 0.3, policy);
    REQUIRE(is_strictly_ordered(st.x));
    diff.push_back((st.x[8] - st.x[7]) - (chain.samples[s][8] - chain.samples[s][7]));
  }
  const auto e = batch_means(diff);
  CHECK(std::abs(e.value) < 3.0 * e.se + 1e-3);
}

TEST_CASE("multirate stepping agrees with plain stepping in distribution") {
  // beta = 1 hits near collisions often enough that the split path is exercised
  const std::size_t n = 40;
  std::vector<double> plain, split;
  StepPolicy off;
  off.multirate = false;
  StepPolicy on;
  for (std::uint64_t s = 0; s < 60; ++s) {
    const auto e = sample_eigenvalues(EnsembleConfig{1, n, {}, 21}, s);
    auto a = make_flow_state(e, 1.0, 22, s);
    auto b = make_flow_state(e, 1.0, 23, s);
    evolve_dbm(a, 0.5, off);
    evolve_dbm(b, 0.5, on);
    REQUIRE(is_strictly_ordered(b.x));
    CHECK(b.t == 0.5);
    for (std::size_t i = 8; i + 9 < n; ++i) {
      plain.push_back(static_cast<double>(n) * (a.x[i + 1] - a.x[i]));
      split.push_back(static_cast<double>(n) * (b.x[i + 1] - b.x[i]));
    }
  }
  CHECK(ks_two_sample(plain, split) < 0.08);
}
