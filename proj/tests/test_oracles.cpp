#include <doctest.h>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>

#include "wigner/errors.hpp"
#include "wigner/oracles.hpp"
#include "wigner/spectral.hpp"
#include "wigner/statistics.hpp"

using namespace wigner;

namespace {

std::vector<double> gaps_of(const MetropolisResult& r, std::size_t i) {
  std::vector<double> g;
  for (const auto& x : r.samples) g.push_back(x[i + 1] - x[i]);
  return g;
}

// Gap density of the N = 2 measure with H = N beta sum x^2/4 - beta log|x2 - x1|, by direct
// quadrature of e^{-H} over the centre-of-mass coordinate; independent of the surmise closed form.
double two_particle_gap_cdf(double beta, double s) {
  boost::math::quadrature::tanh_sinh<double> ts;
  auto density = [beta](double g) { return std::pow(g, beta) * std::exp(-beta * g * g / 4.0); };
  // e^{-beta g^2/4} is below 1e-40 past g = 20
  const double z = ts.integrate(density, 0.0, 20.0);
  return s <= 0.0 ? 0.0 : ts.integrate(density, 0.0, s) / z;
}

}  // namespace

TEST_CASE("surmise densities are normalized with unit mean") {
  for (int beta : {1, 2}) {
    auto p = [beta](double s) { return wigner_surmise(beta, s); };
    auto sp = [beta](double s) { return s * wigner_surmise(beta, s); };
    boost::math::quadrature::tanh_sinh<double> ts;
    const double inf = std::numeric_limits<double>::infinity();
    CHECK(std::abs(ts.integrate(p, 0.0, inf) - 1.0) < 1e-10);
    CHECK(std::abs(ts.integrate(sp, 0.0, inf) - 1.0) < 1e-10);
    for (double s : {0.3, 1.0, 2.0})
      CHECK(wigner_surmise_cdf(beta, s) == doctest::Approx(ts.integrate(p, 0.0, s)).epsilon(1e-10));
  }
  // beta = 1 slope pi/2 at zero, beta = 2 quadratic vanishing
  CHECK(wigner_surmise(1, 0.0) == 0.0);
  CHECK(wigner_surmise(1, 1e-6) / 1e-6 == doctest::Approx(M_PI / 2).epsilon(1e-6));
  CHECK(wigner_surmise(2, 1e-4) / 1e-8 == doctest::Approx(32.0 / (M_PI * M_PI)).epsilon(1e-6));
  CHECK_THROWS_AS(wigner_surmise(3, 1.0), ConfigError);
  CHECK_THROWS_AS(wigner_surmise(1, -1.0), DomainError);
}

TEST_CASE("surmise agrees with the two-particle Gibbs gap law") {
  // unit-mean rescaling of the gap density g^beta e^{-beta g^2/4}
  for (int beta : {1, 2}) {
    boost::math::quadrature::tanh_sinh<double> ts;
    auto w = [beta](double g) { return std::pow(g, beta) * std::exp(-beta * g * g / 4.0); };
    auto gw = [beta](double g) { return g * std::pow(g, beta) * std::exp(-beta * g * g / 4.0); };
    const double mean = ts.integrate(gw, 0.0, 20.0) / ts.integrate(w, 0.0, 20.0);
    for (double s : {0.2, 0.7, 1.0, 1.6, 2.5})
      CHECK(wigner_surmise_cdf(beta, s) == doctest::Approx(two_particle_gap_cdf(beta, s * mean)).epsilon(1e-9));
  }
}

TEST_CASE("2x2 gap formula matches the eigensolver") {
  CounterRng r(3, 3);
  for (int k = 0; k < 200; ++k) {
    const double a = r.normal(), c = r.normal(), br = r.normal(), bi = r.normal();
    RealMatrix m(2, 2);
    m(0, 0) = a;
    m(1, 1) = c;
    m(0, 1) = m(1, 0) = br;
    const auto e = self_adjoint_eigen(m, false).values;
    CHECK(std::abs(two_by_two_gap(a, c, br, 0.0) - (e[1] - e[0])) < 1e-12);
    ComplexMatrix h(2, 2);
    h(0, 0) = a;
    h(1, 1) = c;
    h(0, 1) = Complex(br, bi);
    h(1, 0) = Complex(br, -bi);
    const auto ec = self_adjoint_eigen(h, false).values;
    CHECK(std::abs(two_by_two_gap(a, c, br, bi) - (ec[1] - ec[0])) < 1e-12);
  }
}

TEST_CASE("brute-force 2x2 gaps follow the surmise") {
  for (int beta : {1, 2}) {
    const auto g = small_n_gap_law(beta, 400000, 5);
    CHECK(mean_of(g) == doctest::Approx(1.0).epsilon(0.005));
    CHECK(ks_one_sample(g, [beta](double s) { return wigner_surmise_cdf(beta, s); }) < 0.01);
  }
}

TEST_CASE("Gibbs spec validation and Hamiltonian singularities") {
  CHECK_THROWS_AS((GibbsSpec{0.0, 4}.validate()), ConfigError);
  CHECK_THROWS_AS((GibbsSpec{1.0, 0}.validate()), ConfigError);
  CHECK_THROWS_AS((GibbsSpec{1.0, 1, HamiltonianKind::omega, 0.1}.validate()), ConfigError);
  CHECK_THROWS_AS((GibbsSpec{1.0, 4, HamiltonianKind::omega, 0.0}.validate()), ConfigError);
  GibbsTarget mu(GibbsSpec{2.0, 3});
  CHECK(std::isinf(mu.hamiltonian(std::vector<double>{0.0, 0.0, 1.0})));
  CHECK(std::isfinite(mu.hamiltonian(std::vector<double>{-1.0, 0.0, 1.0})));
  CHECK(mu.potential() == nullptr);
  CHECK(GibbsTarget(GibbsSpec{1.0, 2, HamiltonianKind::omega, 0.1}).potential() != nullptr);
}

TEST_CASE("local acceptance ratios are exact Hamiltonian differences") {
  CounterRng r(8, 8);
  for (auto kind : {HamiltonianKind::mu, HamiltonianKind::omega}) {
    GibbsTarget target(GibbsSpec{1.5, 12, kind, 0.2});
    for (int rep = 0; rep < 200; ++rep) {
      std::vector<double> x(12);
      for (std::size_t k = 0; k < 12; ++k) x[k] = -2.0 + 4.0 * (k + r.uniform()) / 12.0;
      const std::size_t i = rep % 12;
      const double lo = i == 0 ? -3.0 : x[i - 1], hi = i == 11 ? 3.0 : x[i + 1];
      const double y = lo + (hi - lo) * r.uniform();
      auto xp = x;
      xp[i] = y;
      const double direct = target.hamiltonian(x) - target.hamiltonian(xp);
      CHECK(target.log_acceptance_ratio(x, i, y) == doctest::Approx(direct).epsilon(1e-9).scale(1.0));
    }
    std::vector<double> x{-1.0, -0.5, 0.0, 0.5, 1.0, 1.5, 2.0, 2.1, 2.2, 2.3, 2.4, 2.5};
    CHECK(target.log_acceptance_ratio(x, 2, 0.6) == -std::numeric_limits<double>::infinity());
  }
}

TEST_CASE("Metropolis on two particles reproduces the exact laws") {
  for (double beta : {1.0, 2.0}) {
    MetropolisParams p;
    p.n_samples = 100000;
    p.thinning = 1;
    p.seed = 21;
    const auto res = metropolis_sample(GibbsSpec{beta, 2}, p);
    CHECK(res.acceptance_rate > 0.1);
    CHECK(res.acceptance_rate < 0.7);
    CHECK(res.effective_sample_size > 10000);
    auto g = gaps_of(res, 0);
    CHECK(ks_one_sample(g, [beta](double s) { return two_particle_gap_cdf(beta, s); }) < 0.02);
    // centre of mass (x1 + x2)/sqrt2 is N(0, 1/beta) since H has beta (x1+x2)^2/4 for N = 2
    std::vector<double> com;
    for (const auto& x : res.samples) com.push_back((x[0] + x[1]) / std::sqrt(2.0));
    const boost::math::normal_distribution<> nd(0.0, 1.0 / std::sqrt(beta));
    CHECK(ks_one_sample(com, [&](double v) { return boost::math::cdf(nd, v); }) < 0.02);
    if (beta == 2.0) {
      // at N = 2 and beta = 2 the unit-mean gap is exactly the surmise
      const double m = mean_of(g);
      for (auto& v : g) v /= m;
      CHECK(ks_one_sample(g, [](double s) { return wigner_surmise_cdf(2, s); }) < 0.02);
    }
  }
}

TEST_CASE("Metropolis mu at N=32 matches GOE eigenvalues") {
  MetropolisParams p;
  p.n_samples = 1500;
  p.thinning = 4;
  p.seed = 31;
  const auto res = metropolis_sample(GibbsSpec{1.0, 32}, p);
  std::vector<double> chain_gaps, goe_gaps;
  for (const auto& x : res.samples) {
    const auto g = normalized_bulk_gaps(x);
    chain_gaps.insert(chain_gaps.end(), g.begin(), g.end());
  }
  for (std::uint64_t s = 0; s < 1500; ++s) {
    const auto g = normalized_bulk_gaps(sample_eigenvalues(EnsembleConfig{1, 32, {}, 32}, s));
    goe_gaps.insert(goe_gaps.end(), g.begin(), g.end());
  }
  CHECK(ks_two_sample(chain_gaps, goe_gaps) < 0.03);

  // stationarity: two halves of the chain agree up to sampling noise
  const std::size_t half = res.samples.size() / 2;
  std::vector<double> a, b;
  for (std::size_t s = 0; s < res.samples.size(); ++s) (s < half ? a : b).push_back(res.samples[s][16] - res.samples[s][15]);
  const double expected = 1.36 * std::sqrt(2.0 * res.samples.size() / (half * double(half)) / 2.0);
  CHECK(ks_two_sample(a, b) < 2.0 * std::max(expected, 1.36 * std::sqrt(2.0 / res.effective_sample_size)));
}

TEST_CASE("Metropolis argument checks") {
  MetropolisParams p;
  p.n_samples = 10;
  CHECK_THROWS_AS(metropolis_sample(GibbsSpec{1.0, 65}, p), ConfigError);
  p.target_acceptance = 0.95;  // unreachable band forces the tuning failure
  p.burn_in = 200;
  CHECK_THROWS_AS(metropolis_sample(GibbsSpec{1.0, 4}, p), TuningError);
}

TEST_CASE("Fokker-Planck equilibrium start stays at zero entropy") {
  const GibbsSpec spec{1.0, 2, HamiltonianKind::omega, 0.1};
  const auto grid = make_gap_grid(spec);
  CHECK(grid.mass() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(relative_entropy(grid) == doctest::Approx(0.0).scale(1.0));
  CHECK(dirichlet_form(grid) == 0.0);
  const auto rep = fokker_planck_decay(spec, grid, 2.0, 11);
  for (const auto& pt : rep.points) CHECK(std::abs(pt.entropy) < 1e-12);
  CHECK_THROWS_AS(make_gap_grid(GibbsSpec{1.0, 3, HamiltonianKind::omega, 0.1}), ConfigError);
}

TEST_CASE("Dirichlet form second-order expansion") {
  const GibbsSpec spec{1.0, 2, HamiltonianKind::omega, 0.1};
  auto grid = make_gap_grid(spec);
  // phi = cos(s) - <cos>, D(1 + eps phi) ~ (eps^2/4) (1/2) int phi'^2 d omega
  double mean_phi = 0.0;
  for (std::size_t i = 0; i < grid.nodes.size(); ++i) mean_phi += grid.volumes[i] * grid.reference[i] * std::cos(grid.nodes[i]);
  auto phi = [&](double s) { return std::cos(s) - mean_phi; };
  double coeff = 0.0;
  for (std::size_t i = 0; i + 1 < grid.nodes.size(); ++i) {
    const double h = grid.nodes[i + 1] - grid.nodes[i];
    const double d = (phi(grid.nodes[i + 1]) - phi(grid.nodes[i])) / h;
    coeff += 2.0 * h * grid.conductance[i] * d * d * h;  // conductance = omega_mid / (2h)
  }
  coeff *= 0.5 / 4.0;
  for (double eps : {1e-2, 1e-3}) {
    for (std::size_t i = 0; i < grid.nodes.size(); ++i) grid.q[i] = 1.0 + eps * phi(grid.nodes[i]);
    CHECK(dirichlet_form(grid) / (eps * eps) == doctest::Approx(coeff).epsilon(0.05));
  }
}

TEST_CASE("Fokker-Planck decay is monotone, conservative and dissipative") {
  for (double beta : {1.0, 2.0}) {
    const GibbsSpec spec{beta, 2, HamiltonianKind::omega, 0.1};
    GridParams gp;
    gp.uniform_spacing = 0.02;
    auto grid = make_gap_grid(spec, gp);
    set_initial_density(grid, [](double s) { return std::exp(-2.0 * (s - 3.0) * (s - 3.0)); });
    CHECK(grid.mass() == doctest::Approx(1.0).epsilon(1e-12));
    const auto rep = fokker_planck_decay(spec, grid, 6.0, 61);
    CHECK(rep.monotone);
    CHECK(rep.max_mass_error < 1e-6);
    CHECK(rep.max_dissipation_mismatch < 1e-3);
    CHECK(rep.fitted_rate > 0.0);
    for (std::size_t k = 1; k < rep.points.size(); ++k) {
      CHECK(rep.points[k].entropy <= rep.points[k - 1].entropy + 1e-14);
      CHECK(rep.points[k].dirichlet <= rep.points[k - 1].dirichlet * (1.0 + 1e-9) + 1e-15);
      CHECK(rep.points[k].production == doctest::Approx(-4.0 * rep.points[k].dirichlet).epsilon(1e-3).scale(1e-12));
    }
  }
}

TEST_CASE("explicit Euler tracks the exact semi-discrete solution") {
  const GibbsSpec spec{1.0, 2, HamiltonianKind::omega, 0.2};
  GridParams gp;
  gp.s_min = 1e-2;
  gp.uniform_spacing = 0.05;
  gp.geometric_ratio = 1.2;
  auto grid = make_gap_grid(spec, gp);
  set_initial_density(grid, [](double s) { return 1.0 + s * s; });
  const auto exact = fokker_planck_decay(spec, grid, 0.5, 6);
  const auto euler = fokker_planck_decay(spec, grid, 0.5, 6, FokkerPlanckMethod::explicit_euler);
  for (std::size_t k = 0; k < exact.points.size(); ++k)
    CHECK(euler.points[k].entropy == doctest::Approx(exact.points[k].entropy).epsilon(0.02));
  CHECK(euler.max_mass_error < 1e-10);
  const double limit = explicit_step_limit(grid);
  CHECK(limit > 0.0);
  CHECK_THROWS_AS(explicit_fokker_planck_step(grid, 2.0 * limit), StepSizeError);
  CHECK_NOTHROW(explicit_fokker_planck_step(grid, 0.5 * limit));
}
