#include <doctest.h>

#include <cmath>

#include "wigner/ensembles.hpp"
#include "wigner/errors.hpp"

using namespace wigner;

TEST_CASE("entry kinds round trip through their names") {
  for (auto k : {EntryKind::gaussian, EntryKind::rademacher, EntryKind::uniform, EntryKind::laplace})
    CHECK(parse_entry_kind(to_string(k)) == k);
  CHECK_THROWS_AS(parse_entry_kind("cauchy"), ConfigError);
}

TEST_CASE("standardized laws have the advertised moments") {
  // exact fourth moments: 3, 1, 9/5, 6
  const std::pair<EntryKind, double> expected[] = {
      {EntryKind::gaussian, 3.0}, {EntryKind::rademacher, 1.0}, {EntryKind::uniform, 1.8}, {EntryKind::laplace, 6.0}};
  for (auto [kind, m4] : expected) {
    EntryDistribution d{kind};
    CHECK(d.fourth_moment() == doctest::Approx(m4));
    const auto rep = check_moments(d, 200000, 17);
    CAPTURE(to_string(kind));
    CHECK(rep.passed);
    CHECK(std::abs(rep.mean) < 4 * rep.mean_se + 1e-12);
  }
  CHECK_THROWS_AS(check_moments(EntryDistribution{}, 9999), ConfigError);
  CHECK_FALSE(EntryDistribution{EntryKind::rademacher}.has_smooth_density());
  CHECK(EntryDistribution{EntryKind::gaussian}.has_smooth_density());
  CHECK(EntryDistribution{EntryKind::laplace}.decay_class() == DecayClass::subexponential);
}

TEST_CASE("rademacher draws are exactly plus or minus one") {
  EntryDistribution d{EntryKind::rademacher};
  CounterRng r(5, 5);
  for (std::uint64_t p = 0; p < 1000; ++p)
    for (double v : d.draw_pair(r, p)) CHECK(std::abs(v) == 1.0);
}

TEST_CASE("config validation") {
  CHECK_THROWS_AS((EnsembleConfig{3, 10}.validate()), ConfigError);
  CHECK_THROWS_AS((EnsembleConfig{1, 1}.validate()), ConfigError);
  CHECK_NOTHROW((EnsembleConfig{2, 2}.validate()));
}

TEST_CASE("samples are exactly self-adjoint and reproducible") {
  for (int beta : {1, 2}) {
    EnsembleConfig c{beta, 40, {EntryKind::uniform}, 123};
    const auto h = sample_wigner(c, 3);
    CHECK(h.beta() == beta);
    CHECK(h.size() == 40);
    CHECK(h.is_exactly_self_adjoint());
    const auto again = sample_wigner(c, 3);
    const auto other = sample_wigner(c, 4);
    const auto tagged = sample_wigner(c, 3, StreamTag::reference_ensemble);
    CHECK(h.entry(5, 7) == again.entry(5, 7));
    CHECK(h.entry(5, 7) != other.entry(5, 7));
    CHECK(h.entry(5, 7) != tagged.entry(5, 7));
  }
}

TEST_CASE("entry variances follow the symmetry class normalization") {
  // beta=1: E h_ij^2 = 1/N off diagonal, 2/N on it. beta=2: E|h_ij|^2 = 1/N, Re and Im 1/(2N) each.
  const std::size_t n = 60;
  const int reps = 60;
  for (int beta : {1, 2}) {
    double off = 0.0, diag = 0.0, re = 0.0, im = 0.0;
    std::size_t n_off = 0, n_diag = 0;
    for (int s = 0; s < reps; ++s) {
      const auto h = sample_wigner(EnsembleConfig{beta, n, {EntryKind::gaussian}, 9}, s);
      for (std::size_t i = 0; i < n; ++i) {
        diag += std::norm(h.entry(i, i));
        ++n_diag;
        CHECK(h.entry(i, i).imag() == 0.0);
        for (std::size_t j = i + 1; j < n; ++j) {
          const auto z = h.entry(i, j);
          off += std::norm(z);
          re += z.real() * z.real();
          im += z.imag() * z.imag();
          ++n_off;
        }
      }
    }
    const double nn = static_cast<double>(n);
    CAPTURE(beta);
    CHECK(off / n_off * nn == doctest::Approx(1.0).epsilon(0.02));
    CHECK(diag / n_diag * nn == doctest::Approx(beta == 1 ? 2.0 : 1.0).epsilon(0.08));
    if (beta == 2) {
      CHECK(re / n_off * nn == doctest::Approx(0.5).epsilon(0.03));
      CHECK(im / n_off * nn == doctest::Approx(0.5).epsilon(0.03));
    }
  }
}

TEST_CASE("mean of tr H^2 / N is close to one") {
  // E tr H^2 / N = (N-1)/N + diag term: beta=1 gives (N+1)/N, beta=2 gives 1.
  const std::size_t n = 80;
  for (int beta : {1, 2}) {
    double acc = 0.0;
    const int reps = 40;
    for (int s = 0; s < reps; ++s) {
      const auto h = sample_wigner(EnsembleConfig{beta, n, {EntryKind::rademacher}, 2}, s);
      double t2 = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) t2 += std::norm(h.entry(i, j));
      acc += t2 / n;
    }
    const double expect = beta == 1 ? double(n + 1) / n : 1.0;
    CHECK(acc / reps == doctest::Approx(expect).epsilon(0.01));
  }
}
