#include "wigner/ensembles.hpp"

#include <cmath>
#include <numbers>

#include "wigner/errors.hpp"

namespace wigner {

std::string_view to_string(EntryKind kind) noexcept {
  switch (kind) {
    case EntryKind::gaussian: return "gaussian";
    case EntryKind::rademacher: return "rademacher";
    case EntryKind::uniform: return "uniform";
    case EntryKind::laplace: return "laplace";
  }
  return "unknown";
}

EntryKind parse_entry_kind(std::string_view name) {
  if (name == "gaussian") return EntryKind::gaussian;
  if (name == "rademacher" || name == "bernoulli") return EntryKind::rademacher;
  if (name == "uniform") return EntryKind::uniform;
  if (name == "laplace") return EntryKind::laplace;
  throw ConfigError("unsupported entry distribution kind '" + std::string(name) + "'");
}

DecayClass EntryDistribution::decay_class() const noexcept {
  return kind == EntryKind::laplace ? DecayClass::subexponential : DecayClass::gaussian_decay;
}

double EntryDistribution::decay_exponent() const noexcept {
  return kind == EntryKind::laplace ? 1.0 : 2.0;
}

double EntryDistribution::fourth_moment() const noexcept {
  switch (kind) {
    case EntryKind::gaussian: return 3.0;
    case EntryKind::rademacher: return 1.0;
    case EntryKind::uniform: return 9.0 / 5.0;  // (sqrt 3)^4 / 5
    case EntryKind::laplace: return 6.0;        // 24 b^4 with b^2 = 1/2
  }
  return 0.0;
}

bool EntryDistribution::has_smooth_density() const noexcept {
  return kind == EntryKind::gaussian || kind == EntryKind::laplace;
}

double EntryDistribution::draw(double u1, double u2) const noexcept {
  switch (kind) {
    case EntryKind::gaussian:
      return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    case EntryKind::rademacher:
      return u1 < 0.5 ? -1.0 : 1.0;
    case EntryKind::uniform:
      return std::numbers::sqrt3 * (2.0 * u1 - 1.0);
    case EntryKind::laplace: {
      // Laplace(0, b) with b = 1/sqrt(2) has unit variance.
      const double b = 1.0 / std::numbers::sqrt2;
      const double centered = u1 - 0.5;
      return centered < 0 ? b * std::log(2.0 * u1) : -b * std::log(2.0 * (1.0 - u1));
    }
  }
  (void)u2;
  return 0.0;
}

std::array<double, 2> EntryDistribution::draw_pair(const CounterRng& rng, std::uint64_t position) const noexcept {
  if (kind == EntryKind::gaussian) return rng.normal_pair(position);
  const auto [u1, u2] = rng.uniform_pair(position);
  return {draw(u1, 0.5), draw(u2, 0.5)};
}

void EnsembleConfig::validate() const {
  if (beta != 1 && beta != 2) throw ConfigError("beta must be 1 or 2, got " + std::to_string(beta));
  if (n < 2) throw ConfigError("matrix dimension N must be at least 2");
}

std::size_t WignerMatrix::size() const noexcept {
  return std::visit([](const auto& m) { return m.rows(); }, storage_);
}

Complex WignerMatrix::entry(std::size_t i, std::size_t j) const noexcept {
  return std::visit([&](const auto& m) { return Complex(m(i, j)); }, storage_);
}

bool WignerMatrix::is_exactly_self_adjoint() const noexcept {
  return std::visit(
      [](const auto& m) {
        const std::size_t n = m.rows();
        if (m.cols() != n) return false;
        for (std::size_t i = 0; i < n; ++i) {
          if (Complex(m(i, i)).imag() != 0.0) return false;
          for (std::size_t j = i + 1; j < n; ++j)
            if (!(m(i, j) == conj_of(m(j, i)))) return false;
        }
        return true;
      },
      storage_);
}

double WignerMatrix::trace() const noexcept {
  double t = 0.0;
  for (std::size_t i = 0; i < size(); ++i) t += entry(i, i).real();
  return t;
}

WignerMatrix sample_wigner(const EnsembleConfig& config, std::uint64_t sample_index) {
  return sample_wigner(config, sample_index, StreamTag::matrix_entries);
}

WignerMatrix sample_wigner(const EnsembleConfig& config, std::uint64_t sample_index, StreamTag tag) {
  config.validate();
  const std::size_t n = config.n;
  const CounterRng rng(config.seed, stream_id(tag, sample_index));
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  const auto& dist = config.entries;

  if (config.beta == 1) {
    RealMatrix h(n, n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i; j < n; ++j) {
        const double x = dist.draw_pair(rng, i * n + j)[0];
        if (i == j) {
          h(i, i) = std::numbers::sqrt2 * x * scale;  // variance 2/N
        } else {
          h(i, j) = x * scale;
          h(j, i) = h(i, j);
        }
      }
    }
    return WignerMatrix(std::move(h));
  }

  ComplexMatrix h(n, n);
  const double half = 1.0 / std::numbers::sqrt2;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      const auto [x, y] = dist.draw_pair(rng, i * n + j);
      if (i == j) {
        h(i, i) = Complex(x * scale, 0.0);  // variance 1/N
      } else {
        h(i, j) = Complex(half * x * scale, half * y * scale);
        h(j, i) = std::conj(h(i, j));
      }
    }
  }
  return WignerMatrix(std::move(h));
}

MomentReport check_moments(const EntryDistribution& dist, std::size_t n_draws, std::uint64_t seed) {
  if (n_draws < 10000) throw ConfigError("check_moments requires at least 1e4 draws");
  const CounterRng rng(seed, stream_id(StreamTag::moments, static_cast<std::uint64_t>(dist.kind)));
  // Power sums up to order 8 give the standard errors of the first, second and fourth moments.
  double s1 = 0, s2 = 0, s4 = 0, s8 = 0;
  std::size_t drawn = 0;
  for (std::uint64_t pos = 0; drawn < n_draws; ++pos) {
    for (double x : dist.draw_pair(rng, pos)) {
      if (drawn == n_draws) break;
      const double x2 = x * x, x4 = x2 * x2;
      s1 += x;
      s2 += x2;
      s4 += x4;
      s8 += x4 * x4;
      ++drawn;
    }
  }
  const double n = static_cast<double>(n_draws);
  MomentReport r;
  r.draws = n_draws;
  r.mean = s1 / n;
  r.variance = s2 / n;  // about the known center 0
  r.fourth_moment = s4 / n;
  r.mean_se = std::sqrt(r.variance / n);
  r.variance_se = std::sqrt(std::max(r.fourth_moment - r.variance * r.variance, 0.0) / n);
  r.fourth_moment_se = std::sqrt(std::max(s8 / n - r.fourth_moment * r.fourth_moment, 0.0) / n);
  r.expected_fourth_moment = dist.fourth_moment();

  auto within = [](double value, double expected, double se) {
    return std::abs(value - expected) <= 4.0 * se + 1e-12;
  };
  r.passed = within(r.mean, 0.0, r.mean_se) && within(r.variance, 1.0, r.variance_se) &&
             within(r.fourth_moment, r.expected_fourth_moment, r.fourth_moment_se);
  return r;
}

}  // namespace wigner
