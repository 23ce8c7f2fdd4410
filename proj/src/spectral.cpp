#include "wigner/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "wigner/errors.hpp"

namespace wigner {

Spectrum::Spectrum(std::vector<double> eigenvalues) : eigenvalues_(std::move(eigenvalues)) {}

Spectrum::Spectrum(std::vector<double> eigenvalues, RealMatrix vectors)
    : eigenvalues_(std::move(eigenvalues)), vectors_(std::move(vectors)) {}

Spectrum::Spectrum(std::vector<double> eigenvalues, ComplexMatrix vectors)
    : eigenvalues_(std::move(eigenvalues)), vectors_(std::move(vectors)) {}

std::vector<double> Spectrum::component_weights(std::size_t a) const {
  return std::visit(
      [a](const auto& m) -> std::vector<double> {
        if constexpr (std::is_same_v<std::decay_t<decltype(m)>, std::monostate>) {
          throw ConfigError("spectrum carries no eigenvectors");
        } else {
          std::vector<double> w;
          w.reserve(m.cols());
          for (const auto& x : m.row(a)) w.push_back(abs2(x));
          return w;
        }
      },
      vectors_);
}

Spectrum eigen_decompose(const WignerMatrix& h, bool want_vectors) {
  return std::visit(
      [&](const auto& m) {
        auto sys = self_adjoint_eigen(m, want_vectors);
        if (!want_vectors) return Spectrum(std::move(sys.values));
        return Spectrum(std::move(sys.values), std::move(sys.vectors));
      },
      h.storage());
}

std::vector<double> sample_eigenvalues(const EnsembleConfig& config, std::uint64_t sample_index) {
  const auto h = sample_wigner(config, sample_index);
  return std::visit([](const auto& m) { return self_adjoint_eigen(m, false).values; }, h.storage());
}

Complex resolvent_trace(std::span<const double> eigenvalues, Complex z) {
  Complex acc{};
  for (double l : eigenvalues) acc += 1.0 / (l - z);
  return acc / static_cast<double>(eigenvalues.size());
}

Complex empirical_stieltjes(std::span<const double> eigenvalues, Complex z) {
  if (!(z.imag() > 0.0)) throw DomainError("Stieltjes transform requires Im z > 0");
  return resolvent_trace(eigenvalues, z);
}

double semicircle_density(double e) noexcept {
  const double r = 4.0 - e * e;
  return r > 0.0 ? std::sqrt(r) / (2.0 * std::numbers::pi) : 0.0;
}

double semicircle_cdf(double e) noexcept {
  if (e <= -2.0) return 0.0;
  if (e >= 2.0) return 1.0;
  const double v = 0.5 + e * std::sqrt(4.0 - e * e) / (4.0 * std::numbers::pi) + std::asin(e / 2.0) / std::numbers::pi;
  return std::clamp(v, 0.0, 1.0);
}

double semicircle_quantile(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("semicircle quantile requires p in [0,1]");
  if (p == 0.0) return -2.0;
  if (p == 1.0) return 2.0;
  double lo = -2.0, hi = 2.0;
  for (int i = 0; i < 200 && hi - lo > 1e-15; ++i) {
    const double mid = 0.5 * (lo + hi);
    (semicircle_cdf(mid) < p ? lo : hi) = mid;
  }
  double x = 0.5 * (lo + hi);
  // Newton polish; density vanishes at the edges so stay inside the bracket.
  for (int i = 0; i < 3; ++i) {
    const double rho = semicircle_density(x);
    if (rho <= 0.0) break;
    const double next = x - (semicircle_cdf(x) - p) / rho;
    if (!(next > lo - 1e-15 && next < hi + 1e-15)) break;
    x = next;
  }
  return x;
}

Complex semicircle_stieltjes(Complex z) {
  if (!(z.imag() > 0.0)) throw DomainError("semicircle Stieltjes transform requires Im z > 0");
  const Complex root = std::sqrt(z * z - 4.0);
  // Take the larger-magnitude root directly and the other as its reciprocal
  // (product of roots is 1) to avoid cancellation at large |z|.
  Complex big = (-z - root) / 2.0;
  const Complex alt = (-z + root) / 2.0;
  if (std::abs(alt) > std::abs(big)) big = alt;
  const Complex small = 1.0 / big;
  return big.imag() > 0.0 ? big : small;
}

std::vector<double> classical_locations(std::size_t n) {
  std::vector<double> gamma(n);
  for (std::size_t j = 1; j <= n; ++j)
    gamma[j - 1] = semicircle_quantile(static_cast<double>(j) / static_cast<double>(n));
  if (n > 0) gamma[n - 1] = 2.0;
  return gamma;
}

std::size_t count_in_interval(std::span<const double> eigenvalues, double e, double eta) {
  if (!(eta > 0.0)) throw DomainError("interval width eta must be positive");
  const auto lo = std::lower_bound(eigenvalues.begin(), eigenvalues.end(), e - eta / 2.0);
  const auto hi = std::upper_bound(eigenvalues.begin(), eigenvalues.end(), e + eta / 2.0);
  return static_cast<std::size_t>(hi - lo);
}

double MinorAnalysis::identity_relative_error() const noexcept {
  return std::abs(resolvent_direct - resolvent_from_minor) / std::abs(resolvent_direct);
}

double MinorAnalysis::interlacing_violation() const noexcept {
  double worst = 0.0;
  for (std::size_t a = 0; a < minor_eigenvalues.size(); ++a) {
    worst = std::max(worst, eigenvalues[a] - minor_eigenvalues[a]);
    worst = std::max(worst, minor_eigenvalues[a] - eigenvalues[a + 1]);
  }
  return worst;
}

double MinorAnalysis::parseval_relative_error() const noexcept {
  double sum = 0.0;
  for (double x : xi) sum += x;
  const double n = static_cast<double>(eigenvalues.size());
  const double target = n * column_norm2;
  return target > 0.0 ? std::abs(sum - target) / target : std::abs(sum);
}

namespace {

template <class T>
MinorAnalysis analyse_minor(const Matrix<T>& h, std::size_t k, Complex z) {
  const std::size_t n = h.rows();
  MinorAnalysis out;
  out.k = k;
  out.z = z;
  out.eigenvalues = self_adjoint_eigen(h, false).values;

  Matrix<T> minor(n - 1, n - 1);
  std::vector<T> column;
  column.reserve(n - 1);
  for (std::size_t r = 0, mr = 0; r < n; ++r) {
    if (r == k) continue;
    column.push_back(h(r, k));
    for (std::size_t c = 0, mc = 0; c < n; ++c) {
      if (c == k) continue;
      minor(mr, mc++) = h(r, c);
    }
    ++mr;
  }
  const auto sys = self_adjoint_eigen(minor, true);
  out.minor_eigenvalues = sys.values;

  const double nd = static_cast<double>(n);
  out.column_norm2 = 0.0;
  for (const auto& x : column) out.column_norm2 += abs2(x);
  out.xi.resize(n - 1);
  Complex self_energy{};
  Complex fluctuation{};
  for (std::size_t a = 0; a + 1 < n; ++a) {
    T overlap{};
    const auto u = sys.vectors.row(a);
    for (std::size_t i = 0; i + 1 < n; ++i) overlap += conj_of(u[i]) * column[i];
    out.xi[a] = nd * abs2(overlap);
    self_energy += out.xi[a] / (out.minor_eigenvalues[a] - z);
    fluctuation += (out.xi[a] - 1.0) / (out.minor_eigenvalues[a] - z);
  }
  out.x_k = fluctuation / nd;
  out.resolvent_from_minor = 1.0 / (Complex(h(k, k)).real() - z - self_energy / nd);

  ComplexMatrix shifted(n, n);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) shifted(r, c) = Complex(h(r, c)) - (r == c ? z : Complex{});
  std::vector<Complex> rhs(n, Complex{});
  rhs[k] = 1.0;
  out.resolvent_direct = lu_solve(std::move(shifted), std::move(rhs))[k];
  return out;
}

}  // namespace

MinorAnalysis minor_analysis(const WignerMatrix& h, std::size_t k, Complex z) {
  if (!(z.imag() > 0.0)) throw DomainError("minor analysis requires Im z > 0");
  if (k >= h.size()) throw DomainError("minor index out of range");
  auto out = std::visit([&](const auto& m) { return analyse_minor(m, k, z); }, h.storage());
  if (out.identity_relative_error() > 1e-8) {
    std::ostringstream msg;
    msg << "resolvent identity mismatch " << out.identity_relative_error() << " at k=" << k;
    throw NumericalError(msg.str());
  }
  return out;
}

}  // namespace wigner
