#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "wigner/ensembles.hpp"
#include "wigner/linalg.hpp"

namespace wigner {

/// Ordered eigenvalues of one matrix sample, optionally with eigenvectors.
/// Row a of the eigenvector matrix is the unit eigenvector u_a.
class Spectrum {
 public:
  Spectrum() = default;
  explicit Spectrum(std::vector<double> eigenvalues);
  Spectrum(std::vector<double> eigenvalues, RealMatrix vectors);
  Spectrum(std::vector<double> eigenvalues, ComplexMatrix vectors);

  [[nodiscard]] std::size_t size() const noexcept { return eigenvalues_.size(); }
  [[nodiscard]] std::span<const double> eigenvalues() const noexcept { return eigenvalues_; }
  [[nodiscard]] bool has_vectors() const noexcept { return !std::holds_alternative<std::monostate>(vectors_); }
  [[nodiscard]] bool has_complex_vectors() const noexcept { return std::holds_alternative<ComplexMatrix>(vectors_); }
  [[nodiscard]] const RealMatrix& real_vectors() const { return std::get<RealMatrix>(vectors_); }
  [[nodiscard]] const ComplexMatrix& complex_vectors() const { return std::get<ComplexMatrix>(vectors_); }
  /// |u_a(i)|^2 for every component of eigenvector a.
  [[nodiscard]] std::vector<double> component_weights(std::size_t a) const;

 private:
  std::vector<double> eigenvalues_;
  std::variant<std::monostate, RealMatrix, ComplexMatrix> vectors_;
};

/// Full ascending spectrum of a Wigner sample. Throws NumericalError (with the
/// matrix fingerprint) if the eigensolver does not converge.
Spectrum eigen_decompose(const WignerMatrix& h, bool want_vectors);

/// Convenience: eigenvalues of sample `sample_index` of an ensemble.
std::vector<double> sample_eigenvalues(const EnsembleConfig& config, std::uint64_t sample_index);

/// (1/N) sum 1/(lambda - z) for any non-real z.
Complex resolvent_trace(std::span<const double> eigenvalues, Complex z);

/// Stieltjes transform of the empirical spectral measure. Throws DomainError unless Im z > 0.
Complex empirical_stieltjes(std::span<const double> eigenvalues, Complex z);

// Semicircle law on [-2, 2].
double semicircle_density(double e) noexcept;
/// Closed form 1/2 + E sqrt(4-E^2)/(4 pi) + arcsin(E/2)/pi, clamped to [0,1].
double semicircle_cdf(double e) noexcept;
/// Inverse of semicircle_cdf on [0,1]; bisection polished by Newton.
double semicircle_quantile(double p);
/// Root of m^2 + z m + 1 = 0 with Im m > 0. Throws DomainError unless Im z > 0.
Complex semicircle_stieltjes(Complex z);

/// gamma_j = n_sc^{-1}(j/N), j = 1..N (returned 0-based); gamma_N = 2 exactly.
std::vector<double> classical_locations(std::size_t n);

/// Number of eigenvalues in the closed interval [E - eta/2, E + eta/2]
/// (eigenvalues must be sorted). Throws DomainError unless eta > 0.
std::size_t count_in_interval(std::span<const double> eigenvalues, double e, double eta);

/// Minor B^(k) of H, the overlaps xi_a = N |u_a^(k)^H a^(k)|^2, and the
/// fluctuation term X_k, together with both evaluations of the (k,k) resolvent entry.
struct MinorAnalysis {
  std::size_t k = 0;  // 0-based removed index
  Complex z;
  std::vector<double> eigenvalues;        // of H
  std::vector<double> minor_eigenvalues;  // of B^(k), length N-1
  std::vector<double> xi;
  double column_norm2 = 0.0;  // ||a^(k)||^2
  Complex x_k;
  Complex resolvent_direct;      // (H - z)^{-1}(k,k) by linear solve
  Complex resolvent_from_minor;  // [h_kk - z - (1/N) sum xi_a/(lambda_a^(k) - z)]^{-1}

  [[nodiscard]] double identity_relative_error() const noexcept;
  /// Max violation of lambda_a <= lambda_a^(k) <= lambda_{a+1} (0 if interlaced).
  [[nodiscard]] double interlacing_violation() const noexcept;
  /// |sum xi - N ||a||^2| / (N ||a||^2).
  [[nodiscard]] double parseval_relative_error() const noexcept;
};

/// Throws DomainError unless Im z > 0 and k < N; NumericalError on a singular
/// solve or if the resolvent identity misses by more than 1e-8 relative.
MinorAnalysis minor_analysis(const WignerMatrix& h, std::size_t k, Complex z);

}  // namespace wigner
