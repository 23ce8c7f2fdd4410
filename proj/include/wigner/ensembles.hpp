#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <variant>

#include "wigner/linalg.hpp"
#include "wigner/rng.hpp"

namespace wigner {

enum class EntryKind { gaussian, rademacher, uniform, laplace };
enum class DecayClass { gaussian_decay, subexponential };

std::string_view to_string(EntryKind kind) noexcept;
/// Throws ConfigError for unknown names.
EntryKind parse_entry_kind(std::string_view name);

/// Centered, unit-variance single-site law. All kinds are standardized before
/// the ensemble applies its symmetry-class scaling.
struct EntryDistribution {
  EntryKind kind = EntryKind::gaussian;

  [[nodiscard]] DecayClass decay_class() const noexcept;
  /// gamma in the decay bound E exp(c|x|^gamma) < infinity.
  [[nodiscard]] double decay_exponent() const noexcept;
  [[nodiscard]] double mean() const noexcept { return 0.0; }
  [[nodiscard]] double variance() const noexcept { return 1.0; }
  /// Exact fourth moment of the standardized law.
  [[nodiscard]] double fourth_moment() const noexcept;
  /// Whether the law has a strictly positive smooth density.
  [[nodiscard]] bool has_smooth_density() const noexcept;

  /// One standardized draw from a pair of (0,1) uniforms.
  [[nodiscard]] double draw(double u1, double u2) const noexcept;
  /// Two independent standardized draws from one random block.
  [[nodiscard]] std::array<double, 2> draw_pair(const CounterRng& rng, std::uint64_t position) const noexcept;

  bool operator==(const EntryDistribution&) const = default;
};

struct EnsembleConfig {
  int beta = 1;
  std::size_t n = 2;
  EntryDistribution entries{};
  std::uint64_t seed = 0;

  /// Throws ConfigError unless beta in {1,2} and n >= 2.
  void validate() const;
  bool operator==(const EnsembleConfig&) const = default;
};

/// Self-adjoint Wigner sample: real symmetric (beta = 1) or complex hermitian
/// (beta = 2). Entry (i,j) and (j,i) are written from the same draw, so
/// self-adjointness is exact.
class WignerMatrix {
 public:
  WignerMatrix(RealMatrix m) : storage_(std::move(m)) {}
  WignerMatrix(ComplexMatrix m) : storage_(std::move(m)) {}

  [[nodiscard]] int beta() const noexcept { return std::holds_alternative<RealMatrix>(storage_) ? 1 : 2; }
  [[nodiscard]] std::size_t size() const noexcept;
  /// Entry as a complex number regardless of the symmetry class.
  [[nodiscard]] Complex entry(std::size_t i, std::size_t j) const noexcept;

  [[nodiscard]] const RealMatrix& real() const { return std::get<RealMatrix>(storage_); }
  [[nodiscard]] const ComplexMatrix& complex() const { return std::get<ComplexMatrix>(storage_); }
  [[nodiscard]] const std::variant<RealMatrix, ComplexMatrix>& storage() const noexcept { return storage_; }

  /// Bitwise check of H(i,j) == conj(H(j,i)) and real diagonal.
  [[nodiscard]] bool is_exactly_self_adjoint() const noexcept;
  [[nodiscard]] double trace() const noexcept;

 private:
  std::variant<RealMatrix, ComplexMatrix> storage_;
};

/// Draws sample `sample_index` of the ensemble. Entry (i,j), i <= j, is a pure
/// function of (seed, sample_index, i*N + j).
WignerMatrix sample_wigner(const EnsembleConfig& config, std::uint64_t sample_index);

/// Same, with an explicit purpose tag for the stream (used for independent
/// reference and noise matrices derived from one seed).
WignerMatrix sample_wigner(const EnsembleConfig& config, std::uint64_t sample_index, StreamTag tag);

struct MomentReport {
  std::size_t draws = 0;
  double mean = 0.0;
  double variance = 0.0;
  double fourth_moment = 0.0;
  double mean_se = 0.0;
  double variance_se = 0.0;
  double fourth_moment_se = 0.0;
  double expected_fourth_moment = 0.0;
  bool passed = false;
};

/// Empirical moments of `n_draws` standardized draws, checked against mean 0,
/// variance 1 and the exact fourth moment with a 4-standard-error tolerance.
/// Requires n_draws >= 1e4.
MomentReport check_moments(const EntryDistribution& dist, std::size_t n_draws, std::uint64_t seed = 0);

}  // namespace wigner
