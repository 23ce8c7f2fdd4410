#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "wigner/flows.hpp"

namespace wigner {

enum class HamiltonianKind { mu, omega };

/// Target Gibbs law e^{-H}: the DBM measure mu or the relaxation measure omega(eta).
struct GibbsSpec {
  double beta = 1.0;
  std::size_t n = 2;
  HamiltonianKind kind = HamiltonianKind::mu;
  double eta = 0.1;  // omega only

  void validate() const;
};

/// GibbsSpec with its potential built once.
class GibbsTarget {
 public:
  explicit GibbsTarget(const GibbsSpec& spec);

  [[nodiscard]] const GibbsSpec& spec() const noexcept { return spec_; }
  [[nodiscard]] const RelaxationPotential* potential() const noexcept { return potential_.get(); }
  /// +inf off the ordered cone.
  [[nodiscard]] double hamiltonian(std::span<const double> x) const;
  /// log of the Metropolis ratio e^{-(H(x') - H(x))} for moving coordinate i
  /// to y, using only the terms that involve i. -inf if the move breaks the ordering.
  [[nodiscard]] double log_acceptance_ratio(std::span<const double> x, std::size_t i, double y) const;

 private:
  GibbsSpec spec_;
  std::shared_ptr<const RelaxationPotential> potential_;
};

struct MetropolisParams {
  std::size_t n_samples = 1000;
  std::size_t burn_in = 1000;  // sweeps; the proposal scale is tuned here
  std::size_t thinning = 1;    // sweeps between recorded samples
  std::uint64_t seed = 0;
  std::uint64_t chain = 0;
  double target_acceptance = 0.35;
  std::vector<double> initial;  // default: semicircle mid-quantiles
};

struct MetropolisResult {
  std::vector<std::vector<double>> samples;
  double acceptance_rate = 0.0;  // after burn-in
  double proposal_scale = 0.0;
  double effective_sample_size = 0.0;  // of the largest gap, by batch means
};

/// Random-walk Metropolis with single-coordinate Gaussian proposals on the
/// ordered cone. Requires N <= 64. Throws TuningError if the post burn-in
/// acceptance rate falls outside [0.1, 0.7].
MetropolisResult metropolis_sample(const GibbsSpec& spec, const MetropolisParams& params);

// ---------------------------------------------------------------------------
// Gap laws

/// Unit-mean surmise density: beta = 1: (pi s/2) e^{-pi s^2/4}; beta = 2: (32 s^2/pi^2) e^{-4 s^2/pi}.
double wigner_surmise(int beta, double s);
double wigner_surmise_cdf(int beta, double s);

/// Eigenvalue gap of [[a, b], [conj b, c]].
double two_by_two_gap(double a, double c, double b_re, double b_im) noexcept;

/// Gaps of independent 2x2 Gaussian matrices of the given class, scaled to unit mean
/// by the exact mean gap.
std::vector<double> small_n_gap_law(int beta, std::size_t n_samples, std::uint64_t seed = 0);

// ---------------------------------------------------------------------------
// Fokker-Planck oracle on the N = 2 gap coordinate

/// Density q relative to the reference law on the gap coordinate s = x_2 - x_1
/// of the slice x_1 = -s/2, x_2 = s/2, discretized by vertex-centred finite volumes.
struct DensityGrid {
  int dimension = 1;
  std::vector<double> nodes;
  std::vector<double> volumes;    // trapezoid control volumes
  std::vector<double> reference;  // omega at the nodes, sum(volumes * reference) = 1
  std::vector<double> conductance;  // per face: omega(midpoint) / (2 h)
  std::vector<double> q;
  double t = 0.0;

  [[nodiscard]] double mass() const noexcept;
  [[nodiscard]] double min_spacing() const noexcept;
};

struct GridParams {
  double s_min = 1e-4;
  double s_max = 6.0;
  double uniform_spacing = 0.01;
  double geometric_ratio = 1.05;
};

/// Grid for a two-particle GibbsSpec with q = 1.
DensityGrid make_gap_grid(const GibbsSpec& spec, const GridParams& params = {});
/// Sets q proportional to f(s) and normalizes it against the reference law.
void set_initial_density(DensityGrid& grid, const std::function<double(double)>& f);

/// S(q) = sum q log q times the reference weight.
double relative_entropy(const DensityGrid& grid);
/// sum_j (1/2N) int (d_j sqrt q)^2 d omega, which on the gap coordinate is
/// (1/2) int (d_s sqrt q)^2 d omega.
double dirichlet_form(const DensityGrid& grid);
/// Exact dS/dt of the semi-discrete flow.
double entropy_production(const DensityGrid& grid);

/// Largest explicit Euler step that keeps the update a convex combination.
double explicit_step_limit(const DensityGrid& grid);
/// One explicit Euler step; throws StepSizeError beyond explicit_step_limit.
void explicit_fokker_planck_step(DensityGrid& grid, double dt);

enum class FokkerPlanckMethod { spectral, explicit_euler };

struct DecayPoint {
  double t = 0.0;
  double entropy = 0.0;
  double dirichlet = 0.0;
  double production = 0.0;  // dS/dt
  double mass = 0.0;
};

struct DecayReport {
  std::vector<DecayPoint> points;
  double fitted_rate = 0.0;  // of S, from the tail of log S
  double max_entropy_increase = 0.0;
  double max_mass_error = 0.0;
  double max_dissipation_mismatch = 0.0;  // max |dS/dt + 4D| / (4D)
  bool monotone = true;
};

/// Evolves dq/dt = L~ q to t_max, recording `outputs` equally spaced times.
/// spectral: exact solution of the semi-discrete system; explicit_euler: fixed
/// steps of size dt (0 picks 0.9 of the stability limit).
DecayReport fokker_planck_decay(const GibbsSpec& spec, DensityGrid grid, double t_max, std::size_t outputs,
                                FokkerPlanckMethod method = FokkerPlanckMethod::spectral, double dt = 0.0);

}  // namespace wigner
