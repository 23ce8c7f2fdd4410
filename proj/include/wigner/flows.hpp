#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "wigner/ensembles.hpp"
#include "wigner/parallel.hpp"
#include "wigner/rng.hpp"
#include "wigner/sampling_stats.hpp"
#include "wigner/statistics.hpp"

namespace wigner {

/// Ordered particle configuration evolving under a flow. `rng` owns the
/// trajectory's noise stream.
struct FlowState {
  std::vector<double> x;
  double t = 0.0;
  double beta = 1.0;
  CounterRng rng;
};

/// Trajectory `index` of a flow family gets its own noise stream.
FlowState make_flow_state(std::vector<double> x, double beta, std::uint64_t seed, std::uint64_t index,
                          StreamTag tag = StreamTag::dbm_noise);

bool is_strictly_ordered(std::span<const double> x) noexcept;
double min_gap(std::span<const double> x) noexcept;

struct StepPolicy {
  double dt_max = 1e-3;
  double gap_factor = 0.1;  // dt <= gap_factor * N * (min gap)^2
  int max_halvings = 20;
  /// When a close pair forces a small step, hold the drift from pairs at index
  /// distance >= 2 fixed over a step limited by the next-nearest spacing and
  /// sub-step only the confinement and nearest-neighbour terms.
  bool multirate = true;
};
double adaptive_step(std::span<const double> x, const StepPolicy& policy) noexcept;

/// -beta x_i / 4 + (beta / 2N) sum_{j != i} 1/(x_i - x_j).
std::vector<double> dbm_drift(std::span<const double> x, double beta);

/// Advances the state by exactly dt with Euler-Maruyama (noise variance dt/N
/// per coordinate). An ordering violation discards the proposal and covers the
/// interval with two half steps, each with fresh noise, recursively; more than
/// `max_halvings` levels throws IntegratorStiffnessError.
FlowState dbm_step(const FlowState& state, double dt, int max_halvings = 20);
/// Adaptive steps up to t_end.
void evolve_dbm(FlowState& state, double t_end, const StepPolicy& policy = {});

/// H_t = e^{-t/2} H0 + sqrt(1 - e^{-t}) V, with V an independent Gaussian matrix
/// of the same class (noise sample `index`). t = +inf returns V.
WignerMatrix matrix_ou_flow(const WignerMatrix& h0, double t, std::uint64_t seed, std::uint64_t index = 0);

/// The eigenvalues of the matrix OU flow at time t follow DBM at time 2t/beta;
/// this is the inverse map.
constexpr double ou_time_for_dbm_time(double beta, double tau) noexcept { return beta * tau / 2.0; }
constexpr double dbm_time_for_ou_time(double beta, double t) noexcept { return 2.0 * t / beta; }

// ---------------------------------------------------------------------------
// Local relaxation flow

/// W_j(x) = -(1/N) sum_{|k-j| >= m} log(|x - gamma_k| + eta), m = ceil(N eta),
/// continued quadratically (value, slope and curvature of the one-sided limit)
/// outside [gamma_{max(0, j-m)}, gamma_{min(N-1, j+m)}]. Indices are 0-based.
class RelaxationPotential {
 public:
  /// Requires 1/N < eta < 1.
  RelaxationPotential(std::size_t n, double eta);
  /// Oracle-scale construction (tiny N): only 0 < eta < 1 is required, the
  /// far window is still m = ceil(N eta) >= 1.
  static RelaxationPotential oracle_scale(std::size_t n, double eta);

  [[nodiscard]] std::size_t size() const noexcept { return gamma_.size(); }
  [[nodiscard]] double eta() const noexcept { return eta_; }
  [[nodiscard]] std::size_t window() const noexcept { return m_; }
  [[nodiscard]] std::span<const double> gamma() const noexcept { return gamma_; }
  [[nodiscard]] bool is_far(std::size_t j, std::size_t k) const noexcept {
    return (j > k ? j - k : k - j) >= m_;
  }
  /// Junction points [left, right] of W_j.
  [[nodiscard]] std::pair<double, double> junctions(std::size_t j) const noexcept;

  [[nodiscard]] double value(std::size_t j, double x) const;
  [[nodiscard]] double first(std::size_t j, double x) const;
  [[nodiscard]] double second(std::size_t j, double x) const;

  /// The unextended sums; `side` picks the one-sided limit at a far gamma_k
  /// (+1: from the right, -1: from the left, 0: plain sign).
  [[nodiscard]] double raw_value(std::size_t j, double x) const;
  [[nodiscard]] double raw_first(std::size_t j, double x, int side = 0) const;
  [[nodiscard]] double raw_second(std::size_t j, double x) const;

 private:
  struct Junction {
    double at, value, slope, curvature;
  };
  RelaxationPotential(std::size_t n, double eta, bool check_range);
  std::vector<double> gamma_;
  double eta_;
  std::size_t m_;
  std::vector<Junction> left_, right_;
};

struct ConvexityResult {
  double min_convexity = 0.0;
  std::size_t j = 0;
  double x = 0.0;
};
/// inf_j inf_{x in [-3, 3]} W_j''(x) by a grid followed by golden-section refinement.
ConvexityResult convexity_bound(const RelaxationPotential& pot);

/// b_j = (1/N) sum_{far k} sgn(x_j - x_k)/(|x_j - x_k| + eta) + W_j'(x_j).
std::vector<double> relaxation_b(std::span<const double> x, const RelaxationPotential& pot);

/// DBM Hamiltonian N beta sum x^2/4 - beta sum_{i<j} log|x_i - x_j| (+inf off the ordered cone).
double mu_hamiltonian(std::span<const double> x, double beta);
/// Relaxation Hamiltonian
///   N beta sum x^2/4 + N beta sum_j W_j(x_j) - beta sum_{i<j} log|x_i - x_j|
///   + beta sum_{i<j far} log(|x_i - x_j| + eta).
double omega_hamiltonian(std::span<const double> x, double beta, const RelaxationPotential& pot);
std::vector<double> omega_gradient(std::span<const double> x, double beta, const RelaxationPotential& pot);
/// -(1/2N) grad H~, the drift of the omega-reversible diffusion.
std::vector<double> relaxation_drift(std::span<const double> x, double beta, const RelaxationPotential& pot);

FlowState local_relaxation_step(const FlowState& state, const RelaxationPotential& pot, double dt,
                                int max_halvings = 20);
void evolve_relaxation(FlowState& state, const RelaxationPotential& pot, double t_end, const StepPolicy& policy = {});

struct FlowDiagnostics {
  std::vector<double> b;  // per-j mean over the samples
  Estimate lambda_hat;    // N sum_j b_j^2
  Estimate mean_rigidity; // (1/N) sum_k |x_k - gamma_k|
  double min_convexity = 0.0;
};
/// Requires at least 30 configurations.
FlowDiagnostics lambda_estimate(std::span<const std::vector<double>> samples, const RelaxationPotential& pot);

/// (1/N) sum_k |x_k - gamma_k|.
double rigidity(std::span<const double> x, std::span<const double> gamma);

// ---------------------------------------------------------------------------
// Experiments

struct UniversalityRow {
  std::string g_name;
  std::size_t n = 1;
  double t_flow = 0.0;
  Estimate test;
  Estimate reference;
  Comparison difference;
};

struct UniversalityReport {
  std::vector<UniversalityRow> rows;
  std::size_t sample_count = 0;
  [[nodiscard]] bool all_within(double k) const noexcept;
};

/// Gap-observable battery on OU-evolved samples of `config` against an
/// independent Gaussian ensemble of the same class and size. `t_flow` is the
/// matrix OU time; +inf means a pure Gaussian test ensemble.
UniversalityReport universality_experiment(const EnsembleConfig& config, std::span<const double> t_flows,
                                           std::span<const GapTestFunction> battery,
                                           std::span<const std::size_t> n_values, std::size_t n_samples,
                                           double bulk_fraction = kDefaultBulkFraction,
                                           unsigned workers = default_worker_count());

struct GapKsReport {
  double ks = 0.0;
  std::size_t gaps_test = 0;
  std::size_t gaps_reference = 0;
};

/// DBM run to time tau from spectra of `config` (one trajectory per sample)
/// against static spectra of the same ensemble from an independent stream.
GapKsReport dbm_invariance_test(const EnsembleConfig& config, double tau, std::size_t trajectories,
                                std::size_t reference_samples, double bulk_fraction = kDefaultBulkFraction,
                                const StepPolicy& policy = {}, unsigned workers = default_worker_count());

/// From the same initial matrices: DBM to time tau on their spectra against the
/// matrix OU flow to the matching time beta tau / 2.
GapKsReport ou_oracle_test(const EnsembleConfig& config, double tau, std::size_t samples,
                           double bulk_fraction = kDefaultBulkFraction, const StepPolicy& policy = {},
                           unsigned workers = default_worker_count());

struct RelaxationSpeedReport {
  std::vector<double> times;
  std::vector<Estimate> relaxation;  // gap observable along the local relaxation flow from x = gamma
  std::vector<Estimate> dbm;         // along DBM from the compressed start x = 0.5 gamma
  Estimate equilibrium;              // static Gaussian ensemble
  double relaxation_time = 0.0;      // first checkpoint after which the curve stays within 3 combined se
  double dbm_time = 0.0;
};

struct RelaxationSpeedParams {
  int beta = 1;
  std::size_t n = 200;
  double eta = 0.1;
  std::vector<double> times;
  std::size_t trajectories = 40;
  std::uint64_t seed = 0;
  std::size_t gap_n = 1;
  double bulk_fraction = kDefaultBulkFraction;
  StepPolicy policy{};
};
RelaxationSpeedReport relaxation_speed_experiment(const RelaxationSpeedParams& params,
                                                  unsigned workers = default_worker_count());

}  // namespace wigner
