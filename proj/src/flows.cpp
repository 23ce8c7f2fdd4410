#include "wigner/flows.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

#include "wigner/errors.hpp"
#include "wigner/spectral.hpp"

namespace wigner {

FlowState make_flow_state(std::vector<double> x, double beta, std::uint64_t seed, std::uint64_t index, StreamTag tag) {
  if (!(beta >= 1.0)) throw ConfigError("flows need beta >= 1");
  if (!is_strictly_ordered(x)) throw DomainError("flow state must be strictly ordered");
  return FlowState{std::move(x), 0.0, beta, CounterRng(seed, stream_id(tag, index))};
}

bool is_strictly_ordered(std::span<const double> x) noexcept {
  for (std::size_t i = 1; i < x.size(); ++i)
    if (!(x[i] > x[i - 1])) return false;
  return true;
}

double min_gap(std::span<const double> x) noexcept {
  double g = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < x.size(); ++i) g = std::min(g, x[i] - x[i - 1]);
  return g;
}

double adaptive_step(std::span<const double> x, const StepPolicy& policy) noexcept {
  if (x.size() < 2) return policy.dt_max;
  const double g = min_gap(x);
  return std::min(policy.dt_max, policy.gap_factor * static_cast<double>(x.size()) * g * g);
}

std::vector<double> dbm_drift(std::span<const double> x, double beta) {
  const std::size_t n = x.size();
  std::vector<double> d(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double inv = 1.0 / (x[i] - x[j]);
      d[i] += inv;
      d[j] -= inv;
    }
  const double c = beta / (2.0 * static_cast<double>(n));
  for (std::size_t i = 0; i < n; ++i) d[i] = -beta * x[i] / 4.0 + c * d[i];
  return d;
}

namespace {

using DriftFn = std::function<std::vector<double>(std::span<const double>)>;

void advance(FlowState& s, double dt, int depth, int max_halvings, const DriftFn& drift) {
  const std::size_t n = s.x.size();
  const auto d = drift(s.x);
  const double sd = std::sqrt(dt / static_cast<double>(n));
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = s.x[i] + d[i] * dt + sd * s.rng.normal();
  if (is_strictly_ordered(y)) {
    s.x = std::move(y);
    s.t += dt;
    return;
  }
  if (depth >= max_halvings) {
    std::ostringstream msg;
    msg << "ordering still violated after " << max_halvings << " step halvings (dt = " << dt << ")";
    throw IntegratorStiffnessError(msg.str(), min_gap(s.x));
  }
  advance(s, dt / 2.0, depth + 1, max_halvings, drift);
  advance(s, dt / 2.0, depth + 1, max_halvings, drift);
}

FlowState step_with(const FlowState& state, double dt, int max_halvings, const DriftFn& drift) {
  if (!(dt > 0.0)) throw DomainError("step size must be positive");
  if (!is_strictly_ordered(state.x)) throw DomainError("flow state must be strictly ordered");
  FlowState s = state;
  const double t0 = s.t;
  advance(s, dt, 0, max_halvings, drift);
  s.t = t0 + dt;  // the substeps sum to dt; avoid drift from repeated halving
  return s;
}

// Confinement and nearest-neighbour repulsion. Both flows share these terms,
// and they are the only ones that blow up at a single collision.
void near_drift(std::span<const double> x, double beta, std::vector<double>& out) {
  const std::size_t n = x.size();
  const double c = beta / (2.0 * static_cast<double>(n));
  out.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double r = 0.0;
    if (i > 0) r += 1.0 / (x[i] - x[i - 1]);
    if (i + 1 < n) r += 1.0 / (x[i] - x[i + 1]);
    out[i] = -beta * x[i] / 4.0 + c * r;
  }
}

double next_nearest_gap(std::span<const double> x) noexcept {
  double h = std::numeric_limits<double>::infinity();
  for (std::size_t i = 2; i < x.size(); ++i) h = std::min(h, x[i] - x[i - 2]);
  return h;
}

// Macro step with the remaining (far) drift held fixed, sub-stepped with the
// near terms at the usual gap-limited step.
void multirate_step(FlowState& state, double macro, const StepPolicy& policy, const DriftFn& drift) {
  const double beta = state.beta;
  const std::size_t n = state.x.size();
  std::vector<double> far = drift(state.x), near;
  near_drift(state.x, beta, near);
  for (std::size_t i = 0; i < n; ++i) far[i] -= near[i];
  const DriftFn split = [&far, beta](std::span<const double> x) {
    std::vector<double> d;
    near_drift(x, beta, d);
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += far[i];
    return d;
  };
  const double t_end = state.t + macro;
  while (state.t < t_end) {
    const double remaining = t_end - state.t;
    double dt = std::min(adaptive_step(state.x, policy), remaining);
    if (remaining - dt < 1e-12 * std::max(1.0, t_end)) dt = remaining;
    state = step_with(state, dt, policy.max_halvings, split);
    if (remaining - dt <= 0.0) state.t = t_end;
  }
}

void evolve_with(FlowState& state, double t_end, const StepPolicy& policy, const DriftFn& drift) {
  const double nd = static_cast<double>(state.x.size());
  while (state.t < t_end) {
    const double remaining = t_end - state.t;
    double dt = std::min(adaptive_step(state.x, policy), remaining);
    if (policy.multirate && state.x.size() > 2) {
      const double h = next_nearest_gap(state.x) / 2.0;
      const double macro = std::min({policy.dt_max, policy.gap_factor * nd * h * h, remaining});
      if (macro > 2.0 * dt) {
        const double t_macro = state.t + macro;
        multirate_step(state, macro, policy, drift);
        state.t = t_macro;
        continue;
      }
    }
    // absorb a sliver so the loop ends exactly on t_end
    if (remaining - dt < 1e-12 * std::max(1.0, t_end)) dt = remaining;
    state = step_with(state, dt, policy.max_halvings, drift);
    if (remaining - dt <= 0.0) state.t = t_end;
  }
}

}  // namespace

FlowState dbm_step(const FlowState& state, double dt, int max_halvings) {
  const double beta = state.beta;
  return step_with(state, dt, max_halvings, [beta](std::span<const double> x) { return dbm_drift(x, beta); });
}

void evolve_dbm(FlowState& state, double t_end, const StepPolicy& policy) {
  const double beta = state.beta;
  evolve_with(state, t_end, policy, [beta](std::span<const double> x) { return dbm_drift(x, beta); });
}

WignerMatrix matrix_ou_flow(const WignerMatrix& h0, double t, std::uint64_t seed, std::uint64_t index) {
  if (!(t >= 0.0)) throw DomainError("OU flow time must be nonnegative");
  if (t == 0.0) return h0;
  EnsembleConfig gauss;
  gauss.beta = h0.beta();
  gauss.n = h0.size();
  gauss.entries = EntryDistribution{EntryKind::gaussian};
  gauss.seed = seed;
  WignerMatrix v = sample_wigner(gauss, index, StreamTag::ou_noise);
  if (std::isinf(t)) return v;
  const double a = std::exp(-t / 2.0);
  const double b = std::sqrt(-std::expm1(-t));
  auto mix = [&](const auto& h, auto m) {
    auto* out = m.data();
    const auto* in = h.data();
    for (std::size_t i = 0; i < m.storage().size(); ++i) out[i] = a * in[i] + b * out[i];
    return m;
  };
  if (h0.beta() == 1) return WignerMatrix(mix(h0.real(), v.real()));
  return WignerMatrix(mix(h0.complex(), v.complex()));
}

// ---------------------------------------------------------------------------

RelaxationPotential::RelaxationPotential(std::size_t n, double eta) : RelaxationPotential(n, eta, true) {}

RelaxationPotential RelaxationPotential::oracle_scale(std::size_t n, double eta) {
  return RelaxationPotential(n, eta, false);
}

RelaxationPotential::RelaxationPotential(std::size_t n, double eta, bool check_range) : eta_(eta) {
  if (n < 2) throw ConfigError("relaxation potential needs N >= 2");
  const double nd = static_cast<double>(n);
  if (!(eta > 0.0 && eta < 1.0)) throw DomainError("relaxation potential needs 0 < eta < 1");
  if (check_range && !(eta > 1.0 / nd)) throw DomainError("relaxation potential needs 1/N < eta < 1");
  gamma_ = classical_locations(n);
  m_ = static_cast<std::size_t>(std::ceil(nd * eta - 1e-9));
  left_.resize(n);
  right_.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double xl = gamma_[j >= m_ ? j - m_ : 0];
    const double xr = gamma_[std::min(n - 1, j + m_)];
    left_[j] = {xl, raw_value(j, xl), raw_first(j, xl, +1), raw_second(j, xl)};
    right_[j] = {xr, raw_value(j, xr), raw_first(j, xr, -1), raw_second(j, xr)};
  }
}

std::pair<double, double> RelaxationPotential::junctions(std::size_t j) const noexcept {
  return {left_[j].at, right_[j].at};
}

double RelaxationPotential::raw_value(std::size_t j, double x) const {
  double s = 0.0;
  for (std::size_t k = 0; k < gamma_.size(); ++k)
    if (is_far(j, k)) s += std::log(std::abs(x - gamma_[k]) + eta_);
  return -s / static_cast<double>(gamma_.size());
}

double RelaxationPotential::raw_first(std::size_t j, double x, int side) const {
  double s = 0.0;
  for (std::size_t k = 0; k < gamma_.size(); ++k) {
    if (!is_far(j, k)) continue;
    const double u = x - gamma_[k];
    const double sg = u > 0.0 ? 1.0 : (u < 0.0 ? -1.0 : static_cast<double>(side));
    s += sg / (std::abs(u) + eta_);
  }
  return -s / static_cast<double>(gamma_.size());
}

double RelaxationPotential::raw_second(std::size_t j, double x) const {
  double s = 0.0;
  for (std::size_t k = 0; k < gamma_.size(); ++k) {
    if (!is_far(j, k)) continue;
    const double r = std::abs(x - gamma_[k]) + eta_;
    s += 1.0 / (r * r);
  }
  return s / static_cast<double>(gamma_.size());
}

double RelaxationPotential::value(std::size_t j, double x) const {
  const Junction* q = x < left_[j].at ? &left_[j] : (x > right_[j].at ? &right_[j] : nullptr);
  if (!q) return raw_value(j, x);
  const double u = x - q->at;
  return q->value + q->slope * u + 0.5 * q->curvature * u * u;
}

double RelaxationPotential::first(std::size_t j, double x) const {
  if (x < left_[j].at) return left_[j].slope + left_[j].curvature * (x - left_[j].at);
  if (x > right_[j].at) return right_[j].slope + right_[j].curvature * (x - right_[j].at);
  if (x == left_[j].at) return left_[j].slope;
  if (x == right_[j].at) return right_[j].slope;
  return raw_first(j, x);
}

double RelaxationPotential::second(std::size_t j, double x) const {
  if (x < left_[j].at) return left_[j].curvature;
  if (x > right_[j].at) return right_[j].curvature;
  return raw_second(j, x);
}

ConvexityResult convexity_bound(const RelaxationPotential& pot) {
  ConvexityResult best{std::numeric_limits<double>::infinity(), 0, 0.0};
  constexpr int kGrid = 16;
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  for (std::size_t j = 0; j < pot.size(); ++j) {
    // outside the window W'' is the junction curvature, so the infimum over
    // [-3, 3] is attained on the window, where W'' is convex
    auto [a, b] = pot.junctions(j);
    a = std::max(a, -3.0);
    b = std::min(b, 3.0);
    double arg = a, val = pot.second(j, a);
    for (int g = 1; g <= kGrid; ++g) {
      const double x = a + (b - a) * g / kGrid;
      const double v = pot.second(j, x);
      if (v < val) {
        val = v;
        arg = x;
      }
    }
    const double h = (b - a) / kGrid;
    double lo = std::max(a, arg - h), hi = std::min(b, arg + h);
    double c = hi - phi * (hi - lo), d = lo + phi * (hi - lo);
    double fc = pot.second(j, c), fd = pot.second(j, d);
    for (int it = 0; it < 40; ++it) {
      if (fc < fd) {
        hi = d;
        d = c;
        fd = fc;
        c = hi - phi * (hi - lo);
        fc = pot.second(j, c);
      } else {
        lo = c;
        c = d;
        fc = fd;
        d = lo + phi * (hi - lo);
        fd = pot.second(j, d);
      }
    }
    const double xm = 0.5 * (lo + hi);
    const double vm = pot.second(j, xm);
    if (vm < val) {
      val = vm;
      arg = xm;
    }
    if (val < best.min_convexity) best = {val, j, arg};
  }
  return best;
}

std::vector<double> relaxation_b(std::span<const double> x, const RelaxationPotential& pot) {
  const std::size_t n = x.size();
  if (n != pot.size()) throw ConfigError("configuration size does not match the potential");
  const double eta = pot.eta();
  std::vector<double> b(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    double s = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      if (!pot.is_far(j, k)) continue;
      const double u = x[j] - x[k];
      s += (u > 0.0 ? 1.0 : -1.0) / (std::abs(u) + eta);
    }
    b[j] = s / static_cast<double>(n) + pot.first(j, x[j]);
  }
  return b;
}

double mu_hamiltonian(std::span<const double> x, double beta) {
  if (!is_strictly_ordered(x)) return std::numeric_limits<double>::infinity();
  const double n = static_cast<double>(x.size());
  double quad = 0.0, logs = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    quad += x[i] * x[i];
    for (std::size_t j = i + 1; j < x.size(); ++j) logs += std::log(x[j] - x[i]);
  }
  return n * beta * quad / 4.0 - beta * logs;
}

double omega_hamiltonian(std::span<const double> x, double beta, const RelaxationPotential& pot) {
  if (x.size() != pot.size()) throw ConfigError("configuration size does not match the potential");
  if (!is_strictly_ordered(x)) return std::numeric_limits<double>::infinity();
  const double n = static_cast<double>(x.size());
  double quad = 0.0, w = 0.0, logs = 0.0, far = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    quad += x[i] * x[i];
    w += pot.value(i, x[i]);
    for (std::size_t j = i + 1; j < x.size(); ++j) {
      logs += std::log(x[j] - x[i]);
      if (pot.is_far(i, j)) far += std::log(x[j] - x[i] + pot.eta());
    }
  }
  return n * beta * quad / 4.0 + n * beta * w - beta * logs + beta * far;
}

std::vector<double> omega_gradient(std::span<const double> x, double beta, const RelaxationPotential& pot) {
  if (x.size() != pot.size()) throw ConfigError("configuration size does not match the potential");
  const std::size_t n = x.size();
  const double nd = static_cast<double>(n);
  std::vector<double> g(n);
  for (std::size_t j = 0; j < n; ++j) {
    double rep = 0.0, far = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (i == j) continue;
      const double u = x[j] - x[i];
      rep += 1.0 / u;
      if (pot.is_far(i, j)) far += (u > 0.0 ? 1.0 : -1.0) / (std::abs(u) + pot.eta());
    }
    g[j] = nd * beta * x[j] / 2.0 + nd * beta * pot.first(j, x[j]) - beta * rep + beta * far;
  }
  return g;
}

std::vector<double> relaxation_drift(std::span<const double> x, double beta, const RelaxationPotential& pot) {
  auto g = omega_gradient(x, beta, pot);
  const double c = -1.0 / (2.0 * static_cast<double>(x.size()));
  for (double& v : g) v *= c;
  return g;
}

FlowState local_relaxation_step(const FlowState& state, const RelaxationPotential& pot, double dt, int max_halvings) {
  const double beta = state.beta;
  return step_with(state, dt, max_halvings,
                   [beta, &pot](std::span<const double> x) { return relaxation_drift(x, beta, pot); });
}

void evolve_relaxation(FlowState& state, const RelaxationPotential& pot, double t_end, const StepPolicy& policy) {
  const double beta = state.beta;
  evolve_with(state, t_end, policy,
              [beta, &pot](std::span<const double> x) { return relaxation_drift(x, beta, pot); });
}

double rigidity(std::span<const double> x, std::span<const double> gamma) {
  if (x.size() != gamma.size()) throw ConfigError("rigidity needs matching sizes");
  double s = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) s += std::abs(x[k] - gamma[k]);
  return s / static_cast<double>(x.size());
}

FlowDiagnostics lambda_estimate(std::span<const std::vector<double>> samples, const RelaxationPotential& pot) {
  if (samples.size() < 30) throw ConfigError("lambda_estimate needs at least 30 samples");
  const std::size_t n = pot.size();
  FlowDiagnostics out;
  out.b.assign(n, 0.0);
  std::vector<double> lam, rig;
  for (const auto& x : samples) {
    const auto b = relaxation_b(x, pot);
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      s += b[j] * b[j];
      out.b[j] += b[j] / static_cast<double>(samples.size());
    }
    lam.push_back(static_cast<double>(n) * s);
    rig.push_back(rigidity(x, pot.gamma()));
  }
  out.lambda_hat = batch_means(lam);
  out.mean_rigidity = batch_means(rig);
  out.min_convexity = convexity_bound(pot).min_convexity;
  return out;
}

// ---------------------------------------------------------------------------

bool UniversalityReport::all_within(double k) const noexcept {
  return std::all_of(rows.begin(), rows.end(), [k](const UniversalityRow& r) { return r.difference.within(k); });
}

UniversalityReport universality_experiment(const EnsembleConfig& config, std::span<const double> t_flows,
                                           std::span<const GapTestFunction> battery,
                                           std::span<const std::size_t> n_values, std::size_t n_samples,
                                           double bulk_fraction, unsigned workers) {
  config.validate();
  if (n_samples == 0) throw ConfigError("universality experiment needs samples");
  if (battery.empty() || n_values.empty() || t_flows.empty()) throw ConfigError("universality battery is empty");
  for (double t : t_flows)
    if (!(t >= 0.0)) throw ConfigError("flow times must be nonnegative");
  EnsembleConfig gauss = config;
  gauss.entries = EntryDistribution{EntryKind::gaussian};
  const std::size_t per_t = battery.size() * n_values.size();

  auto observe = [&](std::span<const double> eig, std::vector<double>& out) {
    for (const auto& g : battery)
      for (std::size_t n : n_values) out.push_back(gap_observable_bulk(eig, g.g, n, bulk_fraction));
  };
  auto per_sample = parallel_map(n_samples, workers, [&](std::size_t s) {
    std::vector<double> out;
    out.reserve(per_t * (t_flows.size() + 1));
    observe(eigen_decompose(sample_wigner(gauss, s, StreamTag::reference_ensemble), false).eigenvalues(), out);
    std::optional<WignerMatrix> h0;
    for (double t : t_flows) {
      if (std::isinf(t)) {
        observe(eigen_decompose(matrix_ou_flow(sample_wigner(gauss, s), t, config.seed, s), false).eigenvalues(), out);
        continue;
      }
      if (!h0) h0 = sample_wigner(config, s);
      observe(eigen_decompose(matrix_ou_flow(*h0, t, config.seed, s), false).eigenvalues(), out);
    }
    return out;
  });

  UniversalityReport rep;
  rep.sample_count = n_samples;
  std::vector<double> col(n_samples);
  auto column = [&](std::size_t c) {
    for (std::size_t s = 0; s < n_samples; ++s) col[s] = per_sample[s][c];
    return batch_means(col);
  };
  for (std::size_t ti = 0; ti < t_flows.size(); ++ti) {
    std::size_t c = 0;
    for (const auto& g : battery)
      for (std::size_t n : n_values) {
        UniversalityRow row;
        row.g_name = g.name;
        row.n = n;
        row.t_flow = t_flows[ti];
        row.reference = column(c);
        row.test = column(per_t * (ti + 1) + c);
        row.difference = compare(row.test, row.reference);
        rep.rows.push_back(row);
        ++c;
      }
  }
  return rep;
}

namespace {

std::vector<double> flatten(std::vector<std::vector<double>>& parts) {
  std::vector<double> out;
  for (auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

}  // namespace

GapKsReport dbm_invariance_test(const EnsembleConfig& config, double tau, std::size_t trajectories,
                                std::size_t reference_samples, double bulk_fraction, const StepPolicy& policy,
                                unsigned workers) {
  config.validate();
  if (!(tau >= 0.0) || trajectories == 0 || reference_samples == 0)
    throw ConfigError("DBM invariance needs tau >= 0 and samples");
  auto evolved = parallel_map(trajectories, workers, [&](std::size_t s) {
    FlowState st = make_flow_state(sample_eigenvalues(config, s), config.beta, config.seed, s, StreamTag::dbm_noise);
    evolve_dbm(st, tau, policy);
    return normalized_bulk_gaps(st.x, bulk_fraction);
  });
  auto reference = parallel_map(reference_samples, workers, [&](std::size_t s) {
    const auto sp = eigen_decompose(sample_wigner(config, s, StreamTag::reference_ensemble), false);
    return normalized_bulk_gaps(sp.eigenvalues(), bulk_fraction);
  });
  GapKsReport rep;
  auto a = flatten(evolved);
  auto b = flatten(reference);
  rep.gaps_test = a.size();
  rep.gaps_reference = b.size();
  rep.ks = ks_two_sample(std::move(a), std::move(b));
  return rep;
}

GapKsReport ou_oracle_test(const EnsembleConfig& config, double tau, std::size_t samples, double bulk_fraction,
                           const StepPolicy& policy, unsigned workers) {
  config.validate();
  if (!(tau >= 0.0) || samples == 0) throw ConfigError("OU oracle test needs tau >= 0 and samples");
  const double t_ou = ou_time_for_dbm_time(config.beta, tau);
  auto both = parallel_map(samples, workers, [&](std::size_t s) {
    const WignerMatrix h0 = sample_wigner(config, s);
    const auto start = eigen_decompose(h0, false);
    FlowState st = make_flow_state(std::vector<double>(start.eigenvalues().begin(), start.eigenvalues().end()),
                                   config.beta, config.seed, s, StreamTag::dbm_noise);
    evolve_dbm(st, tau, policy);
    const auto ou = eigen_decompose(matrix_ou_flow(h0, t_ou, config.seed, s), false);
    return std::make_pair(normalized_bulk_gaps(st.x, bulk_fraction),
                          normalized_bulk_gaps(ou.eigenvalues(), bulk_fraction));
  });
  std::vector<double> a, b;
  for (auto& [x, y] : both) {
    a.insert(a.end(), x.begin(), x.end());
    b.insert(b.end(), y.begin(), y.end());
  }
  GapKsReport rep;
  rep.gaps_test = a.size();
  rep.gaps_reference = b.size();
  rep.ks = ks_two_sample(std::move(a), std::move(b));
  return rep;
}

RelaxationSpeedReport relaxation_speed_experiment(const RelaxationSpeedParams& p, unsigned workers) {
  if (p.beta != 1 && p.beta != 2) throw ConfigError("relaxation experiment compares against beta in {1, 2}");
  if (p.times.empty() || p.trajectories < 2) throw ConfigError("relaxation experiment needs times and trajectories");
  if (!std::is_sorted(p.times.begin(), p.times.end()) || p.times.front() < 0.0)
    throw ConfigError("checkpoint times must be sorted and nonnegative");
  const RelaxationPotential pot(p.n, p.eta);
  const auto g = triangle_bump(1.0, 1.0);
  const std::size_t m = p.times.size();

  struct Traj {
    std::vector<double> relax, dbm;
    double eq = 0.0;
  };
  auto per = parallel_map(p.trajectories, workers, [&](std::size_t r) {
    Traj out;
    std::vector<double> lattice(pot.gamma().begin(), pot.gamma().end());
    FlowState relax = make_flow_state(lattice, p.beta, p.seed, r, StreamTag::relaxation_noise);
    std::vector<double> squeezed = lattice;
    for (double& v : squeezed) v *= 0.5;
    FlowState dbm = make_flow_state(squeezed, p.beta, p.seed, r, StreamTag::dbm_noise);
    for (double t : p.times) {
      evolve_relaxation(relax, pot, t, p.policy);
      evolve_dbm(dbm, t, p.policy);
      out.relax.push_back(gap_observable_bulk(relax.x, g.g, p.gap_n, p.bulk_fraction));
      out.dbm.push_back(gap_observable_bulk(dbm.x, g.g, p.gap_n, p.bulk_fraction));
    }
    EnsembleConfig gauss{p.beta, p.n, EntryDistribution{EntryKind::gaussian}, p.seed};
    const auto eig = eigen_decompose(sample_wigner(gauss, r, StreamTag::reference_ensemble), false);
    out.eq = gap_observable_bulk(eig.eigenvalues(), g.g, p.gap_n, p.bulk_fraction);
    return out;
  });

  RelaxationSpeedReport rep;
  rep.times = p.times;
  std::vector<double> col(p.trajectories);
  for (std::size_t r = 0; r < p.trajectories; ++r) col[r] = per[r].eq;
  rep.equilibrium = batch_means(col);
  auto settle = [&](const std::vector<Estimate>& curve) {
    std::size_t first = m;
    for (std::size_t i = m; i-- > 0;) {
      if (!compare(curve[i], rep.equilibrium).within(3.0)) break;
      first = i;
    }
    return first < m ? p.times[first] : std::numeric_limits<double>::infinity();
  };
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t r = 0; r < p.trajectories; ++r) col[r] = per[r].relax[i];
    rep.relaxation.push_back(batch_means(col));
    for (std::size_t r = 0; r < p.trajectories; ++r) col[r] = per[r].dbm[i];
    rep.dbm.push_back(batch_means(col));
  }
  rep.relaxation_time = settle(rep.relaxation);
  rep.dbm_time = settle(rep.dbm);
  return rep;
}

}  // namespace wigner
