#include "wigner/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "wigner/errors.hpp"
#include "wigner/linalg.hpp"
#include "wigner/spectral.hpp"

namespace wigner {

void GibbsSpec::validate() const {
  if (!(beta > 0.0)) throw ConfigError("Gibbs beta must be positive");
  if (n < 1) throw ConfigError("Gibbs measure needs N >= 1");
  if (kind == HamiltonianKind::omega) {
    if (n < 2) throw ConfigError("omega needs N >= 2");
    if (!(eta > 0.0 && eta < 1.0)) throw ConfigError("omega needs 0 < eta < 1");
  }
}

GibbsTarget::GibbsTarget(const GibbsSpec& spec) : spec_(spec) {
  spec_.validate();
  if (spec_.kind == HamiltonianKind::omega)
    potential_ = std::make_shared<const RelaxationPotential>(RelaxationPotential::oracle_scale(spec_.n, spec_.eta));
}

double GibbsTarget::hamiltonian(std::span<const double> x) const {
  if (x.size() != spec_.n) throw ConfigError("configuration size does not match the Gibbs spec");
  if (potential_) return omega_hamiltonian(x, spec_.beta, *potential_);
  return mu_hamiltonian(x, spec_.beta);
}

double GibbsTarget::log_acceptance_ratio(std::span<const double> x, std::size_t i, double y) const {
  const std::size_t n = x.size();
  if ((i > 0 && !(y > x[i - 1])) || (i + 1 < n && !(y < x[i + 1])))
    return -std::numeric_limits<double>::infinity();
  const double beta = spec_.beta;
  const double nd = static_cast<double>(n);
  const double xi = x[i];
  double dh = nd * beta * (y * y - xi * xi) / 4.0;
  double logs = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    if (k == i) continue;
    logs += std::log(std::abs(y - x[k])) - std::log(std::abs(xi - x[k]));
  }
  dh -= beta * logs;
  if (potential_) {
    const auto& pot = *potential_;
    dh += nd * beta * (pot.value(i, y) - pot.value(i, xi));
    double far = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      if (k == i || !pot.is_far(i, k)) continue;
      far += std::log(std::abs(y - x[k]) + pot.eta()) - std::log(std::abs(xi - x[k]) + pot.eta());
    }
    dh += beta * far;
  }
  return -dh;
}

MetropolisResult metropolis_sample(const GibbsSpec& spec, const MetropolisParams& params) {
  if (spec.n > 64) throw ConfigError("Metropolis oracle is limited to N <= 64");
  if (params.n_samples == 0 || params.thinning == 0) throw ConfigError("Metropolis needs samples and thinning >= 1");
  const GibbsTarget target(spec);
  const std::size_t n = spec.n;
  std::vector<double> x = params.initial;
  if (x.empty()) {
    for (std::size_t j = 0; j < n; ++j)
      x.push_back(semicircle_quantile((static_cast<double>(j) + 0.5) / static_cast<double>(n)));
  }
  if (x.size() != n || !is_strictly_ordered(x)) throw ConfigError("Metropolis start must be an ordered N-vector");

  CounterRng rng(params.seed, stream_id(StreamTag::metropolis, params.chain));
  double sigma = 1.0 / static_cast<double>(n);
  std::size_t accepted = 0, proposed = 0;
  auto sweep = [&] {
    for (std::size_t i = 0; i < n; ++i) {
      const double y = x[i] + sigma * rng.normal();
      const double u = rng.uniform();
      ++proposed;
      const double lr = target.log_acceptance_ratio(x, i, y);
      if (lr >= 0.0 || std::log(u) < lr) {
        x[i] = y;
        ++accepted;
      }
    }
  };
  constexpr std::size_t kTuneWindow = 20;
  for (std::size_t s = 0; s < params.burn_in; ++s) {
    sweep();
    if ((s + 1) % kTuneWindow == 0) {
      const double rate = static_cast<double>(accepted) / static_cast<double>(proposed);
      sigma *= std::exp(2.0 * (rate - params.target_acceptance));
      accepted = proposed = 0;
    }
  }
  accepted = proposed = 0;
  MetropolisResult out;
  out.samples.reserve(params.n_samples);
  std::vector<double> spread;
  spread.reserve(params.n_samples);
  for (std::size_t k = 0; k < params.n_samples; ++k) {
    for (std::size_t s = 0; s < params.thinning; ++s) sweep();
    out.samples.push_back(x);
    spread.push_back(x.back() - x.front());
  }
  out.acceptance_rate = static_cast<double>(accepted) / static_cast<double>(proposed);
  out.proposal_scale = sigma;
  const Estimate e = batch_means(spread);
  double var = 0.0;
  const double mean = mean_of(spread);
  for (double v : spread) var += (v - mean) * (v - mean);
  var /= static_cast<double>(spread.size() > 1 ? spread.size() - 1 : 1);
  out.effective_sample_size = e.se > 0.0 ? std::min<double>(var / (e.se * e.se), spread.size())
                                         : static_cast<double>(spread.size());
  if (out.acceptance_rate < 0.1 || out.acceptance_rate > 0.7) {
    std::ostringstream msg;
    msg << "Metropolis acceptance " << out.acceptance_rate << " outside [0.1, 0.7] (scale " << sigma << ")";
    throw TuningError(msg.str());
  }
  return out;
}

// ---------------------------------------------------------------------------

double wigner_surmise(int beta, double s) {
  if (!(s >= 0.0)) throw DomainError("surmise needs s >= 0");
  constexpr double pi = std::numbers::pi;
  if (beta == 1) return pi * s / 2.0 * std::exp(-pi * s * s / 4.0);
  if (beta == 2) return 32.0 * s * s / (pi * pi) * std::exp(-4.0 * s * s / pi);
  throw ConfigError("surmise is defined for beta in {1, 2}");
}

double wigner_surmise_cdf(int beta, double s) {
  if (!(s >= 0.0)) throw DomainError("surmise needs s >= 0");
  constexpr double pi = std::numbers::pi;
  if (beta == 1) return -std::expm1(-pi * s * s / 4.0);
  if (beta == 2) return std::erf(2.0 * s / std::sqrt(pi)) - 4.0 * s / pi * std::exp(-4.0 * s * s / pi);
  throw ConfigError("surmise is defined for beta in {1, 2}");
}

double two_by_two_gap(double a, double c, double b_re, double b_im) noexcept {
  return std::sqrt((a - c) * (a - c) + 4.0 * (b_re * b_re + b_im * b_im));
}

std::vector<double> small_n_gap_law(int beta, std::size_t n_samples, std::uint64_t seed) {
  if (beta != 1 && beta != 2) throw ConfigError("2x2 gap law needs beta in {1, 2}");
  CounterRng rng(seed, stream_id(StreamTag::oracle, static_cast<std::uint64_t>(beta)));
  std::vector<double> gaps(n_samples);
  // beta = 1: diag variance 2, off-diagonal 1, gap = 2 chi_2, mean sqrt(2 pi).
  // beta = 2: diag variance 1, Re/Im variance 1/2, gap = sqrt(2) chi_3, mean 4/sqrt(pi).
  const double mean = beta == 1 ? std::sqrt(2.0 * std::numbers::pi) : 4.0 / std::sqrt(std::numbers::pi);
  for (auto& g : gaps) {
    if (beta == 1) {
      const double a = std::sqrt(2.0) * rng.normal(), c = std::sqrt(2.0) * rng.normal(), b = rng.normal();
      g = two_by_two_gap(a, c, b, 0.0) / mean;
    } else {
      const double a = rng.normal(), c = rng.normal();
      const double br = rng.normal() / std::sqrt(2.0), bi = rng.normal() / std::sqrt(2.0);
      g = two_by_two_gap(a, c, br, bi) / mean;
    }
  }
  return gaps;
}

// ---------------------------------------------------------------------------

double DensityGrid::mass() const noexcept {
  double m = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) m += volumes[i] * reference[i] * q[i];
  return m;
}

double DensityGrid::min_spacing() const noexcept {
  double h = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < nodes.size(); ++i) h = std::min(h, nodes[i] - nodes[i - 1]);
  return h;
}

DensityGrid make_gap_grid(const GibbsSpec& spec, const GridParams& p) {
  if (spec.n != 2) throw ConfigError("the Fokker-Planck oracle works on N = 2");
  if (!(p.s_min > 0.0 && p.s_max > p.s_min && p.uniform_spacing > 0.0 && p.geometric_ratio > 1.0))
    throw ConfigError("invalid gap grid parameters");
  const GibbsTarget target(spec);
  DensityGrid g;
  double s = p.s_min;
  while (s * (p.geometric_ratio - 1.0) < p.uniform_spacing && s < p.s_max) {
    g.nodes.push_back(s);
    s *= p.geometric_ratio;
  }
  const double start = g.nodes.empty() ? p.s_min : g.nodes.back() + p.uniform_spacing;
  const auto steps = static_cast<std::size_t>(std::ceil((p.s_max - start) / p.uniform_spacing));
  for (std::size_t k = 0; k <= steps; ++k) g.nodes.push_back(std::min(start + p.uniform_spacing * k, p.s_max));
  if (g.nodes.size() >= 2 && g.nodes.back() - g.nodes[g.nodes.size() - 2] < 1e-12) g.nodes.pop_back();
  const std::size_t m = g.nodes.size();
  if (m < 3) throw ConfigError("gap grid too coarse");

  auto energy = [&](double sv) {
    const double x[2] = {-sv / 2.0, sv / 2.0};
    return target.hamiltonian(x);
  };
  std::vector<double> h_node(m), h_face(m - 1);
  double h_min = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < m; ++i) h_min = std::min(h_min, h_node[i] = energy(g.nodes[i]));
  for (std::size_t i = 0; i + 1 < m; ++i) h_face[i] = energy(0.5 * (g.nodes[i] + g.nodes[i + 1]));

  g.volumes.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double left = i > 0 ? g.nodes[i] - g.nodes[i - 1] : 0.0;
    const double right = i + 1 < m ? g.nodes[i + 1] - g.nodes[i] : 0.0;
    g.volumes[i] = 0.5 * (left + right);
  }
  g.reference.resize(m);
  double z = 0.0;
  for (std::size_t i = 0; i < m; ++i) z += g.volumes[i] * (g.reference[i] = std::exp(-(h_node[i] - h_min)));
  for (double& r : g.reference) r /= z;
  g.conductance.resize(m - 1);
  for (std::size_t i = 0; i + 1 < m; ++i)
    g.conductance[i] = std::exp(-(h_face[i] - h_min)) / z / (2.0 * (g.nodes[i + 1] - g.nodes[i]));
  g.q.assign(m, 1.0);
  return g;
}

void set_initial_density(DensityGrid& grid, const std::function<double(double)>& f) {
  for (std::size_t i = 0; i < grid.nodes.size(); ++i) {
    grid.q[i] = f(grid.nodes[i]);
    if (!(grid.q[i] >= 0.0) || !std::isfinite(grid.q[i])) throw DomainError("initial density must be finite and >= 0");
  }
  const double mass = grid.mass();
  if (!(mass > 0.0)) throw DomainError("initial density has zero mass");
  for (double& v : grid.q) v /= mass;
  grid.t = 0.0;
}

double relative_entropy(const DensityGrid& g) {
  double s = 0.0;
  for (std::size_t i = 0; i < g.q.size(); ++i)
    if (g.q[i] > 0.0) s += g.volumes[i] * g.reference[i] * g.q[i] * std::log(g.q[i]);
  return s;
}

double dirichlet_form(const DensityGrid& g) {
  double d = 0.0;
  for (std::size_t f = 0; f < g.conductance.size(); ++f) {
    const double diff = std::sqrt(std::max(g.q[f + 1], 0.0)) - std::sqrt(std::max(g.q[f], 0.0));
    d += g.conductance[f] * diff * diff;
  }
  return d;
}

double entropy_production(const DensityGrid& g) {
  double p = 0.0;
  for (std::size_t f = 0; f < g.conductance.size(); ++f) {
    const double a = g.q[f], b = g.q[f + 1];
    if (a > 0.0 && b > 0.0) p -= g.conductance[f] * (b - a) * (std::log(b) - std::log(a));
  }
  return p;
}

double explicit_step_limit(const DensityGrid& g) {
  double limit = std::numeric_limits<double>::infinity();
  const std::size_t m = g.q.size();
  for (std::size_t i = 0; i < m; ++i) {
    double c = 0.0;
    if (i > 0) c += g.conductance[i - 1];
    if (i + 1 < m) c += g.conductance[i];
    if (c > 0.0) limit = std::min(limit, g.volumes[i] * g.reference[i] / c);
  }
  return limit;
}

void explicit_fokker_planck_step(DensityGrid& g, double dt) {
  const double limit = explicit_step_limit(g);
  if (!(dt > 0.0) || dt > limit) {
    std::ostringstream msg;
    msg << "explicit step dt = " << dt << " violates the stability limit " << limit;
    throw StepSizeError(msg.str());
  }
  const std::size_t m = g.q.size();
  std::vector<double> flux(m, 0.0);
  for (std::size_t f = 0; f + 1 < m; ++f) {
    const double j = g.conductance[f] * (g.q[f + 1] - g.q[f]);
    flux[f] += j;
    flux[f + 1] -= j;
  }
  for (std::size_t i = 0; i < m; ++i) g.q[i] += dt * flux[i] / (g.volumes[i] * g.reference[i]);
  g.t += dt;
}

namespace {

DecayPoint observe(const DensityGrid& g) {
  return {g.t, relative_entropy(g), dirichlet_form(g), entropy_production(g), g.mass()};
}

}  // namespace

DecayReport fokker_planck_decay(const GibbsSpec& spec, DensityGrid grid, double t_max, std::size_t outputs,
                                FokkerPlanckMethod method, double dt) {
  spec.validate();
  if (spec.n != 2) throw ConfigError("the Fokker-Planck oracle works on N = 2");
  if (!(t_max > 0.0) || outputs < 2) throw ConfigError("decay run needs t_max > 0 and at least two outputs");
  const std::size_t m = grid.q.size();
  const double mass0 = grid.mass();
  DecayReport rep;
  const double t0 = grid.t;

  if (method == FokkerPlanckMethod::spectral) {
    std::vector<double> w(m), root(m);
    for (std::size_t i = 0; i < m; ++i) {
      w[i] = grid.volumes[i] * grid.reference[i];
      root[i] = std::sqrt(w[i]);
    }
    Tridiagonal t;
    t.diagonal.assign(m, 0.0);
    t.offdiagonal.assign(m - 1, 0.0);
    for (std::size_t f = 0; f + 1 < m; ++f) {
      t.diagonal[f] -= grid.conductance[f] / w[f];
      t.diagonal[f + 1] -= grid.conductance[f] / w[f + 1];
      t.offdiagonal[f] = grid.conductance[f] / (root[f] * root[f + 1]);
    }
    const auto eig = tridiagonal_eigen(std::move(t), true);
    // sqrt(w) spans the kernel exactly; the computed eigenvectors only up to
    // eps * ||A||, which is large on the graded grid. Keep the kernel exact and
    // project it out of the decaying modes so mass is conserved to round-off.
    double rr = 0.0;
    for (double r : root) rr += r * r;
    std::size_t null_mode = 0;
    for (std::size_t k = 1; k < m; ++k)
      if (std::abs(eig.values[k]) < std::abs(eig.values[null_mode])) null_mode = k;
    std::vector<std::vector<double>> modes;
    std::vector<double> rates, coef;
    double mass_coef = 0.0;
    for (std::size_t i = 0; i < m; ++i) mass_coef += root[i] * root[i] * grid.q[i];
    mass_coef /= rr;
    for (std::size_t k = 0; k < m; ++k) {
      if (k == null_mode) continue;
      std::vector<double> u(eig.vectors.row(k).begin(), eig.vectors.row(k).end());
      double proj = 0.0;
      for (std::size_t i = 0; i < m; ++i) proj += u[i] * root[i];
      proj /= rr;
      double c = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        u[i] -= proj * root[i];
        c += u[i] * root[i] * grid.q[i];
      }
      modes.push_back(std::move(u));
      rates.push_back(std::min(eig.values[k], 0.0));
      coef.push_back(c);
    }
    std::vector<double> p(m);
    for (std::size_t o = 0; o < outputs; ++o) {
      const double tau = t_max * static_cast<double>(o) / static_cast<double>(outputs - 1);
      for (std::size_t i = 0; i < m; ++i) p[i] = mass_coef * root[i];
      for (std::size_t k = 0; k < modes.size(); ++k) {
        const double a = coef[k] * std::exp(rates[k] * tau);
        for (std::size_t i = 0; i < m; ++i) p[i] += a * modes[k][i];
      }
      for (std::size_t i = 0; i < m; ++i) grid.q[i] = p[i] / root[i];
      grid.t = t0 + tau;
      rep.points.push_back(observe(grid));
    }
  } else {
    const double limit = explicit_step_limit(grid);
    const double step = dt > 0.0 ? dt : 0.9 * limit;
    rep.points.push_back(observe(grid));
    for (std::size_t o = 1; o < outputs; ++o) {
      const double target = t0 + t_max * static_cast<double>(o) / static_cast<double>(outputs - 1);
      while (grid.t < target - 1e-12 * t_max) explicit_fokker_planck_step(grid, std::min(step, target - grid.t));
      rep.points.push_back(observe(grid));
    }
  }

  for (std::size_t k = 0; k < rep.points.size(); ++k) {
    const auto& pt = rep.points[k];
    rep.max_mass_error = std::max(rep.max_mass_error, std::abs(pt.mass - mass0));
    if (k > 0) {
      const double inc = pt.entropy - rep.points[k - 1].entropy;
      rep.max_entropy_increase = std::max(rep.max_entropy_increase, inc);
      if (inc > 1e-14 * std::max(1.0, std::abs(rep.points[0].entropy))) rep.monotone = false;
    }
    if (pt.dirichlet > 1e-10)
      rep.max_dissipation_mismatch =
          std::max(rep.max_dissipation_mismatch, std::abs(pt.production + 4.0 * pt.dirichlet) / (4.0 * pt.dirichlet));
  }

  // exponential rate from the second half of the run, above the round-off floor
  std::vector<double> tx, ly;
  const double floor = 1e-12 * std::max(rep.points.front().entropy, 1e-300);
  for (const auto& pt : rep.points)
    if (pt.t - t0 >= 0.5 * t_max && pt.entropy > floor && pt.entropy > 1e-300) {
      tx.push_back(pt.t);
      ly.push_back(std::log(pt.entropy));
    }
  if (tx.size() < 2) {
    tx.clear();
    ly.clear();
    for (const auto& pt : rep.points)
      if (pt.entropy > floor && pt.entropy > 1e-300) {
        tx.push_back(pt.t);
        ly.push_back(std::log(pt.entropy));
      }
  }
  rep.fitted_rate = tx.size() >= 2 ? -linear_fit(tx, ly).slope : 0.0;
  return rep;
}

}  // namespace wigner
