#include "wigner/acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <sstream>

#include "wigner/errors.hpp"
#include "wigner/flows.hpp"
#include "wigner/oracles.hpp"
#include "wigner/statistics.hpp"

namespace wigner {

Tier parse_tier(std::string_view name) {
  if (name == "quick") return Tier::quick;
  if (name == "full") return Tier::full;
  throw ConfigError("unknown acceptance tier '" + std::string(name) + "' (expected quick or full)");
}

std::string_view to_string(Tier tier) noexcept { return tier == Tier::quick ? "quick" : "full"; }

std::vector<int> AcceptanceSummary::failures() const {
  std::vector<int> out;
  for (const auto& r : results)
    if (!r.pass) out.push_back(r.id);
  return out;
}

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;
  void require(bool ok) { pass = pass && ok; }
};

EnsembleConfig ensemble(int beta, std::size_t n, EntryKind kind, std::uint64_t seed) {
  return EnsembleConfig{beta, n, EntryDistribution{kind}, seed};
}

// ---------------------------------------------------------------------------

void local_law(bool quick, unsigned workers, Outcome& o) {
  const std::size_t n = quick ? 250 : 1000;
  const std::size_t samples = quick ? 50 : 200;
  const double tol = quick ? 0.075 : 0.05;
  const double energies[] = {-1.0, 0.0, 1.0};
  const double eta[] = {50.0 / static_cast<double>(n)};
  o.detail << "N=" << n << " samples=" << samples << " eta=50/N tol=" << tol << ":";
  for (EntryKind kind : {EntryKind::gaussian, EntryKind::rademacher}) {
    const auto reps = local_law_scan(ensemble(1, n, kind, 101), energies, eta, samples, {}, workers);
    for (const auto& r : reps) {
      const auto& d = r.rows.front().mean_deviation;
      o.require(d.value < tol);
      o.detail << " " << to_string(kind) << "(E=" << r.energy << ")=" << std::setprecision(3) << d.value;
    }
  }
}

void delocalization(bool quick, unsigned workers, Outcome& o) {
  const std::size_t n = quick ? 250 : 1000;
  const std::size_t matrices = quick ? 8 : 2;
  o.detail << "N=" << n << " |lambda|<=1:";
  for (EntryKind kind : {EntryKind::gaussian, EntryKind::rademacher}) {
    const auto cfg = ensemble(1, n, kind, 202);
    auto per = parallel_map(matrices, workers, [&](std::size_t s) {
      return delocalization_stats(eigen_decompose(sample_wigner(cfg, s), true), 0.0, static_cast<double>(n), 4.0);
    });
    double sum = 0.0, worst = 0.0;
    std::size_t count = 0;
    for (const auto& r : per)
      for (const auto& v : r.vectors) {
        sum += v.n_l4_4;
        worst = std::max(worst, v.n_linf2);
        ++count;
      }
    const double mean = sum / static_cast<double>(count);
    o.require(count >= 1000 && mean >= 2.5 && mean <= 3.5 && worst < 40.0);
    o.detail << " " << to_string(kind) << ": vectors=" << count << " mean N|v|_4^4=" << std::setprecision(4) << mean
             << " max N|v|_inf^2=" << worst << ";";
  }
}

void repulsion(bool quick, unsigned workers, Outcome& o) {
  const std::size_t n = quick ? 100 : 400;
  const std::size_t samples = quick ? 5000 : 20000;
  const double tol = quick ? 0.35 : 0.25;
  const double eps[] = {0.2, 0.3, 0.45, 0.7};
  o.detail << "N=" << n << " samples=" << samples << " n=2 tol=" << tol * 100 << "%:";
  for (int beta : {2, 1}) {
    const auto rep = level_repulsion_probe(ensemble(beta, n, EntryKind::gaussian, 303), 0.0, eps, 2, samples, {}, workers);
    const double rel = std::abs(rep.fit.slope / rep.expected_exponent - 1.0);
    o.require(rel <= tol);
    o.detail << " beta=" << beta << " slope=" << std::setprecision(4) << rep.fit.slope << "+-" << rep.fit.slope_se
             << " (expected " << rep.expected_exponent << ", hits@0.2=" << rep.rows.front().hits << ");";
  }
}

void gap_law(bool quick, unsigned workers, Outcome& o) {
  const std::size_t n = quick ? 125 : 500;
  const std::size_t gaps = quick ? 2500 : 10000;
  const double tol = quick ? 0.07 : 0.05;
  const std::size_t draws = quick ? 250000 : 1000000;
  o.detail << "N=" << n << " gaps>=" << gaps << ":";
  for (int beta : {1, 2}) {
    const auto cfg = ensemble(beta, n, EntryKind::gaussian, 404);
    const std::size_t per = bulk_gap_range(n, kDefaultBulkFraction).second - bulk_gap_range(n, kDefaultBulkFraction).first;
    const auto gd = gap_distribution(cfg, kDefaultBulkFraction, (gaps + per - 1) / per, workers);
    auto cdf = [beta](double s) { return wigner_surmise_cdf(beta, std::max(s, 0.0)); };
    const double ks = ks_one_sample(gd.sample.gaps, cdf);
    const double ks2 = ks_one_sample(small_n_gap_law(beta, draws, 405), cdf);
    o.require(ks < tol && ks2 < 0.01);
    o.detail << " beta=" << beta << " KS=" << std::setprecision(3) << ks << " (" << gd.sample.gaps.size()
             << " gaps), 2x2 KS=" << ks2 << ";";
  }
}

double bin_average_two_point(double lo, double hi) {
  // Simpson on 1 - K(x)^2 over the bin
  constexpr int m = 16;
  const double h = (hi - lo) / m;
  double s = 0.0;
  for (int i = 0; i <= m; ++i) {
    const double k = sine_kernel(lo + i * h);
    s += (i == 0 || i == m ? 1.0 : (i % 2 ? 4.0 : 2.0)) * (1.0 - k * k);
  }
  return s * h / 3.0 / (hi - lo);
}

void sine_kernel_two_point(bool quick, unsigned workers, Outcome& o) {
  const std::size_t n = quick ? 250 : 500;
  const std::size_t samples = quick ? 250 : 500;
  const double tol = quick ? 0.15 : 0.1;
  std::vector<double> edges;
  for (int i = 0; i <= 30; ++i) edges.push_back(0.1 * i);
  const auto est = kpoint_correlation(ensemble(2, n, EntryKind::gaussian, 505), 2, 0.0, 0.1, edges, samples, 0.5, workers);
  double worst = 0.0, at = 0.0;
  for (std::size_t b = 2; b + 1 < edges.size(); ++b) {
    const double d = std::abs(est.values[b] - bin_average_two_point(edges[b], edges[b + 1]));
    if (d > worst) {
      worst = d;
      at = 0.5 * (edges[b] + edges[b + 1]);
    }
  }
  o.require(worst < tol);
  o.detail << "GUE N=" << n << " samples=" << samples << " delta=0.1: max |R2 - (1-K^2)| on [0.2,3] = "
           << std::setprecision(3) << worst << " at x=" << at << " (tol " << tol << "), first bin " << est.values[0];
}

void universality(bool quick, unsigned workers, Outcome& o) {
  const std::size_t n = quick ? 125 : 500;
  const std::size_t samples = quick ? 500 : 1000;
  const double k_se = quick ? 4.5 : 3.0;
  const double t_flows[] = {0.0, 0.2};
  const std::size_t orders[] = {1, 2};
  const auto battery = default_gap_battery();
  o.detail << "N=" << n << " samples=" << samples << " tol=" << k_se << " se:";
  for (int beta : {1, 2}) {
    const auto rep = universality_experiment(ensemble(beta, n, EntryKind::rademacher, 606), t_flows, battery, orders,
                                             samples, kDefaultBulkFraction, workers);
    double worst = 0.0;
    for (const auto& r : rep.rows) worst = std::max(worst, std::abs(r.difference.z_score()));
    o.require(rep.all_within(k_se));
    o.detail << " beta=" << beta << " max|z|=" << std::setprecision(3) << worst << " over " << rep.rows.size()
             << " comparisons;";
  }
}

void dbm(bool quick, unsigned workers, Outcome& o) {
  const std::size_t n = quick ? 50 : 200;
  const std::size_t gaps = quick ? 2500 : 10000;
  const double tol_inv = quick ? 0.04 : 0.02;
  const double tol_ou = quick ? 0.06 : 0.03;
  const auto [a, b] = bulk_gap_range(n, kDefaultBulkFraction);
  const std::size_t traj = (gaps + (b - a) - 1) / (b - a);
  const auto inv = dbm_invariance_test(ensemble(1, n, EntryKind::gaussian, 707), 1.0, traj, 4 * traj,
                                       kDefaultBulkFraction, {}, workers);
  const auto ou = ou_oracle_test(ensemble(1, n, EntryKind::rademacher, 708), 0.1, traj, kDefaultBulkFraction, {}, workers);
  o.require(inv.ks < tol_inv && ou.ks < tol_ou);
  o.detail << "N=" << n << ": GOE-start DBM t=1 vs static KS=" << std::setprecision(3) << inv.ks << " ("
           << inv.gaps_test << " vs " << inv.gaps_reference << " gaps, tol " << tol_inv << "); DBM vs matrix OU at t=0.1 KS="
           << ou.ks << " (" << ou.gaps_test << " gaps, tol " << tol_ou << ")";
}

void convexity(bool, unsigned, Outcome& o) {
  const std::size_t n = 2000;
  const auto c2 = convexity_bound(RelaxationPotential(n, 1e-2));
  const auto c3 = convexity_bound(RelaxationPotential(n, 1e-3));
  const double ratio = c2.min_convexity / c3.min_convexity;
  const double expect = std::pow(10.0, -1.0 / 3.0);
  o.require(c2.min_convexity > 0.0 && c3.min_convexity > 0.0);
  o.require(std::abs(ratio / expect - 1.0) <= 0.30);
  o.detail << "N=" << n << ": inf W''(eta=1e-2)=" << std::setprecision(4) << c2.min_convexity << " at j=" << c2.j
           << " x=" << c2.x << ", inf W''(eta=1e-3)=" << c3.min_convexity << " at j=" << c3.j << " x=" << c3.x
           << "; ratio " << ratio << " vs " << expect << " +-30%";
}

void drift_and_rigidity(bool quick, unsigned workers, Outcome& o) {
  // pointwise identity on random ordered configurations
  double worst = 0.0;
  CounterRng rng(909, stream_id(StreamTag::oracle, 9));
  const std::size_t n_id = quick ? 100 : 200;
  for (double beta : {1.0, 2.0, 3.5}) {
    for (double eta : {0.05, 0.2}) {
      const RelaxationPotential pot(n_id, eta);
      for (int rep = 0; rep < 5; ++rep) {
        std::vector<double> x(pot.gamma().begin(), pot.gamma().end());
        for (std::size_t k = 0; k < x.size(); ++k) x[k] += 0.3 / static_cast<double>(n_id) * (2.0 * rng.uniform() - 1.0);
        std::sort(x.begin(), x.end());
        const auto d = dbm_drift(x, beta);
        const auto r = relaxation_drift(x, beta, pot);
        const auto b = relaxation_b(x, pot);
        for (std::size_t j = 0; j < x.size(); ++j) worst = std::max(worst, std::abs(d[j] - r[j] - beta / 2.0 * b[j]));
      }
    }
  }
  o.require(worst <= 1e-12);
  o.detail << "identity max residual " << std::setprecision(3) << worst << ";";

  const std::vector<std::size_t> sizes = quick ? std::vector<std::size_t>{100, 200, 400, 800}
                                               : std::vector<std::size_t>{200, 400, 800, 1600};
  const std::size_t samples = quick ? 10 : 12;
  std::vector<double> rig;
  for (std::size_t n : sizes) {
    const auto cfg = ensemble(1, n, EntryKind::gaussian, 910);
    const auto gamma = classical_locations(n);
    auto per = parallel_map(samples, workers, [&](std::size_t s) { return rigidity(sample_eigenvalues(cfg, s), gamma); });
    rig.push_back(mean_of(per));
  }
  bool monotone = true;
  for (std::size_t i = 1; i < rig.size(); ++i) monotone = monotone && rig[i] < rig[i - 1];
  const std::size_t probe = quick ? 400 : 1000;
  const auto cfg = ensemble(1, probe, EntryKind::gaussian, 911);
  const auto gamma = classical_locations(probe);
  auto per = parallel_map(samples, workers, [&](std::size_t s) { return rigidity(sample_eigenvalues(cfg, s), gamma); });
  const double r_probe = mean_of(per);
  const double bound = 1.0 / std::sqrt(static_cast<double>(probe));
  o.require(monotone && r_probe < bound);
  o.detail << " rigidity N=" << probe << ": " << r_probe << " (< " << bound << "); trend";
  for (std::size_t i = 0; i < sizes.size(); ++i) o.detail << " " << sizes[i] << ":" << rig[i];
  o.detail << (monotone ? " decreasing" : " NOT decreasing");
}

void entropy_decay(bool quick, unsigned, Outcome& o) {
  GridParams gp;
  if (quick) gp.uniform_spacing = 0.02;
  std::vector<double> rates;
  bool mono = true;
  double mass = 0.0;
  for (double eta : {0.05, 0.2}) {
    const GibbsSpec spec{1.0, 2, HamiltonianKind::omega, eta};
    auto grid = make_gap_grid(spec, gp);
    set_initial_density(grid, [](double s) { return std::exp(-2.0 * (s - 3.0) * (s - 3.0)); });
    const auto r = fokker_planck_decay(spec, grid, 10.0, 101);
    rates.push_back(r.fitted_rate);
    mono = mono && r.monotone;
    mass = std::max(mass, r.max_mass_error);
  }
  const double ratio = rates[0] / rates[1];
  const double expect = std::cbrt(0.2 / 0.05);
  o.require(mono && mass < 1e-6);
  o.require(std::abs(ratio / expect - 1.0) <= 0.35);
  o.detail << "N=2 gap coordinate: rate(0.05)=" << std::setprecision(4) << rates[0] << " rate(0.2)=" << rates[1]
           << " ratio " << ratio << " vs " << expect << " +-35%; monotone=" << (mono ? "yes" : "no")
           << " mass drift " << mass;
}

struct Criterion {
  int id;
  const char* name;
  std::function<void(bool, unsigned, Outcome&)> run;
};

}  // namespace

AcceptanceSummary acceptance_suite(Tier tier, std::ostream& out, unsigned workers, const std::set<int>& only) {
  const std::vector<Criterion> criteria = {
      {1, "local semicircle law", local_law},
      {2, "delocalization", delocalization},
      {3, "level repulsion exponents", repulsion},
      {4, "gap law vs Wigner surmise", gap_law},
      {5, "sine-kernel two-point function", sine_kernel_two_point},
      {6, "universality of gap observables", universality},
      {7, "DBM invariance and OU oracle", dbm},
      {8, "convexity scaling", convexity},
      {9, "drift decomposition and rigidity", drift_and_rigidity},
      {10, "entropy decay scaling", entropy_decay},
  };
  for (int id : only)
    if (id < 1 || id > kCriterionCount) throw ConfigError("no acceptance criterion " + std::to_string(id));
  AcceptanceSummary summary;
  summary.tier = tier;
  for (const auto& c : criteria) {
    if (!only.empty() && !only.count(c.id)) continue;
    const auto start = std::chrono::steady_clock::now();
    CriterionResult res{c.id, c.name, false, {}, 0.0};
    Outcome o;
    try {
      c.run(tier == Tier::quick, workers, o);
      res.pass = o.pass;
      res.detail = o.detail.str();
    } catch (const std::exception& e) {
      res.pass = false;
      res.detail = o.detail.str() + " error: " + e.what();
    }
    res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    out << (res.pass ? "[PASS] " : "[FAIL] ") << std::setw(2) << res.id << " " << res.name << ": " << res.detail
        << " (" << std::fixed << std::setprecision(1) << res.seconds << " s)" << std::defaultfloat << std::endl;
    summary.results.push_back(std::move(res));
  }
  return summary;
}

}  // namespace wigner
