#include "wigner/harness.hpp"

#include <bit>
#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <set>
#include <sstream>

#include "wigner/errors.hpp"
#include "wigner/flows.hpp"
#include "wigner/oracles.hpp"
#include "wigner/statistics.hpp"

#ifndef WIGNER_VERSION
#define WIGNER_VERSION "0.0.0"
#endif

namespace wigner {

static_assert(std::endian::native == std::endian::little, "binary writers assume a little-endian host");

std::string_view artifact_version() noexcept { return WIGNER_VERSION; }

namespace {

constexpr std::pair<ExperimentKind, std::string_view> kKindNames[] = {
    {ExperimentKind::local_law, "local-law"},
    {ExperimentKind::delocalization, "delocalization"},
    {ExperimentKind::repulsion, "repulsion"},
    {ExperimentKind::gaps, "gaps"},
    {ExperimentKind::correlation, "correlation"},
    {ExperimentKind::dbm_invariance, "dbm-invariance"},
    {ExperimentKind::ou_oracle, "ou-oracle"},
    {ExperimentKind::relaxation, "relaxation"},
    {ExperimentKind::universality, "universality"},
    {ExperimentKind::entropy_decay, "entropy-decay"},
};

const std::map<ExperimentKind, std::set<std::string>>& param_schema() {
  static const std::map<ExperimentKind, std::set<std::string>> schema = {
      {ExperimentKind::local_law, {"energies", "eta_grid", "K", "kappa", "tolerance"}},
      {ExperimentKind::delocalization, {"energy", "K", "p"}},
      {ExperimentKind::repulsion, {"energy", "epsilon_grid", "order", "band", "min_hits"}},
      {ExperimentKind::gaps, {"bulk_fraction"}},
      {ExperimentKind::correlation, {"order", "energy", "delta", "bins", "kappa"}},
      {ExperimentKind::dbm_invariance, {"t", "reference_samples", "dt_max", "bulk_fraction"}},
      {ExperimentKind::ou_oracle, {"t", "dt_max", "bulk_fraction"}},
      {ExperimentKind::relaxation, {"eta", "times", "gap_order", "dt_max"}},
      {ExperimentKind::universality, {"t_flow", "orders", "bulk_fraction"}},
      {ExperimentKind::entropy_decay, {"eta_values", "t_max", "outputs"}},
  };
  return schema;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

double parse_number(const std::string& key, const std::string& text) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (trim(text.substr(used)).empty()) return v;
  } catch (const std::exception&) {
  }
  throw ConfigError("parameter '" + key + "': not a number: '" + text + "'");
}

std::uint64_t parse_unsigned(const std::string& key, const std::string& text) {
  const double v = parse_number(key, text);
  if (!(v >= 0.0) || v != std::floor(v) || v > 1.8e19)
    throw ConfigError("parameter '" + key + "': expected a nonnegative integer, got '" + text + "'");
  return static_cast<std::uint64_t>(v);
}

std::string format_number(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace

std::string_view to_string(ExperimentKind kind) noexcept {
  for (const auto& [k, name] : kKindNames)
    if (k == kind) return name;
  return "unknown";
}

ExperimentKind parse_experiment_kind(std::string_view name) {
  for (const auto& [k, n] : kKindNames)
    if (n == name) return k;
  throw ConfigError("unknown experiment kind '" + std::string(name) + "'");
}

void ExperimentSpec::validate() const {
  if (schema_version != kSchemaVersion)
    throw ConfigError("unsupported schema_version " + std::to_string(schema_version));
  ensemble.validate();
  if (n_samples == 0) throw ConfigError("n_samples must be positive");
  const auto& allowed = param_schema().at(kind);
  for (const auto& [key, value] : params) {
    if (!allowed.count(key))
      throw ConfigError("parameter '" + key + "' is not part of the " + std::string(to_string(kind)) + " schema");
    (void)get_list(key, {});
  }
  if (kind == ExperimentKind::entropy_decay && ensemble.n != 2)
    throw ConfigError("entropy-decay runs on n = 2");
  if (kind == ExperimentKind::repulsion && !ensemble.entries.has_smooth_density())
    throw ConfigError("repulsion needs gaussian or laplace entries");
}

double ExperimentSpec::get(const std::string& key, double fallback) const {
  auto it = params.find(key);
  return it == params.end() ? fallback : parse_number(key, it->second);
}

std::vector<double> ExperimentSpec::get_list(const std::string& key, std::vector<double> fallback) const {
  auto it = params.find(key);
  if (it == params.end()) return fallback;
  std::vector<double> out;
  std::stringstream ss(it->second);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_number(key, trim(item)));
  if (out.empty()) throw ConfigError("parameter '" + key + "' is an empty list");
  return out;
}

ExperimentSpec parse_spec(std::string_view text) {
  ExperimentSpec spec;
  bool have_version = false, have_kind = false;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(std::string_view(t).substr(0, eq));
    const std::string value = trim(std::string_view(t).substr(eq + 1));
    if (key.empty() || value.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty key or value");
    if (key == "schema_version") {
      spec.schema_version = static_cast<int>(parse_unsigned(key, value));
      have_version = true;
    } else if (key == "kind") {
      spec.kind = parse_experiment_kind(value);
      have_kind = true;
    } else if (key == "beta") {
      spec.ensemble.beta = static_cast<int>(parse_unsigned(key, value));
    } else if (key == "n") {
      spec.ensemble.n = parse_unsigned(key, value);
    } else if (key == "entries") {
      spec.ensemble.entries = EntryDistribution{parse_entry_kind(value)};
    } else if (key == "seed") {
      spec.ensemble.seed = parse_unsigned(key, value);
    } else if (key == "n_samples") {
      spec.n_samples = parse_unsigned(key, value);
    } else if (key == "workers") {
      spec.workers = static_cast<unsigned>(parse_unsigned(key, value));
    } else if (key == "output") {
      spec.output = value;
    } else {
      if (spec.params.count(key)) throw ConfigError("duplicate parameter '" + key + "'");
      spec.params[key] = value;
    }
  }
  if (!have_version) throw ConfigError("spec is missing schema_version");
  if (!have_kind) throw ConfigError("spec is missing kind");
  return spec;
}

ExperimentSpec load_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open spec file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_spec(ss.str());
}

namespace {

std::string canonical(const ExperimentSpec& spec, bool with_runtime) {
  std::ostringstream os;
  os << "schema_version = " << spec.schema_version << "\n";
  os << "kind = " << to_string(spec.kind) << "\n";
  os << "beta = " << spec.ensemble.beta << "\n";
  os << "n = " << spec.ensemble.n << "\n";
  os << "entries = " << to_string(spec.ensemble.entries.kind) << "\n";
  os << "seed = " << spec.ensemble.seed << "\n";
  os << "n_samples = " << spec.n_samples << "\n";
  for (const auto& [k, v] : spec.params) os << k << " = " << v << "\n";
  if (with_runtime) {
    if (spec.workers) os << "workers = " << spec.workers << "\n";
    if (!spec.output.empty()) os << "output = " << spec.output << "\n";
  }
  return os.str();
}

}  // namespace

std::string serialize_spec(const ExperimentSpec& spec) { return canonical(spec, true); }

std::string spec_hash(const ExperimentSpec& spec) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical(spec, false)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

bool ExperimentRecord::passed() const noexcept {
  for (const auto& m : metrics)
    if (!m.pass) return false;
  return true;
}

// ---------------------------------------------------------------------------

namespace {

Metric metric(std::string name, const Estimate& e, std::string unit, std::string check = {}, bool pass = true) {
  return Metric{std::move(name), e.value, e.se, e.samples, std::move(unit), std::move(check), pass};
}

Metric scalar(std::string name, double v, std::size_t samples, std::string unit, std::string check = {},
              bool pass = true) {
  return Metric{std::move(name), v, 0.0, samples, std::move(unit), std::move(check), pass};
}

std::string label(const char* base, double v) {
  std::ostringstream os;
  os << base << "@" << v;
  return os.str();
}

StepPolicy policy_of(const ExperimentSpec& spec) {
  StepPolicy p;
  p.dt_max = spec.get("dt_max", p.dt_max);
  return p;
}

void run_local_law(const ExperimentSpec& spec, unsigned workers, ExperimentRecord& rec) {
  const double n = static_cast<double>(spec.ensemble.n);
  LocalLawParams lp;
  lp.K = spec.get("K", lp.K);
  lp.kappa = spec.get("kappa", lp.kappa);
  const auto energies = spec.get_list("energies", {0.0});
  const auto etas = spec.get_list("eta_grid", {50.0 / n});
  const double tol = spec.get("tolerance", 0.05);
  const auto reports = local_law_scan(spec.ensemble, energies, etas, spec.n_samples, lp, workers);
  Table t{"local_law", "eta: energy units; deviation: density units", spec.n_samples,
          {"energy", "eta", "mean_deviation", "se", "max_deviation", "density", "density_se", "rho_sc"}, {}};
  for (const auto& r : reports)
    for (const auto& row : r.rows) {
      t.rows.push_back({r.energy, row.eta, row.mean_deviation.value, row.mean_deviation.se, row.max_deviation,
                        row.density.value, row.density.se, r.reference_density});
      std::ostringstream name;
      name << "mean_deviation@E=" << r.energy << ",eta=" << row.eta;
      rec.metrics.push_back(metric(name.str(), row.mean_deviation, "density", "< " + format_number(tol),
                                   row.mean_deviation.value < tol));
    }
  rec.tables.push_back(std::move(t));
}

void run_delocalization(const ExperimentSpec& spec, unsigned workers, ExperimentRecord& rec) {
  const double energy = spec.get("energy", 0.0);
  const double K = spec.get("K", static_cast<double>(spec.ensemble.n) / 2.0);
  const double p = spec.get("p", 4.0);
  auto per = parallel_map(spec.n_samples, workers, [&](std::size_t s) {
    return delocalization_stats(eigen_decompose(sample_wigner(spec.ensemble, s), true), energy, K, p);
  });
  std::vector<double> l4_sum(spec.n_samples), counts(spec.n_samples);
  double max_linf = 0.0;
  std::size_t vectors = 0;
  Table t{"delocalization", "dimensionless norms", spec.n_samples,
          {"sample", "index", "eigenvalue", "scaled_p_norm", "n_linf2", "n_l4_4", "localized"}, {}};
  for (std::size_t s = 0; s < per.size(); ++s) {
    for (const auto& v : per[s].vectors) {
      l4_sum[s] += v.n_l4_4;
      counts[s] += 1.0;
      max_linf = std::max(max_linf, v.n_linf2);
      t.rows.push_back({double(s), double(v.index), v.eigenvalue, v.scaled_p_norm, v.n_linf2, v.n_l4_4,
                        v.localized ? 1.0 : 0.0});
    }
    vectors += per[s].vectors.size();
  }
  Estimate l4 = batch_ratio(l4_sum, counts);
  l4.samples = vectors;
  rec.metrics.push_back(metric("mean_N_l4_4", l4, "dimensionless", "in [2.5, 3.5]", l4.value >= 2.5 && l4.value <= 3.5));
  rec.metrics.push_back(scalar("max_N_linf2", max_linf, vectors, "dimensionless", "< 40", max_linf < 40.0));
  rec.tables.push_back(std::move(t));
}

void run_repulsion(const ExperimentSpec& spec, unsigned workers, ExperimentRecord& rec) {
  RepulsionParams rp;
  rp.band_halfwidth = spec.get("band", rp.band_halfwidth);
  rp.min_hits = static_cast<std::size_t>(spec.get("min_hits", double(rp.min_hits)));
  const int order = static_cast<int>(spec.get("order", 2.0));
  const auto eps = spec.get_list("epsilon_grid", {0.2, 0.3, 0.45, 0.7});
  const auto rep = level_repulsion_probe(spec.ensemble, spec.get("energy", 0.0), eps, order, spec.n_samples, rp, workers);
  Table t{"repulsion", "epsilon: units of 1/N; probability: dimensionless", spec.n_samples,
          {"epsilon", "probability", "se", "hits"}, {}};
  for (const auto& r : rep.rows) t.rows.push_back({r.epsilon, r.probability.value, r.probability.se, double(r.hits)});
  const bool ok = std::abs(rep.fit.slope / rep.expected_exponent - 1.0) <= 0.25;
  rec.metrics.push_back(Metric{"slope", rep.fit.slope, rep.fit.slope_se, spec.n_samples, "dimensionless",
                               "within 25% of " + format_number(rep.expected_exponent), ok});
  rec.metrics.push_back(scalar("widened_uncertainty", rep.widened_uncertainty ? 1.0 : 0.0, spec.n_samples, "flag"));
  rec.tables.push_back(std::move(t));
}

void run_gaps(const ExperimentSpec& spec, unsigned workers, ExperimentRecord& rec) {
  const auto gd = gap_distribution(spec.ensemble, spec.get("bulk_fraction", kDefaultBulkFraction), spec.n_samples, workers);
  const std::size_t count = gd.sample.gaps.size();
  rec.metrics.push_back(scalar("mean_gap", gd.mean, count, "mean spacings", "within 2% of 1", std::abs(gd.mean - 1.0) < 0.02));
  const int beta = spec.ensemble.beta;
  const double ks = ks_one_sample(gd.sample.gaps, [beta](double s) { return wigner_surmise_cdf(beta, std::max(s, 0.0)); });
  rec.metrics.push_back(scalar("ks_vs_surmise", ks, count, "dimensionless", "< 0.05", ks < 0.05));
  double small = 0.0;
  for (double g : gd.sample.gaps) small += g < 0.05 ? 1.0 : 0.0;
  rec.metrics.push_back(scalar("fraction_below_0.05", small / double(count), count, "probability"));
  Table t{"gap_histogram", "s: mean spacings; density: per unit s", count, {"lo", "hi", "count", "density", "surmise"}, {}};
  const auto dens = gd.histogram.density();
  for (std::size_t b = 0; b + 1 < gd.histogram.edges.size(); ++b) {
    const double lo = gd.histogram.edges[b], hi = gd.histogram.edges[b + 1];
    t.rows.push_back({lo, hi, gd.histogram.counts[b], dens[b],
                      (wigner_surmise_cdf(beta, hi) - wigner_surmise_cdf(beta, lo)) / (hi - lo)});
  }
  rec.tables.push_back(std::move(t));
}

void run_correlation(const ExperimentSpec& spec, unsigned workers, ExperimentRecord& rec) {
  const int k = static_cast<int>(spec.get("order", 2.0));
  std::vector<double> default_bins;
  for (int i = 0; i <= 30; ++i) default_bins.push_back(0.1 * i);
  const auto bins = spec.get_list("bins", default_bins);
  const double energy = spec.get("energy", 0.0);
  const auto est = kpoint_correlation(spec.ensemble, k, energy, spec.get("delta", 0.1), bins, spec.n_samples,
                                      spec.get("kappa", 0.5), workers);
  const std::size_t nb = bins.size() - 1;
  Table t{"correlation", "x: mean spacings; value: rescaled density", spec.n_samples, {}, {}};
  if (k == 3) {
    t.columns = {"x2_lo", "x2_hi", "x3_lo", "x3_hi", "value", "se", "count", "sine_kernel"};
    for (std::size_t a = 0; a < nb; ++a)
      for (std::size_t b = 0; b < nb; ++b) {
        const double pts[3] = {0.0, 0.5 * (bins[a] + bins[a + 1]), 0.5 * (bins[b] + bins[b + 1])};
        t.rows.push_back({bins[a], bins[a + 1], bins[b], bins[b + 1], est.values[a * nb + b], est.errors[a * nb + b],
                          est.counts[a * nb + b], sine_kernel_determinant(pts)});
      }
  } else {
    t.columns = {"x_lo", "x_hi", "value", "se", "count", "sine_kernel"};
    double worst = 0.0;
    for (std::size_t b = 0; b < nb; ++b) {
      const double mid = 0.5 * (bins[b] + bins[b + 1]);
      const double pts[2] = {0.0, mid};
      const double ref = k == 1 ? 1.0 : sine_kernel_determinant(pts);
      t.rows.push_back({bins[b], bins[b + 1], est.values[b], est.errors[b], est.counts[b], ref});
      if (k == 1 || (spec.ensemble.beta == 2 && bins[b] >= 0.2 - 1e-12 && bins[b + 1] <= 3.0 + 1e-12))
        worst = std::max(worst, std::abs(est.values[b] - ref));
    }
    if (k == 1) {
      rec.metrics.push_back(scalar("max_deviation_from_1", worst, spec.n_samples, "rescaled density", "< 0.05", worst < 0.05));
    } else if (spec.ensemble.beta == 2) {
      rec.metrics.push_back(scalar("max_deviation_from_sine_kernel", worst, spec.n_samples, "rescaled density",
                                   "< 0.1 on [0.2, 3]", worst < 0.1));
    }
  }
  rec.metrics.push_back(scalar("origins", est.origins, spec.n_samples, "eigenvalues"));
  rec.metrics.push_back(scalar("widened_uncertainty", est.widened_uncertainty ? 1.0 : 0.0, spec.n_samples, "flag"));
  rec.tables.push_back(std::move(t));
}

void run_dbm_invariance(const ExperimentSpec& spec, unsigned workers, ExperimentRecord& rec) {
  const auto r = dbm_invariance_test(spec.ensemble, spec.get("t", 1.0), spec.n_samples,
                                     static_cast<std::size_t>(spec.get("reference_samples", 4.0 * spec.n_samples)),
                                     spec.get("bulk_fraction", kDefaultBulkFraction), policy_of(spec), workers);
  rec.metrics.push_back(scalar("ks", r.ks, r.gaps_test, "dimensionless", "< 0.02", r.ks < 0.02));
  rec.metrics.push_back(scalar("reference_gaps", double(r.gaps_reference), r.gaps_reference, "count"));
}

void run_ou_oracle(const ExperimentSpec& spec, unsigned workers, ExperimentRecord& rec) {
  const auto r = ou_oracle_test(spec.ensemble, spec.get("t", 0.1), spec.n_samples,
                                spec.get("bulk_fraction", kDefaultBulkFraction), policy_of(spec), workers);
  rec.metrics.push_back(scalar("ks", r.ks, r.gaps_test, "dimensionless", "< 0.03", r.ks < 0.03));
}

void run_relaxation(const ExperimentSpec& spec, unsigned workers, ExperimentRecord& rec) {
  RelaxationSpeedParams p;
  p.beta = spec.ensemble.beta;
  p.n = spec.ensemble.n;
  p.seed = spec.ensemble.seed;
  p.eta = spec.get("eta", 0.1);
  p.trajectories = spec.n_samples;
  p.gap_n = static_cast<std::size_t>(spec.get("gap_order", 1.0));
  p.policy = policy_of(spec);
  p.times = spec.get_list("times", {0.0, 0.1, 0.25, 0.5, 1.0, 2.0});
  const auto r = relaxation_speed_experiment(p, workers);
  Table t{"relaxation", "t: flow time; observable: dimensionless", spec.n_samples,
          {"t", "relaxation", "relaxation_se", "dbm", "dbm_se", "equilibrium", "equilibrium_se"}, {}};
  for (std::size_t i = 0; i < r.times.size(); ++i)
    t.rows.push_back({r.times[i], r.relaxation[i].value, r.relaxation[i].se, r.dbm[i].value, r.dbm[i].se,
                      r.equilibrium.value, r.equilibrium.se});
  rec.metrics.push_back(scalar("relaxation_equilibration_time", r.relaxation_time, spec.n_samples, "flow time"));
  rec.metrics.push_back(scalar("dbm_equilibration_time", r.dbm_time, spec.n_samples, "flow time"));
  rec.metrics.push_back(scalar("eta_one_third", std::cbrt(p.eta), spec.n_samples, "flow time"));
  rec.tables.push_back(std::move(t));
}

void run_universality(const ExperimentSpec& spec, unsigned workers, ExperimentRecord& rec) {
  const auto t_flows = spec.get_list("t_flow", {0.0, 0.2});
  std::vector<std::size_t> orders;
  for (double v : spec.get_list("orders", {1.0, 2.0})) orders.push_back(static_cast<std::size_t>(v));
  const auto battery = default_gap_battery();
  const auto r = universality_experiment(spec.ensemble, t_flows, battery, orders, spec.n_samples,
                                         spec.get("bulk_fraction", kDefaultBulkFraction), workers);
  Table t{"universality", "observable: dimensionless", spec.n_samples,
          {"g", "n", "t_flow", "test", "test_se", "reference", "reference_se", "difference", "combined_se", "z"}, {}};
  double worst = 0.0;
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    const auto& row = r.rows[i];
    const double z = row.difference.z_score();
    worst = std::max(worst, std::abs(z));
    t.rows.push_back({double(i % battery.size()), double(row.n), row.t_flow, row.test.value, row.test.se,
                      row.reference.value, row.reference.se, row.difference.difference, row.difference.combined_se, z});
  }
  t.units += "; g index: 0 = " + battery[0].name + ", 1 = " + battery[1].name;
  rec.metrics.push_back(scalar("max_abs_z", worst, spec.n_samples, "combined standard errors", "<= 3", r.all_within(3.0)));
  rec.tables.push_back(std::move(t));
}

void run_entropy_decay(const ExperimentSpec& spec, ExperimentRecord& rec) {
  const auto etas = spec.get_list("eta_values", {0.05, 0.2});
  const double t_max = spec.get("t_max", 10.0);
  const auto outputs = static_cast<std::size_t>(spec.get("outputs", 101.0));
  Table t{"entropy_decay", "t: flow time; S, D: nats", 1, {"eta", "t", "S", "D", "dSdt", "mass"}, {}};
  std::vector<double> rates;
  for (double eta : etas) {
    GibbsSpec g{double(spec.ensemble.beta), 2, HamiltonianKind::omega, eta};
    auto grid = make_gap_grid(g);
    set_initial_density(grid, [](double s) { return std::exp(-2.0 * (s - 3.0) * (s - 3.0)); });
    const auto r = fokker_planck_decay(g, grid, t_max, outputs);
    for (const auto& p : r.points) t.rows.push_back({eta, p.t, p.entropy, p.dirichlet, p.production, p.mass});
    rates.push_back(r.fitted_rate);
    rec.metrics.push_back(scalar(label("rate", eta), r.fitted_rate, 1, "1/time"));
    rec.metrics.push_back(scalar(label("monotone", eta), r.monotone ? 1.0 : 0.0, 1, "flag", "== 1", r.monotone));
    rec.metrics.push_back(scalar(label("mass_error", eta), r.max_mass_error, 1, "probability", "< 1e-6", r.max_mass_error < 1e-6));
    rec.metrics.push_back(scalar(label("dissipation_mismatch", eta), r.max_dissipation_mismatch, 1, "relative"));
  }
  if (rates.size() >= 2) {
    const double ratio = rates.front() / rates.back();
    const double expect = std::cbrt(etas.back() / etas.front());
    rec.metrics.push_back(scalar("rate_ratio", ratio, 1, "dimensionless", "within 35% of " + format_number(expect),
                                 std::abs(ratio / expect - 1.0) <= 0.35));
  }
  rec.tables.push_back(std::move(t));
}

}  // namespace

ExperimentRecord run_experiment(const ExperimentSpec& spec) {
  const auto start = std::chrono::steady_clock::now();
  ExperimentRecord rec;
  rec.version = std::string(artifact_version());
  rec.kind = spec.kind;
  try {
    rec.spec_hash = spec_hash(spec);
    spec.validate();
    const unsigned workers = spec.workers ? spec.workers : default_worker_count();
    switch (spec.kind) {
      case ExperimentKind::local_law: run_local_law(spec, workers, rec); break;
      case ExperimentKind::delocalization: run_delocalization(spec, workers, rec); break;
      case ExperimentKind::repulsion: run_repulsion(spec, workers, rec); break;
      case ExperimentKind::gaps: run_gaps(spec, workers, rec); break;
      case ExperimentKind::correlation: run_correlation(spec, workers, rec); break;
      case ExperimentKind::dbm_invariance: run_dbm_invariance(spec, workers, rec); break;
      case ExperimentKind::ou_oracle: run_ou_oracle(spec, workers, rec); break;
      case ExperimentKind::relaxation: run_relaxation(spec, workers, rec); break;
      case ExperimentKind::universality: run_universality(spec, workers, rec); break;
      case ExperimentKind::entropy_decay: run_entropy_decay(spec, rec); break;
    }
    rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!spec.output.empty()) write_record(rec, spec.output);
  } catch (const ConfigError& e) {
    throw ConfigError(std::string(e.what()) + " [spec " + rec.spec_hash + "]");
  } catch (const DomainError& e) {
    throw DomainError(std::string(e.what()) + " [spec " + rec.spec_hash + "]");
  } catch (const IntegratorStiffnessError& e) {
    throw IntegratorStiffnessError(std::string(e.what()) + " [spec " + rec.spec_hash + "]", e.min_gap());
  } catch (const NumericalError& e) {
    throw NumericalError(std::string(e.what()) + " [spec " + rec.spec_hash + "]");
  } catch (const std::ios_base::failure& e) {
    throw std::runtime_error(std::string("I/O failure: ") + e.what() + " [spec " + rec.spec_hash + "]");
  }
  return rec;
}

// ---------------------------------------------------------------------------

void write_table(std::ostream& os, const Table& table, const std::string& hash) {
  os << "# table " << table.name << "\n";
  os << "# version " << artifact_version() << "\n";
  os << "# spec_hash " << hash << "\n";
  os << "# units " << table.units << "\n";
  os << "# samples " << table.samples << "\n";
  for (std::size_t c = 0; c < table.columns.size(); ++c) os << (c ? "\t" : "") << table.columns[c];
  os << "\n" << std::setprecision(17);
  for (const auto& row : table.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) os << (c ? "\t" : "") << row[c];
    os << "\n";
  }
}

void write_metrics(std::ostream& os, const ExperimentRecord& r) {
  os << "# experiment " << to_string(r.kind) << "\n";
  os << "# version " << r.version << "\n";
  os << "# spec_hash " << r.spec_hash << "\n";
  os << "# wall_seconds " << r.wall_seconds << "\n";
  os << "metric\tvalue\tse\tsamples\tunit\tcheck\tpass\n" << std::setprecision(17);
  for (const auto& m : r.metrics)
    os << m.name << "\t" << m.value << "\t" << m.se << "\t" << m.samples << "\t" << m.unit << "\t"
       << (m.check.empty() ? "-" : m.check) << "\t" << (m.check.empty() ? "-" : (m.pass ? "pass" : "fail")) << "\n";
}

void write_record(const ExperimentRecord& record, const std::string& directory) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(directory, ec);
  if (ec) throw std::ios_base::failure("cannot create '" + directory + "': " + ec.message());
  auto open = [&](const std::string& name) {
    std::ofstream f(fs::path(directory) / name);
    if (!f) throw std::ios_base::failure("cannot write '" + (fs::path(directory) / name).string() + "'");
    return f;
  };
  {
    auto f = open("metrics.tsv");
    write_metrics(f, record);
  }
  for (const auto& t : record.tables) {
    auto f = open(t.name + ".tsv");
    write_table(f, t, record.spec_hash);
  }
}

void write_spectrum_text(std::ostream& os, const Spectrum& spectrum, const EnsembleConfig& config,
                         std::uint64_t sample_index) {
  os << "# wigner-spectrum v1\n";
  os << "# version " << artifact_version() << "\n";
  os << "# beta " << config.beta << " n " << config.n << " entries " << to_string(config.entries.kind) << " seed "
     << config.seed << " sample " << sample_index << "\n";
  os << "# units: eigenvalues of H (semicircle support [-2, 2])\n";
  os << "index\teigenvalue\n" << std::setprecision(17);
  const auto e = spectrum.eigenvalues();
  for (std::size_t i = 0; i < e.size(); ++i) os << i << "\t" << e[i] << "\n";
}

std::vector<double> read_spectrum_text(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != "# wigner-spectrum v1") throw ConfigError("not a wigner-spectrum v1 file");
  std::vector<double> out;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#' || line.rfind("index", 0) == 0) continue;
    std::istringstream ls(line);
    std::size_t idx = 0;
    double v = 0.0;
    if (!(ls >> idx >> v) || idx != out.size()) throw ConfigError("malformed spectrum row: " + line);
    out.push_back(v);
  }
  return out;
}

namespace {

template <class T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}
template <class T>
T get_raw(std::istream& is) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof v)) throw ConfigError("truncated eigenvector block");
  return v;
}

}  // namespace

void write_eigenvector_binary(std::ostream& os, const Spectrum& spectrum) {
  if (!spectrum.has_vectors()) throw ConfigError("spectrum has no eigenvectors");
  os.write("WGEV", 4);
  put<std::uint32_t>(os, 1);
  put<std::uint32_t>(os, spectrum.has_complex_vectors() ? 2 : 1);
  put<std::uint64_t>(os, spectrum.size());
  if (spectrum.has_complex_vectors()) {
    for (const auto& z : spectrum.complex_vectors().storage()) {
      put(os, z.real());
      put(os, z.imag());
    }
  } else {
    for (double v : spectrum.real_vectors().storage()) put(os, v);
  }
  if (!os) throw std::ios_base::failure("eigenvector write failed");
}

Spectrum read_eigenvector_binary(std::istream& is, std::vector<double> eigenvalues) {
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, "WGEV", 4) != 0) throw ConfigError("bad eigenvector magic");
  if (get_raw<std::uint32_t>(is) != 1) throw ConfigError("unsupported eigenvector block version");
  const auto beta = get_raw<std::uint32_t>(is);
  const auto n = get_raw<std::uint64_t>(is);
  if (n != eigenvalues.size()) throw ConfigError("eigenvector block size does not match the spectrum");
  if (beta == 1) {
    RealMatrix m(n, n);
    for (auto* p = m.data(); p != m.data() + n * n; ++p) *p = get_raw<double>(is);
    return Spectrum(std::move(eigenvalues), std::move(m));
  }
  if (beta != 2) throw ConfigError("eigenvector block has invalid beta");
  ComplexMatrix m(n, n);
  for (auto* p = m.data(); p != m.data() + n * n; ++p) {
    const double re = get_raw<double>(is);
    *p = Complex(re, get_raw<double>(is));
  }
  return Spectrum(std::move(eigenvalues), std::move(m));
}

void write_trajectory(std::ostream& os, const std::vector<std::pair<double, std::vector<double>>>& checkpoints) {
  os << "# wigner-trajectory v1\n";
  os << "# version " << artifact_version() << "\n";
  os << "# units: t in flow time, positions in eigenvalue units\n";
  os << "# checkpoints " << checkpoints.size() << "\n";
  os << "t\tindex\tposition\n" << std::setprecision(17);
  for (const auto& [t, x] : checkpoints)
    for (std::size_t i = 0; i < x.size(); ++i) os << t << "\t" << i << "\t" << x[i] << "\n";
}

}  // namespace wigner
