// wignerlab: command-line front end for the random-matrix lab.
#include <CLI11.hpp>

#include <fstream>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>

#include "wigner/acceptance.hpp"
#include "wigner/errors.hpp"
#include "wigner/harness.hpp"
#include "wigner/parallel.hpp"
#include "wigner/spectral.hpp"

namespace {

constexpr int kExitPass = 0;
constexpr int kExitFail = 1;
constexpr int kExitUsage = 2;
constexpr int kExitNumerical = 3;

struct EnsembleArgs {
  int beta = 1;
  std::size_t n = 100;
  std::string entries = "gaussian";
  std::uint64_t seed = 0;
  std::uint64_t index = 0;

  void attach(CLI::App* app) {
    app->add_option("--beta", beta, "Symmetry class: 1 (real symmetric) or 2 (complex hermitian)")->capture_default_str();
    app->add_option("-n,--size", n, "Matrix size N")->capture_default_str();
    app->add_option("--entries", entries, "gaussian | rademacher | uniform | laplace")->capture_default_str();
    app->add_option("--seed", seed, "Ensemble seed")->capture_default_str();
    app->add_option("--index", index, "Sample index within the ensemble")->capture_default_str();
  }
  [[nodiscard]] wigner::EnsembleConfig config() const {
    wigner::EnsembleConfig c{beta, n, wigner::EntryDistribution{wigner::parse_entry_kind(entries)}, seed};
    c.validate();
    return c;
  }
};

std::ostream& open_or_stdout(const std::string& path, std::ofstream& file) {
  if (path.empty() || path == "-") return std::cout;
  file.open(path, std::ios::binary);
  if (!file) throw std::runtime_error("cannot write '" + path + "'");
  return file;
}

std::set<int> parse_ids(const std::string& list) {
  std::set<int> ids;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      ids.insert(std::stoi(item));
    } catch (const std::exception&) {
      throw wigner::ConfigError("bad criterion id '" + item + "'");
    }
  }
  return ids;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"wignerlab: Wigner ensembles, local spectral statistics and Dyson Brownian motion"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(wigner::artifact_version()));

  EnsembleArgs sample_args;
  std::string sample_out;
  auto* sample = app.add_subcommand("sample", "Draw one Wigner matrix and write its upper triangle");
  sample_args.attach(sample);
  sample->add_option("-o,--output", sample_out, "Output file (default stdout)");

  EnsembleArgs spec_args;
  std::string spectrum_out, vectors_out;
  auto* spectrum = app.add_subcommand("spectrum", "Eigenvalues (and optionally eigenvectors) of one sample");
  spec_args.attach(spectrum);
  spectrum->add_option("-o,--output", spectrum_out, "Eigenvalue file (default stdout)");
  spectrum->add_option("--vectors", vectors_out, "Write eigenvectors to this binary file");

  auto* experiment = app.add_subcommand("experiment", "Experiment runner");
  experiment->require_subcommand(1);
  std::string spec_path, exp_output;
  unsigned exp_workers = 0;
  auto* run = experiment->add_subcommand("run", "Run an experiment spec file");
  run->add_option("spec", spec_path, "Spec file (key = value lines)")->required();
  run->add_option("-o,--output", exp_output, "Result directory (overrides the spec)");
  run->add_option("-w,--workers", exp_workers, "Worker threads (overrides the spec)");

  std::string tier_name, only_list;
  unsigned acc_workers = 0;
  auto* accept = app.add_subcommand("accept", "Run the acceptance battery");
  accept->add_option("tier", tier_name, "quick | full")->required();
  accept->add_option("--only", only_list, "Comma-separated criterion ids");
  accept->add_option("-w,--workers", acc_workers, "Worker threads");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitPass : kExitUsage;
  }

  try {
    if (*sample) {
      const auto cfg = sample_args.config();
      const auto h = wigner::sample_wigner(cfg, sample_args.index);
      std::ofstream file;
      std::ostream& os = open_or_stdout(sample_out, file);
      os << "# wigner-matrix v1\n# version " << wigner::artifact_version() << "\n";
      os << "# beta " << cfg.beta << " n " << cfg.n << " entries " << wigner::to_string(cfg.entries.kind) << " seed "
         << cfg.seed << " sample " << sample_args.index << "\n";
      os << "# fingerprint " << std::hex
         << (h.beta() == 1 ? wigner::fingerprint(h.real()) : wigner::fingerprint(h.complex())) << std::dec << "\n";
      os << "i\tj\tre\tim\n" << std::setprecision(17);
      for (std::size_t i = 0; i < cfg.n; ++i)
        for (std::size_t j = i; j < cfg.n; ++j) {
          const auto z = h.entry(i, j);
          os << i << "\t" << j << "\t" << z.real() << "\t" << z.imag() << "\n";
        }
      return kExitPass;
    }
    if (*spectrum) {
      const auto cfg = spec_args.config();
      const auto sp = wigner::eigen_decompose(wigner::sample_wigner(cfg, spec_args.index), !vectors_out.empty());
      std::ofstream file;
      wigner::write_spectrum_text(open_or_stdout(spectrum_out, file), sp, cfg, spec_args.index);
      if (!vectors_out.empty()) {
        std::ofstream vf(vectors_out, std::ios::binary);
        if (!vf) throw std::runtime_error("cannot write '" + vectors_out + "'");
        wigner::write_eigenvector_binary(vf, sp);
      }
      return kExitPass;
    }
    if (*run) {
      auto spec = wigner::load_spec(spec_path);
      if (!exp_output.empty()) spec.output = exp_output;
      if (exp_workers) spec.workers = exp_workers;
      const auto rec = wigner::run_experiment(spec);
      wigner::write_metrics(std::cout, rec);
      return rec.passed() ? kExitPass : kExitFail;
    }
    if (*accept) {
      const auto tier = wigner::parse_tier(tier_name);
      const auto only = parse_ids(only_list);
      const unsigned workers = acc_workers ? acc_workers : wigner::default_worker_count();
      std::cout << "acceptance tier " << wigner::to_string(tier) << ", version " << wigner::artifact_version() << ", "
                << workers << " worker(s)" << std::endl;
      const auto summary = wigner::acceptance_suite(tier, std::cout, workers, only);
      const auto failed = summary.failures();
      std::cout << summary.results.size() - failed.size() << " passed, " << failed.size() << " failed";
      if (!failed.empty()) {
        std::cout << " (criteria";
        for (int id : failed) std::cout << " " << id;
        std::cout << ")";
      }
      std::cout << std::endl;
      return failed.empty() ? kExitPass : kExitFail;
    }
  } catch (const wigner::ConfigError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const wigner::DomainError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const wigner::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
  return kExitUsage;
}
