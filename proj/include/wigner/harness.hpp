#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "wigner/ensembles.hpp"
#include "wigner/spectral.hpp"

namespace wigner {

inline constexpr int kSchemaVersion = 1;

/// Artifact version, e.g. "0.1.0+g1a2b3c4".
std::string_view artifact_version() noexcept;

enum class ExperimentKind {
  local_law,
  delocalization,
  repulsion,
  gaps,
  correlation,
  dbm_invariance,
  ou_oracle,
  relaxation,
  universality,
  entropy_decay,
};
std::string_view to_string(ExperimentKind kind) noexcept;
ExperimentKind parse_experiment_kind(std::string_view name);

/// Serializable experiment description. Kind-specific parameters live in
/// `params` and are checked against the kind's schema by validate().
struct ExperimentSpec {
  int schema_version = kSchemaVersion;
  ExperimentKind kind = ExperimentKind::local_law;
  EnsembleConfig ensemble{};
  std::size_t n_samples = 0;
  unsigned workers = 0;  // 0: default_worker_count()
  std::string output;    // directory for result files; empty: none
  std::map<std::string, std::string> params;

  void validate() const;
  [[nodiscard]] double get(const std::string& key, double fallback) const;
  [[nodiscard]] std::vector<double> get_list(const std::string& key, std::vector<double> fallback) const;
};

/// key = value lines, '#' comments. Throws ConfigError on malformed input.
ExperimentSpec parse_spec(std::string_view text);
ExperimentSpec load_spec(const std::string& path);
/// Canonical text form; parse_spec(serialize_spec(s)) reproduces s.
std::string serialize_spec(const ExperimentSpec& spec);
/// FNV-1a of the canonical form without the worker count and output path,
/// which do not affect results.
std::string spec_hash(const ExperimentSpec& spec);

struct Metric {
  std::string name;
  double value = 0.0;
  double se = 0.0;
  std::size_t samples = 0;
  std::string unit;
  std::string check;  // declared tolerance, empty if informational
  bool pass = true;
};

struct Table {
  std::string name;
  std::string units;
  std::size_t samples = 0;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

struct ExperimentRecord {
  std::string spec_hash;
  std::string version;
  ExperimentKind kind = ExperimentKind::local_law;
  double wall_seconds = 0.0;
  std::vector<Metric> metrics;
  std::vector<Table> tables;
  [[nodiscard]] bool passed() const noexcept;
};

/// Dispatches to the owning module and writes the record when spec.output is
/// set. Errors are rethrown with the spec hash in the message, keeping the type.
ExperimentRecord run_experiment(const ExperimentSpec& spec);

// ---------------------------------------------------------------------------
// Result files

void write_table(std::ostream& os, const Table& table, const std::string& hash);
void write_metrics(std::ostream& os, const ExperimentRecord& record);
/// metrics.tsv plus one <table>.tsv per table in `directory` (created if needed).
void write_record(const ExperimentRecord& record, const std::string& directory);

/// "# wigner-spectrum v1" header, then index/eigenvalue rows.
void write_spectrum_text(std::ostream& os, const Spectrum& spectrum, const EnsembleConfig& config,
                         std::uint64_t sample_index);
std::vector<double> read_spectrum_text(std::istream& is);

/// Little-endian block: "WGEV", u32 version, u32 beta, u64 N, then the
/// eigenvectors row by row (doubles, or re/im pairs for beta = 2).
void write_eigenvector_binary(std::ostream& os, const Spectrum& spectrum);
Spectrum read_eigenvector_binary(std::istream& is, std::vector<double> eigenvalues);

/// "# wigner-trajectory v1" header, then time/index/position rows.
void write_trajectory(std::ostream& os, const std::vector<std::pair<double, std::vector<double>>>& checkpoints);

}  // namespace wigner
