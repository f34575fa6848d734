#pragma once

// Batch front-end: experiment configuration, LUT builds, sweeps and the
// preamble search, with byte-deterministic CSV / PONLUT output.

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ponlut/burstline.hpp"

namespace ponlut {

/// One ONU of an explicit population.
struct OnuSpec {
  FormatName format = FormatName::NRZ;
  double distance_km = 0.0;
  double rop_dbm = 0.0;

  friend bool operator==(const OnuSpec&, const OnuSpec&) = default;
};

struct ExperimentConfig {
  LinkParams link;
  // grid axes
  std::vector<FormatName> formats{FormatName::NRZ};
  std::vector<double> distances_km{20.0};
  std::vector<double> rops_dbm{-28.0};
  std::vector<double> nrz_rops_dbm;   // overrides rops_dbm for NRZ when nonempty
  std::vector<double> pam4_rops_dbm;  // overrides rops_dbm for PAM4 when nonempty
  std::vector<Index> preambles{0, 5000};
  std::vector<RxMode> modes{RxMode::NoLut, RxMode::TapsLut, RxMode::FullLut};
  std::vector<std::uint64_t> seeds{1, 2, 3};
  Index payload_len = 100000;
  Index ber_preamble = 5000;  // preamble of the ber-vs-rop sweep
  // LUT construction
  std::optional<std::vector<OnuSpec>> population;  // derived from the grid when absent
  Index training_len = 20000;
  std::uint64_t training_seed = 0x5EED;
  MinPreambleOptions min_preamble{};

  const std::vector<double>& rops_for(FormatName f) const;
  /// Explicit population, or one ONU per (format, distance, rop) grid cell.
  std::vector<OnuSpec> onus() const;
};

/// Parses the INI-style text form. Unknown sections or keys are errors.
/// Throws ConfigError.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

/// Every setting in canonical `section.key=value` form, one per line.
std::string resolved_config(const ExperimentConfig& cfg);
/// FNV-1a 64 of resolved_config(cfg), 16 hex digits.
std::string config_hash(const ExperimentConfig& cfg);

enum class SweepKind { BerVsPreamble, LockVsRop, BerVsRop };
std::string_view to_string(SweepKind kind);
SweepKind parse_sweep_kind(std::string_view text);

/// Expands the configuration into per-format sweep grids for `kind`.
std::vector<SweepGrid> sweep_grids(const ExperimentConfig& cfg, SweepKind kind);

inline constexpr std::string_view kCsvHeader =
    "format,mode,distance_km,rop_dbm,preamble_len,seed,ber,errors,bits,lock_index,eq_converged";

/// Header, one line per row, then `# key=value` metadata lines.
std::string to_csv(const std::vector<SweepRow>& rows, const ExperimentConfig& cfg, SweepKind kind);

/// Builds the LUT for the configured population.
LutStore build_lut(const ExperimentConfig& cfg, std::ostream* log = nullptr);

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitUsage = 2,
  kExitConfig = 3,
  kExitIo = 4,
  kExitTraining = 5,
  kExitBaseline = 6,
};

/// Entry point of the `ponlut` tool; returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ponlut
