#pragma once

// Per-ONU phase and equalizer-tap look-up tables: construction from a
// training burst, exact-key retrieval and the `PONLUT v1` text format.
//
//   PONLUT v1
//   phase <onu_id> <phase_ui> at=<burst>
//   taps <onu_id> <format> ffe=<c0,c1,...> dfe=<d0,...> center=<k> at=<burst>
//
// Numbers are written as shortest round-trip decimals.

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>

#include "ponlut/cdr.hpp"
#include "ponlut/channel.hpp"
#include "ponlut/equalizer.hpp"

namespace ponlut {

struct PhaseLutEntry {
  std::string onu_id;
  double phase_ui = 0.0;
  std::uint64_t measured_at = 0;

  friend bool operator==(const PhaseLutEntry&, const PhaseLutEntry&) = default;
};

struct TapsLutEntry {
  std::string onu_id;
  FormatName format = FormatName::NRZ;
  TapSet taps;
  std::uint64_t measured_at = 0;

  friend bool operator==(const TapsLutEntry&, const TapsLutEntry&) = default;
};

inline constexpr std::string_view kLutHeader = "PONLUT v1";

class LutStore {
 public:
  /// Inserts or replaces (last writer wins).
  void put(PhaseLutEntry entry);
  void put(TapsLutEntry entry);

  std::optional<double> lookup_phase(const std::string& onu_id) const;
  std::optional<TapSet> lookup_taps(const std::string& onu_id, FormatName format) const;

  const std::map<std::string, PhaseLutEntry>& phase_entries() const noexcept { return phase_; }
  const std::map<std::pair<std::string, FormatName>, TapsLutEntry>& taps_entries() const noexcept {
    return taps_;
  }
  bool empty() const noexcept { return phase_.empty() && taps_.empty(); }

  friend bool operator==(const LutStore&, const LutStore&) = default;

 private:
  std::map<std::string, PhaseLutEntry> phase_;
  std::map<std::pair<std::string, FormatName>, TapsLutEntry> taps_;
};

std::optional<double> lookup_phase(const LutStore& store, const std::string& onu_id);
std::optional<TapSet> lookup_taps(const LutStore& store, const std::string& onu_id, FormatName format);

/// Serializes to the PONLUT v1 text form (entries in key order).
std::string to_text(const LutStore& store);
/// Parses PONLUT v1 text. Throws ParseError (with line number) or
/// ParseError("unsupported LUT version") on a foreign header.
LutStore from_text(const std::string& text);

/// Throws Error on I/O failure.
void save(const LutStore& store, const std::filesystem::path& path);
LutStore load(const std::filesystem::path& path);

/// Receiver input for LUT construction: a burst at 2 samples per symbol with
/// its known training symbols. Symbol k of `symbols` is expected near CDR
/// output index k + nominal_offset.
struct TrainingBurst {
  Waveform waveform;
  SymbolSeq symbols;
  Index nominal_offset = 0;
};

/// Cold-start CDR (phase 0) and cold-start LMS trained over the whole burst.
/// Records the converged CDR phase (circular mean over the final lock window)
/// and the final taps. Throws TrainingError("phase training failed") when the
/// loop does not lock and TrainingError("taps training failed") when the
/// equalizer does not converge.
std::pair<PhaseLutEntry, TapsLutEntry> build_entry(const TrainingBurst& burst, const OnuProfile& onu,
                                                   const CdrConfig& cdr_cfg, const EqConfig& eq_cfg,
                                                   std::uint64_t measured_at = 0);

/// Equalizer input for `symbols.size()` symbols taken from CDR output at
/// the given offset (zero outside the CDR output).
Eigen::VectorXd slice_symbols(const Eigen::VectorXd& cdr_samples, Index offset, Index count);

}  // namespace ponlut
