#pragma once

// End-to-end burst simulation: ONU transmitter, upstream link, and the OLT
// receive pipeline in one of three LUT modes, plus the preamble search and
// Cartesian sweeps built on it.

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ponlut/channel.hpp"
#include "ponlut/lutstore.hpp"

namespace ponlut {

/// Every tunable of the simulated link. Defaults mirror the experimental setup
/// where one exists.
struct LinkParams {
  double baud = 50e9;
  int tx_sps = 4;           // internal transmitter/link oversampling
  double rolloff = 0.1;
  int rrc_span = kRrcSpan;
  double adc_rate = 80e9;   // scope capture rate; 0 skips the capture step
  double f3db = 3.8e9;
  double f10db = 18.7e9;
  PhaseModelParams phase{};
  NoiseModel noise{0.25, 0.0, -28.0, 1.0};
  bool preamp = false;
  double preamp_gain_db = 12.0;
  std::uint64_t rng_seed = 1;
  double ref_rop_dbm = -20.0;  // received power of the reference ONU
  Index guard = 64;
  double precoder_clip = 1.2;
  double precoder_noise_var = 0.01;
  Index nrz_tx_ffe = 5, nrz_tx_dfe = 1;
  Index pam4_tx_ffe = 9, pam4_tx_dfe = 3;
  CdrConfig cdr{};
  double ted_band_halfwidth = 0.02;  // cycles/sample at 2 sps; 0 disables the prefilter
  Index ted_band_half_len = 64;
  EqConfig eq_nrz = EqConfig::for_format(FormatName::NRZ);
  EqConfig eq_pam4 = EqConfig::for_format(FormatName::PAM4);
  double nrz_launch_dbm = 4.0;
  double pam4_launch_dbm = 8.0;

  const EqConfig& eq_for(FormatName f) const { return f == FormatName::NRZ ? eq_nrz : eq_pam4; }
};

struct TruthCache;

/// Per-format precomputed transmit/receive chain.
class LinkChain {
 public:
  LinkChain(FormatName format, const LinkParams& params);

  const ModFormat& format() const noexcept { return format_; }
  const LinkParams& params() const noexcept { return params_; }
  const ChannelConfig& channel() const noexcept { return channel_; }
  /// Symbol-spaced response of shaping + link filter + receive resampling.
  const FirTaps& symbol_channel() const noexcept { return symbol_channel_; }
  /// Peak-normalized transmitter pre-emphasis taps.
  const TapSet& precoder() const noexcept { return precoder_; }
  CdrConfig cdr_config() const;
  EqConfig eq_config() const { return params_.eq_for(format_.name()); }
  double link_rate() const noexcept { return params_.baud * params_.tx_sps; }

  /// Content symbols -> link-rate waveform with `guard` zero symbols each side.
  Waveform transmit(const SymbolSeq& symbols) const;
  /// Link-rate waveform -> 2 samples/symbol, RMS-normalized, starting
  /// kLeadSymbols before the first content symbol.
  Waveform receive_front_end(const Waveform& link_out) const;
  /// CDR output index of content symbol 0 before accounting for link delay.
  Index nominal_offset() const noexcept { return kLeadSymbols - 1; }

  /// Noise-free Gardner equilibrium phase for `onu` (ground truth).
  double truth_phase(const OnuProfile& onu) const;

  /// Known transmit symbols and received 2-sps waveform for one burst.
  struct Burst {
    SymbolSeq symbols;
    BitStream bits;
    Waveform rx;
  };
  Burst simulate(const OnuProfile& onu, Index n_symbols, std::uint64_t seed, bool noise = true) const;

  static constexpr Index kLeadSymbols = 16;

 private:
  ModFormat format_;
  LinkParams params_;
  ChannelConfig channel_;
  FirTaps symbol_channel_{Eigen::VectorXd::Ones(1), 0};
  TapSet precoder_;
  std::shared_ptr<TruthCache> cache_;
};

/// Deterministic 15-bit nonzero PRBS seed from a burst seed.
std::uint32_t prbs_seed(std::uint64_t seed);

/// Canonical ONU id for a (format, distance, power) cell, e.g. "NRZ_d40_r-28".
std::string canonical_onu_id(FormatName format, double distance_km, double rop_dbm);

/// ONU whose received power follows from the format's launch power and the
/// fiber loss (alpha * distance) plus `extra_loss_db`.
OnuProfile onu_from_distance(FormatName format, double distance_km, const LinkParams& params,
                             double extra_loss_db = 0.0);

struct BurstPlan {
  OnuProfile onu;
  Index preamble_len = 0;
  Index payload_len = 100000;
  std::uint64_t seed = 1;
};

enum class RxMode { NoLut, TapsLut, FullLut };

std::string_view to_string(RxMode mode);
RxMode parse_mode(std::string_view text);

struct BurstResult {
  double ber = 0.0;
  std::size_t errors = 0;
  std::size_t bits = 0;
  std::optional<Index> lock_index;
  bool eq_converged = false;
  RxMode mode = RxMode::NoLut;

  friend bool operator==(const BurstResult&, const BurstResult&) = default;
};

/// Transmits preamble + payload, runs CDR (initial phase 0.5 UI from the
/// truth in NoLut/TapsLut, the LUT phase in FullLut) and the equalizer (cold
/// in NoLut, LUT taps otherwise, training confined to the preamble), and
/// counts payload bit errors. Throws ConfigError when a LUT mode lacks its
/// entries.
BurstResult run_burst(const BurstPlan& plan, RxMode mode, const LutStore& store, const LinkChain& chain);

/// Builds both LUT entries for `onu` from one noisy training burst.
std::pair<PhaseLutEntry, TapsLutEntry> train_onu(const OnuProfile& onu, const LinkChain& chain,
                                                 Index training_len = 20000, std::uint64_t seed = 0x5EED,
                                                 std::uint64_t measured_at = 0);

struct MinPreambleOptions {
  double target_ber_ratio = 1.25;
  Index baseline_preamble = 5000;
  Index max_preamble = 10000;
  Index resolution = 50;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
};

struct MinPreambleReport {
  Index min_preamble = 0;
  double baseline_ber = 0.0;
  double achieved_ber = 0.0;
};

/// Smallest preamble (multiple of `resolution`) whose pooled payload BER over
/// the seeds is at most target_ber_ratio x the NoLut long-preamble baseline.
/// Throws BaselineError("baseline unresolved; increase payload") if the baseline has
/// no errors.
MinPreambleReport min_preamble(const BurstPlan& plan_template, RxMode mode, const LutStore& store,
                               const LinkChain& chain, const MinPreambleOptions& opts = {});

struct SweepGrid {
  std::vector<FormatName> formats;
  std::vector<double> distances_km;
  std::vector<double> rops_dbm;
  std::vector<Index> preambles;
  std::vector<RxMode> modes;
  std::vector<std::uint64_t> seeds;
  Index payload_len = 100000;
};

struct SweepRow {
  FormatName format = FormatName::NRZ;
  RxMode mode = RxMode::NoLut;
  double distance_km = 0.0;
  double rop_dbm = 0.0;
  Index preamble_len = 0;
  std::uint64_t seed = 0;
  BurstResult result;

  friend bool operator==(const SweepRow&, const SweepRow&) = default;
};

/// Orders rows by (format, mode, distance, rop, preamble, seed).
bool row_less(const SweepRow& a, const SweepRow& b);

/// One run_burst per grid cell per seed, rows sorted canonically. `chains`
/// must provide a chain for every format in the grid. Cells are independent;
/// `threads` > 1 runs them concurrently with identical output.
std::vector<SweepRow> sweep(const SweepGrid& grid, const std::function<const LinkChain&(FormatName)>& chains,
                            const LutStore& store, unsigned threads = 1);

}  // namespace ponlut
