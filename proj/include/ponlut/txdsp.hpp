#pragma once

// Per-ONU transmitter: bit-to-symbol mapping, FFE/DFE pre-emphasis and RRC
// pulse shaping.

#include <array>
#include <string>
#include <string_view>

#include "ponlut/dspcore.hpp"

namespace ponlut {

enum class FormatName { NRZ, PAM4 };

std::string_view to_string(FormatName name);
/// Accepts "NRZ"/"PAM4" in any letter case.
FormatName parse_format(std::string_view text);

/// Intensity-modulation format with unit-peak amplitude levels in ascending order.
class ModFormat {
 public:
  static ModFormat nrz();
  static ModFormat pam4();
  static ModFormat from_name(FormatName name);

  FormatName name() const noexcept { return name_; }
  int bits_per_symbol() const noexcept { return bits_per_symbol_; }
  std::span<const double> levels() const noexcept { return {levels_.data(), num_levels()}; }
  std::size_t num_levels() const noexcept { return std::size_t{1} << bits_per_symbol_; }
  /// Distance between adjacent levels.
  double spacing() const noexcept { return 2.0 / static_cast<double>(num_levels() - 1); }
  /// Mean of level^2 for equiprobable symbols.
  double mean_energy() const noexcept;

  /// Gray label of level `index` (MSB first), e.g. PAM4 index 2 -> 0b11.
  unsigned gray_label(std::size_t index) const noexcept;
  /// Inverse of gray_label.
  std::size_t level_index(unsigned label) const noexcept;

  friend bool operator==(const ModFormat& a, const ModFormat& b) noexcept { return a.name_ == b.name_; }

 private:
  ModFormat(FormatName name, int bps, std::array<double, 4> levels)
      : name_(name), bits_per_symbol_(bps), levels_(levels) {}

  FormatName name_;
  int bits_per_symbol_;
  std::array<double, 4> levels_;
};

/// Symbol-rate amplitude sequence. Mapped sequences lie on the level grid;
/// pre-emphasized ones need not.
struct SymbolSeq {
  Eigen::VectorXd symbols;
  ModFormat format = ModFormat::nrz();
  double baud = 50e9;

  Index size() const noexcept { return symbols.size(); }
};

/// FFE + DFE coefficient set. ffe[ffe_center] is the tap aligned with the
/// current symbol; dfe[j] weights the decision j+1 symbols in the past.
struct TapSet {
  Eigen::VectorXd ffe;
  Index ffe_center = 0;
  Eigen::VectorXd dfe;

  /// Unit-impulse FFE centered at (n_ffe-1)/2 and zero DFE.
  static TapSet identity(Index n_ffe, Index n_dfe);
  /// Throws ParameterError when the invariants do not hold.
  void validate() const;

  friend bool operator==(const TapSet& a, const TapSet& b) {
    return a.ffe_center == b.ffe_center && a.ffe.size() == b.ffe.size() && a.dfe.size() == b.dfe.size() &&
           a.ffe == b.ffe && a.dfe == b.dfe;
  }
};

/// NRZ: 0 -> -1, 1 -> +1. PAM4 (Gray): 00 -> -1, 01 -> -1/3, 11 -> +1/3, 10 -> +1.
/// Throws FramingError when the bit count is not a whole number of symbols.
SymbolSeq map_symbols(const BitStream& bits, const ModFormat& format, double baud = 50e9);

/// MMSE FFE/DFE for a symbol-spaced channel, to be used as a transmitter precoder.
TapSet design_preemphasis(const FirTaps& channel, double noise_var, Index n_ffe, Index n_dfe);

/// Scales the FFE so the precoder's impulse response (FFE followed by the DFE
/// recursion) has unit l1 norm; the precoded output of a unit-peak symbol
/// stream then never exceeds 1.
TapSet normalize_precoder_peak(const TapSet& taps);

/// out[n] = clamp(sum_k ffe[k] s[n-k+center] - sum_j dfe[j] out[n-1-j], +-clip)
SymbolSeq pre_emphasize(const SymbolSeq& s, const TapSet& taps, double clip);

/// Zero-insertion upsampling to `sps` followed by RRC filtering.
/// Output sample rate is baud * sps; symbol n sits at sample n * sps.
Waveform shape(const SymbolSeq& s, int sps, double rolloff, int span = kRrcSpan);

}  // namespace ponlut
