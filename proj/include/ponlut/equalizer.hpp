#pragma once

// Symbol-spaced adaptive FFE/DFE (LMS), its closed-form MMSE counterpart, and
// hard decisions.

#include <optional>
#include <vector>

#include "ponlut/txdsp.hpp"

namespace ponlut {

enum class EqMode { ColdStart, WarmStart };

struct EqConfig {
  Index n_ffe = 15;
  Index n_dfe = 3;
  double mu_ffe = 2e-3;
  double mu_dfe = 2e-3;
  /// Symbols at the head of the sequence that use the reference as the desired value.
  Index train_len = 0;
  EqMode mode = EqMode::ColdStart;
  /// Keep adapting in decision-directed mode after training; false freezes the taps.
  bool adapt_after_training = true;

  /// Equalizer sizes and step sizes used for `format` (15FFE&3DFE / 31FFE&3DFE).
  static EqConfig for_format(FormatName format);
  void validate() const;
};

struct EqTrace {
  std::vector<double> mse_per_symbol;
  TapSet final_taps;
  bool converged = false;
};

struct EqResult {
  Eigen::VectorXd output;  // equalizer output before the slicer
  SymbolSeq decisions;
  std::vector<std::uint8_t> level_index;  // index into format.levels() per symbol
  EqTrace trace;
};

/// Mean squared error (over the last 200 symbols) below which the run counts
/// as converged: 0.1 of the level spacing squared.
double convergence_threshold(const ModFormat& format);

/// Runs the FFE/DFE over `samples`. For n < train_len the desired symbol is
/// reference[n]; afterwards it is the slicer decision. Samples outside the
/// sequence are zero.
///
///   y[n] = sum_k ffe[k] x[n-k+center] - sum_j dfe[j] d[n-1-j]
///   ffe += mu_ffe e x_window,  dfe -= mu_dfe e d_window,  e = d - y
EqResult lms_equalize(const Eigen::VectorXd& samples, const EqConfig& cfg, const TapSet& init,
                      const SymbolSeq& reference, const ModFormat& format);

/// Finite-length MMSE FFE/DFE for a symbol-spaced channel driven by
/// unit-variance i.i.d. symbols plus white noise of variance `noise_var`.
/// FFE and DFE taps are solved jointly (the DFE sees past symbols); when the
/// optimum is not unique (noise-free, perfectly equalizable channels) the
/// minimum-norm [ffe; dfe] is returned. Throws NumericalError when the system
/// has no usable rank.
TapSet wiener_taps(const FirTaps& channel, double noise_var, Index n_ffe, Index n_dfe);

/// Theoretical MSE of `taps` on `channel` under the wiener_taps model.
double wiener_mse(const FirTaps& channel, double noise_var, const TapSet& taps);

struct Decision {
  double level;
  std::size_t index;
  unsigned bits;  // Gray label, MSB first, format.bits_per_symbol() wide
};

/// Nearest level (ties resolve to the lower level) and its Gray bits.
Decision decide(double value, const ModFormat& format);

/// Appends the Gray bits of each level index to `out`.
void append_bits(const std::vector<std::uint8_t>& level_index, const ModFormat& format, BitStream& out);

/// Offset j maximizing sum_n samples[n + j] * reference[n] over the last half
/// of `reference`, searched in [center - max_offset, center + max_offset].
Index best_alignment(const Eigen::VectorXd& samples, const Eigen::VectorXd& reference, Index center,
                     Index max_offset);

}  // namespace ponlut
