#pragma once

// Feedback clock/data recovery: Gardner timing-error detector, PI loop filter,
// numerically controlled phase and cubic interpolator, with an injectable
// starting phase and the consecutive-symbol lock criterion.

#include <optional>
#include <vector>

#include "ponlut/dspcore.hpp"

namespace ponlut {

struct CdrConfig {
  int sps = 2;
  double kp = 8e-3;
  double ki = 6e-5;
  Index lock_window = 200;
  double lock_thresh_ui = 0.04;
  Index max_symbols = Index{1} << 26;
  /// Mean symbol energy used to normalize the detector output (1 for NRZ, 5/9 for PAM4).
  double symbol_energy = 1.0;
  /// Optional linear-phase filter (odd length, centered) applied to the
  /// detector's view of the waveform only; strobe outputs stay unfiltered.
  Eigen::VectorXd ted_prefilter;

  void validate() const;
};

/// Hamming-windowed band-pass centered on half the symbol rate (a quarter of
/// the 2-sps sample rate), `half_width` in cycles/sample, 2*half_len+1 taps.
Eigen::VectorXd band_edge_prefilter(double half_width, Index half_len);

struct CdrTrace {
  std::vector<double> phase_ui;   // wrapped to [0, 1), one per emitted symbol
  std::vector<double> ted_error;  // detector output per symbol
  std::optional<Index> lock_index;
  /// Unwrapped loop phase after the last symbol (integer part = net cycle carry).
  double final_phase_unwrapped = 0.0;
};

struct CdrResult {
  Eigen::VectorXd samples;  // one strobe per symbol
  CdrTrace trace;
};

/// Wraps x into [0, 1).
double wrap_ui(double x);

/// Shortest distance between two phases on the unit circle, in [0, 0.5].
double phase_distance_ui(double a, double b);

/// Circular mean of phases in [0, 1).
double circular_mean_ui(std::span<const double> phases);

/// Runs the loop over a 2-samples-per-symbol waveform. Symbol n is strobed at
/// sample position 2 * (n + 1 + phase), its midpoint one sample earlier:
///
///   e[n]   = mid[n] * (y[n] - y[n-1]) / symbol_energy
///   f     += ki * e[n]
///   phase -= kp * e[n] + f
///
/// Throws ParameterError for a waveform shorter than 4 * sps samples.
CdrResult cdr_run(const Waveform& w, const CdrConfig& cfg, double initial_phase_ui);

/// Strobe and midpoint samples at a fixed phase (open loop), same sample
/// convention as cdr_run.
Eigen::VectorXd strobe_samples(const Waveform& w, double phase_ui);

/// Mean Gardner output at a fixed phase (open loop), for S-curve analysis.
double mean_ted_at_phase(const Waveform& w, double phase_ui, double symbol_energy);

/// First symbol count n >= lock_window such that the phase error of symbols
/// [n - lock_window, n) is below lock_thresh_ui. The reference is
/// `truth_phase_ui` when given, else the circular mean of the trace's last
/// lock_window phases.
std::optional<Index> detect_lock(const CdrTrace& trace, std::optional<double> truth_phase_ui,
                                 const CdrConfig& cfg);

/// cdr_run followed by detect_lock against the true phase; cfg.max_symbols
/// when the loop never locks.
Index lock_time_symbols(const Waveform& w, const CdrConfig& cfg, double initial_phase_ui,
                        double truth_phase_ui);

}  // namespace ponlut
