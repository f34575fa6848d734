#pragma once

// Upstream link model: per-ONU sampling-phase offsets derived from the
// received-power difference, optical-to-electrical amplitude scaling, the
// measured bandwidth limitation as a two-path low-pass filter, and
// ROP-dependent receiver noise.

#include <cstdint>
#include <string>

#include "ponlut/txdsp.hpp"

namespace ponlut {

struct PhaseModelParams {
  double alpha_db_per_km = 0.33;
  double velocity_m_per_s = 2e8;
  double baud = 50e9;

  void validate() const;
};

struct OnuProfile {
  std::string onu_id;
  ModFormat format = ModFormat::nrz();
  double distance_km = 0.0;
  double rop_dbm = 0.0;
};

/// Phase difference (in UI) between two ONUs from their received powers:
/// the dB difference over alpha gives a fiber length whose propagation delay,
/// expressed in symbol periods, is returned. Take the result mod 1 for the
/// sampling phase.
double phase_offset_ui(double rop0_dbm, double ropi_dbm, const PhaseModelParams& p);

/// Fractional part of phase_offset_ui, in [0, 1).
double phase_offset_frac(double rop0_dbm, double ropi_dbm, const PhaseModelParams& p);

/// H(z) = w (1-p1)/(1 - p1 z^-1) + (1-w) (1-p2)/(1 - p2 z^-1), p = exp(-2 pi f / fs):
/// two impulse-invariant one-pole paths in parallel, unit gain at DC.
struct CompositeFilter {
  double weight = 1.0;   // share of the narrow path
  double pole1_hz = 0.0; // narrow path corner
  double pole2_hz = 0.0; // wide path corner
  double sample_rate = 0.0;
  FirTaps taps{Eigen::VectorXd::Ones(1), 0};

  /// Closed-form model magnitude response in dB.
  double model_response_db(double f_hz) const;
};

/// Fits a CompositeFilter with |H(f3db)| = -3 dB and |H(f10db)| = -10 dB
/// (the wide path corner is pinned at 1.6 * f10db; weight and narrow corner
/// are searched). The FIR is the truncated impulse response, centered on its
/// DC group delay. Throws FittingError if the search misses either point by
/// more than 0.1 dB or the response is not monotone up to f10db.
CompositeFilter fit_composite_model(double f3db, double f10db, double sample_rate);

/// The FIR of fit_composite_model.
FirTaps fit_composite_filter(double f3db, double f10db, double sample_rate);

struct NoiseModel {
  double sigma_thermal = 0.0;  // electrical amplitude units
  double beat_coeff = 0.0;     // amplitude^2 per linear optical power ratio (preamp only)
  double rop_ref_dbm = -28.0;  // power at which the electrical RMS equals amplitude_ref
  double amplitude_ref = 1.0;

  void validate() const;
};

struct ChannelConfig {
  double f3db = 3.8e9;
  double f10db = 18.7e9;
  CompositeFilter filter;  // fitted for the rate of the waveform it is applied to
  bool preamp = false;
  double preamp_gain_db = 12.0;
  NoiseModel noise;
  std::uint64_t rng_seed = 1;
  bool enable_noise = true;
};

/// Fits the composite filter for `sample_rate` into a ChannelConfig.
ChannelConfig make_channel_config(double sample_rate, double f3db = 3.8e9, double f10db = 18.7e9);

/// Identity-filter configuration (all-pass), for tests.
ChannelConfig make_allpass_channel_config(double sample_rate);

/// Linear optical power ratio of `rop_dbm` relative to the noise anchor.
double power_ratio(double rop_dbm, const NoiseModel& noise);

/// Noise standard deviation added by apply_link for this power.
double noise_sigma(double rop_dbm, const ChannelConfig& cfg);

/// Electrical RMS amplitude apply_link scales the signal to.
double signal_rms(double rop_dbm, const ChannelConfig& cfg);

/// Per-burst noise seed derived from (rng_seed, onu_id, burst_index).
std::uint64_t burst_seed(std::uint64_t rng_seed, const std::string& onu_id, std::uint64_t burst_index);

/// Delays `w` by `delay_ui` symbol periods (0 <= delay < 1 typical) using an
/// integer shift plus cubic interpolation; samples outside the input are zero.
Waveform fractional_delay(const Waveform& w, double delay_ui, double baud);

/// Applies, in order: the fractional sampling-phase delay of this ONU relative
/// to the reference ONU, amplitude scaling to the power-dependent RMS, the
/// composite filter, and additive white Gaussian noise.
Waveform apply_link(const Waveform& w, const OnuProfile& onu, double ref_onu_rop_dbm,
                    const ChannelConfig& cfg, const PhaseModelParams& p, std::uint64_t burst_index = 0);

}  // namespace ponlut
