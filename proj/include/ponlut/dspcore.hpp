#pragma once

// Foundational signal containers and numeric kernels shared by every stage
// of the link: PRBS generation, FIR filtering, RRC design, cubic
// interpolation, band-limited resampling and bit-error counting.

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ponlut/error.hpp"

namespace ponlut {

using Index = Eigen::Index;

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Uniformly sampled real signal with an explicit sample rate in Hz.
template <typename Scalar>
class BasicWaveform {
 public:
  using Vector = VectorX<Scalar>;

  BasicWaveform(Vector samples, double sample_rate)
      : samples_(std::move(samples)), sample_rate_(sample_rate) {
    if (!(sample_rate_ > 0.0) || !std::isfinite(sample_rate_))
      throw ParameterError("waveform sample rate must be positive and finite");
    if (!samples_.allFinite()) throw ParameterError("waveform samples must be finite");
  }

  const Vector& samples() const noexcept { return samples_; }
  Vector& samples() noexcept { return samples_; }
  double sample_rate() const noexcept { return sample_rate_; }
  Index size() const noexcept { return samples_.size(); }
  Scalar operator[](Index i) const { return samples_[i]; }

 private:
  Vector samples_;
  double sample_rate_;
};

using Waveform = BasicWaveform<double>;

/// FIR coefficients plus the tap that is aligned with the output sample.
template <typename Scalar>
class BasicFirTaps {
 public:
  using Vector = VectorX<Scalar>;

  BasicFirTaps(Vector coefficients, Index center_index)
      : coefficients_(std::move(coefficients)), center_index_(center_index) {
    if (coefficients_.size() == 0) throw ParameterError("FIR taps must be nonempty");
    if (center_index_ < 0 || center_index_ >= coefficients_.size())
      throw ParameterError("FIR center index out of range");
    if (!coefficients_.allFinite()) throw ParameterError("FIR coefficients must be finite");
  }

  const Vector& coefficients() const noexcept { return coefficients_; }
  Index center_index() const noexcept { return center_index_; }
  Index size() const noexcept { return coefficients_.size(); }
  Scalar operator[](Index i) const { return coefficients_[i]; }

 private:
  Vector coefficients_;
  Index center_index_;
};

using FirTaps = BasicFirTaps<double>;

/// Sequence of bits, each 0 or 1.
struct BitStream {
  std::vector<std::uint8_t> bits;

  std::size_t size() const noexcept { return bits.size(); }
  bool empty() const noexcept { return bits.empty(); }
  std::uint8_t operator[](std::size_t i) const { return bits[i]; }
  friend bool operator==(const BitStream&, const BitStream&) = default;
};

/// PRBS15 (x^15 + x^14 + 1, Fibonacci form, MSB first) starting from `seed`.
/// Throws ParameterError("degenerate LFSR seed") for seed 0.
BitStream prbs15(std::uint32_t seed, std::size_t n);

/// Root-raised-cosine taps, `span` symbols long at `sps` samples per symbol,
/// normalized to unit energy. The analytic limits are used at t = 0 and
/// t = +-1/(4 rolloff).
FirTaps rrc_taps(double rolloff, int sps, int span);

/// Default RRC span in symbols.
inline constexpr int kRrcSpan = 64;

/// Linear convolution aligned on the taps' center; output length equals
/// input length and samples beyond either edge are zero.
///
/// y[i] = sum_k c[k] * x[i + center - k]
template <typename Scalar>
BasicWaveform<Scalar> fir_same(const BasicWaveform<Scalar>& w, const BasicFirTaps<Scalar>& taps) {
  const auto& x = w.samples();
  const auto& c = taps.coefficients();
  const Index n = x.size();
  const Index m = c.size();
  const Index center = taps.center_index();
  VectorX<Scalar> y = VectorX<Scalar>::Zero(n);
  for (Index i = 0; i < n; ++i) {
    // valid k satisfy 0 <= i + center - k < n
    const Index k_lo = std::max<Index>(0, i + center - (n - 1));
    const Index k_hi = std::min<Index>(m - 1, i + center);
    Scalar acc{0};
    for (Index k = k_lo; k <= k_hi; ++k) acc += c[k] * x[i + center - k];
    y[i] = acc;
  }
  return BasicWaveform<Scalar>(std::move(y), w.sample_rate());
}

/// Cubic (4-point) Lagrange interpolation of `x` at base_index + mu.
/// Requires base_index - 1 >= 0 and base_index + 2 < size.
template <typename Derived>
typename Derived::Scalar farrow_interp(const Eigen::DenseBase<Derived>& x, Index base_index,
                                       double mu) {
  using Scalar = typename Derived::Scalar;
  if (base_index - 1 < 0 || base_index + 2 >= x.size())
    throw BoundaryError("cubic interpolation support out of range at index " +
                        std::to_string(base_index));
  const Scalar xm1 = x(base_index - 1);
  const Scalar x0 = x(base_index);
  const Scalar x1 = x(base_index + 1);
  const Scalar x2 = x(base_index + 2);
  // Farrow form of the Lagrange cubic: ((c3 mu + c2) mu + c1) mu + c0
  const Scalar c0 = x0;
  const Scalar c1 = -xm1 / 3 - x0 / 2 + x1 - x2 / 6;
  const Scalar c2 = (xm1 + x1) / 2 - x0;
  const Scalar c3 = (x2 - xm1) / 6 + (x0 - x1) / 2;
  const Scalar m = static_cast<Scalar>(mu);
  return ((c3 * m + c2) * m + c1) * m + c0;
}

template <typename Scalar>
Scalar farrow_interp(const BasicWaveform<Scalar>& w, Index base_index, double mu) {
  return farrow_interp(w.samples(), base_index, mu);
}

/// Band-limited polyphase resampling to `new_rate` (Kaiser-windowed sinc,
/// 80 dB stopband, zero group delay). Output sample j sits at input time
/// j * old_rate / new_rate.
Waveform resample(const Waveform& w, double new_rate);

/// Scales `w` (after removing its mean) so its RMS equals `target_rms`.
/// An all-zero input is returned unchanged.
Waveform normalize_rms(const Waveform& w, double target_rms);

struct ErrorCount {
  std::size_t errors = 0;
  std::size_t compared = 0;

  double ber() const { return compared ? static_cast<double>(errors) / compared : 0.0; }
  friend bool operator==(const ErrorCount&, const ErrorCount&) = default;
};

/// Positional bit comparison after discarding the first `skip` bits of each
/// stream. Throws Error("no bits compared") when the window is empty.
ErrorCount count_errors(const BitStream& tx, const BitStream& rx, std::size_t skip);

}  // namespace ponlut
