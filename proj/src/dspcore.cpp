#include "ponlut/dspcore.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace ponlut {

BitStream prbs15(std::uint32_t seed, std::size_t n) {
  if (seed == 0) throw ParameterError("degenerate LFSR seed");
  if (seed > 0x7FFF) throw ParameterError("PRBS15 seed must fit in 15 bits");
  BitStream out;
  out.bits.resize(n);
  std::uint32_t reg = seed;
  for (std::size_t i = 0; i < n; ++i) {
    out.bits[i] = static_cast<std::uint8_t>((reg >> 14) & 1u);
    const std::uint32_t fb = ((reg >> 14) ^ (reg >> 13)) & 1u;
    reg = ((reg << 1) | fb) & 0x7FFFu;
  }
  return out;
}

namespace {

double rrc_value(double t, double beta) {
  using std::numbers::pi;
  if (std::abs(t) < 1e-12) return 1.0 - beta + 4.0 * beta / pi;
  if (beta > 0.0 && std::abs(std::abs(t) - 1.0 / (4.0 * beta)) < 1e-12) {
    const double a = pi / (4.0 * beta);
    return beta / std::numbers::sqrt2 *
           ((1.0 + 2.0 / pi) * std::sin(a) + (1.0 - 2.0 / pi) * std::cos(a));
  }
  const double num = std::sin(pi * t * (1.0 - beta)) + 4.0 * beta * t * std::cos(pi * t * (1.0 + beta));
  const double den = pi * t * (1.0 - (4.0 * beta * t) * (4.0 * beta * t));
  return num / den;
}

}  // namespace

FirTaps rrc_taps(double rolloff, int sps, int span) {
  if (!(rolloff >= 0.0 && rolloff <= 1.0)) throw ParameterError("RRC rolloff must lie in [0, 1]");
  if (sps < 2) throw ParameterError("RRC needs at least 2 samples per symbol");
  if (span < 8 || span % 2 != 0) throw ParameterError("RRC span must be even and >= 8");
  const int half = span * sps / 2;
  Eigen::VectorXd c(2 * half + 1);
  for (int k = -half; k <= half; ++k) {
    c[k + half] = rrc_value(static_cast<double>(k) / sps, rolloff);
  }
  // force exact symmetry
  for (int k = 1; k <= half; ++k) c[half - k] = c[half + k];
  c /= c.norm();
  return FirTaps(std::move(c), half);
}

namespace {

struct Ratio {
  long long up = 1;    // p
  long long down = 1;  // q
};

// Best rational approximation p/q of x with q <= max_den (continued fractions).
Ratio rational_approx(double x, long long max_den) {
  long long h0 = 0, h1 = 1, k0 = 1, k1 = 0;
  double v = x;
  for (int it = 0; it < 64; ++it) {
    const double a = std::floor(v);
    const long long ai = static_cast<long long>(a);
    const long long h2 = ai * h1 + h0;
    const long long k2 = ai * k1 + k0;
    if (k2 > max_den) break;
    h0 = h1;
    h1 = h2;
    k0 = k1;
    k1 = k2;
    const double frac = v - a;
    if (frac < 1e-12) break;
    v = 1.0 / frac;
  }
  return {h1, k1};
}

constexpr double kStopbandDb = 80.0;

double kaiser_beta(double atten_db) {
  if (atten_db > 50.0) return 0.1102 * (atten_db - 8.7);
  if (atten_db >= 21.0) return 0.5842 * std::pow(atten_db - 21.0, 0.4) + 0.07886 * (atten_db - 21.0);
  return 0.0;
}

struct Kernel {
  double cutoff;  // cycles per input sample (-6 dB point)
  int half_width; // input samples on each side
  double beta;

  double operator()(double u) const {
    if (std::abs(u) >= half_width) return 0.0;
    const double x = 2.0 * cutoff * u;
    const double sinc = std::abs(x) < 1e-15 ? 1.0 : std::sin(std::numbers::pi * x) / (std::numbers::pi * x);
    const double r = u / half_width;
    const double win = std::cyl_bessel_i(0.0, beta * std::sqrt(std::max(0.0, 1.0 - r * r))) /
                       std::cyl_bessel_i(0.0, beta);
    return 2.0 * cutoff * sinc * win;
  }
};

Kernel make_kernel(double rate_ratio) {
  const double r = std::min(1.0, rate_ratio);
  const double transition = 0.1 * r;  // cycles per input sample
  const double taps = (kStopbandDb - 7.95) / (14.36 * transition);
  Kernel k;
  k.cutoff = 0.45 * r;
  k.half_width = static_cast<int>(std::ceil(taps / 2.0)) + 1;
  k.beta = kaiser_beta(kStopbandDb);
  return k;
}

// Weights for the input samples around fractional position `frac` in [0,1),
// normalized to unit sum so DC passes exactly.
void phase_weights(const Kernel& k, double frac, std::vector<double>& out) {
  out.resize(2 * k.half_width);
  double sum = 0.0;
  for (int j = 0; j < 2 * k.half_width; ++j) {
    const int n = j - k.half_width + 1;  // offsets -half+1 .. half
    out[j] = k(frac - n);
    sum += out[j];
  }
  for (double& v : out) v /= sum;
}

}  // namespace

Waveform resample(const Waveform& w, double new_rate) {
  if (!(new_rate > 0.0) || !std::isfinite(new_rate))
    throw ParameterError("resample target rate must be positive");
  const double old_rate = w.sample_rate();
  if (new_rate == old_rate) return w;

  const double ratio = new_rate / old_rate;  // output samples per input sample
  const Eigen::VectorXd& x = w.samples();
  const Index n_in = x.size();
  if (n_in == 0) return Waveform(Eigen::VectorXd(), new_rate);
  const Index n_out = static_cast<Index>(std::floor((n_in - 1) * ratio * (1.0 + 1e-15))) + 1;
  Eigen::VectorXd y(n_out);

  const Kernel kernel = make_kernel(ratio);
  const Ratio pq = rational_approx(ratio, 4096);
  const bool exact = pq.down > 0 &&
                     std::abs(static_cast<double>(pq.up) / pq.down - ratio) <= 1e-12 * ratio;

  auto accumulate = [&](Index base, const std::vector<double>& wts) {
    double acc = 0.0;
    for (int j = 0; j < static_cast<int>(wts.size()); ++j) {
      const Index n = base + j - kernel.half_width + 1;
      if (n >= 0 && n < n_in) acc += wts[j] * x[n];
    }
    return acc;
  };

  if (exact) {
    // output j sits at input position j*q/p = base + phase/p
    const long long p = pq.up;
    const long long q = pq.down;
    std::vector<std::vector<double>> table(static_cast<std::size_t>(p));
    for (long long ph = 0; ph < p; ++ph)
      phase_weights(kernel, static_cast<double>(ph) / p, table[static_cast<std::size_t>(ph)]);
    for (Index j = 0; j < n_out; ++j) {
      const long long num = static_cast<long long>(j) * q;
      y[j] = accumulate(static_cast<Index>(num / p), table[static_cast<std::size_t>(num % p)]);
    }
  } else {
    std::vector<double> wts;
    for (Index j = 0; j < n_out; ++j) {
      const double t = j / ratio;
      const double base = std::floor(t);
      phase_weights(kernel, t - base, wts);
      y[j] = accumulate(static_cast<Index>(base), wts);
    }
  }
  return Waveform(std::move(y), new_rate);
}

Waveform normalize_rms(const Waveform& w, double target_rms) {
  if (!(target_rms > 0.0)) throw ParameterError("target RMS must be positive");
  if (w.size() == 0) return w;
  Eigen::VectorXd v = w.samples().array() - w.samples().mean();
  const double rms = std::sqrt(v.squaredNorm() / static_cast<double>(v.size()));
  if (rms == 0.0) return Waveform(std::move(v), w.sample_rate());
  v *= target_rms / rms;
  return Waveform(std::move(v), w.sample_rate());
}

ErrorCount count_errors(const BitStream& tx, const BitStream& rx, std::size_t skip) {
  const std::size_t n = std::min(tx.size(), rx.size());
  if (skip >= n) throw Error("no bits compared");
  ErrorCount c;
  c.compared = n - skip;
  for (std::size_t i = skip; i < n; ++i) c.errors += (tx.bits[i] != rx.bits[i]) ? 1u : 0u;
  return c;
}

}  // namespace ponlut
