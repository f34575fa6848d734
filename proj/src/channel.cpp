#include "ponlut/channel.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <sstream>

namespace ponlut {

void PhaseModelParams::validate() const {
  if (!(alpha_db_per_km > 0.0)) throw ParameterError("alpha must be positive");
  if (!(velocity_m_per_s > 0.0)) throw ParameterError("propagation velocity must be positive");
  if (!(baud > 0.0)) throw ParameterError("baud must be positive");
}

double phase_offset_ui(double rop0_dbm, double ropi_dbm, const PhaseModelParams& p) {
  p.validate();
  const double km = std::abs(rop0_dbm - ropi_dbm) / p.alpha_db_per_km;
  return km * 1000.0 / p.velocity_m_per_s * p.baud;
}

double phase_offset_frac(double rop0_dbm, double ropi_dbm, const PhaseModelParams& p) {
  const double tau = phase_offset_ui(rop0_dbm, ropi_dbm, p);
  const double frac = tau - std::floor(tau);
  return frac >= 1.0 ? 0.0 : frac;
}

namespace {

std::complex<double> one_pole(double f_hz, double pole_hz, double fs) {
  const double p = std::exp(-2.0 * std::numbers::pi * pole_hz / fs);
  const std::complex<double> z1 = std::polar(1.0, -2.0 * std::numbers::pi * f_hz / fs);
  return (1.0 - p) / (1.0 - p * z1);
}

double model_db(double f, double w, double f1, double f2, double fs) {
  const auto h = w * one_pole(f, f1, fs) + (1.0 - w) * one_pole(f, f2, fs);
  return 20.0 * std::log10(std::abs(h));
}

double fir_response_db(const FirTaps& taps, double f, double fs) {
  std::complex<double> acc{0.0, 0.0};
  for (Index n = 0; n < taps.size(); ++n)
    acc += taps[n] * std::polar(1.0, -2.0 * std::numbers::pi * f * static_cast<double>(n) / fs);
  return 20.0 * std::log10(std::abs(acc));
}

FirTaps realize(double w, double f1, double f2, double fs) {
  const double p1 = std::exp(-2.0 * std::numbers::pi * f1 / fs);
  const double p2 = std::exp(-2.0 * std::numbers::pi * f2 / fs);
  std::vector<double> h;
  double a1 = w * (1.0 - p1);
  double a2 = (1.0 - w) * (1.0 - p2);
  // stop once the untruncated tail carries < 1e-9 of the DC gain
  while (w * std::pow(p1, static_cast<double>(h.size())) + (1.0 - w) * std::pow(p2, static_cast<double>(h.size())) > 1e-9 &&
         h.size() < 1u << 16) {
    h.push_back(a1 + a2);
    a1 *= p1;
    a2 *= p2;
  }
  Eigen::VectorXd c = Eigen::Map<Eigen::VectorXd>(h.data(), static_cast<Index>(h.size()));
  c /= c.sum();
  const double delay = (Eigen::VectorXd::LinSpaced(c.size(), 0.0, static_cast<double>(c.size() - 1)).array() *
                        c.array()).sum();
  const Index center = std::clamp<Index>(static_cast<Index>(std::lround(delay)), 0, c.size() - 1);
  return FirTaps(std::move(c), center);
}

}  // namespace

double CompositeFilter::model_response_db(double f_hz) const {
  return model_db(f_hz, weight, pole1_hz, pole2_hz, sample_rate);
}

CompositeFilter fit_composite_model(double f3db, double f10db, double sample_rate) {
  if (!(f3db > 0.0) || !(f3db < f10db) || !(f10db < sample_rate / 2.0))
    throw ParameterError("composite filter needs 0 < f3db < f10db < sample_rate/2");
  const double f2 = std::min(1.6 * f10db, 0.45 * sample_rate);

  auto residual = [&](double w, double f1) {
    return Eigen::Vector2d(model_db(f3db, w, f1, f2, sample_rate) + 3.0,
                           model_db(f10db, w, f1, f2, sample_rate) + 10.0);
  };

  // coarse start, then damped Newton on (weight, narrow corner)
  double w = 0.75, f1 = f3db;
  double best = std::numeric_limits<double>::infinity();
  for (int i = 1; i < 20; ++i) {
    for (int j = 1; j <= 40; ++j) {
      const double wc = i / 20.0;
      const double fc = f3db * j / 20.0;
      const double r = residual(wc, fc).norm();
      if (r < best) {
        best = r;
        w = wc;
        f1 = fc;
      }
    }
  }
  for (int it = 0; it < 100; ++it) {
    const Eigen::Vector2d r = residual(w, f1);
    if (r.cwiseAbs().maxCoeff() < 1e-10) break;
    const double dw = 1e-7, df = 1e-7 * f1;
    Eigen::Matrix2d jac;
    jac.col(0) = (residual(w + dw, f1) - r) / dw;
    jac.col(1) = (residual(w, f1 + df) - r) / df;
    const Eigen::Vector2d step = jac.colPivHouseholderQr().solve(-r);
    double lambda = 1.0;
    for (int k = 0; k < 30; ++k, lambda *= 0.5) {
      const double wn = w + lambda * step[0];
      const double fn = f1 + lambda * step[1];
      if (wn > 0.0 && wn < 1.0 && fn > 0.0 && residual(wn, fn).norm() < r.norm()) {
        w = wn;
        f1 = fn;
        break;
      }
    }
  }

  CompositeFilter out;
  out.weight = w;
  out.pole1_hz = f1;
  out.pole2_hz = f2;
  out.sample_rate = sample_rate;
  out.taps = realize(w, f1, f2, sample_rate);

  const double at3 = fir_response_db(out.taps, f3db, sample_rate);
  const double at10 = fir_response_db(out.taps, f10db, sample_rate);
  bool monotone = true;
  double prev = 0.0;
  for (int i = 0; i <= 400; ++i) {
    const double db = out.model_response_db(f10db * i / 400.0);
    if (db > prev + 1e-12) monotone = false;
    prev = db;
  }
  if (std::abs(at3 + 3.0) > 0.1 || std::abs(at10 + 10.0) > 0.1 || !monotone) {
    std::ostringstream os;
    os << "composite filter fit failed: " << at3 << " dB at f3db, " << at10 << " dB at f10db"
       << (monotone ? "" : ", response not monotone");
    throw FittingError(os.str());
  }
  return out;
}

FirTaps fit_composite_filter(double f3db, double f10db, double sample_rate) {
  return fit_composite_model(f3db, f10db, sample_rate).taps;
}

void NoiseModel::validate() const {
  if (!(sigma_thermal >= 0.0) || !(beat_coeff >= 0.0) || !(amplitude_ref > 0.0))
    throw ParameterError("noise model parameters must be nonnegative");
}

ChannelConfig make_channel_config(double sample_rate, double f3db, double f10db) {
  ChannelConfig cfg;
  cfg.f3db = f3db;
  cfg.f10db = f10db;
  cfg.filter = fit_composite_model(f3db, f10db, sample_rate);
  return cfg;
}

ChannelConfig make_allpass_channel_config(double sample_rate) {
  ChannelConfig cfg;
  cfg.filter.sample_rate = sample_rate;
  cfg.filter.weight = 1.0;
  cfg.filter.pole1_hz = 0.0;
  cfg.filter.pole2_hz = 0.0;
  cfg.filter.taps = FirTaps(Eigen::VectorXd::Ones(1), 0);
  cfg.enable_noise = false;
  return cfg;
}

double power_ratio(double rop_dbm, const NoiseModel& noise) {
  return std::pow(10.0, (rop_dbm - noise.rop_ref_dbm) / 10.0);
}

double signal_rms(double rop_dbm, const ChannelConfig& cfg) {
  const double gain = cfg.preamp ? std::pow(10.0, cfg.preamp_gain_db / 10.0) : 1.0;
  return cfg.noise.amplitude_ref * gain * power_ratio(rop_dbm, cfg.noise);
}

double noise_sigma(double rop_dbm, const ChannelConfig& cfg) {
  cfg.noise.validate();
  double var = cfg.noise.sigma_thermal * cfg.noise.sigma_thermal;
  if (cfg.preamp) var += cfg.noise.beat_coeff * power_ratio(rop_dbm, cfg.noise);
  return std::sqrt(var);
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t burst_seed(std::uint64_t rng_seed, const std::string& onu_id, std::uint64_t burst_index) {
  std::uint64_t h = 0xCBF29CE484222325ull;  // FNV-1a over the id
  for (unsigned char ch : onu_id) {
    h ^= ch;
    h *= 0x100000001B3ull;
  }
  return splitmix64(splitmix64(splitmix64(rng_seed) ^ h) ^ burst_index);
}

Waveform fractional_delay(const Waveform& w, double delay_ui, double baud) {
  const double d = delay_ui * w.sample_rate() / baud;  // in samples
  const auto& x = w.samples();
  const Index n = x.size();
  auto at = [&](Index i) { return (i >= 0 && i < n) ? x[i] : 0.0; };
  Eigen::VectorXd y(n);
  for (Index i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) - d;
    const double base = std::floor(t);
    const double mu = t - base;
    const auto b = static_cast<Index>(base);
    const double xm1 = at(b - 1), x0 = at(b), x1 = at(b + 1), x2 = at(b + 2);
    const double c1 = -xm1 / 3 - x0 / 2 + x1 - x2 / 6;
    const double c2 = (xm1 + x1) / 2 - x0;
    const double c3 = (x2 - xm1) / 6 + (x0 - x1) / 2;
    y[i] = ((c3 * mu + c2) * mu + c1) * mu + x0;
  }
  return Waveform(std::move(y), w.sample_rate());
}

Waveform apply_link(const Waveform& w, const OnuProfile& onu, double ref_onu_rop_dbm,
                    const ChannelConfig& cfg, const PhaseModelParams& p, std::uint64_t burst_index) {
  if (w.sample_rate() < 2.0 * p.baud) throw ParameterError("link input must carry at least 2 samples per symbol");
  const double tau = phase_offset_frac(ref_onu_rop_dbm, onu.rop_dbm, p);
  Waveform out = tau > 0.0 ? fractional_delay(w, tau, p.baud) : w;

  const double rms = out.size() ? std::sqrt(out.samples().squaredNorm() / static_cast<double>(out.size())) : 0.0;
  if (rms > 0.0) out.samples() *= signal_rms(onu.rop_dbm, cfg) / rms;

  if (cfg.filter.taps.size() > 1 || cfg.filter.taps[0] != 1.0) out = fir_same(out, cfg.filter.taps);

  const double sigma = noise_sigma(onu.rop_dbm, cfg);
  if (cfg.enable_noise && sigma > 0.0) {
    std::mt19937_64 rng(burst_seed(cfg.rng_seed, onu.onu_id, burst_index));
    std::normal_distribution<double> gauss(0.0, sigma);
    for (Index i = 0; i < out.size(); ++i) out.samples()[i] += gauss(rng);
  }
  return out;
}

}  // namespace ponlut
