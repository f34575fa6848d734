#include <doctest.h>

#include <complex>
#include <numbers>
#include <random>

#include "ponlut/channel.hpp"

using namespace ponlut;

namespace {

const PhaseModelParams kParams{};

std::complex<double> dft_bin(const Eigen::VectorXd& x, double cycles) {
  std::complex<double> acc{0, 0};
  const double n = double(x.size());
  for (Index i = 0; i < x.size(); ++i)
    acc += x[i] * std::polar(1.0, -2 * std::numbers::pi * cycles * double(i) / n);
  return acc;
}

double fir_response_db(const FirTaps& t, double f, double fs) {
  std::complex<double> acc{0, 0};
  for (Index k = 0; k < t.size(); ++k) acc += t[k] * std::polar(1.0, -2 * std::numbers::pi * f / fs * double(k));
  return 20 * std::log10(std::abs(acc));
}

Waveform random_waveform(Index n, double fs, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Eigen::VectorXd v(n);
  for (Index i = 0; i < n; ++i) v[i] = g(rng);
  return Waveform(v, fs);
}

OnuProfile onu_at(double rop, std::string id = "onu") {
  OnuProfile o;
  o.onu_id = std::move(id);
  o.rop_dbm = rop;
  return o;
}

}  // namespace

TEST_SUITE("channel") {

TEST_CASE("phase offset from power difference") {
  CHECK(phase_offset_ui(-20, -20, kParams) == 0.0);
  const double tau = phase_offset_ui(-20.0, -23.3, kParams);
  const double expected = (3.3 / 0.33) * 1000 / 2e8 * 50e9;
  CHECK(expected == doctest::Approx(2.5e6).epsilon(1e-12));
  CHECK(std::abs(tau - 2.5e6) / 2.5e6 < 1e-9);
  const double small = phase_offset_ui(0.0, 0.1, kParams);
  CHECK(small == doctest::Approx(75757.575757575).epsilon(1e-9));
  CHECK(phase_offset_frac(0.0, 0.1, kParams) == doctest::Approx(0.5758).epsilon(1e-3));
}

TEST_CASE("phase offset is symmetric and linear in baud") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-35, -10);
  for (int i = 0; i < 50; ++i) {
    const double a = u(rng), b = u(rng);
    CHECK(phase_offset_ui(a, b, kParams) == phase_offset_ui(b, a, kParams));
    PhaseModelParams p2 = kParams;
    p2.baud = 2 * kParams.baud;
    CHECK(phase_offset_ui(a, b, p2) == doctest::Approx(2 * phase_offset_ui(a, b, kParams)).epsilon(1e-12));
    const double f = phase_offset_frac(a, b, kParams);
    CHECK(f >= 0.0);
    CHECK(f < 1.0);
  }
}

TEST_CASE("composite fit meets both bandwidth points") {
  const double fs = 100e9;
  const CompositeFilter m = fit_composite_model(3.8e9, 18.7e9, fs);
  CHECK(m.model_response_db(3.8e9) >= -3.1);
  CHECK(m.model_response_db(3.8e9) <= -2.9);
  CHECK(m.model_response_db(18.7e9) >= -10.1);
  CHECK(m.model_response_db(18.7e9) <= -9.9);
  CHECK(std::abs(m.model_response_db(0.0)) < 1e-6);
  CHECK(std::abs(fir_response_db(m.taps, 0.0, fs)) < 1e-6);
  CHECK(fir_response_db(m.taps, 3.8e9, fs) == doctest::Approx(-3.0).epsilon(0.1 / 3));
  CHECK(fir_response_db(m.taps, 18.7e9, fs) == doctest::Approx(-10.0).epsilon(0.01));
}

TEST_CASE("composite fir follows the model on a dense grid") {
  const double fs = 100e9;
  const CompositeFilter m = fit_composite_model(3.8e9, 18.7e9, fs);
  double prev = 1.0, worst = 0.0;
  for (int i = 0; i <= 1870; ++i) {
    const double f = 1e7 * i;
    const double fir = fir_response_db(m.taps, f, fs);
    worst = std::max(worst, std::abs(fir - m.model_response_db(f)));
    CHECK(fir <= prev + 1e-9);
    prev = fir;
  }
  CHECK(worst < 0.2);
}

TEST_CASE("composite fit at the link rate") {
  for (double fs : {200e9, 80e9}) {
    const CompositeFilter m = fit_composite_model(3.8e9, 18.7e9, fs);
    CHECK(std::abs(fir_response_db(m.taps, 3.8e9, fs) + 3.0) <= 0.1);
    CHECK(std::abs(fir_response_db(m.taps, 18.7e9, fs) + 10.0) <= 0.1);
  }
}

TEST_CASE("identity link") {
  const double fs = 200e9;
  ChannelConfig cfg = make_allpass_channel_config(fs);
  cfg.enable_noise = false;
  Waveform w = random_waveform(2000, fs, 1);
  w.samples() /= std::sqrt(w.samples().squaredNorm() / double(w.size()));
  const double rop = cfg.noise.rop_ref_dbm;
  const Waveform out = apply_link(w, onu_at(rop), rop, cfg, kParams);
  CHECK((out.samples() - w.samples()).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("half-symbol delay shifts tone phase") {
  const double fs = 200e9, f0 = 1e9;
  ChannelConfig cfg = make_allpass_channel_config(fs);
  cfg.enable_noise = false;
  const double per_db = phase_offset_ui(0.0, 1.0, kParams);
  const double rop0 = -20.0, ropi = rop0 - 0.5 / per_db;
  REQUIRE(phase_offset_frac(rop0, ropi, kParams) == doctest::Approx(0.5).epsilon(1e-9));
  const Index n = 4000;
  Eigen::VectorXd x(n);
  for (Index i = 0; i < n; ++i) x[i] = std::cos(2 * std::numbers::pi * f0 * double(i) / fs + 0.3);
  const Waveform out = apply_link(Waveform(x, fs), onu_at(ropi), rop0, cfg, kParams);
  // interior window of an integer number of cycles
  const Index start = 400, len = 3200;
  const double cycles = f0 * double(len) / fs;
  const double in_phase = std::arg(dft_bin(x.segment(start, len), cycles));
  const double out_phase = std::arg(dft_bin(out.samples().segment(start, len), cycles));
  const double lag = std::remainder(in_phase - out_phase, 2 * std::numbers::pi);
  CHECK(lag == doctest::Approx(std::numbers::pi * f0 / kParams.baud).epsilon(1e-4));
}

TEST_CASE("identical seeds give identical bursts") {
  const double fs = 200e9;
  ChannelConfig cfg = make_channel_config(fs);
  cfg.noise.sigma_thermal = 0.1;
  const Waveform w = random_waveform(3000, fs, 2);
  const OnuProfile onu = onu_at(-26.3, "a");
  const Waveform a = apply_link(w, onu, -20.0, cfg, kParams, 7);
  const Waveform b = apply_link(w, onu, -20.0, cfg, kParams, 7);
  CHECK(a.samples() == b.samples());
  const Waveform c = apply_link(w, onu, -20.0, cfg, kParams, 8);
  CHECK(a.samples() != c.samples());
}

TEST_CASE("delay and filter stages are linear and time invariant") {
  const double fs = 200e9;
  const FirTaps taps = fit_composite_filter(3.8e9, 18.7e9, fs);
  const Waveform x = random_waveform(1500, fs, 4), y = random_waveform(1500, fs, 5);
  const Waveform mix(2.0 * x.samples() - 0.5 * y.samples(), fs);
  const Eigen::VectorXd lhs = fir_same(fractional_delay(mix, 0.37, 50e9), taps).samples();
  const Eigen::VectorXd rhs = 2.0 * fir_same(fractional_delay(x, 0.37, 50e9), taps).samples() -
                              0.5 * fir_same(fractional_delay(y, 0.37, 50e9), taps).samples();
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-9);

  const Index shift = 37;
  Eigen::VectorXd shifted = Eigen::VectorXd::Zero(x.size());
  shifted.tail(x.size() - shift) = x.samples().head(x.size() - shift);
  const Eigen::VectorXd a = fir_same(x, taps).samples(), b = fir_same(Waveform(shifted, fs), taps).samples();
  CHECK((b.segment(shift, 1000) - a.segment(0, 1000)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("measured snr falls with received power") {
  const double fs = 200e9;
  ChannelConfig cfg = make_channel_config(fs);
  cfg.noise.sigma_thermal = 0.25;
  ChannelConfig clean = cfg;
  clean.enable_noise = false;
  const Waveform w = random_waveform(20000, fs, 6);
  double prev = std::numeric_limits<double>::infinity();
  for (double rop = -24.0; rop >= -32.0; rop -= 1.0) {
    double snr = 0.0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const Eigen::VectorXd s = apply_link(w, onu_at(rop), -20.0, clean, kParams, seed).samples();
      const Eigen::VectorXd r = apply_link(w, onu_at(rop), -20.0, cfg, kParams, seed).samples();
      snr += s.squaredNorm() / (r - s).squaredNorm();
    }
    CAPTURE(rop);
    CHECK(snr < prev);
    prev = snr;
  }
}

TEST_CASE("preamp adds power-dependent noise") {
  ChannelConfig cfg = make_allpass_channel_config(200e9);
  cfg.noise = NoiseModel{0.1, 0.02, -28.0, 1.0};
  cfg.preamp = false;
  CHECK(noise_sigma(-20.0, cfg) == doctest::Approx(0.1));
  cfg.preamp = true;
  CHECK(noise_sigma(-18.0, cfg) > noise_sigma(-28.0, cfg));
}

}
