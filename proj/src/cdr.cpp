#include "ponlut/cdr.hpp"

#include <cmath>
#include <numbers>

namespace ponlut {

void CdrConfig::validate() const {
  if (sps != 2) throw ParameterError("the Gardner loop runs at exactly 2 samples per symbol");
  if (!(kp > 0.0) || !(ki >= 0.0)) throw ParameterError("CDR gains must satisfy kp > 0, ki >= 0");
  if (!(lock_thresh_ui > 0.0 && lock_thresh_ui < 0.5)) throw ParameterError("lock threshold must lie in (0, 0.5)");
  if (lock_window < 1) throw ParameterError("lock window must be at least one symbol");
  if (max_symbols < 1) throw ParameterError("max_symbols must be positive");
  if (!(symbol_energy > 0.0)) throw ParameterError("symbol energy must be positive");
  if (ted_prefilter.size() > 0 && ted_prefilter.size() % 2 == 0)
    throw ParameterError("detector prefilter must have odd length");
}

Eigen::VectorXd band_edge_prefilter(double half_width, Index half_len) {
  if (!(half_width > 0.0 && half_width < 0.25) || half_len < 1)
    throw ParameterError("band-edge prefilter needs 0 < half_width < 0.25 and half_len >= 1");
  Eigen::VectorXd h(2 * half_len + 1);
  for (Index k = -half_len; k <= half_len; ++k) {
    const double x = 2.0 * half_width * static_cast<double>(k);
    const double sinc = k == 0 ? 1.0 : std::sin(std::numbers::pi * x) / (std::numbers::pi * x);
    const double win = 0.54 + 0.46 * std::cos(std::numbers::pi * static_cast<double>(k) / static_cast<double>(half_len + 1));
    h[k + half_len] = 4.0 * half_width * sinc * std::cos(std::numbers::pi * static_cast<double>(k) / 2.0) * win;
  }
  return h;
}

double wrap_ui(double x) {
  const double w = x - std::floor(x);
  return w >= 1.0 ? 0.0 : w;
}

double phase_distance_ui(double a, double b) {
  const double d = wrap_ui(a - b);
  return std::min(d, 1.0 - d);
}

double circular_mean_ui(std::span<const double> phases) {
  double c = 0.0, s = 0.0;
  for (double p : phases) {
    c += std::cos(2.0 * std::numbers::pi * p);
    s += std::sin(2.0 * std::numbers::pi * p);
  }
  return wrap_ui(std::atan2(s, c) / (2.0 * std::numbers::pi));
}

namespace {

// Cubic Lagrange at fractional sample position t, or nullopt-like flag when
// the 4-point support leaves the buffer.
inline bool interp_at(const double* x, Index n, double t, double& out) {
  const double base = std::floor(t);
  const auto b = static_cast<Index>(base);
  if (b - 1 < 0 || b + 2 >= n) return false;
  const double mu = t - base;
  const double xm1 = x[b - 1], x0 = x[b], x1 = x[b + 1], x2 = x[b + 2];
  const double c1 = -xm1 / 3 - x0 / 2 + x1 - x2 / 6;
  const double c2 = (xm1 + x1) / 2 - x0;
  const double c3 = (x2 - xm1) / 6 + (x0 - x1) / 2;
  out = ((c3 * mu + c2) * mu + c1) * mu + x0;
  return true;
}

}  // namespace

CdrResult cdr_run(const Waveform& w, const CdrConfig& cfg, double initial_phase_ui) {
  cfg.validate();
  if (w.size() < 4 * cfg.sps) throw ParameterError("CDR input too short");
  if (!(initial_phase_ui >= 0.0 && initial_phase_ui < 1.0))
    throw ParameterError("initial CDR phase must lie in [0, 1)");

  const double* x = w.samples().data();
  const Index n = w.size();
  Eigen::VectorXd filtered;
  if (cfg.ted_prefilter.size() > 0)
    filtered = fir_same(w, FirTaps(cfg.ted_prefilter, (cfg.ted_prefilter.size() - 1) / 2)).samples();
  const double* z = filtered.size() ? filtered.data() : x;
  const Index capacity = std::min<Index>(cfg.max_symbols, n / 2);

  CdrResult res;
  res.samples.resize(capacity);
  res.trace.phase_ui.reserve(static_cast<std::size_t>(capacity));
  res.trace.ted_error.reserve(static_cast<std::size_t>(capacity));

  double phase = initial_phase_ui;
  double integ = 0.0;
  double z_prev = 0.0;
  bool have_prev = false;
  Index count = 0;
  for (Index sym = 0; sym < capacity; ++sym) {
    const double pos = 2.0 * (static_cast<double>(sym) + 1.0 + phase);
    double y = 0.0, yz = 0.0, mid = 0.0;
    if (!interp_at(x, n, pos, y) && std::floor(pos) + 2 >= n) break;
    if (z != x) interp_at(z, n, pos, yz);
    else yz = y;
    const bool mid_ok = interp_at(z, n, pos - 1.0, mid);
    double e = 0.0;
    if (mid_ok && have_prev) {
      e = mid * (yz - z_prev) / cfg.symbol_energy;
      integ += cfg.ki * e;
      res.trace.phase_ui.push_back(wrap_ui(phase));
      phase -= cfg.kp * e + integ;
    } else {
      res.trace.phase_ui.push_back(wrap_ui(phase));
    }
    res.trace.ted_error.push_back(e);
    res.samples[sym] = y;
    z_prev = yz;
    have_prev = true;
    count = sym + 1;
  }
  res.samples.conservativeResize(count);
  res.trace.final_phase_unwrapped = phase;
  res.trace.lock_index = std::nullopt;
  return res;
}

Eigen::VectorXd strobe_samples(const Waveform& w, double phase_ui) {
  const double* x = w.samples().data();
  const Index n = w.size();
  const Index count = n / 2;
  Eigen::VectorXd out = Eigen::VectorXd::Zero(count);
  for (Index sym = 0; sym < count; ++sym) {
    double y = 0.0;
    if (interp_at(x, n, 2.0 * (static_cast<double>(sym) + 1.0 + phase_ui), y)) out[sym] = y;
  }
  return out;
}

double mean_ted_at_phase(const Waveform& w, double phase_ui, double symbol_energy) {
  const double* x = w.samples().data();
  const Index n = w.size();
  double acc = 0.0;
  Index used = 0;
  double y_prev = 0.0;
  bool have_prev = false;
  for (Index sym = 0; sym < n / 2; ++sym) {
    const double pos = 2.0 * (static_cast<double>(sym) + 1.0 + phase_ui);
    double y = 0.0, mid = 0.0;
    if (!interp_at(x, n, pos, y) || !interp_at(x, n, pos - 1.0, mid)) {
      have_prev = false;
      continue;
    }
    if (have_prev) {
      acc += mid * (y - y_prev) / symbol_energy;
      ++used;
    }
    y_prev = y;
    have_prev = true;
  }
  return used ? acc / static_cast<double>(used) : 0.0;
}

std::optional<Index> detect_lock(const CdrTrace& trace, std::optional<double> truth_phase_ui,
                                 const CdrConfig& cfg) {
  const auto& ph = trace.phase_ui;
  if (ph.empty()) return std::nullopt;
  double ref = 0.0;
  if (truth_phase_ui) {
    ref = wrap_ui(*truth_phase_ui);
  } else {
    const std::size_t tail = std::min<std::size_t>(ph.size(), static_cast<std::size_t>(cfg.lock_window));
    ref = circular_mean_ui(std::span<const double>(ph).last(tail));
  }
  Index run = 0;
  for (std::size_t i = 0; i < ph.size(); ++i) {
    run = phase_distance_ui(ph[i], ref) < cfg.lock_thresh_ui ? run + 1 : 0;
    if (run >= cfg.lock_window) return static_cast<Index>(i) + 1;
  }
  return std::nullopt;
}

Index lock_time_symbols(const Waveform& w, const CdrConfig& cfg, double initial_phase_ui,
                        double truth_phase_ui) {
  const CdrResult r = cdr_run(w, cfg, initial_phase_ui);
  return detect_lock(r.trace, truth_phase_ui, cfg).value_or(cfg.max_symbols);
}

}  // namespace ponlut
