#include "ponlut/equalizer.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace ponlut {

EqConfig EqConfig::for_format(FormatName format) {
  EqConfig cfg;
  if (format == FormatName::PAM4) {
    cfg.n_ffe = 31;
    cfg.n_dfe = 3;
    cfg.mu_ffe = 1e-3;
    cfg.mu_dfe = 1e-3;
  }
  return cfg;
}

void EqConfig::validate() const {
  if (n_ffe < 1) throw ParameterError("equalizer needs at least one FFE tap");
  if (n_dfe < 0) throw ParameterError("negative DFE tap count");
  if (!(mu_ffe > 0.0) || !(mu_dfe > 0.0)) throw ParameterError("LMS step sizes must be positive");
  if (train_len < 0) throw ParameterError("negative training length");
}

double convergence_threshold(const ModFormat& format) {
  return 0.1 * format.spacing() * format.spacing();
}

Decision decide(double value, const ModFormat& format) {
  const auto levels = format.levels();
  std::size_t best = 0;
  double best_dist = std::abs(value - levels[0]);
  for (std::size_t i = 1; i < levels.size(); ++i) {
    const double d = std::abs(value - levels[i]);
    if (d < best_dist) {
      best = i;
      best_dist = d;
    }
  }
  return {levels[best], best, format.gray_label(best)};
}

void append_bits(const std::vector<std::uint8_t>& level_index, const ModFormat& format, BitStream& out) {
  const int bps = format.bits_per_symbol();
  out.bits.reserve(out.bits.size() + level_index.size() * static_cast<std::size_t>(bps));
  for (std::uint8_t idx : level_index) {
    const unsigned label = format.gray_label(idx);
    for (int b = bps - 1; b >= 0; --b) out.bits.push_back(static_cast<std::uint8_t>((label >> b) & 1u));
  }
}

EqResult lms_equalize(const Eigen::VectorXd& samples, const EqConfig& cfg, const TapSet& init,
                      const SymbolSeq& reference, const ModFormat& format) {
  cfg.validate();
  init.validate();
  if (init.ffe.size() != cfg.n_ffe || init.dfe.size() != cfg.n_dfe)
    throw ParameterError("initial taps do not match the equalizer configuration");
  const Index n = samples.size();
  const Index train = std::min(cfg.train_len, n);
  if (reference.size() < train) throw ParameterError("reference shorter than the training length");

  EqResult res;
  TapSet taps = init;
  const Index nf = taps.ffe.size();
  const Index nb = taps.dfe.size();
  const Index c = taps.ffe_center;

  res.output.resize(n);
  res.decisions.format = format;
  res.decisions.baud = reference.baud;
  res.decisions.symbols.resize(n);
  res.level_index.resize(static_cast<std::size_t>(n));
  res.trace.mse_per_symbol.resize(static_cast<std::size_t>(n));

  Eigen::VectorXd xwin(nf);
  Eigen::VectorXd dhist = Eigen::VectorXd::Zero(nb);
  for (Index i = 0; i < n; ++i) {
    for (Index k = 0; k < nf; ++k) {
      const Index idx = i - k + c;
      xwin[k] = (idx >= 0 && idx < n) ? samples[idx] : 0.0;
    }
    const double y = taps.ffe.dot(xwin) - (nb ? taps.dfe.dot(dhist) : 0.0);
    const Decision dec = decide(y, format);
    const bool training = i < train;
    const double desired = training ? reference.symbols[i] : dec.level;
    const double e = desired - y;
    if (training || cfg.adapt_after_training) {
      taps.ffe.noalias() += (cfg.mu_ffe * e) * xwin;
      if (nb) taps.dfe.noalias() -= (cfg.mu_dfe * e) * dhist;
    }
    if (nb) {
      for (Index j = nb - 1; j > 0; --j) dhist[j] = dhist[j - 1];
      dhist[0] = desired;
    }
    res.output[i] = y;
    res.decisions.symbols[i] = dec.level;
    res.level_index[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(dec.index);
    res.trace.mse_per_symbol[static_cast<std::size_t>(i)] = e * e;
  }

  if (!taps.ffe.allFinite() || !taps.dfe.allFinite()) throw NumericalError("LMS diverged");
  const std::size_t tail = std::min<std::size_t>(200, res.trace.mse_per_symbol.size());
  if (tail > 0) {
    double acc = 0.0;
    for (std::size_t i = res.trace.mse_per_symbol.size() - tail; i < res.trace.mse_per_symbol.size(); ++i)
      acc += res.trace.mse_per_symbol[i];
    res.trace.converged = acc / static_cast<double>(tail) < convergence_threshold(format);
  }
  res.trace.final_taps = std::move(taps);
  return res;
}

namespace {

// FFE regressor in terms of the transmitted symbols: row k of G gives the
// weights of s[n + offset] in x[n + center - k], columns ordered by offset.
struct SymbolModel {
  Eigen::MatrixXd g;
  Index min_offset = 0;

  Index column(Index offset) const { return offset - min_offset; }
  bool has(Index offset) const { return column(offset) >= 0 && column(offset) < g.cols(); }
};

SymbolModel build_model(const FirTaps& channel, Index n_ffe, Index ffe_center) {
  const Index len = channel.size();
  const Index ch = channel.center_index();
  SymbolModel m;
  m.min_offset = (ffe_center - (n_ffe - 1)) - (len - 1) + ch;
  const Index max_offset = ffe_center + ch;
  m.g = Eigen::MatrixXd::Zero(n_ffe, max_offset - m.min_offset + 1);
  for (Index k = 0; k < n_ffe; ++k)
    for (Index i = 0; i < len; ++i) m.g(k, m.column(ffe_center - k - i + ch)) += channel[i];
  return m;
}

}  // namespace

TapSet wiener_taps(const FirTaps& channel, double noise_var, Index n_ffe, Index n_dfe) {
  if (n_ffe < 1 || n_dfe < 0) throw ParameterError("tap counts must be n_ffe >= 1, n_dfe >= 0");
  if (!(noise_var >= 0.0)) throw ParameterError("noise variance must be nonnegative");
  TapSet taps = TapSet::identity(n_ffe, n_dfe);
  const SymbolModel m = build_model(channel, n_ffe, taps.ffe_center);

  // joint regressor u = [x window; -s[n-1-j]], so y = [ffe; dfe] . u
  const Index n = n_ffe + n_dfe;
  Eigen::MatrixXd r = Eigen::MatrixXd::Identity(n, n);
  r.topLeftCorner(n_ffe, n_ffe) = m.g * m.g.transpose();
  r.topLeftCorner(n_ffe, n_ffe).diagonal().array() += noise_var;
  for (Index j = 0; j < n_dfe; ++j) {
    if (!m.has(-1 - j)) continue;
    r.block(0, n_ffe + j, n_ffe, 1) = -m.g.col(m.column(-1 - j));
    r.block(n_ffe + j, 0, 1, n_ffe) = -m.g.col(m.column(-1 - j)).transpose();
  }
  Eigen::VectorXd p = Eigen::VectorXd::Zero(n);
  if (m.has(0)) p.head(n_ffe) = m.g.col(m.column(0));

  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod;
  cod.setThreshold(1e-10);
  cod.compute(r);
  if (cod.rank() == 0 || p.isZero(0.0)) {
    std::ostringstream os;
    os << "singular normal equations (rank " << cod.rank() << " of " << r.rows()
       << ", max pivot " << cod.maxPivot() << ")";
    throw NumericalError(os.str());
  }
  const Eigen::VectorXd theta = cod.solve(p);
  if (!theta.allFinite()) throw NumericalError("normal-equation solve produced non-finite taps");
  taps.ffe = theta.head(n_ffe);
  taps.dfe = theta.tail(n_dfe);
  return taps;
}

double wiener_mse(const FirTaps& channel, double noise_var, const TapSet& taps) {
  taps.validate();
  const SymbolModel m = build_model(channel, taps.ffe.size(), taps.ffe_center);
  Eigen::RowVectorXd err = -(taps.ffe.transpose() * m.g);
  double extra = 0.0;
  if (m.has(0)) err[m.column(0)] += 1.0; else extra += 1.0;
  for (Index j = 0; j < taps.dfe.size(); ++j) {
    // the DFE subtracts dfe[j] * s[n-1-j] from the output
    if (m.has(-1 - j)) err[m.column(-1 - j)] += taps.dfe[j];
    else extra += taps.dfe[j] * taps.dfe[j];
  }
  return err.squaredNorm() + extra + noise_var * taps.ffe.squaredNorm();
}

Index best_alignment(const Eigen::VectorXd& samples, const Eigen::VectorXd& reference, Index center,
                     Index max_offset) {
  const Index n = reference.size();
  const Index start = n / 2;
  Index best = center;
  double best_score = -std::numeric_limits<double>::infinity();
  for (Index j = center - max_offset; j <= center + max_offset; ++j) {
    double acc = 0.0;
    for (Index i = start; i < n; ++i) {
      const Index idx = i + j;
      if (idx >= 0 && idx < samples.size()) acc += samples[idx] * reference[i];
    }
    if (acc > best_score) {
      best_score = acc;
      best = j;
    }
  }
  return best;
}

}  // namespace ponlut
