#include "ponlut/txdsp.hpp"

#include <algorithm>
#include <cctype>

#include "ponlut/equalizer.hpp"

namespace ponlut {

std::string_view to_string(FormatName name) {
  switch (name) {
    case FormatName::NRZ:
      return "NRZ";
    case FormatName::PAM4:
      return "PAM4";
  }
  return "?";
}

FormatName parse_format(std::string_view text) {
  std::string upper(text);
  std::transform(upper.begin(), upper.end(), upper.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  if (upper == "NRZ") return FormatName::NRZ;
  if (upper == "PAM4") return FormatName::PAM4;
  throw ParameterError("unknown modulation format '" + std::string(text) + "'");
}

ModFormat ModFormat::nrz() { return ModFormat(FormatName::NRZ, 1, {-1.0, 1.0, 0.0, 0.0}); }

ModFormat ModFormat::pam4() {
  return ModFormat(FormatName::PAM4, 2, {-1.0, -1.0 / 3.0, 1.0 / 3.0, 1.0});
}

ModFormat ModFormat::from_name(FormatName name) {
  return name == FormatName::NRZ ? nrz() : pam4();
}

double ModFormat::mean_energy() const noexcept {
  double e = 0.0;
  for (double l : levels()) e += l * l;
  return e / static_cast<double>(num_levels());
}

unsigned ModFormat::gray_label(std::size_t index) const noexcept {
  return static_cast<unsigned>(index ^ (index >> 1));
}

std::size_t ModFormat::level_index(unsigned label) const noexcept {
  std::size_t index = label;
  for (unsigned shift = label >> 1; shift != 0; shift >>= 1) index ^= shift;
  return index;
}

TapSet TapSet::identity(Index n_ffe, Index n_dfe) {
  if (n_ffe < 1 || n_dfe < 0) throw ParameterError("tap counts must be n_ffe >= 1, n_dfe >= 0");
  TapSet t;
  t.ffe = Eigen::VectorXd::Zero(n_ffe);
  t.ffe_center = (n_ffe - 1) / 2;
  t.ffe[t.ffe_center] = 1.0;
  t.dfe = Eigen::VectorXd::Zero(n_dfe);
  return t;
}

void TapSet::validate() const {
  if (ffe.size() == 0) throw ParameterError("FFE must have at least one tap");
  if (ffe_center < 0 || ffe_center >= ffe.size()) throw ParameterError("FFE center out of range");
  if (!ffe.allFinite() || !dfe.allFinite()) throw ParameterError("tap coefficients must be finite");
}

SymbolSeq map_symbols(const BitStream& bits, const ModFormat& format, double baud) {
  if (!(baud > 0.0)) throw ParameterError("baud must be positive");
  const auto bps = static_cast<std::size_t>(format.bits_per_symbol());
  if (bits.size() % bps != 0)
    throw FramingError("bit count " + std::to_string(bits.size()) + " is not a multiple of " +
                       std::to_string(bps));
  const std::size_t n = bits.size() / bps;
  SymbolSeq out;
  out.format = format;
  out.baud = baud;
  out.symbols.resize(static_cast<Index>(n));
  const auto levels = format.levels();
  for (std::size_t i = 0; i < n; ++i) {
    unsigned label = 0;
    for (std::size_t b = 0; b < bps; ++b) label = (label << 1) | (bits[i * bps + b] & 1u);
    out.symbols[static_cast<Index>(i)] = levels[format.level_index(label)];
  }
  return out;
}

TapSet design_preemphasis(const FirTaps& channel, double noise_var, Index n_ffe, Index n_dfe) {
  return wiener_taps(channel, noise_var, n_ffe, n_dfe);
}

TapSet normalize_precoder_peak(const TapSet& taps) {
  taps.validate();
  // impulse response of the precoder, long enough for the DFE recursion to die out
  const Index len = 64 * (taps.ffe.size() + taps.dfe.size() + 1);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(len);
  for (Index n = 0; n < len; ++n) {
    double v = n < taps.ffe.size() ? taps.ffe[n] : 0.0;
    for (Index j = 0; j < taps.dfe.size() && n - 1 - j >= 0; ++j) v -= taps.dfe[j] * out[n - 1 - j];
    out[n] = v;
  }
  const double l1 = out.cwiseAbs().sum();
  if (!(l1 > 0.0) || !std::isfinite(l1)) throw NumericalError("precoder response is degenerate");
  TapSet scaled = taps;
  scaled.ffe /= l1;
  return scaled;
}

SymbolSeq pre_emphasize(const SymbolSeq& s, const TapSet& taps, double clip) {
  taps.validate();
  if (!(clip > 0.0)) throw ParameterError("clip level must be positive");
  const Index n = s.size();
  const Index m = taps.ffe.size();
  const Index c = taps.ffe_center;
  SymbolSeq out = s;
  for (Index i = 0; i < n; ++i) {
    double v = 0.0;
    for (Index k = 0; k < m; ++k) {
      const Index idx = i - k + c;
      if (idx >= 0 && idx < n) v += taps.ffe[k] * s.symbols[idx];
    }
    for (Index j = 0; j < taps.dfe.size() && i - 1 - j >= 0; ++j) v -= taps.dfe[j] * out.symbols[i - 1 - j];
    out.symbols[i] = std::clamp(v, -clip, clip);
  }
  return out;
}

Waveform shape(const SymbolSeq& s, int sps, double rolloff, int span) {
  if (sps < 2) throw ParameterError("shaping needs at least 2 samples per symbol");
  const FirTaps rrc = rrc_taps(rolloff, sps, span);
  const Index n_sym = s.size();
  const Index n = n_sym * sps;
  const Index c = rrc.center_index();
  const auto& h = rrc.coefficients();
  Eigen::VectorXd y = Eigen::VectorXd::Zero(n);
  // only every sps-th input sample is nonzero: y[i] = sum_m s[m] h[i + c - m*sps]
  for (Index i = 0; i < n; ++i) {
    const Index m_lo = std::max<Index>(0, (i + c - (h.size() - 1) + sps - 1) / sps);
    const Index m_hi = std::min<Index>(n_sym - 1, (i + c) / sps);
    double acc = 0.0;
    for (Index m = m_lo; m <= m_hi; ++m) acc += s.symbols[m] * h[i + c - m * sps];
    y[i] = acc;
  }
  return Waveform(std::move(y), s.baud * sps);
}

}  // namespace ponlut
