#include "ponlut/burstline.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <map>
#include <mutex>
#include <span>
#include <thread>
#include <tuple>

namespace ponlut {

namespace {

std::string short_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

// Resampling chain of the receiver without the amplitude normalization.
Waveform capture(const Waveform& link_out, const LinkParams& p) {
  Waveform w = p.adc_rate > 0.0 ? resample(link_out, p.adc_rate) : link_out;
  return resample(w, 2.0 * p.baud);
}

}  // namespace

struct TruthCache {
  std::mutex mu;
  std::map<std::string, double> phase;
};

LinkChain::LinkChain(FormatName format, const LinkParams& params)
    : format_(ModFormat::from_name(format)), params_(params), cache_(std::make_shared<TruthCache>()) {
  if (params_.tx_sps < 2) throw ParameterError("transmit oversampling must be at least 2");
  if (params_.guard < 2 * kLeadSymbols) throw ParameterError("guard must be at least 32 symbols");
  channel_ = make_channel_config(link_rate(), params_.f3db, params_.f10db);
  channel_.preamp = params_.preamp;
  channel_.preamp_gain_db = params_.preamp_gain_db;
  channel_.noise = params_.noise;
  channel_.rng_seed = params_.rng_seed;

  // Symbol-spaced pulse response: one +1 symbol through shaping, the link
  // filter and the receive resamplers, sampled at its peak.
  const Index pad = params_.guard;
  SymbolSeq impulse;
  impulse.format = format_;
  impulse.baud = params_.baud;
  impulse.symbols = Eigen::VectorXd::Zero(2 * pad + 1);
  impulse.symbols[pad] = 1.0;
  const Waveform tx = shape(impulse, params_.tx_sps, params_.rolloff, params_.rrc_span);
  const Waveform rx = capture(fir_same(tx, channel_.filter.taps), params_);
  Index peak = 0;
  rx.samples().cwiseAbs().maxCoeff(&peak);
  double best_t = static_cast<double>(peak);
  double best_v = std::abs(rx[peak]);
  for (int i = -200; i <= 200; ++i) {
    const double t = static_cast<double>(peak) + i * 0.005;
    const auto b = static_cast<Index>(std::floor(t));
    if (b - 1 < 0 || b + 2 >= rx.size()) continue;
    const double v = std::abs(farrow_interp(rx, b, t - std::floor(t)));
    if (v > best_v) {
      best_v = v;
      best_t = t;
    }
  }
  constexpr Index kPre = 4, kPost = 20;
  Eigen::VectorXd h = Eigen::VectorXd::Zero(kPre + kPost + 1);
  for (Index k = 0; k < h.size(); ++k) {
    const double t = best_t + 2.0 * static_cast<double>(k - kPre);
    const auto b = static_cast<Index>(std::floor(t));
    if (b - 1 >= 0 && b + 2 < rx.size()) h[k] = farrow_interp(rx, b, t - std::floor(t));
  }
  h /= h.norm();
  symbol_channel_ = FirTaps(std::move(h), kPre);

  const bool nrz = format == FormatName::NRZ;
  precoder_ = normalize_precoder_peak(design_preemphasis(symbol_channel_, params_.precoder_noise_var,
                                                         nrz ? params_.nrz_tx_ffe : params_.pam4_tx_ffe,
                                                         nrz ? params_.nrz_tx_dfe : params_.pam4_tx_dfe));
}

CdrConfig LinkChain::cdr_config() const {
  CdrConfig cfg = params_.cdr;
  cfg.symbol_energy = format_.mean_energy();
  if (params_.ted_band_halfwidth > 0.0 && cfg.ted_prefilter.size() == 0)
    cfg.ted_prefilter = band_edge_prefilter(params_.ted_band_halfwidth, params_.ted_band_half_len);
  return cfg;
}

Waveform LinkChain::transmit(const SymbolSeq& symbols) const {
  const SymbolSeq pre = pre_emphasize(symbols, precoder_, params_.precoder_clip);
  SymbolSeq padded = pre;
  padded.symbols = Eigen::VectorXd::Zero(pre.size() + 2 * params_.guard);
  padded.symbols.segment(params_.guard, pre.size()) = pre.symbols;
  return shape(padded, params_.tx_sps, params_.rolloff, params_.rrc_span);
}

Waveform LinkChain::receive_front_end(const Waveform& link_out) const {
  const Waveform w = capture(link_out, params_);
  const Index start = std::min<Index>(2 * (params_.guard - kLeadSymbols), w.size());
  Eigen::VectorXd trimmed = w.samples().tail(w.size() - start);
  return normalize_rms(Waveform(std::move(trimmed), w.sample_rate()), std::sqrt(format_.mean_energy()));
}

LinkChain::Burst LinkChain::simulate(const OnuProfile& onu, Index n_symbols, std::uint64_t seed, bool noise) const {
  Burst b{SymbolSeq{}, BitStream{}, Waveform(Eigen::VectorXd::Zero(1), 1.0)};
  b.bits = prbs15(prbs_seed(seed), static_cast<std::size_t>(n_symbols * format_.bits_per_symbol()));
  b.symbols = map_symbols(b.bits, format_, params_.baud);
  ChannelConfig cfg = channel_;
  cfg.enable_noise = noise;
  PhaseModelParams pm = params_.phase;
  pm.baud = params_.baud;
  b.rx = receive_front_end(apply_link(transmit(b.symbols), onu, params_.ref_rop_dbm, cfg, pm, seed));
  return b;
}

double LinkChain::truth_phase(const OnuProfile& onu) const {
  {
    std::lock_guard lock(cache_->mu);
    const auto it = cache_->phase.find(onu.onu_id + "|" + short_double(onu.rop_dbm));
    if (it != cache_->phase.end()) return it->second;
  }
  const Burst b = simulate(onu, 4096, 0x7A11, false);
  const double es = format_.mean_energy();
  const CdrConfig cc = cdr_config();
  const Waveform det = cc.ted_prefilter.size() > 0
                           ? fir_same(b.rx, FirTaps(cc.ted_prefilter, (cc.ted_prefilter.size() - 1) / 2))
                           : b.rx;
  constexpr int kGrid = 64;
  std::vector<double> s(kGrid);
  for (int i = 0; i < kGrid; ++i) s[i] = mean_ted_at_phase(det, static_cast<double>(i) / kGrid, es);

  double best_phase = 0.0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < kGrid; ++i) {
    const int j = (i + 1) % kGrid;
    if (!(s[i] < 0.0 && s[j] >= 0.0)) continue;
    // bisection on the rising zero crossing
    double lo = static_cast<double>(i) / kGrid;
    double hi = lo + 1.0 / kGrid;
    for (int it = 0; it < 40; ++it) {
      const double mid = 0.5 * (lo + hi);
      (mean_ted_at_phase(det, wrap_ui(mid), es) < 0.0 ? lo : hi) = mid;
    }
    const double phase = wrap_ui(0.5 * (lo + hi));
    const Eigen::VectorXd y = strobe_samples(b.rx, phase);
    const Index off = best_alignment(y, b.symbols.symbols, nominal_offset(), 16);
    const Eigen::VectorXd x = slice_symbols(y, off, b.symbols.size());
    const double score = x.dot(b.symbols.symbols) / (x.norm() * b.symbols.symbols.norm() + 1e-300);
    if (score > best_score) {
      best_score = score;
      best_phase = phase;
    }
  }
  // long-run average of the noise-free loop
  const Burst settle = simulate(onu, 16384, 0x7A12, false);
  const CdrResult run = cdr_run(settle.rx, cc, best_phase);
  const std::span<const double> ph(run.trace.phase_ui);
  best_phase = circular_mean_ui(ph.last(ph.size() / 2));

  std::lock_guard lock(cache_->mu);
  cache_->phase.emplace(onu.onu_id + "|" + short_double(onu.rop_dbm), best_phase);
  return best_phase;
}

std::uint32_t prbs_seed(std::uint64_t seed) {
  return static_cast<std::uint32_t>(seed % 0x7FFFu) + 1u;
}

std::string canonical_onu_id(FormatName format, double distance_km, double rop_dbm) {
  return std::string(to_string(format)) + "_d" + short_double(distance_km) + "_r" + short_double(rop_dbm);
}

OnuProfile onu_from_distance(FormatName format, double distance_km, const LinkParams& params,
                             double extra_loss_db) {
  if (!(distance_km >= 0.0)) throw ParameterError("distance must be nonnegative");
  const double launch = format == FormatName::NRZ ? params.nrz_launch_dbm : params.pam4_launch_dbm;
  const double rop = launch - params.phase.alpha_db_per_km * distance_km - extra_loss_db;
  return OnuProfile{canonical_onu_id(format, distance_km, rop), ModFormat::from_name(format), distance_km, rop};
}

std::string_view to_string(RxMode mode) {
  switch (mode) {
    case RxMode::NoLut:
      return "NoLut";
    case RxMode::TapsLut:
      return "TapsLut";
    case RxMode::FullLut:
      return "FullLut";
  }
  return "?";
}

RxMode parse_mode(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  std::erase(lower, '-');
  std::erase(lower, '_');
  if (lower == "nolut") return RxMode::NoLut;
  if (lower == "tapslut") return RxMode::TapsLut;
  if (lower == "fulllut") return RxMode::FullLut;
  throw ParameterError("unknown receiver mode '" + std::string(text) + "'");
}

BurstResult run_burst(const BurstPlan& plan, RxMode mode, const LutStore& store, const LinkChain& chain) {
  if (plan.preamble_len < 0 || plan.payload_len < 1) throw ParameterError("burst needs a nonempty payload");
  if (!(plan.onu.format == chain.format())) throw ParameterError("ONU format does not match the link chain");
  const ModFormat& fmt = chain.format();

  std::optional<TapSet> lut_taps;
  std::optional<double> lut_phase;
  if (mode != RxMode::NoLut) {
    lut_taps = store.lookup_taps(plan.onu.onu_id, fmt.name());
    if (!lut_taps)
      throw ConfigError("no taps LUT entry for ONU '" + plan.onu.onu_id + "' (" + std::string(to_string(fmt.name())) +
                        "); run build-lut first");
  }
  if (mode == RxMode::FullLut) {
    lut_phase = store.lookup_phase(plan.onu.onu_id);
    if (!lut_phase) throw ConfigError("no phase LUT entry for ONU '" + plan.onu.onu_id + "'; run build-lut first");
  }

  const Index n = plan.preamble_len + plan.payload_len;
  const LinkChain::Burst burst = chain.simulate(plan.onu, n, plan.seed);
  const double truth = chain.truth_phase(plan.onu);
  const CdrConfig cdr_cfg = chain.cdr_config();
  const double initial = mode == RxMode::FullLut ? *lut_phase : wrap_ui(truth + 0.5);
  const CdrResult cdr = cdr_run(burst.rx, cdr_cfg, initial);

  const Index offset = best_alignment(cdr.samples, burst.symbols.symbols, chain.nominal_offset(), 16);
  const Eigen::VectorXd x = slice_symbols(cdr.samples, offset, n);
  EqConfig eq_cfg = chain.eq_config();
  eq_cfg.train_len = plan.preamble_len;
  eq_cfg.mode = mode == RxMode::NoLut ? EqMode::ColdStart : EqMode::WarmStart;
  const TapSet init = lut_taps ? *lut_taps : TapSet::identity(eq_cfg.n_ffe, eq_cfg.n_dfe);
  const EqResult eq = lms_equalize(x, eq_cfg, init, burst.symbols, fmt);

  BitStream rx_bits;
  append_bits(eq.level_index, fmt, rx_bits);
  const ErrorCount ec =
      count_errors(burst.bits, rx_bits, static_cast<std::size_t>(plan.preamble_len * fmt.bits_per_symbol()));

  BurstResult r;
  r.errors = ec.errors;
  r.bits = ec.compared;
  r.ber = ec.ber();
  r.lock_index = detect_lock(cdr.trace, truth, cdr_cfg);
  r.eq_converged = eq.trace.converged;
  r.mode = mode;
  return r;
}

std::pair<PhaseLutEntry, TapsLutEntry> train_onu(const OnuProfile& onu, const LinkChain& chain, Index training_len,
                                                 std::uint64_t seed, std::uint64_t measured_at) {
  const LinkChain::Burst b = chain.simulate(onu, training_len, seed);
  TrainingBurst tb{b.rx, b.symbols, chain.nominal_offset()};
  return build_entry(tb, onu, chain.cdr_config(), chain.eq_config(), measured_at);
}

namespace {

ErrorCount pooled(const BurstPlan& tmpl, Index preamble, RxMode mode, const LutStore& store, const LinkChain& chain,
                  const std::vector<std::uint64_t>& seeds) {
  ErrorCount acc;
  for (const std::uint64_t seed : seeds) {
    BurstPlan p = tmpl;
    p.preamble_len = preamble;
    p.seed = seed;
    const BurstResult r = run_burst(p, mode, store, chain);
    acc.errors += r.errors;
    acc.compared += r.bits;
  }
  return acc;
}

}  // namespace

MinPreambleReport min_preamble(const BurstPlan& plan_template, RxMode mode, const LutStore& store,
                               const LinkChain& chain, const MinPreambleOptions& opts) {
  if (opts.seeds.empty()) throw ParameterError("min_preamble needs at least one seed");
  if (opts.resolution < 1 || opts.max_preamble < opts.resolution) throw ParameterError("bad preamble search range");
  const ErrorCount base = pooled(plan_template, opts.baseline_preamble, RxMode::NoLut, store, chain, opts.seeds);
  if (base.errors == 0) throw BaselineError("baseline unresolved; increase payload");
  MinPreambleReport rep;
  rep.baseline_ber = base.ber();
  const double target = opts.target_ber_ratio * rep.baseline_ber;

  auto ber_at = [&](Index len) { return pooled(plan_template, len, mode, store, chain, opts.seeds).ber(); };
  const double at0 = ber_at(0);
  if (at0 <= target) {
    rep.min_preamble = 0;
    rep.achieved_ber = at0;
    return rep;
  }
  Index lo = 0;  // fails
  Index hi = opts.max_preamble / opts.resolution * opts.resolution;
  double hi_ber = ber_at(hi);
  if (hi_ber > target)
    throw Error("no preamble up to " + std::to_string(hi) + " symbols reaches the target BER");
  while (hi - lo > opts.resolution) {
    const Index mid = (lo + hi) / 2 / opts.resolution * opts.resolution;
    const Index probe = mid == lo ? lo + opts.resolution : mid;
    const double b = ber_at(probe);
    if (b <= target) {
      hi = probe;
      hi_ber = b;
    } else {
      lo = probe;
    }
  }
  rep.min_preamble = hi;
  rep.achieved_ber = hi_ber;
  return rep;
}

bool row_less(const SweepRow& a, const SweepRow& b) {
  return std::tie(a.format, a.mode, a.distance_km, a.rop_dbm, a.preamble_len, a.seed) <
         std::tie(b.format, b.mode, b.distance_km, b.rop_dbm, b.preamble_len, b.seed);
}

std::vector<SweepRow> sweep(const SweepGrid& grid, const std::function<const LinkChain&(FormatName)>& chains,
                            const LutStore& store, unsigned threads) {
  std::vector<SweepRow> rows;
  for (FormatName f : grid.formats)
    for (RxMode m : grid.modes)
      for (double d : grid.distances_km)
        for (double r : grid.rops_dbm)
          for (Index pre : grid.preambles)
            for (std::uint64_t s : grid.seeds) rows.push_back(SweepRow{f, m, d, r, pre, s, {}});
  if (rows.empty()) throw ParameterError("sweep grid is empty");
  std::sort(rows.begin(), rows.end(), row_less);

  // resolve chains up front so workers only read
  for (FormatName f : grid.formats) (void)chains(f);

  auto run_cell = [&](SweepRow& row) {
    const LinkChain& chain = chains(row.format);
    BurstPlan plan;
    plan.onu = OnuProfile{canonical_onu_id(row.format, row.distance_km, row.rop_dbm), ModFormat::from_name(row.format),
                          row.distance_km, row.rop_dbm};
    plan.preamble_len = row.preamble_len;
    plan.payload_len = grid.payload_len;
    plan.seed = row.seed;
    row.result = run_burst(plan, row.mode, store, chain);
  };

  const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(rows.size())));
  if (workers == 1) {
    for (SweepRow& row : rows) run_cell(row);
    return rows;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < workers; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < rows.size(); i = next++) {
        try {
          run_cell(rows[i]);
        } catch (...) {
          std::lock_guard lock(failure_mu);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
  return rows;
}

}  // namespace ponlut
