// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.

#include <algorithm>
#include <array>
#include <bit>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "ponlut/cli.hpp"

using namespace ponlut;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

int failures = 0;

template <class F>
void criterion(int id, const std::string& name, F&& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Verdict v;
  try {
    body(v);
  } catch (const std::exception& e) {
    v.pass = false;
    v.detail << " [exception: " << e.what() << "]";
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!v.pass) ++failures;
  std::cout << (v.pass ? "PASS" : "FAIL") << " " << id << " " << name << ":" << v.detail.str() << " ("
            << std::fixed << std::setprecision(1) << secs << " s)" << std::endl;
  std::cout.unsetf(std::ios::floatfield);
}

unsigned workers() { return std::max(1u, std::thread::hardware_concurrency()); }

OnuProfile make_onu(FormatName f, double km, double rop) {
  return OnuProfile{canonical_onu_id(f, km, rop), ModFormat::from_name(f), km, rop};
}

template <class T>
T median(std::vector<T> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

// 1: power-difference phase model
void phase_model(Verdict& v) {
  const PhaseModelParams p{0.33, 2e8, 50e9};
  const double tau = phase_offset_ui(-20.0, -23.3, p);
  const double zero = phase_offset_ui(-20.0, -20.0, p);
  v.detail << " tau(3.3 dB)=" << std::setprecision(12) << tau << " tau(0)=" << zero;
  v.require(std::abs(tau - 2.5e6) <= 1e-9 * 2.5e6, "3.3 dB gives 2.5e6 UI");
  v.require(zero == 0.0, "equal powers give 0");
}

// 2: lock detector against a sliding-window scan
void lock_detector(Verdict& v) {
  CdrConfig cfg;
  auto oracle = [&](const std::vector<double>& err) -> std::optional<Index> {
    for (Index n = cfg.lock_window; n <= static_cast<Index>(err.size()); ++n) {
      bool ok = true;
      for (Index i = n - cfg.lock_window; i < n && ok; ++i) ok = err[static_cast<std::size_t>(i)] < cfg.lock_thresh_ui;
      if (ok) return n;
    }
    return std::nullopt;
  };
  std::mt19937_64 rng(2);
  std::bernoulli_distribution sign(0.5);
  const double truth = 0.62;
  std::map<std::string, std::vector<double>> suite;
  suite["constant-0"] = std::vector<double>(2000, 0.0);
  suite["constant-0.05"] = std::vector<double>(2000, 0.05);
  std::vector<double> decay;
  for (int n = 0; n < 4000; ++n) decay.push_back(0.2 * std::exp(-n / 300.0));
  suite["exp-decay"] = decay;
  int matched = 0;
  for (const auto& [name, err] : suite) {
    CdrTrace t;
    std::vector<double> seen;
    for (double e : err) {
      t.phase_ui.push_back(wrap_ui(truth + (sign(rng) ? e : -e)));
      seen.push_back(phase_distance_ui(t.phase_ui.back(), truth));
    }
    const auto got = detect_lock(t, truth, cfg);
    const auto want = oracle(seen);
    v.detail << " " << name << "=" << (got ? std::to_string(*got) : "none");
    if (got == want) ++matched;
    else v.require(false, name + " differs from the scan");
  }
  v.require(detect_lock(CdrTrace{std::vector<double>(2000, truth), {}, {}, 0.0}, truth, cfg) == cfg.lock_window,
            "zero error locks at the window");
  v.detail << " matched=" << matched << "/" << suite.size();
}

// 3: LMS against the closed-form taps on random channels
void equalizer_oracle(Verdict& v) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-0.4, 0.4);
  std::normal_distribution<double> g(0.0, 1.0);
  const Index n = 100000;
  EqConfig cfg;
  cfg.train_len = n;
  cfg.mu_ffe = cfg.mu_dfe = 4e-3;
  double worst = 0.0;
  for (int c = 0; c < 50; ++c) {
    const Index center = c % 2;
    Eigen::Vector3d h = center ? Eigen::Vector3d(u(rng), 1.0, u(rng)) : Eigen::Vector3d(1.0, u(rng), u(rng));
    const double nv = h.squaredNorm() / 100.0;  // 20 dB
    const SymbolSeq s = map_symbols(prbs15(static_cast<std::uint32_t>(100 + c), n), ModFormat::nrz());
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    for (Index i = 0; i < n; ++i) {
      for (Index k = 0; k < 3; ++k) {
        const Index j = i - k + center;
        if (j >= 0 && j < n) x[i] += h[k] * s.symbols[j];
      }
      x[i] += std::sqrt(nv) * g(rng);
    }
    const EqResult r = lms_equalize(x, cfg, TapSet::identity(cfg.n_ffe, cfg.n_dfe), s, ModFormat::nrz());
    const TapSet w = wiener_taps(FirTaps(h, center), nv, cfg.n_ffe, cfg.n_dfe);
    const double gap = std::max((r.trace.final_taps.ffe - w.ffe).cwiseAbs().maxCoeff(),
                                (r.trace.final_taps.dfe - w.dfe).cwiseAbs().maxCoeff());
    worst = std::max(worst, gap);
  }
  v.detail << " channels=50 snr=20dB training=" << n << " worst_inf_norm=" << worst;
  v.require(worst < 0.05, "all within 0.05");
}

double fir_db(const FirTaps& t, double f, double fs) {
  std::complex<double> acc{0, 0};
  for (Index k = 0; k < t.size(); ++k) acc += t[k] * std::polar(1.0, -2 * std::numbers::pi * f / fs * double(k));
  return 20 * std::log10(std::abs(acc));
}

// 4: bandwidth fit at the link rate
void channel_fit(Verdict& v) {
  const LinkParams p;
  const LinkChain chain(FormatName::NRZ, p);
  const CompositeFilter& f = chain.channel().filter;
  const double a = fir_db(f.taps, 3.8e9, f.sample_rate), b = fir_db(f.taps, 18.7e9, f.sample_rate);
  v.detail << " fs=" << f.sample_rate / 1e9 << "GSa/s H(3.8G)=" << a << "dB H(18.7G)=" << b << "dB";
  v.require(std::abs(a + 3.0) <= 0.1, "-3 dB point");
  v.require(std::abs(b + 10.0) <= 0.1, "-10 dB point");
}

struct Pool {
  std::size_t errors = 0, bits = 0;
  double ber() const { return bits ? double(errors) / double(bits) : 0.0; }
};

Pool pooled(const LinkChain& chain, const OnuProfile& onu, RxMode mode, Index preamble, const LutStore& store,
            std::size_t min_bits) {
  Pool p;
  for (std::uint64_t seed = 1; p.bits < min_bits; ++seed) {
    const BurstResult r = run_burst(BurstPlan{onu, preamble, 100000, seed}, mode, store, chain);
    p.errors += r.errors;
    p.bits += r.bits;
  }
  return p;
}

LutStore train_all(const LinkChain& chain, const std::vector<OnuProfile>& onus, LutStore store = {}) {
  for (const auto& o : onus) {
    auto [pe, te] = train_onu(o, chain);
    store.put(pe);
    store.put(te);
  }
  return store;
}

// 5: zero-preamble parity
void parity(Verdict& v) {
  const LinkParams p;
  const std::map<FormatName, std::vector<double>> grid{{FormatName::NRZ, {-28.0, -27.0}},
                                                       {FormatName::PAM4, {-25.0, -24.0}}};
  for (const auto& [f, rops] : grid) {
    const LinkChain chain(f, p);
    std::vector<OnuProfile> onus;
    for (double r : rops) onus.push_back(make_onu(f, 20, r));
    const LutStore store = train_all(chain, onus);
    for (const auto& onu : onus) {
      const Pool full = pooled(chain, onu, RxMode::FullLut, 0, store, 1000000);
      const Pool base = pooled(chain, onu, RxMode::NoLut, 5000, store, 1000000);
      const double pp = double(full.errors + base.errors) / double(full.bits + base.bits);
      const double se = std::sqrt(pp * (1 - pp) * (1.0 / double(full.bits) + 1.0 / double(base.bits)));
      const double z = se > 0 ? (full.ber() - base.ber()) / se : 0.0;
      v.detail << " " << onu.onu_id << ":full=" << full.ber() << ",nolut5000=" << base.ber() << ",z=" << z;
      v.require(full.bits >= 1000000 && base.bits >= 1000000, "1e6 bits per cell");
      v.require(base.errors > 0, onu.onu_id + " baseline resolved");
      v.require(std::abs(z) < 1.96, onu.onu_id + " within 95% binomial confidence");
    }
  }
}

// 6: preamble ordering at matched margin
void preamble_ordering(Verdict& v) {
  const LinkParams p;
  std::map<FormatName, std::map<RxMode, Index>> result;
  const std::map<FormatName, double> matched{{FormatName::NRZ, -28.0}, {FormatName::PAM4, -24.8}};
  for (const auto& [f, rop] : matched) {
    const LinkChain chain(f, p);
    const OnuProfile onu = make_onu(f, 20, rop);
    const LutStore store = train_all(chain, {onu});
    for (RxMode m : {RxMode::FullLut, RxMode::TapsLut, RxMode::NoLut}) {
      const MinPreambleReport rep = min_preamble(BurstPlan{onu, 0, 100000, 1}, m, store, chain);
      result[f][m] = rep.min_preamble;
      v.detail << " " << to_string(f) << "@" << rop << "/" << to_string(m) << "=" << rep.min_preamble;
    }
  }
  for (FormatName f : {FormatName::NRZ, FormatName::PAM4}) {
    const auto& r = result[f];
    const std::string tag(to_string(f));
    v.require(r.at(RxMode::FullLut) == 0, tag + " full table needs no preamble");
    v.require(r.at(RxMode::TapsLut) >= r.at(RxMode::FullLut), tag + " taps >= full");
    v.require(r.at(RxMode::NoLut) > r.at(RxMode::TapsLut), tag + " none > taps");
  }
  v.require(result[FormatName::PAM4][RxMode::NoLut] > result[FormatName::NRZ][RxMode::NoLut], "PAM4 > NRZ");
}

// 7: lock-time trends over SNR for one ONU
Index lock_median(double sigma, RxMode mode, int seeds, Index& window) {
  LinkParams p;
  p.noise.sigma_thermal = sigma;
  const LinkChain chain(FormatName::NRZ, p);
  const OnuProfile onu = make_onu(FormatName::NRZ, 20, -28.0);
  const LutStore store = train_all(chain, {onu});
  const Index never = chain.cdr_config().max_symbols;
  window = chain.cdr_config().lock_window;
  std::vector<Index> locks;
  for (int s = 1; s <= seeds; ++s) {
    const BurstPlan plan{onu, 0, 10000, static_cast<std::uint64_t>(s)};
    locks.push_back(run_burst(plan, mode, store, chain).lock_index.value_or(never));
  }
  return median(locks);
}

void lock_trends(Verdict& v) {
  const std::vector<double> sigmas{0.25, 0.20, 0.15, 0.10, 0.06, 0.02};  // rising SNR
  const int seeds = 64;
  Index prev = std::numeric_limits<Index>::max();
  Index window = 0;
  for (double sigma : sigmas) {
    const Index mn = lock_median(sigma, RxMode::NoLut, seeds, window);
    const Index mf = lock_median(sigma, RxMode::FullLut, seeds, window);
    v.detail << " sigma=" << sigma << ":nolut=" << mn << ",full=" << mf;
    v.require(mn <= prev, "median non-increasing at sigma " + std::to_string(sigma));
    v.require(mf == window, "full table locks at the window");
    v.require(mf < mn, "full table locks before the cold loop");
    prev = mn;
  }
  // below the checked range, noise jitter alone can exceed the lock threshold
  v.detail << " unchecked:sigma=0.3:full=" << lock_median(0.30, RxMode::FullLut, seeds, window);
}

// 8: BER against received power
void ber_monotone(Verdict& v) {
  const LinkParams p;
  const std::map<FormatName, std::vector<double>> rops{{FormatName::NRZ, {-29.0, -28.5, -28.0, -27.5, -27.0}},
                                                       {FormatName::PAM4, {-25.5, -25.0, -24.5, -24.0}}};
  const std::vector<double> distances{10.0, 20.0};
  for (const auto& [f, grid_rops] : rops) {
    const LinkChain chain(f, p);
    std::vector<OnuProfile> onus;
    for (double d : distances)
      for (double r : grid_rops) onus.push_back(make_onu(f, d, r));
    const LutStore store = train_all(chain, onus);
    SweepGrid g;
    g.formats = {f};
    g.distances_km = distances;
    g.rops_dbm = grid_rops;
    g.preambles = {0, 5000};
    g.modes = {RxMode::NoLut, RxMode::FullLut};
    g.seeds = {1, 2, 3};
    g.payload_len = 100000;
    const auto rows = sweep(g, [&](FormatName) -> const LinkChain& { return chain; }, store, workers());
    std::map<std::tuple<RxMode, double, Index>, std::map<double, std::vector<double>>> curves;
    for (const auto& r : rows) curves[{r.mode, r.distance_km, r.preamble_len}][r.rop_dbm].push_back(r.result.ber);
    for (const auto& [key, curve] : curves) {
      const auto& [mode, km, pre] = key;
      if (mode == RxMode::NoLut && pre == 0) continue;  // undecodable by design
      double last = std::numeric_limits<double>::infinity();
      std::ostringstream c;
      for (const auto& [rop, bers] : curve) {
        const double m = median(bers);
        c << (c.tellp() ? "," : "") << m;
        v.require(m <= last, std::string(to_string(f)) + " " + std::string(to_string(mode)) + " d" +
                                 std::to_string(int(km)) + " non-increasing at " + std::to_string(rop));
        last = m;
      }
      v.detail << " " << to_string(f) << "/" << to_string(mode) << "/L" << pre << "/d" << km << ":[" << c.str()
               << "]";
    }
    // distance enters only through power and phase
    for (double r : grid_rops) {
      const double a = chain.truth_phase(make_onu(f, distances[0], r));
      const double b = chain.truth_phase(make_onu(f, distances[1], r));
      v.require(a == b, "phase independent of distance label");
    }
  }
}

struct CliRun {
  int rc;
  std::string out;
};

CliRun cli(std::vector<std::string> args) {
  args.insert(args.begin(), "ponlut");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int rc = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {rc, out.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// 9: repeated commands give identical bytes
void determinism(Verdict& v) {
  const fs::path dir = fs::temp_directory_path() / "ponlut_acceptance";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const fs::path cfg = dir / "exp.ini";
  std::ofstream(cfg) << "[grid]\nformats = NRZ,PAM4\ndistances_km = 20\nnrz_rops_dbm = -28\npam4_rops_dbm = -24.8\n"
                        "preambles = 0,1000\nmodes = NoLut,TapsLut,FullLut\nseeds = 1,2\npayload_len = 20000\n"
                        "[lut]\ntraining_len = 10000\n[min_preamble]\nseeds = 1,2\n";
  int identical = 0, total = 0;
  auto same = [&](bool ok, const std::string& what) {
    ++total;
    identical += ok;
    v.require(ok, what);
  };
  const CliRun b1 = cli({"build-lut", "--config", cfg.string(), "--out", (dir / "a.lut").string(), "--seed", "7"});
  const CliRun b2 = cli({"build-lut", "--config", cfg.string(), "--out", (dir / "b.lut").string(), "--seed", "7"});
  v.require(b1.rc == 0 && b2.rc == 0, "build-lut succeeds");
  same(slurp(dir / "a.lut") == slurp(dir / "b.lut"), "LUT bytes");
  for (const std::string kind : {"ber-vs-preamble", "lock-vs-rop", "ber-vs-rop"}) {
    const CliRun s1 = cli({"sweep", kind, "--config", cfg.string(), "--lut", (dir / "a.lut").string(), "--seed", "7",
                           "--out", (dir / (kind + "1.csv")).string()});
    const CliRun s2 = cli({"sweep", kind, "--config", cfg.string(), "--lut", (dir / "a.lut").string(), "--seed", "7",
                           "--out", (dir / (kind + "2.csv")).string(), "--threads", "3"});
    v.require(s1.rc == 0 && s2.rc == 0, kind + " succeeds");
    same(slurp(dir / (kind + "1.csv")) == slurp(dir / (kind + "2.csv")), kind + " CSV bytes");
  }
  const CliRun m1 = cli({"min-preamble", "--config", cfg.string(), "--lut", (dir / "a.lut").string(), "--mode",
                         "FullLut", "--seed", "7"});
  const CliRun m2 = cli({"min-preamble", "--config", cfg.string(), "--lut", (dir / "a.lut").string(), "--mode",
                         "FullLut", "--seed", "7"});
  v.require(m1.rc == 0 && m2.rc == 0, "min-preamble succeeds");
  same(m1.out == m2.out, "min-preamble report");
  v.detail << " identical=" << identical << "/" << total;
  fs::remove_all(dir);
}

// 10: core unit properties
void unit_properties(Verdict& v) {
  const BitStream b = prbs15(0x4D2, 2 * 32767);
  bool periodic = true;
  std::size_t ones = 0;
  for (std::size_t i = 0; i < 32767; ++i) {
    periodic = periodic && b[i] == b[i + 32767];
    ones += b[i];
  }
  v.require(periodic, "PRBS15 period 32767");
  v.require(ones == 16384, "PRBS15 balance");

  double worst_isi = 0.0;
  for (double beta : {0.1, 0.35, 1.0}) {
    const Eigen::VectorXd c = rrc_taps(beta, 4, kRrcSpan).coefficients();
    const Index n = c.size(), mid = n - 1;
    Eigen::VectorXd full = Eigen::VectorXd::Zero(2 * n - 1);
    for (Index i = 0; i < n; ++i) full.segment(i, n) += c[i] * c;
    for (Index lag = 4; lag <= mid; lag += 4)
      worst_isi = std::max({worst_isi, std::abs(full[mid + lag]) / full[mid], std::abs(full[mid - lag]) / full[mid]});
  }
  v.require(worst_isi < 1e-3, "RRC matched-pair ISI");

  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u(-2, 2), mu(0, 1);
  double worst_cubic = 0.0;
  for (int rep = 0; rep < 1000; ++rep) {
    const double a = u(rng), bb = u(rng), c = u(rng), d = u(rng);
    auto poly = [&](double t) { return ((a * t + bb) * t + c) * t + d; };
    Eigen::VectorXd x(8);
    for (Index i = 0; i < 8; ++i) x[i] = poly(double(i));
    const double m = mu(rng);
    worst_cubic = std::max(worst_cubic, std::abs(farrow_interp(x, 3, m) - poly(3 + m)));
  }
  v.require(worst_cubic < 1e-9, "cubic exactness");

  const ModFormat pam4 = ModFormat::pam4();
  bool gray = true;
  for (std::size_t i = 0; i + 1 < pam4.num_levels(); ++i)
    gray = gray && std::popcount(pam4.gray_label(i) ^ pam4.gray_label(i + 1)) == 1;
  v.require(gray, "Gray adjacency");

  bool round_trip = true;
  std::normal_distribution<double> g(0.0, 0.3);
  for (int rep = 0; rep < 50 && round_trip; ++rep) {
    LutStore s;
    for (int i = 0; i < 8; ++i) {
      const std::string id = "onu" + std::to_string(rep) + "_" + std::to_string(i);
      s.put(PhaseLutEntry{id, mu(rng), rng()});
      TapSet t = TapSet::identity(i % 2 ? 31 : 15, 3);
      for (Index k = 0; k < t.ffe.size(); ++k) t.ffe[k] += g(rng);
      for (Index k = 0; k < 3; ++k) t.dfe[k] = g(rng);
      s.put(TapsLutEntry{id, i % 2 ? FormatName::PAM4 : FormatName::NRZ, t, rng()});
    }
    const fs::path path = fs::temp_directory_path() / "ponlut_acceptance_roundtrip.lut";
    save(s, path);
    round_trip = load(path) == s;
    fs::remove(path);
  }
  v.require(round_trip, "LUT save/load identity");
  v.detail << " prbs_ones=" << ones << " rrc_isi=" << worst_isi << " cubic_err=" << worst_cubic
           << " gray=" << gray << " lut_round_trip=" << round_trip;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> only;
  for (int i = 1; i < argc; ++i) only.push_back(std::atoi(argv[i]));
  auto want = [&](int id) { return only.empty() || std::find(only.begin(), only.end(), id) != only.end(); };
  std::cout << std::setprecision(4);

  if (want(1)) criterion(1, "phase offset from power difference", phase_model);
  if (want(2)) criterion(2, "lock criterion fidelity", lock_detector);
  if (want(3)) criterion(3, "equalizer oracle equivalence", equalizer_oracle);
  if (want(4)) criterion(4, "channel bandwidth fit", channel_fit);
  if (want(5)) criterion(5, "zero-preamble parity", parity);
  if (want(6)) criterion(6, "preamble ordering", preamble_ordering);
  if (want(7)) criterion(7, "lock-time trends", lock_trends);
  if (want(8)) criterion(8, "BER monotone in received power", ber_monotone);
  if (want(9)) criterion(9, "determinism", determinism);
  if (want(10)) criterion(10, "unit properties", unit_properties);
  return failures ? 1 : 0;
}
