#include "ponlut/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <thread>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "CLI11.hpp"

namespace ponlut {

namespace {

std::string fmt(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

template <class T>
std::string fmt_int(T v) {
  return std::to_string(v);
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  if (trim(s).empty()) return out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  for (const auto& item : out)
    if (item.empty()) throw ConfigError("empty item in list '" + std::string(s) + "'");
  return out;
}

double to_double(const std::string& s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size() || !std::isfinite(v))
    throw ConfigError("expected a number, got '" + s + "'");
  return v;
}

std::int64_t to_int(const std::string& s) {
  std::int64_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw ConfigError("expected an integer, got '" + s + "'");
  return v;
}

std::uint64_t to_uint(const std::string& s) {
  std::uint64_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw ConfigError("expected a nonnegative integer, got '" + s + "'");
  return v;
}

bool to_bool(const std::string& s) {
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ConfigError("expected a boolean, got '" + s + "'");
}

template <class T, class F>
std::string join(const std::vector<T>& v, F&& f) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += f(v[i]);
  }
  return out;
}

template <class T, class F>
std::vector<T> parse_list(const std::string& s, F&& f) {
  std::vector<T> out;
  for (const auto& item : split(s, ',')) out.push_back(f(item));
  return out;
}

FormatName format_of(const std::string& s) {
  try {
    return parse_format(s);
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
}

RxMode mode_of(const std::string& s) {
  try {
    return parse_mode(s);
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
}

std::string onu_text(const OnuSpec& o) {
  return std::string(to_string(o.format)) + ":" + fmt(o.distance_km) + ":" + fmt(o.rop_dbm);
}

OnuSpec onu_of(const std::string& s) {
  const auto parts = split(s, ':');
  if (parts.size() != 3) throw ConfigError("ONU must be FORMAT:distance_km:rop_dbm, got '" + s + "'");
  return OnuSpec{format_of(parts[0]), to_double(parts[1]), to_double(parts[2])};
}

struct Field {
  std::string section;
  std::string key;
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, const std::string&)> set;
};

#define PONLUT_REAL(sec, name, expr)                                         \
  Field {                                                                    \
    sec, name, [](const ExperimentConfig& c) { return fmt(c.expr); },        \
        [](ExperimentConfig& c, const std::string& v) { c.expr = to_double(v); } \
  }
#define PONLUT_INT(sec, name, expr)                                                              \
  Field {                                                                                        \
    sec, name, [](const ExperimentConfig& c) { return fmt_int(c.expr); },                        \
        [](ExperimentConfig& c, const std::string& v) { c.expr = static_cast<decltype(c.expr)>(to_int(v)); } \
  }
#define PONLUT_UINT(sec, name, expr)                                                              \
  Field {                                                                                         \
    sec, name, [](const ExperimentConfig& c) { return fmt_int(c.expr); },                         \
        [](ExperimentConfig& c, const std::string& v) { c.expr = static_cast<decltype(c.expr)>(to_uint(v)); } \
  }
#define PONLUT_BOOL(sec, name, expr)                                                   \
  Field {                                                                              \
    sec, name, [](const ExperimentConfig& c) { return std::string(c.expr ? "true" : "false"); }, \
        [](ExperimentConfig& c, const std::string& v) { c.expr = to_bool(v); }        \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      PONLUT_REAL("link", "baud", link.baud),
      PONLUT_REAL("link", "rolloff", link.rolloff),
      PONLUT_INT("link", "tx_sps", link.tx_sps),
      PONLUT_INT("link", "rrc_span", link.rrc_span),
      PONLUT_REAL("link", "adc_rate", link.adc_rate),
      PONLUT_REAL("link", "f3db", link.f3db),
      PONLUT_REAL("link", "f10db", link.f10db),
      PONLUT_REAL("link", "alpha_db_per_km", link.phase.alpha_db_per_km),
      PONLUT_REAL("link", "velocity_m_per_s", link.phase.velocity_m_per_s),
      PONLUT_REAL("link", "ref_rop_dbm", link.ref_rop_dbm),
      PONLUT_INT("link", "guard", link.guard),
      PONLUT_REAL("link", "nrz_launch_dbm", link.nrz_launch_dbm),
      PONLUT_REAL("link", "pam4_launch_dbm", link.pam4_launch_dbm),
      PONLUT_REAL("tx", "precoder_clip", link.precoder_clip),
      PONLUT_REAL("tx", "precoder_noise_var", link.precoder_noise_var),
      PONLUT_INT("tx", "nrz_ffe", link.nrz_tx_ffe),
      PONLUT_INT("tx", "nrz_dfe", link.nrz_tx_dfe),
      PONLUT_INT("tx", "pam4_ffe", link.pam4_tx_ffe),
      PONLUT_INT("tx", "pam4_dfe", link.pam4_tx_dfe),
      PONLUT_REAL("noise", "sigma_thermal", link.noise.sigma_thermal),
      PONLUT_REAL("noise", "beat_coeff", link.noise.beat_coeff),
      PONLUT_REAL("noise", "rop_ref_dbm", link.noise.rop_ref_dbm),
      PONLUT_REAL("noise", "amplitude_ref", link.noise.amplitude_ref),
      PONLUT_BOOL("noise", "preamp", link.preamp),
      PONLUT_REAL("noise", "preamp_gain_db", link.preamp_gain_db),
      PONLUT_UINT("noise", "rng_seed", link.rng_seed),
      PONLUT_REAL("cdr", "kp", link.cdr.kp),
      PONLUT_REAL("cdr", "ki", link.cdr.ki),
      PONLUT_INT("cdr", "lock_window", link.cdr.lock_window),
      PONLUT_REAL("cdr", "lock_thresh_ui", link.cdr.lock_thresh_ui),
      PONLUT_INT("cdr", "max_symbols", link.cdr.max_symbols),
      PONLUT_REAL("cdr", "ted_band_halfwidth", link.ted_band_halfwidth),
      PONLUT_INT("cdr", "ted_band_half_len", link.ted_band_half_len),
      PONLUT_INT("eq", "nrz_ffe", link.eq_nrz.n_ffe),
      PONLUT_INT("eq", "nrz_dfe", link.eq_nrz.n_dfe),
      PONLUT_REAL("eq", "nrz_mu_ffe", link.eq_nrz.mu_ffe),
      PONLUT_REAL("eq", "nrz_mu_dfe", link.eq_nrz.mu_dfe),
      PONLUT_INT("eq", "pam4_ffe", link.eq_pam4.n_ffe),
      PONLUT_INT("eq", "pam4_dfe", link.eq_pam4.n_dfe),
      PONLUT_REAL("eq", "pam4_mu_ffe", link.eq_pam4.mu_ffe),
      PONLUT_REAL("eq", "pam4_mu_dfe", link.eq_pam4.mu_dfe),
      Field{"eq", "adapt_after_training",
            [](const ExperimentConfig& c) { return std::string(c.link.eq_nrz.adapt_after_training ? "true" : "false"); },
            [](ExperimentConfig& c, const std::string& v) {
              c.link.eq_nrz.adapt_after_training = c.link.eq_pam4.adapt_after_training = to_bool(v);
            }},
      Field{"grid", "formats",
            [](const ExperimentConfig& c) { return join(c.formats, [](FormatName f) { return std::string(to_string(f)); }); },
            [](ExperimentConfig& c, const std::string& v) { c.formats = parse_list<FormatName>(v, format_of); }},
      Field{"grid", "distances_km", [](const ExperimentConfig& c) { return join(c.distances_km, fmt); },
            [](ExperimentConfig& c, const std::string& v) { c.distances_km = parse_list<double>(v, to_double); }},
      Field{"grid", "rops_dbm", [](const ExperimentConfig& c) { return join(c.rops_dbm, fmt); },
            [](ExperimentConfig& c, const std::string& v) { c.rops_dbm = parse_list<double>(v, to_double); }},
      Field{"grid", "nrz_rops_dbm", [](const ExperimentConfig& c) { return join(c.nrz_rops_dbm, fmt); },
            [](ExperimentConfig& c, const std::string& v) { c.nrz_rops_dbm = parse_list<double>(v, to_double); }},
      Field{"grid", "pam4_rops_dbm", [](const ExperimentConfig& c) { return join(c.pam4_rops_dbm, fmt); },
            [](ExperimentConfig& c, const std::string& v) { c.pam4_rops_dbm = parse_list<double>(v, to_double); }},
      Field{"grid", "preambles", [](const ExperimentConfig& c) { return join(c.preambles, fmt_int<Index>); },
            [](ExperimentConfig& c, const std::string& v) {
              c.preambles = parse_list<Index>(v, [](const std::string& s) { return static_cast<Index>(to_int(s)); });
            }},
      Field{"grid", "modes",
            [](const ExperimentConfig& c) { return join(c.modes, [](RxMode m) { return std::string(to_string(m)); }); },
            [](ExperimentConfig& c, const std::string& v) { c.modes = parse_list<RxMode>(v, mode_of); }},
      Field{"grid", "seeds", [](const ExperimentConfig& c) { return join(c.seeds, fmt_int<std::uint64_t>); },
            [](ExperimentConfig& c, const std::string& v) { c.seeds = parse_list<std::uint64_t>(v, to_uint); }},
      PONLUT_INT("grid", "payload_len", payload_len),
      PONLUT_INT("grid", "ber_preamble", ber_preamble),
      PONLUT_INT("lut", "training_len", training_len),
      PONLUT_UINT("lut", "training_seed", training_seed),
      Field{"population", "onus",
            [](const ExperimentConfig& c) { return c.population ? join(*c.population, onu_text) : std::string("grid"); },
            [](ExperimentConfig& c, const std::string& v) {
              if (v == "grid")
                c.population.reset();
              else
                c.population = parse_list<OnuSpec>(v, onu_of);
            }},
      PONLUT_REAL("min_preamble", "target_ber_ratio", min_preamble.target_ber_ratio),
      PONLUT_INT("min_preamble", "baseline_preamble", min_preamble.baseline_preamble),
      PONLUT_INT("min_preamble", "max_preamble", min_preamble.max_preamble),
      PONLUT_INT("min_preamble", "resolution", min_preamble.resolution),
      Field{"min_preamble", "seeds", [](const ExperimentConfig& c) { return join(c.min_preamble.seeds, fmt_int<std::uint64_t>); },
            [](ExperimentConfig& c, const std::string& v) { c.min_preamble.seeds = parse_list<std::uint64_t>(v, to_uint); }},
  };
  return table;
}

#undef PONLUT_REAL
#undef PONLUT_INT
#undef PONLUT_UINT
#undef PONLUT_BOOL

void validate(const ExperimentConfig& c) {
  if (c.formats.empty()) throw ConfigError("grid.formats must not be empty");
  if (c.distances_km.empty()) throw ConfigError("grid.distances_km must not be empty");
  for (FormatName f : c.formats)
    if (c.rops_for(f).empty()) throw ConfigError("no received powers configured for " + std::string(to_string(f)));
  if (c.preambles.empty() || c.modes.empty() || c.seeds.empty())
    throw ConfigError("grid.preambles, grid.modes and grid.seeds must not be empty");
  for (Index p : c.preambles)
    if (p < 0) throw ConfigError("preamble lengths must be nonnegative");
  if (c.payload_len < 1) throw ConfigError("grid.payload_len must be positive");
  if (c.ber_preamble < 0) throw ConfigError("grid.ber_preamble must be nonnegative");
  if (c.training_len < 1) throw ConfigError("lut.training_len must be positive");
  if (c.min_preamble.seeds.empty()) throw ConfigError("min_preamble.seeds must not be empty");
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001B3ull;
  }
  return h;
}

}  // namespace

const std::vector<double>& ExperimentConfig::rops_for(FormatName f) const {
  if (f == FormatName::NRZ && !nrz_rops_dbm.empty()) return nrz_rops_dbm;
  if (f == FormatName::PAM4 && !pam4_rops_dbm.empty()) return pam4_rops_dbm;
  return rops_dbm;
}

std::vector<OnuSpec> ExperimentConfig::onus() const {
  if (population) return *population;
  std::vector<OnuSpec> out;
  for (FormatName f : formats)
    for (double d : distances_km)
      for (double r : rops_for(f)) out.push_back(OnuSpec{f, d, r});
  return out;
}

ExperimentConfig parse_config(const std::string& text) {
  boost::property_tree::ptree tree;
  std::istringstream in(text);
  try {
    boost::property_tree::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError("config: " + e.message() + (e.line() ? " (line " + std::to_string(e.line()) + ")" : ""));
  }
  ExperimentConfig cfg;
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw ConfigError("config: key '" + section + "' must sit inside a [section]");
    for (const auto& [key, value] : body) {
      const auto& table = fields();
      const auto it = std::find_if(table.begin(), table.end(),
                                   [&](const Field& f) { return f.section == section && f.key == key; });
      if (it == table.end()) throw ConfigError("config: unknown setting '" + section + "." + key + "'");
      try {
        it->set(cfg, trim(value.data()));
      } catch (const ConfigError& e) {
        throw ConfigError("config: " + section + "." + key + ": " + e.what());
      }
    }
  }
  validate(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string resolved_config(const ExperimentConfig& cfg) {
  std::string out;
  for (const Field& f : fields()) out += f.section + "." + f.key + "=" + f.get(cfg) + "\n";
  return out;
}

std::string config_hash(const ExperimentConfig& cfg) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a(resolved_config(cfg))));
  return buf;
}

std::string_view to_string(SweepKind kind) {
  switch (kind) {
    case SweepKind::BerVsPreamble:
      return "ber-vs-preamble";
    case SweepKind::LockVsRop:
      return "lock-vs-rop";
    case SweepKind::BerVsRop:
      return "ber-vs-rop";
  }
  return "?";
}

SweepKind parse_sweep_kind(std::string_view text) {
  for (SweepKind k : {SweepKind::BerVsPreamble, SweepKind::LockVsRop, SweepKind::BerVsRop})
    if (to_string(k) == text) return k;
  throw ParameterError("unknown sweep kind '" + std::string(text) +
                       "' (expected ber-vs-preamble, lock-vs-rop or ber-vs-rop)");
}

std::vector<SweepGrid> sweep_grids(const ExperimentConfig& cfg, SweepKind kind) {
  std::vector<SweepGrid> grids;
  for (FormatName f : cfg.formats) {
    SweepGrid g;
    g.formats = {f};
    g.distances_km = cfg.distances_km;
    g.rops_dbm = cfg.rops_for(f);
    g.modes = cfg.modes;
    g.seeds = cfg.seeds;
    g.payload_len = cfg.payload_len;
    switch (kind) {
      case SweepKind::BerVsPreamble:
        g.preambles = cfg.preambles;
        break;
      case SweepKind::LockVsRop:
        g.preambles = {0};
        break;
      case SweepKind::BerVsRop:
        g.preambles = {cfg.ber_preamble};
        break;
    }
    grids.push_back(std::move(g));
  }
  return grids;
}

std::string to_csv(const std::vector<SweepRow>& rows, const ExperimentConfig& cfg, SweepKind kind) {
  std::string out(kCsvHeader);
  out += '\n';
  for (const SweepRow& r : rows) {
    out += std::string(to_string(r.format)) + ',' + std::string(to_string(r.mode)) + ',' + fmt(r.distance_km) + ',' +
           fmt(r.rop_dbm) + ',' + std::to_string(r.preamble_len) + ',' + std::to_string(r.seed) + ',' +
           fmt(r.result.ber) + ',' + std::to_string(r.result.errors) + ',' + std::to_string(r.result.bits) + ',' +
           (r.result.lock_index ? std::to_string(*r.result.lock_index) : std::string()) + ',' +
           (r.result.eq_converged ? "true" : "false") + '\n';
  }
  out += "# kind=" + std::string(to_string(kind)) + "\n";
  out += "# rows=" + std::to_string(rows.size()) + "\n";
  out += "# config_hash=" + config_hash(cfg) + "\n";
  std::istringstream resolved(resolved_config(cfg));
  for (std::string line; std::getline(resolved, line);) out += "# " + line + "\n";
  return out;
}

LutStore build_lut(const ExperimentConfig& cfg, std::ostream* log) {
  LutStore store;
  std::map<FormatName, std::unique_ptr<LinkChain>> chains;
  std::uint64_t counter = 0;
  for (const OnuSpec& spec : cfg.onus()) {
    auto& chain = chains[spec.format];
    if (!chain) chain = std::make_unique<LinkChain>(spec.format, cfg.link);
    const OnuProfile onu{canonical_onu_id(spec.format, spec.distance_km, spec.rop_dbm),
                         ModFormat::from_name(spec.format), spec.distance_km, spec.rop_dbm};
    auto [phase, taps] = train_onu(onu, *chain, cfg.training_len, cfg.training_seed, counter++);
    if (log)
      *log << "onu " << onu.onu_id << " phase_ui=" << fmt(phase.phase_ui) << " ffe=" << taps.taps.ffe.size()
           << " dfe=" << taps.taps.dfe.size() << "\n";
    store.put(std::move(phase));
    store.put(std::move(taps));
  }
  return store;
}

namespace {

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << text;
  out.flush();
  if (!out) throw IoError("failed writing '" + path + "'");
}

bool needs_lut(const std::vector<RxMode>& modes) {
  return std::any_of(modes.begin(), modes.end(), [](RxMode m) { return m != RxMode::NoLut; });
}

LutStore load_lut_for(const std::string& lut_path, const std::vector<RxMode>& modes) {
  if (!needs_lut(modes)) return {};
  if (lut_path.empty())
    throw ConfigError("LUT modes requested but no LUT given; run `ponlut build-lut --out <file>` and pass --lut <file>");
  try {
    return load(lut_path);
  } catch (const ParseError& e) {
    throw ConfigError("LUT '" + lut_path + "': " + e.what());
  }
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Burst-mode PON receiver simulator with phase/taps look-up tables", "ponlut"};
  app.require_subcommand(1);
  std::string config_path, out_path, lut_path, mode_text, kind_text;
  std::optional<std::uint64_t> seed;
  unsigned threads = 0;
  app.add_option("--config", config_path, "experiment configuration (INI)");
  app.add_option("--seed", seed, "noise RNG seed (overrides noise.rng_seed)");
  app.add_option("--out", out_path, "output file");
  app.add_option("--mode", mode_text, "receiver mode: NoLut, TapsLut or FullLut");
  app.add_option("--lut", lut_path, "PONLUT file for LUT modes");
  app.add_option("--threads", threads, "worker threads for sweeps (0 = all cores)");
  auto* build = app.add_subcommand("build-lut", "train per-ONU phase and taps entries");
  auto* sweep_cmd = app.add_subcommand("sweep", "run a Cartesian experiment grid to CSV");
  sweep_cmd->add_option("kind", kind_text, "ber-vs-preamble | lock-vs-rop | ber-vs-rop")->required();
  auto* minpre = app.add_subcommand("min-preamble", "search the shortest preamble meeting the BER target");
  for (auto* sub : {build, sweep_cmd, minpre}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e, out, err);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    ExperimentConfig cfg = config_path.empty() ? ExperimentConfig{} : load_config(config_path);
    if (seed) cfg.link.rng_seed = *seed;
    if (!mode_text.empty()) cfg.modes = {parse_mode(mode_text)};
    validate(cfg);
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());

    if (build->parsed()) {
      if (out_path.empty()) {
        err << "build-lut needs --out <file>\n";
        return kExitUsage;
      }
      const LutStore store = build_lut(cfg, &out);
      save(store, out_path);
      out << "wrote " << store.phase_entries().size() << " phase and " << store.taps_entries().size()
          << " taps entries to " << out_path << "\n";
      return kExitOk;
    }

    if (sweep_cmd->parsed()) {
      SweepKind kind;
      try {
        kind = parse_sweep_kind(kind_text);
      } catch (const ParameterError& e) {
        err << e.what() << "\n";
        return kExitUsage;
      }
      const LutStore store = load_lut_for(lut_path, cfg.modes);
      std::map<FormatName, std::unique_ptr<LinkChain>> chains;
      for (FormatName f : cfg.formats) chains[f] = std::make_unique<LinkChain>(f, cfg.link);
      std::vector<SweepRow> rows;
      for (const SweepGrid& g : sweep_grids(cfg, kind)) {
        auto part = sweep(g, [&](FormatName f) -> const LinkChain& { return *chains.at(f); }, store, threads);
        rows.insert(rows.end(), part.begin(), part.end());
      }
      std::sort(rows.begin(), rows.end(), row_less);
      const std::string csv = to_csv(rows, cfg, kind);
      if (out_path.empty())
        out << csv;
      else
        write_file(out_path, csv);
      return kExitOk;
    }

    // min-preamble: first grid cell of the first format
    const RxMode mode = mode_text.empty() ? RxMode::NoLut : parse_mode(mode_text);
    const LutStore store = load_lut_for(lut_path, {mode});
    const FormatName f = cfg.formats.front();
    const LinkChain chain(f, cfg.link);
    const double d = cfg.distances_km.front();
    const double r = cfg.rops_for(f).front();
    BurstPlan plan;
    plan.onu = OnuProfile{canonical_onu_id(f, d, r), ModFormat::from_name(f), d, r};
    plan.payload_len = cfg.payload_len;
    const MinPreambleReport rep = min_preamble(plan, mode, store, chain, cfg.min_preamble);
    std::ostringstream report;
    report << "onu=" << plan.onu.onu_id << "\n"
           << "mode=" << to_string(mode) << "\n"
           << "baseline_preamble=" << cfg.min_preamble.baseline_preamble << "\n"
           << "baseline_ber=" << fmt(rep.baseline_ber) << "\n"
           << "target_ber=" << fmt(cfg.min_preamble.target_ber_ratio * rep.baseline_ber) << "\n"
           << "achieved_ber=" << fmt(rep.achieved_ber) << "\n"
           << "config_hash=" << config_hash(cfg) << "\n"
           << "min_preamble=" << rep.min_preamble << "\n";
    out << report.str();
    if (!out_path.empty()) write_file(out_path, report.str());
    return kExitOk;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const TrainingError& e) {
    err << "error: " << e.what() << "\n";
    return kExitTraining;
  } catch (const BaselineError& e) {
    err << "error: " << e.what() << "\n";
    return kExitBaseline;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ParameterError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const FittingError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

}  // namespace ponlut
