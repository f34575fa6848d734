#include "ponlut/lutstore.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <vector>

namespace ponlut {

namespace {

void check_id(const std::string& id) {
  if (id.empty()) throw ParameterError("ONU id must be nonempty");
  for (char c : id)
    if (std::isspace(static_cast<unsigned char>(c)) || c == ',' || c == '=')
      throw ParameterError("ONU id '" + id + "' contains a reserved character");
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string join(const Eigen::VectorXd& v) {
  std::string out;
  for (Index i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += format_double(v[i]);
  }
  return out;
}

double parse_double(std::string_view s, int line) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw ParseError("malformed number '" + std::string(s) + "'", line);
  if (!std::isfinite(v)) throw ParseError("non-finite number '" + std::string(s) + "'", line);
  return v;
}

std::uint64_t parse_uint(std::string_view s, int line) {
  std::uint64_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw ParseError("malformed integer '" + std::string(s) + "'", line);
  return v;
}

Eigen::VectorXd parse_list(std::string_view s, int line) {
  std::vector<double> vals;
  while (!s.empty()) {
    const auto comma = s.find(',');
    vals.push_back(parse_double(s.substr(0, comma), line));
    if (comma == std::string_view::npos) break;
    s.remove_prefix(comma + 1);
    if (s.empty()) throw ParseError("trailing comma in coefficient list", line);
  }
  return Eigen::Map<Eigen::VectorXd>(vals.data(), static_cast<Index>(vals.size()));
}

// "key=value" -> value, or throws.
std::string_view field(std::string_view token, std::string_view key, int line) {
  if (token.size() < key.size() + 1 || token.substr(0, key.size()) != key || token[key.size()] != '=')
    throw ParseError("expected '" + std::string(key) + "=' but found '" + std::string(token) + "'", line);
  return token.substr(key.size() + 1);
}

}  // namespace

void LutStore::put(PhaseLutEntry entry) {
  check_id(entry.onu_id);
  if (!(entry.phase_ui >= 0.0 && entry.phase_ui < 1.0)) throw ParameterError("LUT phase must lie in [0, 1)");
  auto key = entry.onu_id;
  phase_.insert_or_assign(std::move(key), std::move(entry));
}

void LutStore::put(TapsLutEntry entry) {
  check_id(entry.onu_id);
  entry.taps.validate();
  auto key = std::make_pair(entry.onu_id, entry.format);
  taps_.insert_or_assign(std::move(key), std::move(entry));
}

std::optional<double> LutStore::lookup_phase(const std::string& onu_id) const {
  const auto it = phase_.find(onu_id);
  if (it == phase_.end()) return std::nullopt;
  return it->second.phase_ui;
}

std::optional<TapSet> LutStore::lookup_taps(const std::string& onu_id, FormatName format) const {
  const auto it = taps_.find({onu_id, format});
  if (it == taps_.end()) return std::nullopt;
  return it->second.taps;
}

std::optional<double> lookup_phase(const LutStore& store, const std::string& onu_id) {
  return store.lookup_phase(onu_id);
}

std::optional<TapSet> lookup_taps(const LutStore& store, const std::string& onu_id, FormatName format) {
  return store.lookup_taps(onu_id, format);
}

std::string to_text(const LutStore& store) {
  std::string out(kLutHeader);
  out += '\n';
  for (const auto& [id, e] : store.phase_entries()) {
    out += "phase " + id + ' ' + format_double(e.phase_ui) + " at=" + std::to_string(e.measured_at) + '\n';
  }
  for (const auto& [key, e] : store.taps_entries()) {
    out += "taps " + e.onu_id + ' ' + std::string(to_string(e.format)) + " ffe=" + join(e.taps.ffe) +
           " dfe=" + join(e.taps.dfe) + " center=" + std::to_string(e.taps.ffe_center) +
           " at=" + std::to_string(e.measured_at) + '\n';
  }
  return out;
}

LutStore from_text(const std::string& text) {
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  if (!std::getline(in, raw)) throw ParseError("empty LUT file", 1);
  ++line_no;
  if (!raw.empty() && raw.back() == '\r') raw.pop_back();
  if (raw != kLutHeader) {
    if (raw.rfind("PONLUT ", 0) == 0) throw ParseError("unsupported LUT version '" + raw.substr(7) + "'", 1);
    throw ParseError("missing PONLUT header", 1);
  }

  LutStore store;
  while (std::getline(in, raw)) {
    ++line_no;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    std::istringstream ls(raw);
    std::vector<std::string> tok;
    for (std::string t; ls >> t;) tok.push_back(t);
    if (tok.empty()) continue;
    try {
      if (tok[0] == "phase") {
        if (tok.size() < 3 || tok.size() > 4) throw ParseError("phase line needs: phase <onu_id> <phase_ui> [at=<n>]", line_no);
        PhaseLutEntry e;
        e.onu_id = tok[1];
        e.phase_ui = parse_double(tok[2], line_no);
        if (tok.size() == 4) e.measured_at = parse_uint(field(tok[3], "at", line_no), line_no);
        store.put(std::move(e));
      } else if (tok[0] == "taps") {
        if (tok.size() < 5 || tok.size() > 7)
          throw ParseError("taps line needs: taps <onu_id> <format> ffe=... dfe=... [center=<k>] [at=<n>]", line_no);
        TapsLutEntry e;
        e.onu_id = tok[1];
        e.format = parse_format(tok[2]);
        e.taps.ffe = parse_list(field(tok[3], "ffe", line_no), line_no);
        e.taps.dfe = parse_list(field(tok[4], "dfe", line_no), line_no);
        e.taps.ffe_center = (e.taps.ffe.size() - 1) / 2;
        for (std::size_t i = 5; i < tok.size(); ++i) {
          if (tok[i].rfind("center=", 0) == 0)
            e.taps.ffe_center = static_cast<Index>(parse_uint(field(tok[i], "center", line_no), line_no));
          else
            e.measured_at = parse_uint(field(tok[i], "at", line_no), line_no);
        }
        store.put(std::move(e));
      } else {
        throw ParseError("unknown record '" + tok[0] + "'", line_no);
      }
    } catch (const ParseError&) {
      throw;
    } catch (const Error& err) {
      throw ParseError(err.what(), line_no);
    }
  }
  return store;
}

void save(const LutStore& store, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << to_text(store);
  out.flush();
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

LutStore load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_text(ss.str());
}

Eigen::VectorXd slice_symbols(const Eigen::VectorXd& cdr_samples, Index offset, Index count) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(count);
  for (Index k = 0; k < count; ++k) {
    const Index idx = k + offset;
    if (idx >= 0 && idx < cdr_samples.size()) out[k] = cdr_samples[idx];
  }
  return out;
}

std::pair<PhaseLutEntry, TapsLutEntry> build_entry(const TrainingBurst& burst, const OnuProfile& onu,
                                                   const CdrConfig& cdr_cfg, const EqConfig& eq_cfg,
                                                   std::uint64_t measured_at) {
  const Index n = burst.symbols.size();
  if (burst.waveform.size() < 4 * cdr_cfg.sps || n < cdr_cfg.lock_window)
    throw TrainingError("phase training failed: burst shorter than the lock window");
  const CdrResult cdr = cdr_run(burst.waveform, cdr_cfg, 0.0);
  const auto lock = detect_lock(cdr.trace, std::nullopt, cdr_cfg);
  if (!lock || static_cast<Index>(cdr.trace.phase_ui.size()) < cdr_cfg.lock_window)
    throw TrainingError("phase training failed");
  // average everything after the self-referenced lock point, at least one window
  const std::size_t total = cdr.trace.phase_ui.size();
  const std::size_t tail = std::max<std::size_t>(static_cast<std::size_t>(cdr_cfg.lock_window),
                                                 total - std::min<std::size_t>(total, static_cast<std::size_t>(*lock)));
  const double phase = circular_mean_ui(std::span<const double>(cdr.trace.phase_ui).last(std::min(tail, total)));

  const Index offset = best_alignment(cdr.samples, burst.symbols.symbols, burst.nominal_offset, 16);
  const Eigen::VectorXd x = slice_symbols(cdr.samples, offset, n);
  EqConfig cfg = eq_cfg;
  cfg.mode = EqMode::ColdStart;
  cfg.train_len = n;
  const EqResult eq = lms_equalize(x, cfg, TapSet::identity(cfg.n_ffe, cfg.n_dfe), burst.symbols, onu.format);
  if (!eq.trace.converged) throw TrainingError("taps training failed");

  PhaseLutEntry pe{onu.onu_id, phase, measured_at};
  TapsLutEntry te{onu.onu_id, onu.format.name(), eq.trace.final_taps, measured_at};
  return {std::move(pe), std::move(te)};
}

}  // namespace ponlut
