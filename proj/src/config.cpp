#include "fbmhypo/config.hpp"

#include "fbmhypo/errors.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

namespace fbmhypo {

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::SampleFbm: return "sample-fbm";
    case ExperimentKind::Solve: return "solve";
    case ExperimentKind::Hormander: return "hormander";
    case ExperimentKind::MalliavinTail: return "malliavin-tail";
    case ExperimentKind::Gradient: return "gradient";
    case ExperimentKind::Ergodicity: return "ergodicity";
    case ExperimentKind::LemmaSuite: return "lemma-suite";
  }
  return "?";
}

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

struct Entry {
  std::string value;
  int line = 0;
  int column = 0;  // column of the value
};

double to_double(const Entry& e, const std::string& key) {
  double v = 0;
  const char* first = e.value.data();
  const char* last = first + e.value.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) throw ParseError("'" + key + "' expects a number, got '" + e.value + "'", e.line, e.column);
  return v;
}

std::uint64_t to_uint(const Entry& e, const std::string& key) {
  std::uint64_t v = 0;
  const char* first = e.value.data();
  const char* last = first + e.value.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) {
    throw ParseError("'" + key + "' expects a non-negative integer, got '" + e.value + "'", e.line, e.column);
  }
  return v;
}

std::vector<double> to_list(const Entry& e, const std::string& key) {
  std::vector<double> out;
  std::size_t start = 0;
  const std::string& s = e.value;
  while (start <= s.size()) {
    const auto comma = s.find(',', start);
    const auto end = comma == std::string::npos ? s.size() : comma;
    Entry item{std::string(trim(std::string_view(s).substr(start, end - start))), e.line,
               e.column + static_cast<int>(start)};
    out.push_back(to_double(item, key));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

const std::map<std::string, ExperimentKind>& kinds() {
  static const std::map<std::string, ExperimentKind> m = {
      {"sample-fbm", ExperimentKind::SampleFbm},   {"solve", ExperimentKind::Solve},
      {"hormander", ExperimentKind::Hormander},    {"malliavin-tail", ExperimentKind::MalliavinTail},
      {"gradient", ExperimentKind::Gradient},      {"ergodicity", ExperimentKind::Ergodicity},
      {"lemma-suite", ExperimentKind::LemmaSuite},
  };
  return m;
}

const char* const known_keys[] = {"experiment", "H",      "gamma",  "delta",     "n",           "d",
                                  "x0",         "x0_b",   "xi",     "eps",       "psi",         "T",
                                  "dt",         "past_dt", "past_window", "past", "bracket_depth", "radius",
                                  "N",          "seed",   "threads", "fd_dx",    "lemma_paths", "lemma_pasts"};

}  // namespace

ExperimentConfig parse_config(std::string_view text) {
  ExperimentConfig cfg;
  cfg.source = std::string(text);
  std::map<std::string, Entry> entries;
  int fields_line = 0;
  bool in_fields = false;
  bool have_fields = false;

  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    const auto end = nl == std::string_view::npos ? text.size() : nl;
    std::string_view raw = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    std::string_view line = raw;
    if (!in_fields) {
      if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    }
    const std::string_view t = trim(line);

    if (in_fields) {
      if (trim(raw) == "end fields") {
        in_fields = false;
        continue;
      }
      cfg.fields_text += std::string(raw);
      cfg.fields_text += '\n';
      if (nl == std::string_view::npos) break;
      continue;
    }
    if (t.empty()) {
      if (nl == std::string_view::npos) break;
      continue;
    }
    if (t == "begin fields") {
      if (have_fields) throw ParseError("second field-set block", line_no, 1);
      in_fields = true;
      have_fields = true;
      fields_line = line_no;
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string_view::npos) {
      throw ParseError("expected 'key = value'", line_no, static_cast<int>(t.data() - raw.data()) + 1);
    }
    const std::string key(trim(t.substr(0, eq)));
    const std::string_view value = trim(t.substr(eq + 1));
    const int column = static_cast<int>(value.data() - raw.data()) + 1;
    bool known = false;
    for (const char* k : known_keys) known = known || key == k;
    if (!known) throw ParseError("unknown key '" + key + "'", line_no, static_cast<int>(t.data() - raw.data()) + 1);
    if (entries.count(key)) throw ParseError("duplicate key '" + key + "'", line_no, 1);
    if (value.empty()) throw ParseError("missing value for '" + key + "'", line_no, column);
    entries[key] = Entry{std::string(value), line_no, column};
    if (nl == std::string_view::npos) break;
  }
  if (in_fields) throw ParseError("field-set block is not closed by 'end fields'", fields_line, 1);

  auto get = [&](const std::string& key) -> const Entry* {
    const auto it = entries.find(key);
    return it == entries.end() ? nullptr : &it->second;
  };

  const Entry* kind = get("experiment");
  if (!kind) throw ParseError("missing 'experiment'", 1, 1);
  const auto k = kinds().find(kind->value);
  if (k == kinds().end()) throw ParseError("unknown experiment kind '" + kind->value + "'", kind->line, kind->column);
  cfg.kind = k->second;

  if (const Entry* h = get("H")) {
    const double H = to_double(*h, "H");
    const Entry* g = get("gamma");
    const Entry* de = get("delta");
    try {
      if (g || de) {
        if (!g || !de) throw ParseError("'gamma' and 'delta' must be given together", h->line, 1);
        cfg.hurst = HurstParams::make(H, to_double(*g, "gamma"), to_double(*de, "delta"));
      } else {
        cfg.hurst = HurstParams::with_defaults(H);
      }
    } catch (const DomainError& e) {
      const Entry* where = g ? g : h;
      throw ParseError(e.what(), where->line, where->column);
    }
  } else if (get("gamma") || get("delta")) {
    const Entry* e = get("gamma") ? get("gamma") : get("delta");
    throw ParseError("'gamma'/'delta' given without 'H'", e->line, 1);
  }

  if (const Entry* e = get("n")) cfg.n = static_cast<int>(to_uint(*e, "n"));
  if (const Entry* e = get("d")) cfg.d = static_cast<int>(to_uint(*e, "d"));
  if (const Entry* e = get("x0")) cfg.x0 = to_list(*e, "x0");
  if (const Entry* e = get("x0_b")) cfg.x0_b = to_list(*e, "x0_b");
  if (const Entry* e = get("xi")) cfg.xi = to_list(*e, "xi");
  if (const Entry* e = get("eps")) cfg.eps = to_list(*e, "eps");
  if (const Entry* e = get("psi")) cfg.psi = e->value;
  if (const Entry* e = get("T")) cfg.T = to_double(*e, "T");
  if (const Entry* e = get("dt")) cfg.dt = to_double(*e, "dt");
  if (const Entry* e = get("past_dt")) cfg.past_dt = to_double(*e, "past_dt");
  if (const Entry* e = get("past_window")) cfg.past_window = to_double(*e, "past_window");
  if (const Entry* e = get("past")) {
    if (e->value != "sample" && e->value != "zero") throw ParseError("'past' must be 'sample' or 'zero'", e->line, e->column);
    cfg.past = e->value;
  }
  if (const Entry* e = get("bracket_depth")) cfg.bracket_depth = static_cast<int>(to_uint(*e, "bracket_depth"));
  if (const Entry* e = get("radius")) cfg.radius = to_double(*e, "radius");
  if (const Entry* e = get("N")) cfg.n_mc = static_cast<std::size_t>(to_uint(*e, "N"));
  if (const Entry* e = get("seed")) cfg.seed = to_uint(*e, "seed");
  if (const Entry* e = get("threads")) cfg.threads = static_cast<unsigned>(to_uint(*e, "threads"));
  if (const Entry* e = get("fd_dx")) cfg.fd_dx = to_double(*e, "fd_dx");
  if (const Entry* e = get("lemma_paths")) cfg.lemma_paths = static_cast<std::size_t>(to_uint(*e, "lemma_paths"));
  if (const Entry* e = get("lemma_pasts")) cfg.lemma_pasts = static_cast<std::size_t>(to_uint(*e, "lemma_pasts"));

  auto positive = [&](const char* key, double v) {
    if (!(v > 0)) {
      const Entry* e = get(key);
      throw ParseError(std::string("'") + key + "' must be positive", e ? e->line : 1, e ? e->column : 1);
    }
  };
  positive("T", cfg.T);
  positive("dt", cfg.dt);
  positive("past_window", cfg.past_window);
  if (get("past_dt")) positive("past_dt", cfg.past_dt);

  if (have_fields) {
    if (cfg.n <= 0 || cfg.d <= 0) throw ParseError("a field-set block needs positive 'n' and 'd'", fields_line, 1);
    try {
      cfg.fields = expr::parse_field_set(cfg.fields_text, cfg.n, cfg.d);
    } catch (const ParseError& e) {
      throw ParseError("in field set: " + e.message(), fields_line + e.line(), e.column());
    }
    if (!cfg.x0.empty() && cfg.x0.size() != static_cast<std::size_t>(cfg.n)) {
      const Entry* e = get("x0");
      throw ParseError("'x0' needs " + std::to_string(cfg.n) + " entries", e->line, e->column);
    }
    if (!cfg.x0_b.empty() && cfg.x0_b.size() != static_cast<std::size_t>(cfg.n)) {
      const Entry* e = get("x0_b");
      throw ParseError("'x0_b' needs " + std::to_string(cfg.n) + " entries", e->line, e->column);
    }
    if (!cfg.xi.empty() && cfg.xi.size() != static_cast<std::size_t>(cfg.n)) {
      const Entry* e = get("xi");
      throw ParseError("'xi' needs " + std::to_string(cfg.n) + " entries", e->line, e->column);
    }
  }
  const bool needs_fields = cfg.kind != ExperimentKind::SampleFbm && cfg.kind != ExperimentKind::LemmaSuite;
  if (needs_fields && !have_fields) throw ParseError("experiment '" + kind->value + "' needs a field-set block", kind->line, 1);
  if (needs_fields && cfg.x0.empty()) cfg.x0.assign(static_cast<std::size_t>(cfg.n), 0.0);
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace fbmhypo
