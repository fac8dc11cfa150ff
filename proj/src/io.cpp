#include "chunklearn/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "json.hpp"

namespace chunklearn {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_number(const std::string& text) {
  const char* b = text.data();
  const char* e = b + text.size();
  while (b < e && (*b == ' ' || *b == '\t')) ++b;
  while (e > b && (e[-1] == ' ' || e[-1] == '\t' || e[-1] == '\r')) --e;
  if (b < e && *b == '+') ++b;
  double v = 0.0;
  auto res = std::from_chars(b, e, v);
  if (b == e || res.ec != std::errc() || res.ptr != e) {
    throw std::invalid_argument("not a number: '" + text + "'");
  }
  return v;
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

std::int64_t parse_int(const std::string& text, const std::string& field) {
  const std::string t = trim(text);
  std::int64_t v = 0;
  auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size()) {
    throw ConfigError(field, "expected an integer, got '" + text + "'");
  }
  return v;
}

double parse_real(const std::string& text, const std::string& field) {
  try {
    return parse_number(text);
  } catch (const std::invalid_argument&) {
    throw ConfigError(field, "expected a number, got '" + text + "'");
  }
}

bool parse_bool(const std::string& text, const std::string& field) {
  const std::string t = trim(text);
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  throw ConfigError(field, "expected true or false, got '" + text + "'");
}

template <typename Fn>
auto as_config_error(const std::string& field, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(field, e.what());
  }
}

}  // namespace

std::vector<std::int64_t> parse_int_list(const std::string& text, const std::string& field) {
  std::vector<std::int64_t> out;
  if (trim(text).empty()) return out;
  for (const auto& part : split(text, ',')) out.push_back(parse_int(part, field));
  return out;
}

ExperimentConfig parse_experiment_config(const std::string& text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("config", e.what());
  }

  ExperimentConfig c;
  bool snapshots_set = false;
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) {
      throw ConfigError(section, "key outside of a section");
    }
    for (const auto& [key, node] : body) {
      const std::string v = trim(node.data());
      const std::string field = section + "." + key;
      if (section == "grammar") {
        if (key == "name") {
          c.grammar.name = v;
        } else if (key == "sizes") {
          c.grammar.sizes.clear();
          for (auto s : parse_int_list(v, field)) c.grammar.sizes.push_back(static_cast<int>(s));
        } else if (key == "file") {
          c.grammar.file = v;
        } else {
          throw ConfigError(field, "unknown key");
        }
      } else if (section == "agent") {
        auto& a = c.agent;
        if (key == "alpha") a.alpha = parse_real(v, field);
        else if (key == "beta") a.beta = parse_real(v, field);
        else if (key == "r_plus") a.r_plus = parse_real(v, field);
        else if (key == "r_minus") a.r_minus = parse_real(v, field);
        else if (key == "q_b") a.q_b = parse_real(v, field);
        else if (key == "q_c") a.q_c = parse_real(v, field);
        else if (key == "algorithm") a.algorithm = as_config_error(field, [&] { return parse_algorithm(v); });
        else if (key == "border") a.border = as_config_error(field, [&] { return parse_border(v); });
        else if (key == "update_order") a.update_order = as_config_error(field, [&] { return parse_update_order(v); });
        else throw ConfigError(field, "unknown key");
      } else if (section == "experiment") {
        if (key == "agents") {
          c.population = static_cast<int>(parse_int(v, field));
        } else if (key == "trials") {
          c.trials = parse_int(v, field);
        } else if (key == "snapshots") {
          c.snapshot_trials = parse_int_list(v, field);
          snapshots_set = true;
        } else if (key == "tg") {
          c.extraction_threshold = parse_real(v, field);
        } else if (key == "parse_window") {
          const auto w = parse_int_list(v, field);
          if (w.empty()) {
            c.parse_window.reset();
          } else if (w.size() == 2) {
            c.parse_window = TrialWindow{w[0], w[1]};
          } else {
            throw ConfigError(field, "expected start,end");
          }
        } else if (key == "smoothing") {
          c.smoothing_window = static_cast<int>(parse_int(v, field));
        } else if (key == "seed") {
          c.base_seed = static_cast<std::uint64_t>(parse_int(v, field));
        } else if (key == "focal_agent") {
          c.focal_agent = static_cast<int>(parse_int(v, field));
        } else if (key == "snapshot_mode") {
          c.snapshot_mode = parse_snapshot_mode(v);
        } else if (key == "guard_limit") {
          c.simulation.guard_limit = static_cast<int>(parse_int(v, field));
        } else if (key == "history") {
          c.simulation.history = static_cast<std::size_t>(parse_int(v, field));
        } else if (key == "workers") {
          c.workers = static_cast<int>(parse_int(v, field));
        } else if (key == "episode_log") {
          c.episode_log = parse_bool(v, field);
        } else if (key == "keep_tables") {
          c.keep_final_tables = parse_bool(v, field);
        } else {
          throw ConfigError(field, "unknown key");
        }
      } else {
        throw ConfigError(section, "unknown section");
      }
    }
  }
  if (!snapshots_set) {
    auto& s = c.snapshot_trials;
    s.erase(std::remove_if(s.begin(), s.end(), [&](std::int64_t t) { return t > c.trials; }), s.end());
    if (s.empty()) s.push_back(c.trials);
  }
  return c;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::string text;
  try {
    text = read_text_file(path);
  } catch (const std::exception& e) {
    throw ConfigError("config", e.what());
  }
  return parse_experiment_config(text);
}

namespace {

std::string join_ints(const std::vector<std::int64_t>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(v[i]);
  }
  return out;
}

}  // namespace

std::string format_experiment_config(const ExperimentConfig& c) {
  std::ostringstream out;
  out << "[grammar]\n";
  if (!c.grammar.file.empty()) {
    out << "file = " << c.grammar.file << "\n";
  } else {
    out << "name = " << c.grammar.name << "\n";
    std::vector<std::int64_t> sizes(c.grammar.sizes.begin(), c.grammar.sizes.end());
    if (!sizes.empty()) out << "sizes = " << join_ints(sizes) << "\n";
  }
  const auto& a = c.agent;
  out << "\n[agent]\n"
      << "alpha = " << format_number(a.alpha) << "\n"
      << "beta = " << format_number(a.beta) << "\n"
      << "r_plus = " << format_number(a.r_plus) << "\n"
      << "r_minus = " << format_number(a.r_minus) << "\n"
      << "q_b = " << format_number(a.q_b) << "\n"
      << "q_c = " << format_number(a.q_c) << "\n"
      << "algorithm = " << to_string(a.algorithm) << "\n"
      << "border = " << to_string(a.border) << "\n"
      << "update_order = " << to_string(a.update_order) << "\n";
  out << "\n[experiment]\n"
      << "agents = " << c.population << "\n"
      << "trials = " << c.trials << "\n"
      << "snapshots = " << join_ints(c.snapshot_trials) << "\n"
      << "tg = " << format_number(c.extraction_threshold) << "\n";
  if (c.parse_window) {
    out << "parse_window = " << c.parse_window->start << "," << c.parse_window->end << "\n";
  }
  out << "smoothing = " << c.smoothing_window << "\n"
      << "seed = " << c.base_seed << "\n"
      << "focal_agent = " << c.focal_agent << "\n"
      << "snapshot_mode = " << to_string(c.snapshot_mode) << "\n"
      << "guard_limit = " << c.simulation.guard_limit << "\n"
      << "history = " << c.simulation.history << "\n"
      << "episode_log = " << (c.episode_log ? "true" : "false") << "\n"
      << "keep_tables = " << (c.keep_final_tables ? "true" : "false") << "\n";
  return out.str();
}

// ---------------------------------------------------------------------------
// Curves

CurveTable to_table(const LearningCurve& curve) {
  CurveTable t;
  t.lengths = curve.lengths();
  const auto n = curve.trials();
  t.trial.resize(static_cast<std::size_t>(n));
  t.fraction = curve.fractions();
  for (std::int64_t i = 0; i < n; ++i) t.trial[i] = i + 1;
  for (int L : t.lengths) {
    auto& f = t.length_fraction[L];
    auto& c = t.length_count[L];
    f.resize(static_cast<std::size_t>(n));
    c.resize(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) {
      c[i] = curve.encounters(L, i + 1);
      f[i] = curve.length_fraction(L, i + 1);
    }
  }
  return t;
}

std::string curve_csv(const LearningCurve& curve) { return curve_csv(to_table(curve)); }

std::string curve_csv(const CurveTable& t) {
  std::string out = "trial,fraction";
  for (int L : t.lengths) {
    out += ",len" + std::to_string(L) + "_fraction,len" + std::to_string(L) + "_count";
  }
  out += '\n';
  for (std::size_t i = 0; i < t.trial.size(); ++i) {
    out += std::to_string(t.trial[i]);
    out += ',';
    out += format_number(t.fraction[i]);
    for (int L : t.lengths) {
      const int c = t.length_count.at(L)[i];
      out += ',';
      if (c > 0) out += format_number(t.length_fraction.at(L)[i]);
      out += ',';
      out += std::to_string(c);
    }
    out += '\n';
  }
  return out;
}

CurveTable parse_curve_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  if (!std::getline(in, line)) throw CsvError(0, "empty curve file");
  ++line_no;
  const auto header = split(trim(line), ',');
  if (header.size() < 2 || trim(header[0]) != "trial" || trim(header[1]) != "fraction") {
    throw CsvError(1, "header must start with trial,fraction");
  }
  if ((header.size() - 2) % 2 != 0) throw CsvError(1, "per-length columns come in pairs");
  CurveTable t;
  for (std::size_t c = 2; c < header.size(); c += 2) {
    const std::string h1 = trim(header[c]);
    const std::string h2 = trim(header[c + 1]);
    const std::string suffix = "_fraction";
    if (h1.rfind("len", 0) != 0 || h1.size() <= 3 + suffix.size() ||
        h1.compare(h1.size() - suffix.size(), suffix.size(), suffix) != 0) {
      throw CsvError(1, "bad column '" + h1 + "'");
    }
    const std::string digits = h1.substr(3, h1.size() - 3 - suffix.size());
    int L = 0;
    auto res = std::from_chars(digits.data(), digits.data() + digits.size(), L);
    if (res.ec != std::errc() || res.ptr != digits.data() + digits.size() || L < 0) {
      throw CsvError(1, "bad column '" + h1 + "'");
    }
    if (h2 != "len" + digits + "_count") throw CsvError(1, "expected len" + digits + "_count");
    t.lengths.push_back(L);
    t.length_fraction[L];
    t.length_count[L];
  }
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split(trim(line), ',');
    if (fields.size() != header.size()) throw CsvError(line_no, "wrong number of fields");
    try {
      const std::int64_t trial = parse_int(fields[0], "trial");
      if (!t.trial.empty() && trial <= t.trial.back()) throw CsvError(line_no, "trials must increase");
      t.trial.push_back(trial);
      const double f = parse_number(fields[1]);
      if (!(f >= 0.0 && f <= 1.0)) throw CsvError(line_no, "fraction outside [0, 1]");
      t.fraction.push_back(f);
      for (std::size_t j = 0; j < t.lengths.size(); ++j) {
        const int L = t.lengths[j];
        const std::string& fv = fields[2 + 2 * j];
        const int count = static_cast<int>(parse_int(fields[3 + 2 * j], "count"));
        if (count < 0) throw CsvError(line_no, "negative count");
        double lf = std::numeric_limits<double>::quiet_NaN();
        if (!trim(fv).empty() && trim(fv) != "nan") lf = parse_number(fv);
        if (count > 0 && !(lf >= 0.0 && lf <= 1.0)) throw CsvError(line_no, "length fraction outside [0, 1]");
        t.length_fraction[L].push_back(lf);
        t.length_count[L].push_back(count);
      }
    } catch (const CsvError&) {
      throw;
    } catch (const std::exception& e) {
      throw CsvError(line_no, e.what());
    }
  }
  if (t.trial.empty()) throw CsvError(line_no, "no data rows");
  return t;
}

// ---------------------------------------------------------------------------
// Tables

std::string rules_csv(const std::vector<ExtractedRule>& rules) {
  std::string out = "s1,s2,action,label,mean_q,count,total\n";
  for (const auto& r : rules) {
    out += r.first_pattern + "," + r.second_pattern + ",a" + std::to_string(r.action) + "," +
           r.label + "," + format_number(r.mean_q) + "," + std::to_string(r.instance_count) + "," +
           std::to_string(r.total_instances) + "\n";
  }
  return out;
}

std::string population_rules_csv(const std::vector<PopulationRule>& rules) {
  std::string out = "s1,s2,action,label,mean_q,mean_count,agents,pooled_count,total\n";
  for (const auto& r : rules) {
    out += r.first_pattern + "," + r.second_pattern + ",a" + std::to_string(r.action) + "," +
           r.label + "," + format_number(r.mean_q) + "," + format_number(r.mean_instances) + "," +
           std::to_string(r.agents_with_rule) + "," + std::to_string(r.pooled_instances) + "," +
           std::to_string(r.total_instances) + "\n";
  }
  return out;
}

std::string parses_csv(const ParseFrequencyReport& report) {
  std::string out = "sentence,length,tree,count,frequency,catalan_bound\n";
  for (const auto& s : report.sentences) {
    for (const auto& t : s.trees) {
      out += s.classes + "," + std::to_string(s.length) + "," + t.pattern + "," +
             std::to_string(t.count) + "," + format_number(t.frequency) + "," +
             std::to_string(s.catalan_bound) + "\n";
    }
  }
  return out;
}

std::string fit_json(const LogisticFit& fit) {
  json j;
  j["k"] = fit.k;
  j["x0"] = fit.x0;
  j["learning_time"] = fit.learning_time;
  j["residual"] = fit.residual;
  j["rms"] = fit.rms;
  j["degenerate"] = fit.degenerate;
  j["poor_fit"] = fit.poor_fit;
  j["iterations"] = fit.iterations;
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// SVG

namespace {

std::vector<double> pooled_length_series(const CurveTable& t, int L, int window) {
  const auto& f = t.length_fraction.at(L);
  const auto& c = t.length_count.at(L);
  const std::size_t n = f.size();
  std::vector<double> pc(n + 1, 0.0), pn(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    pn[i + 1] = pn[i] + c[i];
    pc[i + 1] = pc[i] + (c[i] > 0 ? f[i] * c[i] : 0.0);
  }
  const std::size_t half = static_cast<std::size_t>(window / 2);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i >= half ? i - half : 0;
    const std::size_t hi = std::min(n, i + half + 1);
    const double cnt = pn[hi] - pn[lo];
    out[i] = cnt > 0 ? (pc[hi] - pc[lo]) / cnt : std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

double nice_step(double span, int target) {
  const double raw = span / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double m : {1.0, 2.0, 2.5, 5.0, 10.0}) {
    if (m * mag >= raw) return m * mag;
  }
  return 10.0 * mag;
}

std::string fixed(double v, int digits) {
  std::ostringstream s;
  s.imbue(std::locale::classic());
  s.setf(std::ios::fixed);
  s.precision(digits);
  s << v;
  return s.str();
}

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string render_curve_svg(const CurveTable& t, int smoothing_window, const std::string& title) {
  const double W = 880, H = 520, ml = 70, mr = 150, mt = 40, mb = 60;
  const double pw = W - ml - mr, ph = H - mt - mb;
  const double x_lo = t.trial.empty() ? 0.0 : static_cast<double>(t.trial.front());
  const double x_hi = t.trial.empty() ? 1.0 : std::max(x_lo + 1.0, static_cast<double>(t.trial.back()));
  auto sx = [&](double x) { return ml + (x - x_lo) / (x_hi - x_lo) * pw; };
  auto sy = [&](double y) { return mt + (1.0 - y) * ph; };

  std::ostringstream out;
  out.imbue(std::locale::classic());
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" viewBox=\"0 0 " << W << " " << H << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!title.empty()) {
    out << "<text x=\"" << ml + pw / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
        << "font-size=\"15\">" << escape_xml(title) << "</text>\n";
  }
  // Axes and ticks.
  out << "<g stroke=\"black\" stroke-width=\"1\">\n"
      << "<line x1=\"" << ml << "\" y1=\"" << mt + ph << "\" x2=\"" << ml + pw << "\" y2=\"" << mt + ph << "\"/>\n"
      << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << mt + ph << "\"/>\n"
      << "</g>\n<g font-family=\"sans-serif\" font-size=\"12\">\n";
  const double step = nice_step(x_hi - x_lo, 6);
  for (double x = std::ceil(x_lo / step) * step; x <= x_hi + 1e-9; x += step) {
    out << "<line x1=\"" << fixed(sx(x), 2) << "\" y1=\"" << mt + ph << "\" x2=\"" << fixed(sx(x), 2)
        << "\" y2=\"" << mt + ph + 5 << "\" stroke=\"black\"/>\n"
        << "<text x=\"" << fixed(sx(x), 2) << "\" y=\"" << mt + ph + 20 << "\" text-anchor=\"middle\">"
        << fixed(x, 0) << "</text>\n";
  }
  for (int i = 0; i <= 4; ++i) {
    const double y = 0.25 * i;
    out << "<line x1=\"" << ml - 5 << "\" y1=\"" << fixed(sy(y), 2) << "\" x2=\"" << ml << "\" y2=\""
        << fixed(sy(y), 2) << "\" stroke=\"black\"/>\n"
        << "<line x1=\"" << ml << "\" y1=\"" << fixed(sy(y), 2) << "\" x2=\"" << ml + pw << "\" y2=\""
        << fixed(sy(y), 2) << "\" stroke=\"#dddddd\"/>\n"
        << "<text x=\"" << ml - 9 << "\" y=\"" << fixed(sy(y) + 4, 2) << "\" text-anchor=\"end\">"
        << fixed(y, 2) << "</text>\n";
  }
  out << "<text x=\"" << ml + pw / 2 << "\" y=\"" << H - 18 << "\" text-anchor=\"middle\">trial</text>\n"
      << "<text transform=\"translate(20 " << mt + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
      << "fraction correct</text>\n</g>\n";

  const std::size_t n = t.trial.size();
  const std::size_t stride = std::max<std::size_t>(1, n / 1500);
  auto polyline = [&](const std::vector<double>& ys, const std::string& color, double width) {
    // NaN gaps split the series into separate polylines.
    std::string pts;
    auto flush = [&] {
      if (!pts.empty()) {
        out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"" << width
            << "\" points=\"" << pts << "\"/>\n";
      }
      pts.clear();
    };
    for (std::size_t i = 0; i < n; i += stride) {
      if (std::isnan(ys[i])) {
        flush();
        continue;
      }
      pts += fixed(sx(static_cast<double>(t.trial[i])), 2) + "," + fixed(sy(ys[i]), 2) + " ";
    }
    flush();
  };

  static const char* kColors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                  "#8c564b", "#e377c2", "#17becf", "#bcbd22", "#7f7f7f"};
  std::vector<std::pair<std::string, std::string>> legend;
  int color = 0;
  for (int L : t.lengths) {
    if (L == 0) continue;  // unaligned starts
    const std::string c = kColors[color++ % 10];
    polyline(pooled_length_series(t, L, smoothing_window), c, 1.2);
    legend.emplace_back(c, "length " + std::to_string(L));
  }
  polyline(moving_average(t.fraction, smoothing_window), "black", 2.0);
  legend.insert(legend.begin(), {"black", "overall"});

  out << "<g font-family=\"sans-serif\" font-size=\"12\">\n";
  for (std::size_t i = 0; i < legend.size(); ++i) {
    const double y = mt + 10 + 18.0 * static_cast<double>(i);
    out << "<line x1=\"" << ml + pw + 15 << "\" y1=\"" << y << "\" x2=\"" << ml + pw + 40 << "\" y2=\"" << y
        << "\" stroke=\"" << legend[i].first << "\" stroke-width=\"2\"/>\n"
        << "<text x=\"" << ml + pw + 46 << "\" y=\"" << y + 4 << "\">" << legend[i].second << "</text>\n";
  }
  out << "<text x=\"" << ml + pw + 15 << "\" y=\"" << mt + 10 + 18.0 * legend.size() + 6
      << "\" fill=\"#555555\">window " << smoothing_window << "</text>\n</g>\n</svg>\n";
  return out.str();
}

// ---------------------------------------------------------------------------
// Run directory

std::string manifest_json(const ExperimentConfig& c, const PopulationResult& r) {
  json j;
  j["tool"] = "chunklearn";
  j["version"] = kVersion;
  json g;
  if (!c.grammar.file.empty()) {
    g["file"] = c.grammar.file;
  } else {
    g["name"] = c.grammar.name;
    g["sizes"] = c.grammar.sizes;
  }
  json a;
  a["alpha"] = c.agent.alpha;
  a["beta"] = c.agent.beta;
  a["r_plus"] = c.agent.r_plus;
  a["r_minus"] = c.agent.r_minus;
  a["q_b"] = c.agent.q_b;
  a["q_c"] = c.agent.q_c;
  a["algorithm"] = to_string(c.agent.algorithm);
  a["border"] = to_string(c.agent.border);
  a["update_order"] = to_string(c.agent.update_order);
  json e;
  e["agents"] = c.population;
  e["trials"] = c.trials;
  e["snapshots"] = c.snapshot_trials;
  e["tg"] = c.extraction_threshold;
  if (c.parse_window) e["parse_window"] = {c.parse_window->start, c.parse_window->end};
  e["smoothing"] = c.smoothing_window;
  e["focal_agent"] = c.focal_agent;
  e["snapshot_mode"] = to_string(c.snapshot_mode);
  e["guard_limit"] = c.simulation.guard_limit;
  e["history"] = c.simulation.history;
  e["workers"] = c.workers;
  j["config"] = {{"grammar", g}, {"agent", a}, {"experiment", e}};
  j["config_text"] = format_experiment_config(c);
  j["base_seed"] = c.base_seed;
  j["agent_seeds"] = r.agent_seeds;
  j["guard_events"] = r.guard_events;
  j["wall_seconds"] = r.wall_seconds;
  return j.dump(2) + "\n";
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << text;
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

std::vector<std::string> write_run_outputs(const std::string& dir, const ExperimentConfig& config,
                                           const PopulationResult& result) {
  fs::create_directories(dir);
  std::vector<std::string> written;
  auto put = [&](const std::string& name, const std::string& text) {
    write_text_file((fs::path(dir) / name).string(), text);
    written.push_back(name);
  };

  const CurveTable table = to_table(result.curve);
  put("curve.csv", curve_csv(table));
  for (const auto& snap : result.snapshots) {
    const std::string t = std::to_string(snap.trial);
    if (config.snapshot_mode != SnapshotMode::kPopulation) {
      put("rules_" + t + ".csv", rules_csv(snap.focal_rules));
      if (snap.focal_table) put("qtable_" + t + ".csv", snap.focal_table->to_csv());
    }
    if (config.snapshot_mode != SnapshotMode::kFocal) {
      put("rules_population_" + t + ".csv", population_rules_csv(snap.population_rules));
    }
  }
  if (result.parses) put("parses.csv", parses_csv(*result.parses));
  if (config.episode_log) {
    std::string log = "trial,correct,reward,sentence_length,steps,guard_forced,start_position,tree\n";
    for (const auto& r : result.focal_log) {
      log += std::to_string(r.trial_index) + "," + (r.correct ? "1" : "0") + "," +
             format_number(r.reward) + "," + std::to_string(r.sentence_length) + "," +
             std::to_string(r.steps) + "," + (r.guard_forced ? "1" : "0") + "," +
             std::to_string(r.start_position) + "," + r.final_tree_pattern + "\n";
    }
    put("episodes.csv", log);
  }
  if (result.curve.trials() >= 10) put("fit.json", fit_json(fit_curve(result.curve)));
  put("curve.svg", render_curve_svg(table, config.smoothing_window, config.grammar.describe() + " " +
                                                                        to_string(config.agent.algorithm) + " " +
                                                                        to_string(config.agent.border)));
  put("run_manifest.json", manifest_json(config, result));
  return written;
}

}  // namespace chunklearn
