#include "getup/stats/report.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "getup/core/error.hpp"

namespace getup {

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  if (ec) throw IoError("cannot create " + path.parent_path().string() + ": " + ec.message());
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp);
    out << content;
    out.flush();
    if (!out) throw IoError("failed writing " + tmp);
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp + ": " + ec.message());
}

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string opt(const std::optional<double>& v) { return v ? num(*v) : ""; }

std::string pct(double v) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%.0f", 100.0 * v);
  return buf;
}

std::string rates(const SuccessStatistics& s) {
  std::string out;
  for (std::size_t i = 0; i < s.per_seed_rates.size(); ++i) out += (i ? ";" : "") + num(s.per_seed_rates[i]);
  return out;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string xml(const std::string& s) {
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

std::string status(const Cell& c) {
  if (!c.stats) return "failed";
  return c.errors.empty() ? "ok" : "partial";
}

std::string errors(const Cell& c) {
  std::string out;
  for (std::size_t i = 0; i < c.errors.size(); ++i) out += (i ? " | " : "") + c.errors[i];
  return out;
}

// Columns shared by every per-cell table.
const char* kStatsHeader = "n_seeds,episodes_per_seed,mean,std,ci_low,ci_high,per_seed_rates";

std::string stats_fields(const Cell& c) {
  if (!c.stats) return ",,,,,,";
  const auto& s = *c.stats;
  return std::to_string(s.n_seeds()) + "," + std::to_string(s.n_episodes_per_seed()) + "," + num(s.mean) + "," +
         num(s.std) + "," + opt(s.ci_low) + "," + opt(s.ci_high) + "," + rates(s);
}

std::string label_with_ci(const Cell& c) {
  if (!c.stats) return "failed";
  std::string s = pct(c.stats->mean) + "%";
  if (c.vs_specialist && c.vs_specialist->significant()) s += "*";
  return s;
}

std::string ci_label(const Cell& c) {
  if (!c.stats || !c.stats->ci_low) return "";
  return "[" + pct(*c.stats->ci_low) + ", " + pct(*c.stats->ci_high) + "]";
}

// ---- LOO

std::string loo_csv(const LOOMatrix& m) {
  std::ostringstream os;
  os << "held_out,eval,zero_shot," << kStatsHeader << ",p_vs_specialist,significant,status,errors\n";
  for (std::size_t i = 0; i < m.size(); ++i) {
    for (std::size_t j = 0; j < m.size(); ++j) {
      const Cell& c = m.at(i, j);
      os << csv_field(m.morphologies[i]) << "," << csv_field(m.morphologies[j]) << "," << (c.zero_shot ? 1 : 0)
         << "," << stats_fields(c) << "," << (c.vs_specialist ? num(c.vs_specialist->p) : "") << ","
         << (c.vs_specialist ? (c.vs_specialist->significant() ? 1 : 0) : 0) << "," << status(c) << ","
         << csv_field(errors(c)) << "\n";
    }
  }
  return os.str();
}

std::string heat_colour(double v) {
  v = std::clamp(v, 0.0, 1.0);
  const int r = static_cast<int>(std::lround(247 - v * (247 - 8)));
  const int g = static_cast<int>(std::lround(251 - v * (251 - 81)));
  const int b = static_cast<int>(std::lround(255 - v * (255 - 156)));
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
  return buf;
}

std::string loo_svg(const LOOMatrix& m) {
  const int cell = 90, left = 130, top = 60;
  const int n = static_cast<int>(m.size());
  const int w = left + n * cell + 20, h = top + n * cell + 70;
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<text x=\"" << left << "\" y=\"20\" font-size=\"14\">Leave-one-out success rate</text>\n";
  os << "<text x=\"" << left << "\" y=\"40\">evaluation morphology</text>\n";
  for (int j = 0; j < n; ++j) {
    os << "<text x=\"" << left + j * cell + cell / 2 << "\" y=\"" << top - 5 << "\" text-anchor=\"middle\">"
       << xml(m.morphologies[static_cast<std::size_t>(j)]) << "</text>\n";
  }
  for (int i = 0; i < n; ++i) {
    const int y = top + i * cell;
    os << "<text x=\"" << left - 8 << "\" y=\"" << y + cell / 2 << "\" text-anchor=\"end\">without "
       << xml(m.morphologies[static_cast<std::size_t>(i)]) << "</text>\n";
    for (int j = 0; j < n; ++j) {
      const Cell& c = m.at(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
      const int x = left + j * cell;
      const std::string fill = c.stats ? heat_colour(c.stats->mean) : "#dddddd";
      os << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cell << "\" height=\"" << cell << "\" fill=\""
         << fill << "\" stroke=\"" << (c.zero_shot ? "#d62728" : "#ffffff") << "\" stroke-width=\""
         << (c.zero_shot ? 3 : 1) << "\"/>\n";
      const bool dark = c.stats && c.stats->mean > 0.55;
      os << "<text x=\"" << x + cell / 2 << "\" y=\"" << y + cell / 2 - 4 << "\" text-anchor=\"middle\" fill=\""
         << (dark ? "#ffffff" : "#000000") << "\">" << xml(label_with_ci(c)) << "</text>\n";
      os << "<text x=\"" << x + cell / 2 << "\" y=\"" << y + cell / 2 + 12
         << "\" text-anchor=\"middle\" font-size=\"10\" fill=\"" << (dark ? "#ffffff" : "#000000") << "\">"
         << xml(ci_label(c)) << "</text>\n";
    }
  }
  os << "<text x=\"" << left << "\" y=\"" << top + n * cell + 25
     << "\" font-size=\"10\">Red outline: zero-shot (held-out morphology). * p &lt; 0.05 vs specialist, "
        "Welch t-test, no multiple-comparison correction.</text>\n";
  os << "</svg>\n";
  return os.str();
}

// ---- scaling

std::string scaling_csv(const ScalingCurve& c) {
  std::ostringstream os;
  os << "holdout,label,k,diverse," << kStatsHeader << ",status,errors\n";
  for (const auto& p : c.points) {
    os << csv_field(c.holdout) << "," << csv_field(p.label) << "," << p.k << "," << (p.diverse ? 1 : 0) << ","
       << stats_fields(p.cell) << "," << status(p.cell) << "," << csv_field(errors(p.cell)) << "\n";
  }
  return os.str();
}

std::string scaling_svg(const ScalingCurve& c) {
  const int left = 60, top = 40, pw = 480, ph = 260;
  const int n = static_cast<int>(c.points.size());
  auto px = [&](int i) { return left + (n == 1 ? pw / 2 : i * pw / (n - 1)); };
  auto py = [&](double v) { return top + static_cast<int>(std::lround((1.0 - v) * ph)); };
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << left + pw + 40 << "\" height=\"" << top + ph + 70
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<text x=\"" << left << "\" y=\"20\" font-size=\"14\">Zero-shot success on " << xml(c.holdout)
     << " vs training set</text>\n";
  os << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
     << "\" fill=\"none\" stroke=\"#888888\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    os << "<text x=\"" << left - 6 << "\" y=\"" << py(t / 4.0) + 4 << "\" text-anchor=\"end\">" << t * 25
       << "%</text>\n";
  }
  // Band over points that have a CI.
  std::string upper, lower;
  for (int i = 0; i < n; ++i) {
    const auto& cell = c.points[static_cast<std::size_t>(i)].cell;
    if (!cell.stats || !cell.stats->ci_low) continue;
    upper += std::to_string(px(i)) + "," + std::to_string(py(*cell.stats->ci_high)) + " ";
    lower = std::to_string(px(i)) + "," + std::to_string(py(*cell.stats->ci_low)) + " " + lower;
  }
  if (!upper.empty()) os << "<polygon points=\"" << upper << lower << "\" fill=\"#1f77b4\" fill-opacity=\"0.2\"/>\n";
  std::string line;
  for (int i = 0; i < n; ++i) {
    const auto& cell = c.points[static_cast<std::size_t>(i)].cell;
    if (cell.stats) line += std::to_string(px(i)) + "," + std::to_string(py(cell.stats->mean)) + " ";
  }
  if (!line.empty()) os << "<polyline points=\"" << line << "\" fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"2\"/>\n";
  for (int i = 0; i < n; ++i) {
    const auto& p = c.points[static_cast<std::size_t>(i)];
    if (p.cell.stats) {
      os << "<circle cx=\"" << px(i) << "\" cy=\"" << py(p.cell.stats->mean) << "\" r=\"5\" fill=\""
         << (p.diverse ? "#d62728" : "#1f77b4") << "\"/>\n";
    }
    os << "<text x=\"" << px(i) << "\" y=\"" << top + ph + 18 << "\" text-anchor=\"middle\">" << xml(p.label)
       << "</text>\n";
  }
  os << "<text x=\"" << left << "\" y=\"" << top + ph + 45
     << "\" font-size=\"10\">Shaded band: 95% bootstrap CI over seeds. Red marker: diverse set.</text>\n";
  os << "</svg>\n";
  return os.str();
}

// ---- compare

std::string compare_csv(const CompareResult& r) {
  std::ostringstream os;
  os << "morphology,policy," << kStatsHeader << ",status,errors\n";
  for (std::size_t i = 0; i < r.morphologies.size(); ++i) {
    for (const Cell* c : {&r.shared[i], &r.specialist[i]}) {
      os << csv_field(r.morphologies[i]) << "," << c->row << "," << stats_fields(*c) << "," << status(*c) << ","
         << csv_field(errors(*c)) << "\n";
    }
  }
  return os.str();
}

std::string delta_csv(const CompareResult& r) {
  std::ostringstream os;
  os << "morphology,shared_mean,specialist_mean,delta,ci_low,ci_high,p,exact,significant\n";
  for (const auto& d : r.deltas) {
    os << csv_field(d.morphology) << "," << num(d.shared_mean) << "," << num(d.specialist_mean) << ","
       << num(d.delta) << "," << num(d.ci.low) << "," << num(d.ci.high) << "," << num(d.test.p) << ","
       << (d.test.exact ? 1 : 0) << "," << (d.test.significant() ? 1 : 0) << "\n";
  }
  return os.str();
}

std::string delta_svg(const CompareResult& r) {
  const int left = 60, top = 40, bw = 70, ph = 260;
  const int n = static_cast<int>(r.deltas.size());
  const int pw = std::max(1, n) * bw;
  auto py = [&](double v) { return top + static_cast<int>(std::lround((1.0 - v) * ph / 2.0)); };
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << left + pw + 40 << "\" height=\"" << top + ph + 70
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<text x=\"" << left << "\" y=\"20\" font-size=\"14\">Shared minus specialist success</text>\n";
  os << "<line x1=\"" << left << "\" y1=\"" << py(0) << "\" x2=\"" << left + pw << "\" y2=\"" << py(0)
     << "\" stroke=\"#444444\"/>\n";
  for (int t = -2; t <= 2; ++t) {
    os << "<text x=\"" << left - 6 << "\" y=\"" << py(t / 2.0) + 4 << "\" text-anchor=\"end\">" << t * 50
       << "%</text>\n";
  }
  for (int i = 0; i < n; ++i) {
    const auto& d = r.deltas[static_cast<std::size_t>(i)];
    const int x = left + i * bw + 10;
    const int y0 = std::min(py(0), py(d.delta)), y1 = std::max(py(0), py(d.delta));
    os << "<rect x=\"" << x << "\" y=\"" << y0 << "\" width=\"" << bw - 20 << "\" height=\"" << y1 - y0
       << "\" fill=\"" << (d.delta >= 0 ? "#2ca02c" : "#d62728") << "\"/>\n";
    const int cx = x + (bw - 20) / 2;
    os << "<line x1=\"" << cx << "\" y1=\"" << py(d.ci.low) << "\" x2=\"" << cx << "\" y2=\"" << py(d.ci.high)
       << "\" stroke=\"#000000\"/>\n";
    os << "<text x=\"" << cx << "\" y=\"" << py(std::max(d.ci.high, d.delta)) - 6 << "\" text-anchor=\"middle\">"
       << (d.delta >= 0 ? "+" : "") << pct(d.delta) << "%" << (d.test.significant() ? "*" : "") << "</text>\n";
    os << "<text x=\"" << cx << "\" y=\"" << top + ph + 18 << "\" text-anchor=\"middle\">" << xml(d.morphology)
       << "</text>\n";
  }
  os << "<text x=\"" << left << "\" y=\"" << top + ph + 45
     << "\" font-size=\"10\">Error bars: 95% two-sample bootstrap CI. * p &lt; 0.05, Welch t-test.</text>\n";
  os << "</svg>\n";
  return os.str();
}

std::string cell_md(const Cell& c) {
  if (!c.stats) return "failed";
  std::string s = pct(c.stats->mean) + "% ± " + pct(c.stats->std) + "%";
  if (c.stats->ci_low) s += " " + ci_label(c);
  if (c.vs_specialist && c.vs_specialist->significant()) s += " *";
  if (!c.errors.empty()) s += " (partial)";
  return s;
}

std::string summary_md(const Report& r) {
  std::ostringstream os;
  os << "# Report\n\n";
  std::vector<std::string> errs;
  auto collect = [&](const Cell& c) {
    for (const auto& e : c.errors) {
      if (std::find(errs.begin(), errs.end(), e) == errs.end()) errs.push_back(e);
    }
  };
  if (r.loo) {
    const auto& m = *r.loo;
    os << "## Leave-one-out\n\n| trained without |";
    for (const auto& e : m.morphologies) os << " " << e << " |";
    os << "\n|---|";
    for (std::size_t j = 0; j < m.size(); ++j) os << "---|";
    os << "\n";
    for (std::size_t i = 0; i < m.size(); ++i) {
      os << "| " << m.morphologies[i] << " |";
      for (std::size_t j = 0; j < m.size(); ++j) {
        os << " " << cell_md(m.at(i, j)) << " |";
        collect(m.at(i, j));
      }
      os << "\n";
    }
    os << "\nDiagonal cells are zero-shot.\n\n";
  }
  for (const auto& c : r.scaling) {
    os << "## Scaling, holdout " << c.holdout << "\n\n| set | k | success |\n|---|---|---|\n";
    for (const auto& p : c.points) {
      os << "| " << p.label << (p.diverse ? " (diverse)" : "") << " | " << p.k << " | " << cell_md(p.cell) << " |\n";
      collect(p.cell);
    }
    os << "\n";
  }
  if (r.compare) {
    const auto& c = *r.compare;
    os << "## Shared vs specialist\n\n| morphology | shared | specialist | delta | 95% CI | p |\n"
          "|---|---|---|---|---|---|\n";
    for (std::size_t i = 0; i < c.morphologies.size(); ++i) {
      os << "| " << c.morphologies[i] << " | " << cell_md(c.shared[i]) << " | " << cell_md(c.specialist[i]) << " |";
      const auto it = std::find_if(c.deltas.begin(), c.deltas.end(),
                                   [&](const DeltaRow& d) { return d.morphology == c.morphologies[i]; });
      if (it != c.deltas.end()) {
        os << " " << (it->delta >= 0 ? "+" : "") << pct(it->delta) << "% | [" << pct(it->ci.low) << ", "
           << pct(it->ci.high) << "] | " << num(it->test.p) << (it->test.exact ? " (exact)" : "") << " |\n";
      } else {
        os << " | | |\n";
      }
      collect(c.shared[i]);
      collect(c.specialist[i]);
    }
    os << "\n";
  }
  if (!errs.empty()) {
    os << "## Failures\n\n";
    for (const auto& e : errs) os << "- " << e << "\n";
    os << "\n";
  }
  os << "---\nIntervals are 95% bootstrap CIs over seed-level success rates. Significance markers use a "
        "two-sided Welch t-test at alpha 0.05 with no correction for multiple comparisons.\n";
  return os.str();
}

}  // namespace

std::vector<std::filesystem::path> emit_report(const Report& report, const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> written;
  if (report.empty()) return written;
  auto put = [&](const std::string& name, const std::string& content) {
    write_file_atomic(dir / name, content);
    written.push_back(dir / name);
  };
  if (report.loo) {
    put("loo.csv", loo_csv(*report.loo));
    put("loo_heatmap.svg", loo_svg(*report.loo));
  }
  for (const auto& c : report.scaling) {
    std::string id;
    for (char ch : c.holdout) id += std::isalnum(static_cast<unsigned char>(ch)) ? ch : '-';
    put("scaling_" + id + ".csv", scaling_csv(c));
    put("scaling_" + id + ".svg", scaling_svg(c));
  }
  if (report.compare) {
    put("compare.csv", compare_csv(*report.compare));
    put("compare_deltas.csv", delta_csv(*report.compare));
    put("compare_deltas.svg", delta_svg(*report.compare));
  }
  put("summary.md", summary_md(report));
  return written;
}

}  // namespace getup
