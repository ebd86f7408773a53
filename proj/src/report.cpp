#include "opcalc/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "opcalc/errors.hpp"

namespace opcalc {

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

} // namespace

Config Config::parse(std::istream& is) {
    Config cfg;
    std::string line, section = "global";
    while (std::getline(is, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[' && line.back() == ']') {
            section = trim(line.substr(1, line.size() - 2));
            cfg.sections_[section];
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            fail(ErrorKind::Parse, "config line without '=': " + line);
        cfg.sections_[section][trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return cfg;
}

Config Config::load(const std::string& path) {
    std::ifstream f(path);
    if (!f) fail(ErrorKind::Io, "cannot open config file: " + path);
    return parse(f);
}

bool Config::has(const std::string& section, const std::string& key) const {
    auto s = sections_.find(section);
    return s != sections_.end() && s->second.count(key) > 0;
}

std::string Config::get(const std::string& section, const std::string& key,
                        const std::string& fallback) const {
    auto s = sections_.find(section);
    if (s == sections_.end()) return fallback;
    auto k = s->second.find(key);
    return k == s->second.end() ? fallback : k->second;
}

double Config::get_double(const std::string& section, const std::string& key,
                          double fallback) const {
    const std::string v = get(section, key);
    return v.empty() ? fallback : std::stod(v);
}

long Config::get_long(const std::string& section, const std::string& key,
                      long fallback) const {
    const std::string v = get(section, key);
    return v.empty() ? fallback : std::stol(v);
}

std::vector<double> Config::get_doubles(const std::string& section,
                                        const std::string& key) const {
    std::vector<double> out;
    std::istringstream ss(get(section, key));
    double v;
    while (ss >> v) out.push_back(v);
    return out;
}

std::vector<std::string> Config::get_words(const std::string& section,
                                           const std::string& key) const {
    std::vector<std::string> out;
    std::istringstream ss(get(section, key));
    std::string w;
    while (ss >> w) out.push_back(w);
    return out;
}

// ---------------------------------------------------------------------------

std::string format_sig17(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

ResultRow make_row(std::string experiment,
                   std::vector<std::pair<std::string, std::string>> params,
                   double measured, double bound, double tol) {
    ResultRow row;
    row.experiment = std::move(experiment);
    row.params = std::move(params);
    row.measured = measured;
    row.bound = bound;
    row.ratio = bound != 0.0 ? measured / bound
                             : (measured == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
    row.pass = row.ratio <= 1.0 + tol;
    return row;
}

namespace {

std::string csv_safe(std::string v) {
    for (auto& c : v)
        if (c == ',') c = '~';
    return v;
}

} // namespace

void write_csv(std::ostream& os, const std::vector<ResultRow>& rows) {
    os << "experiment";
    if (!rows.empty())
        for (const auto& p : rows.front().params) os << ",param:" << csv_safe(p.first);
    os << ",measured,bound,ratio,pass\n";
    for (const auto& r : rows) {
        os << r.experiment;
        for (const auto& p : r.params) os << "," << csv_safe(p.second);
        os << "," << format_sig17(r.measured) << "," << format_sig17(r.bound) << ","
           << format_sig17(r.ratio) << "," << (r.pass ? "true" : "false") << "\n";
    }
}

void write_csv_file(const std::string& path, const std::vector<ResultRow>& rows) {
    std::ofstream f(path, std::ios::binary);
    if (!f) fail(ErrorKind::Io, "cannot write CSV file: " + path);
    write_csv(f, rows);
}

void emit_rows(const std::string& format, const std::string& path,
               const std::vector<ResultRow>& rows) {
    if (format == "csv") {
        write_csv_file(path, rows);
        return;
    }
    if (format == "svg") {
        SvgSeries measured{"measured", {}, {}, "#1f6fb2"};
        SvgSeries bound{"bound", {}, {}, "#b23a1f"};
        for (size_t i = 0; i < rows.size(); ++i) {
            measured.x.push_back(static_cast<double>(i));
            measured.y.push_back(rows[i].measured);
            bound.x.push_back(static_cast<double>(i));
            bound.y.push_back(rows[i].bound);
        }
        SvgOptions opts;
        opts.title = rows.empty() ? "results" : rows.front().experiment;
        opts.xLabel = "row";
        opts.yLabel = "value";
        opts.logY = true;
        write_svg_plot(path, {measured, bound}, opts);
        return;
    }
    fail(ErrorKind::Parse, "unknown emit format '" + format + "' (use csv or svg)");
}

// ---------------------------------------------------------------------------

namespace {

double map_coord(double v, double lo, double hi, double outLo, double outHi,
                 bool logScale) {
    if (logScale) {
        v = std::log10(std::max(v, 1e-300));
        lo = std::log10(std::max(lo, 1e-300));
        hi = std::log10(std::max(hi, 1e-300));
    }
    if (hi <= lo) return 0.5 * (outLo + outHi);
    return outLo + (v - lo) / (hi - lo) * (outHi - outLo);
}

std::string fmt6(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

} // namespace

void write_svg_plot(const std::string& path, const std::vector<SvgSeries>& series,
                    const SvgOptions& opts) {
    std::ofstream f(path, std::ios::binary);
    if (!f) fail(ErrorKind::Io, "cannot write SVG file: " + path);

    double xLo = 1e300, xHi = -1e300, yLo = 1e300, yHi = -1e300;
    for (const auto& s : series) {
        for (double v : s.x) {
            xLo = std::min(xLo, v);
            xHi = std::max(xHi, v);
        }
        for (double v : s.y) {
            yLo = std::min(yLo, v);
            yHi = std::max(yHi, v);
        }
    }
    if (xLo > xHi) {
        xLo = 0;
        xHi = 1;
        yLo = 0;
        yHi = 1;
    }
    if (yLo == yHi) {
        yLo -= 0.5;
        yHi += 0.5;
    }

    const double mL = 70, mR = 20, mT = 40, mB = 50;
    const double W = opts.width, H = opts.height;

    f << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\""
      << H << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
    f << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
    f << "<rect x=\"" << mL << "\" y=\"" << mT << "\" width=\"" << (W - mL - mR)
      << "\" height=\"" << (H - mT - mB)
      << "\" fill=\"none\" stroke=\"#444\" stroke-width=\"1\"/>\n";
    if (!opts.title.empty())
        f << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" "
          << "font-family=\"sans-serif\" font-size=\"15\">" << opts.title << "</text>\n";
    if (!opts.xLabel.empty())
        f << "<text x=\"" << W / 2 << "\" y=\"" << H - 12
          << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
          << opts.xLabel << "</text>\n";
    if (!opts.yLabel.empty())
        f << "<text x=\"16\" y=\"" << H / 2
          << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
          << "transform=\"rotate(-90 16 " << H / 2 << ")\">" << opts.yLabel
          << "</text>\n";

    // axis ticks (4 per axis)
    for (int i = 0; i <= 4; ++i) {
        const double fx = i / 4.0;
        double xv = opts.logX ? std::pow(10.0, std::log10(xLo) + fx * (std::log10(xHi) - std::log10(xLo)))
                              : xLo + fx * (xHi - xLo);
        double yv = opts.logY ? std::pow(10.0, std::log10(yLo) + fx * (std::log10(yHi) - std::log10(yLo)))
                              : yLo + fx * (yHi - yLo);
        const double px = mL + fx * (W - mL - mR);
        const double py = H - mB - fx * (H - mT - mB);
        f << "<text x=\"" << px << "\" y=\"" << H - mB + 16
          << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">"
          << fmt6(xv) << "</text>\n";
        f << "<text x=\"" << mL - 6 << "\" y=\"" << py + 3
          << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">"
          << fmt6(yv) << "</text>\n";
    }

    int legendY = static_cast<int>(mT) + 14;
    for (const auto& s : series) {
        f << "<polyline fill=\"none\" stroke=\"" << s.color
          << "\" stroke-width=\"1.5\" points=\"";
        for (size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
            const double px = map_coord(s.x[i], xLo, xHi, mL, W - mR, opts.logX);
            const double py = map_coord(s.y[i], yLo, yHi, H - mB, mT, opts.logY);
            f << fmt6(px) << "," << fmt6(py) << " ";
        }
        f << "\"/>\n";
        f << "<text x=\"" << W - mR - 150 << "\" y=\"" << legendY
          << "\" font-family=\"sans-serif\" font-size=\"11\" fill=\"" << s.color << "\">"
          << s.label << "</text>\n";
        legendY += 14;
    }
    f << "</svg>\n";
}

} // namespace opcalc
