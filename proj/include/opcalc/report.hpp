#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

namespace opcalc {

// Flat key-value config with one level of [section] headers.
class Config {
public:
    static Config parse(std::istream& is);
    static Config load(const std::string& path);

    bool has(const std::string& section, const std::string& key) const;
    std::string get(const std::string& section, const std::string& key,
                    const std::string& fallback = "") const;
    double get_double(const std::string& section, const std::string& key,
                      double fallback) const;
    long get_long(const std::string& section, const std::string& key,
                  long fallback) const;
    std::vector<double> get_doubles(const std::string& section,
                                    const std::string& key) const;
    std::vector<std::string> get_words(const std::string& section,
                                       const std::string& key) const;
    const std::map<std::string, std::map<std::string, std::string>>& sections() const {
        return sections_;
    }

private:
    std::map<std::string, std::map<std::string, std::string>> sections_;
};

struct ResultRow {
    std::string experiment;
    std::vector<std::pair<std::string, std::string>> params; // ordered
    double measured = 0.0;
    double bound = 0.0;
    double ratio = 0.0; // measured / bound
    bool pass = false;
};

ResultRow make_row(std::string experiment,
                   std::vector<std::pair<std::string, std::string>> params,
                   double measured, double bound, double tol);

std::string format_sig17(double v);

// Schema: experiment,param:<k1>,...,measured,bound,ratio,pass (17 sig digits).
void write_csv(std::ostream& os, const std::vector<ResultRow>& rows);
void write_csv_file(const std::string& path, const std::vector<ResultRow>& rows);

// format in {csv, svg}; anything else is a usage error.
void emit_rows(const std::string& format, const std::string& path,
               const std::vector<ResultRow>& rows);

// Minimal deterministic SVG line plots.
struct SvgSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
    std::string color = "#1f6fb2";
};

struct SvgOptions {
    int width = 720;
    int height = 480;
    bool logX = false;
    bool logY = false;
    std::string title;
    std::string xLabel;
    std::string yLabel;
};

void write_svg_plot(const std::string& path, const std::vector<SvgSeries>& series,
                    const SvgOptions& opts);

} // namespace opcalc
