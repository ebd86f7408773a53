#include "opcalc/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>

#include "opcalc/errors.hpp"

namespace opcalc {

namespace {

GaussRule compute_rule(int n) {
    // Newton iteration on Legendre polynomials, symmetric roots.
    GaussRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            pp = n * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / pp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        rule.nodes[i] = -x;
        rule.nodes[n - 1 - i] = x;
        double w = 2.0 / ((1.0 - x * x) * pp * pp);
        rule.weights[i] = w;
        rule.weights[n - 1 - i] = w;
    }
    return rule;
}

} // namespace

const GaussRule& gauss_legendre(int order) {
    static std::map<int, GaussRule> cache;
    static std::mutex mtx;
    std::lock_guard<std::mutex> lock(mtx);
    auto it = cache.find(order);
    if (it == cache.end()) it = cache.emplace(order, compute_rule(order)).first;
    return it->second;
}

cd integrate_panels(const std::function<cd(double)>& f,
                    std::span<const double> breaks, int order) {
    const GaussRule& rule = gauss_legendre(order);
    cd total = 0.0;
    for (size_t p = 0; p + 1 < breaks.size(); ++p) {
        const double a = breaks[p], b = breaks[p + 1];
        if (b <= a) continue;
        const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
        cd acc = 0.0;
        for (int i = 0; i < order; ++i)
            acc += rule.weights[i] * f(mid + half * rule.nodes[i]);
        total += half * acc;
    }
    return total;
}

double integrate_panels_real(const std::function<double(double)>& f,
                             std::span<const double> breaks, int order) {
    const GaussRule& rule = gauss_legendre(order);
    double total = 0.0;
    for (size_t p = 0; p + 1 < breaks.size(); ++p) {
        const double a = breaks[p], b = breaks[p + 1];
        if (b <= a) continue;
        const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
        double acc = 0.0;
        for (int i = 0; i < order; ++i)
            acc += rule.weights[i] * f(mid + half * rule.nodes[i]);
        total += half * acc;
    }
    return total;
}

std::vector<double> uniform_breaks(double a, double b, int panels) {
    std::vector<double> v(panels + 1);
    for (int i = 0; i <= panels; ++i) v[i] = a + (b - a) * i / panels;
    return v;
}

std::vector<double> graded_breaks(double a, double b, int levels) {
    std::vector<double> v;
    v.push_back(a);
    for (int k = levels; k >= 1; --k) v.push_back(a + (b - a) / std::pow(2.0, k));
    v.push_back(b);
    return v;
}

double golden_max(const std::function<double(double)>& f, double a, double b,
                  double tol, int maxIter) {
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - gr * (b - a);
    double d = a + gr * (b - a);
    double fc = f(c), fd = f(d);
    for (int i = 0; i < maxIter && (b - a) > tol * (1.0 + std::abs(a) + std::abs(b)); ++i) {
        if (fc > fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - gr * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + gr * (b - a);
            fd = f(d);
        }
    }
    return 0.5 * (a + b);
}

} // namespace opcalc
