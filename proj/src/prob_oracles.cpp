#include "gflow/prob_oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <boost/math/constants/constants.hpp>

namespace gflow {

namespace {

constexpr double pi = boost::math::constants::pi<double>();

double simpson_rec(const std::function<double(double)>& f, double a, double b, double fa, double fm, double fb,
                   double whole, double tol, int depth) {
    double m = 0.5 * (a + b), lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    double flm = f(lm), frm = f(rm);
    double left = (m - a) / 6 * (fa + 4 * flm + fm), right = (b - m) / 6 * (fm + 4 * frm + fb);
    double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15 * tol) return left + right + delta / 15;
    return simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol, int max_depth) {
    if (b == a) return 0.0;
    double fa = f(a), fb = f(b), m = 0.5 * (a + b), fm = f(m);
    double whole = (b - a) / 6 * (fa + 4 * fm + fb);
    return simpson_rec(f, a, b, fa, fm, fb, whole, tol, max_depth);
}

double bessel_k0(double x) {
    if (!(x > 0.0)) throw std::domain_error("bessel_k0: x must be positive");
    // cut where the integrand drops below e^-70; for x >= 70 measure that relative to e^-x
    double wstar = x < 70.0 ? std::acosh(70.0 / x) : std::acosh(1.0 + 70.0 / x);
    auto g = [x](double w) { return std::exp(-x * std::cosh(w)); };
    double scale = std::exp(-x);
    // a few fixed pieces keep the bisection from missing the decay region
    double s = 0.0;
    const int pieces = 4;
    for (int k = 0; k < pieces; ++k)
        s += adaptive_simpson(g, wstar * k / pieces, wstar * (k + 1) / pieces, 1e-13 * scale);
    return s;
}

double half_normal_product_cdf(double z) {
    if (z < 0.0) throw std::domain_error("half_normal_product_cdf: z must be non-negative");
    if (z == 0.0) return 0.0;
    const double z0 = 0.1;
    // y = e^{-u} removes the log singularity at 0
    auto near0 = [](double lo_y) {
        double u0 = -std::log(lo_y), u1 = 60.0;
        auto g = [](double u) {
            double y = std::exp(-u);
            return bessel_k0(y) * y;
        };
        double s = 0.0;
        const int pieces = 6;
        for (int k = 0; k < pieces; ++k)
            s += adaptive_simpson(g, u0 + (u1 - u0) * k / pieces, u0 + (u1 - u0) * (k + 1) / pieces, 1e-13);
        return s;
    };
    double total;
    if (z <= z0) {
        total = near0(z);
    } else {
        total = near0(z0);
        double hi = std::min(z, 80.0);  // K0 < e^-80 beyond
        int pieces = std::max(1, (int)std::ceil(hi - z0));
        for (int k = 0; k < pieces; ++k)
            total += adaptive_simpson(bessel_k0, z0 + (hi - z0) * k / pieces, z0 + (hi - z0) * (k + 1) / pieces,
                                      1e-13);
    }
    return std::min(1.0, 2.0 / pi * total);
}

TailCheckResult gaussian_tail_check(double y) {
    if (y < 0.0) throw std::domain_error("gaussian_tail_check: y must be non-negative");
    TailCheckResult r;
    r.argument = y;
    r.lhs = std::erfc(y / std::sqrt(2.0));
    r.rhs = std::exp(-0.5 * y * y);
    r.holds = r.lhs <= r.rhs + 1e-12;
    return r;
}

double OrderStatSummary::fraction_below(double t) const {
    if (samples.empty()) return 0.0;
    return (double)std::count_if(samples.begin(), samples.end(), [t](double s) { return s <= t; }) /
           (double)samples.size();
}

OrderStatSummary order_stat_sum_estimate(int N, double gamma, int trials, Rng& rng) {
    if (N < 1 || trials < 1) throw std::invalid_argument("order_stat_sum_estimate: N, trials >= 1");
    OrderStatSummary R;
    R.N = N;
    R.k = std::min(N, (int)std::ceil(std::pow((double)N, gamma)));
    std::vector<double> prod(N);
    R.samples.reserve(trials);
    for (int t = 0; t < trials; ++t) {
        for (auto& p : prod) p = sample_half_normal(1.0, rng) * sample_half_normal(1.0, rng);
        std::nth_element(prod.begin(), prod.begin() + (R.k - 1), prod.end());
        R.samples.push_back(std::accumulate(prod.begin(), prod.begin() + R.k, 0.0));
    }
    double n = trials;
    R.mean = std::accumulate(R.samples.begin(), R.samples.end(), 0.0) / n;
    double ss = 0;
    for (double s : R.samples) ss += (s - R.mean) * (s - R.mean);
    R.variance = trials > 1 ? ss / (n - 1) : 0.0;
    std::vector<double> sorted = R.samples;
    std::sort(sorted.begin(), sorted.end());
    for (double q : {0.05, 0.25, 0.5, 0.75, 0.95}) {
        std::size_t i = std::min(sorted.size() - 1, (std::size_t)std::floor(q * (sorted.size() - 1) + 0.5));
        R.quantiles.push_back(sorted[i]);
    }
    return R;
}

double max_outer_weight_probability(const InitScheme& s, int h, double eps, int trials, Rng& rng) {
    if (s.kind != InitScheme::clipping_theorem) throw std::invalid_argument("needs the clipping scheme");
    double thr = std::pow((double)h, -s.alpha + eps);
    int hits = 0;
    for (int t = 0; t < trials; ++t) {
        auto P = init_shallow(s, h, rng);
        if (*std::max_element(P.v.begin(), P.v.end()) >= thr) ++hits;
    }
    return (double)hits / trials;
}

double kink_location_probability(const InitScheme& s, int h, double eps, double b, int trials, Rng& rng) {
    if (s.kind != InitScheme::relu_theorem) throw std::invalid_argument("needs the relu scheme");
    int k = std::min(h, (int)std::ceil(std::pow((double)h, eps)));
    int hits = 0;
    for (int t = 0; t < trials; ++t) {
        auto P = init_shallow(s, h, rng);
        bool ok = true;
        for (int j = 0; j < k; ++j) ok = ok && P.inner_bias[j] < b;
        if (ok) ++hits;
    }
    return (double)hits / trials;
}

}  // namespace gflow
