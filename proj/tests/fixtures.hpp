#pragma once
// Shared problem instances and random configurations for the tests.

#include <cmath>
#include <random>
#include <vector>

#include "gflow/shallow_net.hpp"

namespace fixtures {

using gflow::PiecewisePolynomial;

// f = x, p = 1 on (0,1)
inline gflow::ProblemData unit_identity() {
    gflow::ProblemData d;
    d.a = 0;
    d.b = 1;
    d.f = PiecewisePolynomial::polynomial({0, 1});
    d.p = PiecewisePolynomial::indicator(0, 1);
    return d;
}

// f = x^2 + 2x, p = 1 on (0,1)
inline gflow::ProblemData unit_quadratic() {
    auto d = unit_identity();
    d.f = PiecewisePolynomial::polynomial({0, 2, 1});
    return d;
}

// continuous density 6x(1-x) on (0,1)
inline PiecewisePolynomial bump_density() {
    return PiecewisePolynomial::from_global({0.0, 1.0}, {{0.0}, {0.0, 6.0, -6.0}, {0.0}});
}

inline gflow::ProblemData bump_identity() {
    auto d = unit_identity();
    d.p = bump_density();
    return d;
}

inline gflow::ProblemData bump_quadratic() {
    auto d = unit_quadratic();
    d.p = bump_density();
    return d;
}

// a rougher instance for derivative checks: kinked f, density continuous inside (0,1)
inline gflow::ProblemData rough() {
    gflow::ProblemData d;
    d.a = 0;
    d.b = 1;
    d.f = PiecewisePolynomial::from_global({0.4}, {{0.1, 1.0}, {0.5 - 0.8 + 0.16, 2.0 - 0.8, 1.0}});
    d.p = PiecewisePolynomial::from_global({0.0, 1.0}, {{0.0}, {1.0, 0.0, 1.0}, {0.0}});
    return d;
}

// all endpoints at least `gap` apart from each other and from data breaks / a / b
inline bool separated(const std::vector<double>& pts, const std::vector<double>& fixed, double gap) {
    std::vector<double> all(pts);
    all.insert(all.end(), fixed.begin(), fixed.end());
    for (std::size_t i = 0; i < pts.size(); ++i)
        for (std::size_t j = 0; j < all.size(); ++j)
            if (i != j && std::abs(pts[i] - all[j]) < gap) return false;
    return true;
}

inline gflow::ShallowParams random_clipping(std::mt19937_64& g, int h, double gap = 2e-3) {
    std::uniform_real_distribution<double> uv(0.2, 2.0), uw(0.8, 5.0), upsi(-0.6, 1.1), uc(-1, 1);
    while (true) {
        std::vector<double> v(h), w(h), th(h), ends;
        for (int i = 0; i < h; ++i) {
            v[i] = uv(g);
            w[i] = uw(g);
            double psi = upsi(g);
            th[i] = -psi * w[i];
            ends.push_back(psi);
            ends.push_back(psi + 1.0 / w[i]);
        }
        if (!separated(ends, {0.0, 0.4, 1.0}, gap)) continue;
        return gflow::ShallowParams::clipping(v, w, th, uc(g));
    }
}

inline gflow::ShallowParams random_relu(std::mt19937_64& g, int h, double gap = 2e-3) {
    std::uniform_real_distribution<double> uv(-2.0, 2.0), uk(-0.3, 1.2), uc(-1, 1);
    while (true) {
        std::vector<double> v(h), k(h);
        for (int i = 0; i < h; ++i) {
            v[i] = uv(g);
            k[i] = uk(g);
        }
        if (!separated(k, {0.0, 0.4, 1.0}, gap)) continue;
        return gflow::ShallowParams::relu(v, k, uc(g));
    }
}

}  // namespace fixtures
