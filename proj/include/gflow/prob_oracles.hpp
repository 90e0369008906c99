#pragma once

#include <functional>
#include <vector>

#include "gflow/random_init.hpp"
#include "gflow/rng.hpp"

namespace gflow {

// adaptive Simpson bisection with the Richardson correction
double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol,
                        int max_depth = 50);

// K0(x) = int_0^inf exp(-x cosh w) dw straight from the defining integral
double bessel_k0(double x);

// P(XY <= z) for independent standard half-normals X, Y: (2/pi) int_0^z K0
double half_normal_product_cdf(double z);

struct TailCheckResult {
    double argument = 0, lhs = 0, rhs = 0;
    bool holds = false;
};
// int_y^inf sqrt(2/pi) exp(-x^2/2) dx  versus  exp(-y^2/2)
TailCheckResult gaussian_tail_check(double y);

struct OrderStatSummary {
    int N = 0, k = 0;
    double mean = 0, variance = 0;
    std::vector<double> quantiles;  // at 5%, 25%, 50%, 75%, 95%
    std::vector<double> samples;
    double fraction_below(double t) const;
};
// sum of the ceil(N^gamma) smallest of N products of independent half-normals
OrderStatSummary order_stat_sum_estimate(int N, double gamma, int trials, Rng& rng);

// P(max_j outer weight >= h^{-alpha + eps}) under the clipping scheme
double max_outer_weight_probability(const InitScheme& s, int h, double eps, int trials, Rng& rng);

// P(every one of the first ceil(h^eps) relu kinks lies below b) under the relu scheme
double kink_location_probability(const InitScheme& s, int h, double eps, double b, int trials, Rng& rng);

}  // namespace gflow
