#pragma once

#include <string>
#include <utility>
#include <vector>

#include "gflow/shallow_net.hpp"

namespace gflow {

struct CriticalReport {
    enum Classification { descending, non_descending };

    double risk = 0.0;
    double gradient_norm = 0.0;  // in the flow coordinates (see flow_scale)
    bool is_critical = false;
    double min_trainable_eigenvalue = 0.0;
    Classification classification = non_descending;
    bool nestedness_ok = true;  // clipping only
    bool slope_sum_ok = true;   // clipping only
    double V = 0.0;
    double limit_risk_bound = 0.0;               // clipping: 2V^2 + ..., relu: max{v, |c|}(L + ...)
    std::pair<double, double> endpoint_bounds;  // |N(a) - f(a)|, |N(b) - f(b)|
    // clipping: int_{I_i} (N-f)p per neuron, then int_a^b (N-f)p
    // relu: int (N-f)p between consecutive distinct kinks in [a,b], then up to b
    std::vector<double> residuals;
};

std::string to_string(CriticalReport::Classification c);

// Raises std::runtime_error if the eigensolver fails.
CriticalReport classify(const ShallowParams& P, const ProblemData& d, double grad_tol = 1e-7,
                        double eig_tol = 1e-6);

// true iff every overlapping pair of activity intervals is nested
bool nestedness_check(const ShallowParams& P, const ProblemData& d, double tol = 1e-9);

struct LimitBounds {
    double V = 0.0;
    double theorem_2_25_rhs = 0.0;
    double cor_3_7_rhs = 0.0;
    std::pair<double, double> endpoint_gaps;  // |N(a)-f(a)|, |N(b)-f(b)|
};
LimitBounds bounds_at_limit(const ShallowParams& P, const ProblemData& d);

// sup_x sum_{x in I_j} v_j over the open activity intervals (relu: (kink, b)).
// Intervals no longer than min_len are skipped.
double overlap_mass(const ShallowParams& P, const ProblemData& d, double min_len = 0.0);

// At a numerically detected limit an interval squeezed against a or b shrinks
// exponentially towards the empty set; below this length it counts as empty.
inline double limit_min_len(const ProblemData& d) { return 1e-9 * (d.b - d.a); }

// max over x in (a,b) of  sum_{x in I_j} v_j w_j - 4 max_{x in I_j} v_j w_j   (clipping)
double slope_sum_excess(const ShallowParams& P, const ProblemData& d);

// max{N(b) - f(b), f(a) - N(a)} - V, clipping endpoint bound
double endpoint_excess(const ShallowParams& P, const ProblemData& d);

// relu: max over active kinks with N < f of (f - N)(kink) - v_j; -inf if none
double kink_gap_excess(const ShallowParams& P, const ProblemData& d);

// ---- extrema of piecewise polynomials on a closed interval
double sup_on(const PiecewisePolynomial& g, double lo, double hi);
double inf_on(const PiecewisePolynomial& g, double lo, double hi);
double lipschitz_on(const PiecewisePolynomial& g, double lo, double hi);

// ---- hypothesis checks

// f non-decreasing on [a,b] and Lip(f) < min_i v_i w_i
bool clipping_monotone_lip(const ShallowParams& P, const ProblemData& d);

// everything the limit-risk bound needs, given the initial value and the limit
bool theorem_2_25_hypotheses(const ShallowParams& init, const ShallowParams& limit, const ProblemData& d);

// density shape assumptions of the slope-sum bound, searched over (epsilon, delta)
bool slope_sum_hypotheses(const ShallowParams& P, const ProblemData& d);

// relu target assumptions: f(a) = 0 < f' on (a,b), f strictly convex, b > max(a, 0)
bool relu_target_ok(const ProblemData& d);

// relu bound assumptions at a limit: relu_target_ok, v > 0, N(b) >= f(b) - tol
bool cor_3_7_hypotheses(const ShallowParams& limit, const ProblemData& d, double tol = 1e-9);

// one CSV row; header() gives the columns
std::string csv_header_critical();
std::string csv_row(const CriticalReport& r);

}  // namespace gflow
