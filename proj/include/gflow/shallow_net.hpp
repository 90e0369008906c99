#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "gflow/piecewise_poly.hpp"

namespace gflow {

enum class Variant { clipping, relu };

std::string to_string(Variant v);
Variant parse_variant(const std::string& s);

// Shallow one-input network with fixed weights and trainable biases.
//  clipping: N(x) = outer_bias + sum_i v_i clip(w_i x + inner_bias_i)
//  relu:     N(x) = outer_bias + sum_j v_j max(x - inner_bias_j, 0)   (w == 1)
// Coordinates are ordered (inner_bias_1..h, outer_bias).
struct ShallowParams {
    Variant variant = Variant::clipping;
    std::vector<double> v, w, inner_bias;
    double outer_bias = 0.0;
    std::vector<char> trainable;     // h+1 entries
    std::vector<double> flow_scale;  // h+1 entries, multiplies the gradient field

    static ShallowParams clipping(std::vector<double> v, std::vector<double> w,
                                  std::vector<double> inner, double outer);
    // only the kinks are trainable by default
    static ShallowParams relu(std::vector<double> v, std::vector<double> kinks, double c);

    int h() const { return (int)v.size(); }
    int dim() const { return h() + 1; }
    Eigen::VectorXd theta() const;
    void set_theta(const Eigen::VectorXd& th);
    Eigen::VectorXd mask() const;
    void validate() const;
    double psi(int i) const { return -inner_bias[i] / w[i]; }
};

struct ProblemData {
    double a = 0.0, b = 1.0;
    PiecewisePolynomial f, p;
    void validate(Variant v) const;
};

using Interval = std::pair<double, double>;

double realization(const ShallowParams& P, double x);
PiecewisePolynomial realization_pp(const ShallowParams& P);

// clipping only: (psi_i, psi_i + 1/w_i) intersected with (a,b)
std::optional<Interval> activity_interval(const ShallowParams& P, int i, const ProblemData& d);
// relu only: (kink, inf) intersected with (a,b)
std::optional<Interval> relu_active_interval(const ShallowParams& P, int j, const ProblemData& d);

// Exact risk through the piecewise polynomial pipeline.
double risk_exact(const ShallowParams& P, const ProblemData& d);

// Unmasked derivatives with respect to every coordinate.
Eigen::VectorXd risk_gradient_full(const ShallowParams& P, const ProblemData& d);
Eigen::MatrixXd risk_hessian_full(const ShallowParams& P, const ProblemData& d);

// Entries outside the trainable mask are zero.
Eigen::VectorXd risk_gradient(const ShallowParams& P, const ProblemData& d);
Eigen::MatrixXd risk_hessian(const ShallowParams& P, const ProblemData& d);

// Risk, full gradient and the per-segment residual integrals in one sweep.
// Exact as long as the data degrees fit the Gauss rule.
struct SweepResult {
    double risk = 0.0;
    Eigen::VectorXd grad;        // unmasked
    std::vector<double> grid;    // event points in [a,b]
    std::vector<double> seg_res; // int (N-f)p over each elementary segment
};
SweepResult risk_sweep(const ShallowParams& P, const ProblemData& d, bool want_grad = true);

// Gauss-Legendre nodes/weights on [-1,1]
struct GaussRule {
    std::vector<double> x, w;
};
const GaussRule& gauss_rule(int n);

}  // namespace gflow
