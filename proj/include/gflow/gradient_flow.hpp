#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gflow/landscape.hpp"
#include "gflow/random_init.hpp"
#include "gflow/shallow_net.hpp"

namespace gflow {

struct SolverConfig {
    double step = 0.0;         // 0: 1e-2 / max(1, |G(theta_0)|)
    double tolerance = 1e-6;   // max checkpoint risk gap between successive halvings
    int max_refinements = 6;
    int checkpoints = 201;     // equally spaced on [0, horizon], both ends included
    std::vector<double> times; // explicit checkpoint times (must start at 0); overrides the count
    bool refine = true;

    static SolverConfig fixed(double step) {
        SolverConfig c;
        c.step = step;
        return c;
    }
};

struct SolverInfo {
    std::string method = "rk4";
    double step = 0.0;       // step of the accepted run
    double tolerance = 0.0;
    int refinements = 0;     // halvings performed
    double agreement = 0.0;  // risk gap of the last comparison
    bool agreed = false;     // agreement < tolerance reached
};

struct Checkpoint {
    double t = 0.0;
    Eigen::VectorXd theta;  // (inner_bias..., outer_bias)
    double risk = 0.0;
    double grad_norm = 0.0;
};

struct RateFit {
    double L_inf = 0.0, C = 0.0;  // risk(t) ~ L_inf + C/t
};

struct Trajectory {
    ShallowParams init;
    std::vector<Checkpoint> checkpoints;
    SolverInfo solver;
    bool converged = false;
    std::optional<ShallowParams> limit;
    RateFit rate_fit;
    double movement = 0.0;  // sup-norm drift over the trailing window

    ShallowParams params_at(std::size_t k) const;
    double horizon() const { return checkpoints.empty() ? 0.0 : checkpoints.back().t; }
};

// thrown when the state stops being finite; carries the last finite checkpoint
class GfError : public std::runtime_error {
public:
    GfError(const std::string& what, Checkpoint last, double t_fail)
        : std::runtime_error(what), last(std::move(last)), t_fail(t_fail) {}
    Checkpoint last;
    double t_fail;
};

// -flow_scale * mask * grad L, optionally with the risk
Eigen::VectorXd flow_field(const ShallowParams& P, const ProblemData& d, double* risk = nullptr);

// gradient norm in the flow coordinates
double flow_grad_norm(const ShallowParams& P, const Eigen::VectorXd& grad);

// Runs detect_limit with the default window when there are enough checkpoints.
Trajectory integrate_gf(const ShallowParams& init, const ProblemData& d, double horizon,
                        const SolverConfig& cfg = {});

struct LimitResult {
    bool converged = false;
    std::optional<ShallowParams> limit;
    RateFit rate_fit;
    double movement = 0.0;
};

// window is a fraction of the horizon. Needs >= 10 checkpoints inside it.
LimitResult detect_limit(const Trajectory& traj, double window = 0.1, double tol = 1e-6);
void apply_limit(Trajectory& traj, double window = 0.1, double tol = 1e-6);

// ---- trajectory diagnostics

// largest risk increase between consecutive checkpoints (<= 0 when dissipative)
double max_risk_increase(const Trajectory& tr);

// clipping: number of (checkpoint, neuron) pairs where a neuron active at t=0 is inactive
int persistence_violations(const Trajectory& tr, const ProblemData& d);

// largest excess of |inner bias| over its a-priori bound (clipping: w|a-1/w|, w|b|, |theta_0|;
// relu: b, |kink_0|, |a| + (L_0^{1/2} + |f-c|_p) / (v (int p)^{1/2}))
double bound_excess(const Trajectory& tr, const ProblemData& d);

// relu: sum of slopes with kink below b is at least sup f' on (a,b)
bool relu_slope_mass_ok(const ShallowParams& P, const ProblemData& d);

// ---- data hypotheses of the two theorems

// continuous, strictly increasing on [a,b]
bool increasing_on(const PiecewisePolynomial& f, double a, double b);

// f, p continuous piecewise polynomials, p >= 0 with {p != 0} = (a,b), f strictly increasing
bool clipping_theorem_data_ok(const ProblemData& d);
// additionally b > max(a,0), f(a) = 0, f' > 0, f'' > 0 on (a,b)
bool relu_theorem_data_ok(const ProblemData& d);

// ---- theorem-level Monte Carlo

struct TheoremExperiment {
    Variant variant = Variant::clipping;  // clipping: all biases; relu: kinks only
    int h = 16;
    ProblemData data;
    InitScheme scheme;
    int trials = 50;
    std::uint64_t base_seed = 1;
    double horizon = 1000.0;
    // fixed step 1e-2: the relu flow scale 1/w^2 is heavy tailed, so the initial-gradient
    // rule would shrink the step for every trial; halving still enforces agreement
    SolverConfig solver = SolverConfig::fixed(0.01);
    double window = 0.1, move_tol = 1e-6;
    double threshold = 0.0;  // risk threshold for the success fraction
    int threads = 1;
    double eig_tol = 1e-6;
};

struct TheoremTrial {
    std::uint64_t seed = 0;
    bool ok = true;
    std::string error;
    ShallowParams init, final_params;
    double initial_risk = 0.0;
    double final_risk = 0.0;  // risk at the horizon, the limiting-risk estimate
    bool converged = false;
    RateFit rate_fit;
    double movement = 0.0;
    CriticalReport report;  // of the final state
    // invariants along the run
    double max_risk_increase = 0.0;
    int persistence_violations = 0;
    double bound_excess = 0.0;
    // limit-risk bound (only when converged and non-descending)
    bool bound_applicable = false;
    double bound_slack = 0.0;  // rhs - risk
    // relu endpoint property (only when the slope-mass precondition holds and converged)
    bool endpoint_applicable = false;
    double endpoint_gap = 0.0;  // N(b) - f(b)
    int refinements = 0;
};

struct GfRunOptions {
    double horizon = 1000.0;
    SolverConfig solver = SolverConfig::fixed(0.01);
    double window = 0.1, move_tol = 1e-6, eig_tol = 1e-6;
};

// integrate, detect the limit, classify, check the invariants and the applicable bounds.
// Errors are caught and recorded in the trial (ok = false).
TheoremTrial run_gf_trial(const ShallowParams& init, const ProblemData& d, const GfRunOptions& opt);

struct TheoremResult {
    std::vector<TheoremTrial> trials;
    bool data_hypotheses_ok = false;  // clipping_theorem_data_ok / relu_theorem_data_ok
    int failed = 0;
    int converged = 0;
    int descending = 0;
    double median_risk = 0.0;     // over successful trials
    double fraction_below = 0.0;  // final_risk < threshold, over successful trials
};

// Throws before any trial when the exponents or the target assumptions fail.
// The remaining data hypotheses (density shape, smoothness) are only reported.
TheoremResult run_theorem_experiment(const TheoremExperiment& cfg);

// ---- CSV
std::string trajectory_csv(const Trajectory& tr);
std::string theorem_csv_header();
std::string theorem_csv_row(int index, const TheoremTrial& t);

}  // namespace gflow
