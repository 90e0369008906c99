#include "gflow/gradient_flow.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <thread>

namespace gflow {

namespace {

std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

Checkpoint make_checkpoint(ShallowParams& P, const ProblemData& d, double t, const Eigen::VectorXd& th) {
    P.set_theta(th);
    auto s = risk_sweep(P, d, true);
    return {t, th, s.risk, flow_grad_norm(P, s.grad)};
}

std::vector<double> checkpoint_times(double horizon, const SolverConfig& cfg) {
    if (!cfg.times.empty()) {
        const auto& T = cfg.times;
        if (T.front() != 0.0) throw std::invalid_argument("integrate_gf: checkpoint times must start at 0");
        for (std::size_t k = 1; k < T.size(); ++k)
            if (!(T[k] > T[k - 1])) throw std::invalid_argument("integrate_gf: checkpoint times must increase");
        return T;
    }
    int n = std::max(2, cfg.checkpoints);
    std::vector<double> T(n);
    for (int k = 0; k < n; ++k) T[k] = horizon * k / (n - 1);
    T.back() = horizon;
    return T;
}

// one fixed-step RK4 pass through all checkpoint times
std::vector<Checkpoint> rk4_pass(const ShallowParams& init, const ProblemData& d, const std::vector<double>& T,
                                 double step) {
    ShallowParams P = init;
    Eigen::VectorXd th = init.theta();
    std::vector<Checkpoint> out;
    out.reserve(T.size());
    out.push_back(make_checkpoint(P, d, T[0], th));
    auto F = [&](const Eigen::VectorXd& x) {
        P.set_theta(x);
        return flow_field(P, d);
    };
    for (std::size_t k = 0; k + 1 < T.size(); ++k) {
        double dt = T[k + 1] - T[k];
        long n = std::max(1L, (long)std::ceil(dt / step - 1e-9));
        double hs = dt / n;
        for (long i = 0; i < n; ++i) {
            Eigen::VectorXd k1 = F(th);
            Eigen::VectorXd k2 = F(th + 0.5 * hs * k1);
            Eigen::VectorXd k3 = F(th + 0.5 * hs * k2);
            Eigen::VectorXd k4 = F(th + hs * k3);
            th += (hs / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            if (!th.allFinite())
                throw GfError("gradient flow state became non-finite", out.back(), T[k] + (i + 1) * hs);
        }
        out.push_back(make_checkpoint(P, d, T[k + 1], th));
        if (!std::isfinite(out.back().risk)) {
            out.pop_back();
            throw GfError("gradient flow risk became non-finite", out.back(), T[k + 1]);
        }
    }
    return out;
}

bool near_zero_poly(const std::vector<double>& c) {
    for (double x : c)
        if (std::abs(x) > 1e-14) return false;
    return true;
}

bool continuous(const PiecewisePolynomial& g) {
    const auto& B = g.breaks();
    for (std::size_t k = 0; k < B.size(); ++k) {
        double l = g.eval_segment(k, B[k]), r = g.eval_segment(k + 1, B[k]);
        if (std::abs(l - r) > 1e-12 * std::max(1.0, std::abs(l))) return false;
    }
    return true;
}

// g > 0 at n interior points of every piece of (lo, hi)
bool positive_inside(const PiecewisePolynomial& g, double lo, double hi, int n = 200) {
    std::vector<double> cuts{lo};
    for (double x : g.breaks())
        if (x > lo && x < hi) cuts.push_back(x);
    cuts.push_back(hi);
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k)
        for (int i = 1; i <= n; ++i) {
            double x = cuts[k] + (cuts[k + 1] - cuts[k]) * i / (n + 1.0);
            if (!(g(x) > 0)) return false;
        }
    return true;
}

bool density_ok(const ProblemData& d) {
    const auto& p = d.p;
    if (!continuous(p)) return false;
    // p vanishes identically off (a,b)
    const auto& B = p.breaks();
    for (std::size_t k = 0; k < p.segment_count(); ++k) {
        double lo = k == 0 ? -std::numeric_limits<double>::infinity() : B[k - 1];
        double hi = k == B.size() ? std::numeric_limits<double>::infinity() : B[k];
        bool outside = lo < d.a || hi > d.b;
        if (outside && !near_zero_poly(p.segments()[k])) return false;
    }
    // the grid misses isolated interior zeros; the infimum away from the ends does not
    double eta = 1e-3 * (d.b - d.a);
    return positive_inside(p, d.a, d.b) && inf_on(p, d.a + eta, d.b - eta) > 1e-12 * sup_on(p, d.a, d.b);
}

std::string b01(bool b) { return b ? "1" : "0"; }

}  // namespace

ShallowParams Trajectory::params_at(std::size_t k) const {
    ShallowParams P = init;
    P.set_theta(checkpoints.at(k).theta);
    return P;
}

Eigen::VectorXd flow_field(const ShallowParams& P, const ProblemData& d, double* risk) {
    auto s = risk_sweep(P, d, true);
    if (risk) *risk = s.risk;
    Eigen::VectorXd G(P.dim());
    for (int i = 0; i < P.dim(); ++i) G[i] = P.trainable[i] ? -P.flow_scale[i] * s.grad[i] : 0.0;
    return G;
}

double flow_grad_norm(const ShallowParams& P, const Eigen::VectorXd& grad) {
    double s = 0.0;
    for (int i = 0; i < P.dim(); ++i)
        if (P.trainable[i]) s += P.flow_scale[i] * grad[i] * grad[i];
    return std::sqrt(s);
}

Trajectory integrate_gf(const ShallowParams& init, const ProblemData& d, double horizon, const SolverConfig& cfg) {
    if (!(horizon > 0)) throw std::invalid_argument("integrate_gf: horizon must be positive");
    init.validate();
    d.validate(init.variant);
    auto T = checkpoint_times(horizon, cfg);

    double step = cfg.step;
    if (!(step > 0)) step = 1e-2 / std::max(1.0, flow_field(init, d).norm());

    Trajectory tr;
    tr.init = init;
    tr.solver.tolerance = cfg.tolerance;
    tr.checkpoints = rk4_pass(init, d, T, step);
    tr.solver.step = step;
    if (cfg.refine) {
        for (int r = 1; r <= cfg.max_refinements; ++r) {
            step *= 0.5;
            auto finer = rk4_pass(init, d, T, step);
            double gap = 0.0;
            for (std::size_t k = 0; k < finer.size(); ++k)
                gap = std::max(gap, std::abs(finer[k].risk - tr.checkpoints[k].risk));
            tr.checkpoints = std::move(finer);
            tr.solver.step = step;
            tr.solver.refinements = r;
            tr.solver.agreement = gap;
            if (gap < cfg.tolerance) {
                tr.solver.agreed = true;
                break;
            }
        }
    }
    double T0 = tr.horizon() * 0.9;
    int in_window = 0;
    for (auto& c : tr.checkpoints) in_window += c.t >= T0;
    if (in_window >= 10) apply_limit(tr);
    return tr;
}

LimitResult detect_limit(const Trajectory& tr, double window, double tol) {
    if (!(window > 0 && window <= 1)) throw std::invalid_argument("detect_limit: window is a fraction in (0,1]");
    const auto& C = tr.checkpoints;
    if (C.empty()) throw std::invalid_argument("detect_limit: empty trajectory");
    double T = C.back().t, t0 = T * (1.0 - window);
    LimitResult R;
    int n = 0;
    for (auto& c : C)
        if (c.t >= t0) {
            ++n;
            R.movement = std::max(R.movement, (c.theta - C.back().theta).lpNorm<Eigen::Infinity>());
        }
    if (n < 10) throw std::invalid_argument("detect_limit: fewer than 10 checkpoints in the window");

    // least squares of risk - risk(T) against 1/t over the trailing half
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int m = 0;
    for (auto& c : C)
        if (c.t >= 0.5 * T && c.t > 0) {
            double x = 1.0 / c.t, y = c.risk - C.back().risk;
            sx += x, sy += y, sxx += x * x, sxy += x * y;
            ++m;
        }
    double A = 0.0, slope = 0.0;
    double den = m * sxx - sx * sx;
    if (m >= 2 && den > 1e-300 * std::max(1.0, m * sxx)) {
        slope = (m * sxy - sx * sy) / den;
        A = (sy - slope * sx) / m;
    }
    R.rate_fit = {C.back().risk + A, slope};

    R.converged = R.movement < tol;
    if (R.converged) R.limit = tr.params_at(C.size() - 1);
    return R;
}

void apply_limit(Trajectory& tr, double window, double tol) {
    auto R = detect_limit(tr, window, tol);
    tr.converged = R.converged;
    tr.limit = R.limit;
    tr.rate_fit = R.rate_fit;
    tr.movement = R.movement;
}

double max_risk_increase(const Trajectory& tr) {
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k < tr.checkpoints.size(); ++k)
        m = std::max(m, tr.checkpoints[k].risk - tr.checkpoints[k - 1].risk);
    return m;
}

int persistence_violations(const Trajectory& tr, const ProblemData& d) {
    if (tr.init.variant != Variant::clipping) return 0;
    std::vector<int> alive;
    for (int i = 0; i < tr.init.h(); ++i)
        if (activity_interval(tr.init, i, d)) alive.push_back(i);
    int bad = 0;
    for (std::size_t k = 0; k < tr.checkpoints.size(); ++k) {
        auto P = tr.params_at(k);
        for (int i : alive)
            if (!activity_interval(P, i, d)) ++bad;
    }
    return bad;
}

double bound_excess(const Trajectory& tr, const ProblemData& d) {
    const auto& P0 = tr.init;
    int h = P0.h();
    std::vector<double> B(h);
    if (P0.variant == Variant::clipping) {
        for (int k = 0; k < h; ++k)
            B[k] = std::max({P0.w[k] * std::abs(d.a - 1.0 / P0.w[k]), P0.w[k] * std::abs(d.b),
                             std::abs(P0.inner_bias[k])});
    } else {
        double mass = d.p.integrate(d.a, d.b);
        auto g = (d.f - P0.outer_bias) * (d.f - P0.outer_bias) * d.p;
        double fit = std::sqrt(std::max(0.0, g.integrate(d.a, d.b)));
        double L0 = std::sqrt(std::max(0.0, risk_sweep(P0, d, false).risk));
        for (int j = 0; j < h; ++j) {
            double far = P0.v[j] > 0 ? std::abs(d.a) + (L0 + fit) / (P0.v[j] * std::sqrt(mass))
                                     : std::numeric_limits<double>::infinity();
            B[j] = std::max({d.b, std::abs(P0.inner_bias[j]), far});
        }
    }
    double ex = -std::numeric_limits<double>::infinity();
    for (auto& c : tr.checkpoints)
        for (int k = 0; k < h; ++k)
            if (P0.trainable[k]) ex = std::max(ex, std::abs(c.theta[k]) - B[k]);
    return ex;
}

bool relu_slope_mass_ok(const ShallowParams& P, const ProblemData& d) {
    double L = sup_on(d.f.derivative(), d.a, d.b);
    double s = 0.0;
    for (int j = 0; j < P.h(); ++j)
        if (P.inner_bias[j] < d.b) s += P.v[j];
    return s >= L;
}

bool increasing_on(const PiecewisePolynomial& f, double a, double b) {
    if (!continuous(f)) return false;
    // f' >= 0 and not identically zero on any piece
    auto df = f.derivative();
    if (inf_on(df, a, b) < -1e-12) return false;
    std::vector<double> cuts{a};
    for (double x : df.breaks())
        if (x > a && x < b) cuts.push_back(x);
    cuts.push_back(b);
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k)
        if (!(sup_on(df, cuts[k], cuts[k + 1]) > 0)) return false;
    return true;
}

bool clipping_theorem_data_ok(const ProblemData& d) {
    return d.b > d.a && density_ok(d) && increasing_on(d.f, d.a, d.b);
}

bool relu_theorem_data_ok(const ProblemData& d) {
    if (!density_ok(d) || !relu_target_ok(d)) return false;
    auto df = d.f.derivative(), ddf = df.derivative();
    if (!continuous(df) || !continuous(ddf)) return false;  // C^2
    return inf_on(df, d.a, d.b) > 0 && positive_inside(ddf, d.a, d.b);
}

TheoremTrial run_gf_trial(const ShallowParams& init, const ProblemData& d, const GfRunOptions& opt) {
    TheoremTrial T;
    T.init = init;
    try {
        auto tr = integrate_gf(init, d, opt.horizon, opt.solver);
        apply_limit(tr, opt.window, opt.move_tol);
        T.refinements = tr.solver.refinements;
        T.final_params = tr.params_at(tr.checkpoints.size() - 1);
        T.initial_risk = tr.checkpoints.front().risk;
        T.final_risk = tr.checkpoints.back().risk;
        T.converged = tr.converged;
        T.rate_fit = tr.rate_fit;
        T.movement = tr.movement;
        T.report = classify(T.final_params, d, 1e-7, opt.eig_tol);
        T.max_risk_increase = max_risk_increase(tr);
        T.persistence_violations = persistence_violations(tr, d);
        T.bound_excess = bound_excess(tr, d);
        if (T.converged && T.report.classification == CriticalReport::non_descending) {
            auto lb = bounds_at_limit(T.final_params, d);
            if (init.variant == Variant::clipping && theorem_2_25_hypotheses(init, T.final_params, d)) {
                T.bound_applicable = true;
                T.bound_slack = lb.theorem_2_25_rhs - T.final_risk;
            } else if (init.variant == Variant::relu && cor_3_7_hypotheses(T.final_params, d)) {
                T.bound_applicable = true;
                T.bound_slack = lb.cor_3_7_rhs - T.final_risk;
            }
        }
        if (init.variant == Variant::relu && T.converged && relu_slope_mass_ok(init, d)) {
            T.endpoint_applicable = true;
            T.endpoint_gap = realization(T.final_params, d.b) - d.f(d.b);
        }
    } catch (const std::exception& e) {
        T.ok = false;
        T.error = e.what();
    }
    return T;
}

TheoremResult run_theorem_experiment(const TheoremExperiment& cfg) {
    auto want = cfg.variant == Variant::clipping ? InitScheme::clipping_theorem : InitScheme::relu_theorem;
    if (cfg.scheme.kind != want)
        throw std::invalid_argument("run_theorem_experiment: scheme does not match the variant");
    cfg.scheme.validate();
    if (cfg.h < 1 || cfg.trials < 1 || !(cfg.horizon > 0))
        throw std::invalid_argument("run_theorem_experiment: need h >= 1, trials >= 1, horizon > 0");
    cfg.data.validate(cfg.variant);
    bool target_ok = cfg.variant == Variant::clipping ? increasing_on(cfg.data.f, cfg.data.a, cfg.data.b)
                                                      : relu_target_ok(cfg.data);
    if (!target_ok) throw std::invalid_argument("run_theorem_experiment: target violates the theorem assumptions");

    const auto& d = cfg.data;
    TheoremResult R;
    R.data_hypotheses_ok =
        cfg.variant == Variant::clipping ? clipping_theorem_data_ok(cfg.data) : relu_theorem_data_ok(cfg.data);
    R.trials.resize(cfg.trials);
    GfRunOptions opt{cfg.horizon, cfg.solver, cfg.window, cfg.move_tol, cfg.eig_tol};
    auto run_one = [&](int i) {
        std::uint64_t seed = trial_seed(cfg.base_seed, i);
        try {
            Rng rng(seed);
            R.trials[i] = run_gf_trial(init_shallow(cfg.scheme, cfg.h, rng), d, opt);
        } catch (const std::exception& e) {
            R.trials[i].ok = false;
            R.trials[i].error = e.what();
        }
        R.trials[i].seed = seed;
    };

    int nt = std::max(1, std::min(cfg.threads, cfg.trials));
    if (nt == 1) {
        for (int i = 0; i < cfg.trials; ++i) run_one(i);
    } else {
        std::atomic<int> next{0};
        std::vector<std::thread> pool;
        for (int t = 0; t < nt; ++t)
            pool.emplace_back([&] {
                for (int i; (i = next.fetch_add(1)) < cfg.trials;) run_one(i);
            });
        for (auto& th : pool) th.join();
    }

    std::vector<double> risks;
    int below = 0;
    for (auto& T : R.trials) {
        if (!T.ok) {
            ++R.failed;
            continue;
        }
        risks.push_back(T.final_risk);
        below += T.final_risk < cfg.threshold;
        if (T.converged) {
            ++R.converged;
            R.descending += T.report.classification == CriticalReport::descending;
        }
    }
    if (!risks.empty()) {
        std::sort(risks.begin(), risks.end());
        std::size_t n = risks.size();
        R.median_risk = n % 2 ? risks[n / 2] : 0.5 * (risks[n / 2 - 1] + risks[n / 2]);
        R.fraction_below = (double)below / n;
    }
    return R;
}

std::string trajectory_csv(const Trajectory& tr) {
    std::ostringstream os;
    os << "t,risk,grad_norm";
    for (int i = 1; i <= tr.init.dim(); ++i) os << ",theta_" << i;
    os << "\n";
    for (auto& c : tr.checkpoints) {
        os << fmt(c.t) << ',' << fmt(c.risk) << ',' << fmt(c.grad_norm);
        for (int i = 0; i < c.theta.size(); ++i) os << ',' << fmt(c.theta[i]);
        os << "\n";
    }
    return os.str();
}

std::string theorem_csv_header() {
    return "trial,seed,ok,converged,initial_risk,final_risk,L_inf,C,movement,classification,min_eigenvalue,"
           "grad_norm,max_risk_increase,persistence_violations,bound_excess,bound_applicable,bound_slack,"
           "endpoint_applicable,endpoint_gap,refinements";
}

std::string theorem_csv_row(int index, const TheoremTrial& t) {
    std::ostringstream os;
    os << index << ',' << t.seed << ',' << b01(t.ok) << ',' << b01(t.converged) << ','
       << fmt(t.initial_risk) << ',' << fmt(t.final_risk) << ',' << fmt(t.rate_fit.L_inf) << ','
       << fmt(t.rate_fit.C) << ',' << fmt(t.movement) << ',' << to_string(t.report.classification) << ','
       << fmt(t.report.min_trainable_eigenvalue) << ',' << fmt(t.report.gradient_norm) << ','
       << fmt(t.max_risk_increase) << ',' << t.persistence_violations << ',' << fmt(t.bound_excess) << ','
       << b01(t.bound_applicable) << ',' << fmt(t.bound_slack) << ','
       << b01(t.endpoint_applicable) << ',' << fmt(t.endpoint_gap) << ',' << t.refinements;
    return os.str();
}

}  // namespace gflow
