// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstring>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include <boost/math/constants/constants.hpp>
#include <boost/math/special_functions/bessel.hpp>

#include "fixtures.hpp"
#include "gflow/deep_sgd.hpp"
#include "gflow/experiments.hpp"
#include "gflow/gradient_flow.hpp"
#include "gflow/landscape.hpp"
#include "gflow/prob_oracles.hpp"
#include "oracles.hpp"

using namespace gflow;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof buf, f, ap);
    va_end(ap);
    return buf;
}

double median(std::vector<double> x) {
    if (x.empty()) return NAN;
    std::sort(x.begin(), x.end());
    std::size_t n = x.size();
    return n % 2 ? x[n / 2] : 0.5 * (x[n / 2 - 1] + x[n / 2]);
}

ShallowParams random_config(std::mt19937_64& g, int t) {
    int h = (int[]){1, 3, 10}[t % 3];
    return (t / 3) % 2 ? fixtures::random_clipping(g, h) : fixtures::random_relu(g, h);
}

Eigen::MatrixXd second_differences(const ShallowParams& P, const ProblemData& d, double s) {
    auto L = [&](const Eigen::VectorXd& th) {
        auto Q = P;
        Q.set_theta(th);
        return risk_exact(Q, d);
    };
    const Eigen::VectorXd x = P.theta();
    const int n = (int)x.size();
    const double L0 = L(x);
    Eigen::MatrixXd H(n, n);
    for (int i = 0; i < n; ++i) {
        Eigen::VectorXd e = Eigen::VectorXd::Unit(n, i) * s;
        H(i, i) = (L(x + e) - 2 * L0 + L(x - e)) / (s * s);
        for (int j = 0; j < i; ++j) {
            Eigen::VectorXd f = Eigen::VectorXd::Unit(n, j) * s;
            H(i, j) = H(j, i) = (L(x + e + f) - L(x + e - f) - L(x - e + f) + L(x - e - f)) / (4 * s * s);
        }
    }
    return H;
}

// ---- gradient flow runs shared by several criteria

struct GfPool {
    std::vector<TheoremResult> descent;    // clipping theorem scheme, bump density, T = 1000
    std::vector<TheoremResult> width_clip, width_relu;
    std::vector<int> widths{4, 16, 64};
    bool width_done = false;
    double width_seconds = 0;
};

GfPool& pool() {
    static GfPool p;
    return p;
}

const std::vector<TheoremResult>& descent_runs() {
    auto& p = pool();
    if (p.descent.empty()) {
        for (int h : {1, 2, 3, 4}) {
            TheoremExperiment e;
            e.variant = Variant::clipping;
            e.h = h;
            e.data = fixtures::bump_identity();
            e.scheme = InitScheme::clipping(0.875, 3.0);
            e.trials = 30;
            e.base_seed = 100 + h;
            e.horizon = 1000.0;
            p.descent.push_back(run_theorem_experiment(e));
        }
    }
    return p.descent;
}

void width_runs() {
    auto& p = pool();
    if (p.width_done) return;
    auto t0 = std::chrono::steady_clock::now();
    for (int h : p.widths) {
        TheoremExperiment c;
        c.variant = Variant::clipping;
        c.h = h;
        c.data = fixtures::bump_identity();
        c.scheme = InitScheme::clipping(0.875, 3.0);
        c.trials = 50;
        c.base_seed = 7;
        c.horizon = 100.0;
        c.threshold = 0.02;
        p.width_clip.push_back(run_theorem_experiment(c));

        TheoremExperiment r = c;
        r.variant = Variant::relu;
        r.data = fixtures::bump_quadratic();
        r.scheme = InitScheme::relu(0.25, 0.25, 1.0, 1.0);
        r.horizon = 50.0;
        p.width_relu.push_back(run_theorem_experiment(r));
    }
    p.width_done = true;
    p.width_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---- criteria

Outcome gradient_exactness() {
    std::mt19937_64 g(2101);
    auto d = fixtures::rough();
    double worst = 0;
    for (int t = 0; t < 100; ++t) {
        auto P = random_config(g, t);
        auto F = [&](const Eigen::VectorXd& th) {
            auto Q = P;
            Q.set_theta(th);
            return risk_exact(Q, d);
        };
        worst = std::max(worst, oracle::rel_err(risk_gradient_full(P, d), oracle::fd_grad(F, P.theta(), 1e-5)));
    }
    return {worst < 1e-6, fmt("100 configs, max relative error %.2e", worst)};
}

Outcome hessian_exactness() {
    std::mt19937_64 g(2102);
    auto d = fixtures::rough();
    double worst = 0;
    for (int t = 0; t < 100; ++t) {
        auto P = random_config(g, t);
        worst = std::max(worst, oracle::rel_err(risk_hessian_full(P, d), second_differences(P, d, 1e-4)));
    }
    return {worst < 1e-4, fmt("100 configs, max relative error %.2e", worst)};
}

Outcome integrator() {
    // dead neuron on f = x, p = 1: only the outer bias moves, c' = -2(c - 1/2)
    auto d = fixtures::unit_identity();
    double worst = 0;
    for (double c0 : {0.0, 1.5, -2.0}) {
        SolverConfig cfg;
        cfg.times = {0.0, 0.5, 1.0, 2.0};
        auto tr = integrate_gf(ShallowParams::clipping({1.0}, {1.0}, {-2.0}, c0), d, 2.0, cfg);
        for (auto& c : tr.checkpoints)
            worst = std::max(worst, std::abs(c.theta[1] - (0.5 + (c0 - 0.5) * std::exp(-2.0 * c.t))));
    }
    double rise = -INFINITY;
    int runs = 0;
    auto dc = fixtures::bump_identity();
    auto dr = fixtures::bump_quadratic();
    for (int k = 0; k < 50; ++k) {
        Rng rng(trial_seed(31, k));
        bool clip = k % 2 == 0;
        int h = 1 + (k / 2) % 8;
        auto P = clip ? init_shallow(InitScheme::clipping(0.875, 3.0), h, rng)
                      : init_shallow(InitScheme::relu(0.25, 0.25, 1.0, 1.0), h, rng);
        auto tr = integrate_gf(P, clip ? dc : dr, clip ? 200.0 : 50.0, SolverConfig::fixed(0.01));
        for (std::size_t i = 1; i < tr.checkpoints.size(); ++i)
            rise = std::max(rise, tr.checkpoints[i].risk - tr.checkpoints[i - 1].risk);
        ++runs;
    }
    return {worst <= 1e-6 && rise <= 1e-8 && runs == 50,
            fmt("closed form max error %.2e; %d runs, largest risk increase %.2e", worst, runs, rise)};
}

Outcome persistence() {
    int runs = 0, violations = 0, failed = 0;
    for (auto& r : descent_runs())
        for (auto& t : r.trials) {
            if (!t.ok) {
                ++failed;
                continue;
            }
            ++runs;
            violations += t.persistence_violations;
        }
    return {runs >= 100 && violations == 0 && failed == 0,
            fmt("%d clipping runs, %d violations, %d failed", runs, violations, failed)};
}

Outcome descending_avoidance() {
    int runs = 0, converged = 0, descending = 0;
    bool hyp = true;
    for (auto& r : descent_runs()) {
        hyp &= r.data_hypotheses_ok;
        for (auto& t : r.trials) {
            if (!t.ok) continue;
            ++runs;
            if (!t.converged) continue;
            ++converged;
            descending += t.report.classification == CriticalReport::descending;
        }
    }
    return {hyp && runs >= 100 && converged > 0 && descending == 0,
            fmt("%d runs, hypotheses %s, %d converged, %d descending", runs, hyp ? "hold" : "fail", converged,
                descending)};
}

// bound recomputed from the definitions with the oracle quadrature and grid suprema
double clipping_rhs_oracle(const ShallowParams& P, const ProblemData& d) {
    double V = overlap_mass(P, d, limit_min_len(d));
    double mass = oracle::quad([&](double x) { return d.p.eval(x); }, d.a, d.b, {});
    return (2 * V * V + (d.f.eval(d.b) - d.f.eval(d.a)) * V) * mass;
}

double relu_rhs_oracle(const ShallowParams& P, const ProblemData& d) {
    double M = std::abs(P.outer_bias), L = 0, sp = 0;
    for (double v : P.v) M = std::max(M, v);
    const int n = 100000;
    for (int k = 0; k <= n; ++k) {
        double x = d.a + (d.b - d.a) * k / n, s = 1e-6;
        double lo = std::max(d.a, x - s), hi = std::min(d.b, x + s);
        L = std::max(L, (d.f.eval(hi) - d.f.eval(lo)) / (hi - lo));
        sp = std::max(sp, d.p.eval(x));
    }
    return M * (L + M) * sp * (d.b - d.a);
}

struct BoundTally {
    int qualifying = 0, violations = 0;
    double min_slack = INFINITY;
    void add(const TheoremTrial& t, const ProblemData& d) {
        if (!t.ok || !t.bound_applicable) return;
        ++qualifying;
        double rhs = t.final_params.variant == Variant::clipping ? clipping_rhs_oracle(t.final_params, d)
                                                                 : relu_rhs_oracle(t.final_params, d);
        double slack = std::min(t.bound_slack, rhs - oracle::risk(t.final_params, d));
        min_slack = std::min(min_slack, slack);
        violations += slack < -1e-8;
    }
};

Outcome limit_risk_bound() {
    BoundTally clip, relu;
    for (auto& r : descent_runs())
        for (auto& t : r.trials) clip.add(t, fixtures::bump_identity());
    width_runs();
    for (auto& r : pool().width_clip)
        for (auto& t : r.trials) clip.add(t, fixtures::bump_identity());
    for (auto& r : pool().width_relu)
        for (auto& t : r.trials) relu.add(t, fixtures::bump_quadratic());

    // Theorem-scheme limits rarely meet the hypotheses, so add ensembles built for them.
    // clipping: f = x + 0.3x^2, v = 0.45, w = 4, eight neurons spread over (a - 1/w, b);
    // the surplus neurons are squeezed against a or b, which needs a long horizon.
    ProblemData dq = fixtures::unit_identity();
    dq.f = PiecewisePolynomial::polynomial({0.0, 1.0, 0.3});
    GfRunOptions slow;
    slow.horizon = 20000.0;
    for (int k = 0; k < 4; ++k) {
        Rng rng(trial_seed(61, k));
        std::uniform_real_distribution<double> u(-0.25, 1.0);
        std::vector<double> th(8);
        for (auto& x : th) x = -4.0 * u(rng);
        auto P = ShallowParams::clipping(std::vector<double>(8, 0.45), std::vector<double>(8, 4.0), th, 0.0);
        clip.add(run_gf_trial(P, dq, slow), dq);
    }
    // relu: three positive slopes with total above sup f', kinks inside (a,b)
    auto du = fixtures::unit_quadratic();
    GfRunOptions quick;
    quick.horizon = 200.0;
    for (int k = 0; k < 20; ++k) {
        Rng rng(trial_seed(62, k));
        std::uniform_real_distribution<double> uv(1.5, 3.0), uk(0.0, 0.9);
        std::vector<double> v(3), kink(3);
        for (int j = 0; j < 3; ++j) {
            v[j] = uv(rng);
            kink[j] = uk(rng);
        }
        relu.add(run_gf_trial(ShallowParams::relu(v, kink, 0.0), du, quick), du);
    }
    return {clip.qualifying > 0 && relu.qualifying > 0 && clip.violations + relu.violations == 0,
            fmt("clipping %d qualifying limits, min slack %.3g; relu %d, min slack %.3g", clip.qualifying,
                clip.min_slack, relu.qualifying, relu.min_slack)};
}

Outcome width_trend() {
    width_runs();
    auto& p = pool();
    bool ok = true;
    std::string detail;
    for (int v = 0; v < 2; ++v) {
        auto& rs = v ? p.width_relu : p.width_clip;
        detail += v ? "; relu" : "clipping";
        for (std::size_t k = 0; k < rs.size(); ++k) {
            int n = 0;
            for (auto& t : rs[k].trials) n += t.ok;
            ok &= n >= 50 && rs[k].data_hypotheses_ok;
            if (k) {
                ok &= rs[k].median_risk <= rs[k - 1].median_risk;
                ok &= rs[k].fraction_below >= rs[k - 1].fraction_below;
            }
            detail += fmt(" h=%d median %.4g below %.2f", p.widths[k], rs[k].median_risk, rs[k].fraction_below);
        }
    }
    // the runs are shared with the limit-bound check, so time them where they happen
    ok &= p.width_seconds < 1800;
    return {ok, detail + fmt(" (threshold 0.02); runs took %.1f s", p.width_seconds)};
}

Outcome probability_oracles() {
    // Monte Carlo CDF of |X||Y| from an independent generator
    const int n = 1000000;
    std::mt19937_64 g(2108);
    std::normal_distribution<double> z;
    std::vector<double> prod(n);
    for (auto& x : prod) x = std::abs(z(g)) * std::abs(z(g));
    std::sort(prod.begin(), prod.end());
    bool ok = true;
    double worst_sd = 0;
    for (double t : {0.1, 0.5, 1.0, 2.0}) {
        double F = (double)(std::upper_bound(prod.begin(), prod.end(), t) - prod.begin()) / n;
        double se = std::sqrt(F * (1 - F) / n);
        double sd = std::abs(half_normal_product_cdf(t) - F) / se;
        worst_sd = std::max(worst_sd, sd);
        ok &= sd <= 3.0;
    }
    double far = half_normal_product_cdf(50.0);
    ok &= far >= 1 - 1e-8;

    int tails = 0;
    for (int k = 0; k <= 50; ++k) {
        double y = 5.0 * k / 50;
        auto r = gaussian_tail_check(y);
        double lhs = std::erfc(y / std::sqrt(2.0));
        bool good = r.holds && std::abs(r.lhs - lhs) <= 1e-8 && lhs <= std::exp(-y * y / 2) &&
                    std::abs(r.rhs - std::exp(-y * y / 2)) <= 1e-12;
        tails += good;
    }
    ok &= tails == 51;

    bool mono = true;
    double prev = INFINITY, kerr = 0;
    for (int k = 0; k <= 200; ++k) {
        double x = 1e-3 * std::pow(2e4, k / 200.0), K = bessel_k0(x);
        mono &= K < prev;
        prev = K;
        kerr = std::max(kerr, std::abs(K - boost::math::cyl_bessel_k(0, x)) / boost::math::cyl_bessel_k(0, x));
    }
    const double x0 = 1e-6;
    double asym = -std::log(x0 / 2) - boost::math::constants::euler<double>();
    double arel = std::abs(bessel_k0(x0) - asym) / asym;
    ok &= mono && arel < 0.05;
    return {ok, fmt("CDF max %.2f se, F(50) = 1 - %.1e, tail grid %d/51, K0 monotone %s, "
                    "log asymptotic error %.1e, K0 vs reference %.1e",
                    worst_sd, 1 - far, tails, mono ? "yes" : "no", arel, kerr)};
}

Outcome optimizer_algebra() {
    std::mt19937_64 g(2109);
    std::normal_distribution<double> z;
    const int dim = 20;
    auto gradient = [&](int n) {
        Eigen::VectorXd v(dim);
        double s = std::pow(10.0, (n % 7) - 3);
        for (int i = 0; i < dim; ++i) v[i] = s * z(g);
        return v;
    };
    OptimizerConfig adam;
    adam.kind = OptimizerConfig::adam;
    adam.lr0 = 1e-2;
    adam.halve_every = 500;

    // n = 1
    bool first = true;
    {
        Eigen::VectorXd th(dim), g1 = gradient(1);
        for (int i = 0; i < dim; ++i) th[i] = z(g);
        Eigen::VectorXd th0 = th;
        OptimizerState st;
        optimizer_step(adam, st, g1, th);
        for (int i = 0; i < dim; ++i) first &= th[i] == th0[i] - adam.lr(1) * g1[i] / (adam.eps + std::abs(g1[i]));
    }

    // recursions over 1000 steps, each checked against the previous state
    const double eps = std::numeric_limits<double>::epsilon();
    double rm = 0, rM = 0, rt = 0;
    Eigen::VectorXd th = Eigen::VectorXd::Zero(dim);
    OptimizerState st;
    Eigen::VectorXd m = Eigen::VectorXd::Zero(dim), M = Eigen::VectorXd::Zero(dim);
    for (int n = 1; n <= 1000; ++n) {
        Eigen::VectorXd gn = gradient(n), prev = th;
        optimizer_step(adam, st, gn, th);
        for (int i = 0; i < dim; ++i) {
            double em = adam.alpha * m[i] + (1 - adam.alpha) * gn[i];
            double eM = adam.beta * M[i] + (1 - adam.beta) * gn[i] * gn[i];
            rm = std::max(rm, std::abs(st.m[i] - em) / (std::abs(adam.alpha * m[i]) + std::abs((1 - adam.alpha) * gn[i])));
            rM = std::max(rM, std::abs(st.M[i] - eM) / (adam.beta * M[i] + (1 - adam.beta) * gn[i] * gn[i]));
            double step = adam.lr(n) * (st.m[i] / (1 - std::pow(adam.alpha, n))) /
                          (adam.eps + std::sqrt(st.M[i] / (1 - std::pow(adam.beta, n))));
            rt = std::max(rt, std::abs((prev[i] - step) - th[i]) / (std::abs(prev[i]) + std::abs(step)));
        }
        m = st.m;
        M = st.M;
    }
    bool recur = std::max({rm, rM, rt}) <= 8 * eps;

    // plain SGD against the recursion written out
    OptimizerConfig sgd;
    sgd.lr0 = 0.1;
    sgd.halve_every = 150;
    Eigen::VectorXd a(dim), b(dim);
    for (int i = 0; i < dim; ++i) a[i] = b[i] = z(g);
    OptimizerState ss;
    bool bits = true;
    for (int n = 1; n <= 1000; ++n) {
        Eigen::VectorXd gn = gradient(n);
        optimizer_step(sgd, ss, gn, a);
        double gam = 0.1 * std::ldexp(1.0, -(n / 150));
        for (int i = 0; i < dim; ++i) b[i] = b[i] - gam * gn[i];
        bits &= std::memcmp(a.data(), b.data(), sizeof(double) * dim) == 0;
    }
    return {first && recur && bits,
            fmt("first step exact %s; recursion errors %.1e %.1e %.1e relative; SGD bit-identical %s",
                first ? "yes" : "no", rm, rM, rt, bits ? "yes" : "no")};
}

Outcome parameter_counts() {
    std::vector<std::pair<std::vector<int>, long>> cases = {
        {{1, 10, 1}, 31}, {{1, 100, 1}, 301}, {{1, 1000, 1}, 3001}, {{1, 50, 50, 1}, 2701}, {{1, 32, 32, 32, 1}, 2209}};
    bool ok = true;
    std::string detail;
    for (auto& [dims, want] : cases) {
        long got = Architecture{dims, Activation::relu}.param_count();
        ok &= got == want;
        detail += fmt("%s%ld", detail.empty() ? "" : "/", got);
    }
    return {ok, detail};
}

Outcome shallow_sgd_reproduction() {
    auto cfg = preset("sec_4_4", 0.2, 10);
    cfg.trials = 50;
    cfg.batch = 256;
    auto s = run_monte_carlo(cfg);
    bool ok = cfg.steps == 2000 && s.completed() > 0;
    double mi = median(s.initial_losses), mf = median(s.final_losses);
    bool a = mf < 0.2 * mi;
    double gmax = 0;
    for (auto& c : s.grad_norm_curve) gmax = std::max(gmax, c.value);
    double glast = s.grad_norm_curve.back().value;
    bool b = glast < 0.1 * gmax;
    auto& dc = s.distance_curve;
    bool c = dc.size() >= 4;
    for (std::size_t k = dc.size() - dc.size() / 4; k < dc.size(); ++k) c &= dc[k].value < dc[k - 1].value;
    double lowest = *std::min_element(s.final_losses.begin(), s.final_losses.end());
    bool d = lowest >= 1e-12;
    return {ok && a && b && c && d,
            fmt("%d/%d completed; (a) median %.3g vs initial %.3g %s; (b) grad norm %.3g of max %.3g %s; "
                "(c) distance decreasing over last quarter %s; (d) smallest final loss %.3g %s",
                s.completed(), cfg.trials, mf, mi, a ? "ok" : "FAIL", glast, gmax, b ? "ok" : "FAIL",
                c ? "ok" : "FAIL", lowest, d ? "ok" : "FAIL")};
}

Outcome determinism() {
    int compared = 0, differing = 0;
    auto same = [&](const std::string& x, const std::string& y) {
        ++compared;
        differing += x != y;
    };
    for (auto& name : preset_names()) {
        auto cfg = preset(name, 0.02);
        cfg.trials = 3;
        cfg.batch = 64;
        cfg.seed = 12;
        auto s1 = run_monte_carlo(cfg);
        cfg.threads = 2;
        auto s2 = run_monte_carlo(cfg);
        same(final_losses_csv(s1), final_losses_csv(s2));
        same(histogram_csv(s1.histogram), histogram_csv(s2.histogram));
        same(curve_csv(s1.grad_norm_curve), curve_csv(s2.grad_norm_curve));
        same(curve_csv(s1.distance_curve), curve_csv(s2.distance_curve));
    }
    for (auto variant : {Variant::clipping, Variant::relu}) {
        TheoremExperiment e;
        e.variant = variant;
        e.h = 6;
        e.data = variant == Variant::clipping ? fixtures::bump_identity() : fixtures::bump_quadratic();
        e.scheme = variant == Variant::clipping ? InitScheme::clipping(0.875, 3.0) : InitScheme::relu(0.25, 0.25, 1, 1);
        e.trials = 6;
        e.horizon = 20.0;
        auto csv = [&](const TheoremResult& r) {
            std::string s = theorem_csv_header() + "\n";
            for (std::size_t i = 0; i < r.trials.size(); ++i) s += theorem_csv_row((int)i, r.trials[i]) + "\n";
            return s;
        };
        auto r1 = run_theorem_experiment(e);
        e.threads = 3;
        auto r2 = run_theorem_experiment(e);
        same(csv(r1), csv(r2));
        Rng g1(5), g2(5);
        auto P1 = init_shallow(e.scheme, 6, g1), P2 = init_shallow(e.scheme, 6, g2);
        same(trajectory_csv(integrate_gf(P1, e.data, 20.0)), trajectory_csv(integrate_gf(P2, e.data, 20.0)));
    }
    return {differing == 0 && compared > 0, fmt("%d artifact pairs compared, %d differ", compared, differing)};
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        const char* name;
        Outcome (*run)();
        double budget;  // seconds, 0 for none
    };
    const Criterion all[] = {
        {1, "gradient exactness", gradient_exactness, 10},
        {2, "Hessian exactness", hessian_exactness, 30},
        {3, "integrator correctness", integrator, 0},
        {4, "neuron persistence", persistence, 0},
        {5, "descending-point avoidance", descending_avoidance, 0},
        {6, "limit-risk bound", limit_risk_bound, 0},
        {7, "width trend", width_trend, 1800},
        {8, "probability oracles", probability_oracles, 0},
        {9, "optimizer algebra", optimizer_algebra, 0},
        {10, "parameter counts", parameter_counts, 0},
        {11, "shallow clipping SGD at desk scale", shallow_sgd_reproduction, 1200},
        {12, "determinism", determinism, 0},
    };
    int failed = 0;
    for (auto& c : all) {
        auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (c.budget > 0 && sec > c.budget) {
            o.pass = false;
            o.detail += fmt("; over the %.0f s budget", c.budget);
        }
        failed += !o.pass;
        std::printf("criterion %2d %s  %s: %s [%.1f s]\n", c.id, o.pass ? "PASS" : "FAIL", c.name, o.detail.c_str(), sec);
        std::fflush(stdout);
    }
    return failed ? 1 : 0;
}
