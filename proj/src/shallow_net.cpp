#include "gflow/shallow_net.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <boost/math/quadrature/gauss.hpp>

namespace gflow {

std::string to_string(Variant v) { return v == Variant::clipping ? "clipping" : "relu"; }

Variant parse_variant(const std::string& s) {
    if (s == "clipping" || s == "clip") return Variant::clipping;
    if (s == "relu") return Variant::relu;
    throw std::invalid_argument("unknown variant: " + s);
}

ShallowParams ShallowParams::clipping(std::vector<double> v, std::vector<double> w,
                                      std::vector<double> inner, double outer) {
    ShallowParams P;
    P.variant = Variant::clipping;
    P.v = std::move(v);
    P.w = std::move(w);
    P.inner_bias = std::move(inner);
    P.outer_bias = outer;
    P.trainable.assign(P.v.size() + 1, 1);
    P.flow_scale.assign(P.v.size() + 1, 1.0);
    P.validate();
    return P;
}

ShallowParams ShallowParams::relu(std::vector<double> v, std::vector<double> kinks, double c) {
    ShallowParams P;
    P.variant = Variant::relu;
    P.v = std::move(v);
    P.w.assign(P.v.size(), 1.0);
    P.inner_bias = std::move(kinks);
    P.outer_bias = c;
    P.trainable.assign(P.v.size() + 1, 1);
    P.trainable.back() = 0;
    P.flow_scale.assign(P.v.size() + 1, 1.0);
    P.validate();
    return P;
}

Eigen::VectorXd ShallowParams::theta() const {
    Eigen::VectorXd t(dim());
    for (int i = 0; i < h(); ++i) t[i] = inner_bias[i];
    t[h()] = outer_bias;
    return t;
}

void ShallowParams::set_theta(const Eigen::VectorXd& th) {
    for (int i = 0; i < h(); ++i) inner_bias[i] = th[i];
    outer_bias = th[h()];
}

Eigen::VectorXd ShallowParams::mask() const {
    Eigen::VectorXd m(dim());
    for (int i = 0; i < dim(); ++i) m[i] = trainable[i] ? 1.0 : 0.0;
    return m;
}

void ShallowParams::validate() const {
    std::size_t n = v.size();
    if (n == 0) throw std::invalid_argument("shallow net needs h >= 1");
    if (w.size() != n || inner_bias.size() != n || trainable.size() != n + 1 || flow_scale.size() != n + 1)
        throw std::invalid_argument("shallow net: inconsistent sizes");
    if (variant == Variant::clipping) {
        for (std::size_t i = 0; i < n; ++i)
            if (!(v[i] > 0) || !(w[i] > 0)) throw std::invalid_argument("clipping net needs v, w > 0");
    }
}

void ProblemData::validate(Variant var) const {
    if (!(b > a)) throw std::invalid_argument("problem data needs b > a");
    if (var == Variant::relu && !(b > std::max(a, 0.0)))
        throw std::invalid_argument("relu problem data needs b > max(a,0)");
}

double realization(const ShallowParams& P, double x) {
    double s = P.outer_bias;
    if (P.variant == Variant::clipping) {
        for (int i = 0; i < P.h(); ++i) {
            double z = P.w[i] * x + P.inner_bias[i];
            s += P.v[i] * std::min(std::max(z, 0.0), 1.0);
        }
    } else {
        for (int j = 0; j < P.h(); ++j) s += P.v[j] * std::max(x - P.inner_bias[j], 0.0);
    }
    return s;
}

PiecewisePolynomial realization_pp(const ShallowParams& P) {
    PiecewisePolynomial N = PiecewisePolynomial::constant(P.outer_bias);
    for (int i = 0; i < P.h(); ++i) {
        if (P.variant == Variant::clipping) {
            double lo = P.psi(i), hi = lo + 1.0 / P.w[i];
            if (hi > lo)
                N = N + PiecewisePolynomial::from_local({lo, hi}, {{0.0}, {0.0, P.v[i] * P.w[i]}, {P.v[i]}});
            else
                N = N + PiecewisePolynomial::from_local({lo}, {{0.0}, {P.v[i]}});
        } else {
            N = N + PiecewisePolynomial::from_local({P.inner_bias[i]}, {{0.0}, {0.0, P.v[i]}});
        }
    }
    return N;
}

std::optional<Interval> activity_interval(const ShallowParams& P, int i, const ProblemData& d) {
    if (P.variant != Variant::clipping) throw std::invalid_argument("activity_interval: clipping variant only");
    double lo = std::max(P.psi(i), d.a), hi = std::min(P.psi(i) + 1.0 / P.w[i], d.b);
    if (!(lo < hi)) return std::nullopt;
    return Interval{lo, hi};
}

std::optional<Interval> relu_active_interval(const ShallowParams& P, int j, const ProblemData& d) {
    if (P.variant != Variant::relu) throw std::invalid_argument("relu_active_interval: relu variant only");
    double lo = std::max(P.inner_bias[j], d.a);
    if (!(lo < d.b)) return std::nullopt;
    return Interval{lo, d.b};
}

double risk_exact(const ShallowParams& P, const ProblemData& d) {
    auto r = realization_pp(P) - d.f;
    return (r * r * d.p).integrate(d.a, d.b);
}

template <int N>
static GaussRule make_rule() {
    using G = boost::math::quadrature::gauss<double, N>;
    GaussRule r;
    const auto& ab = G::abscissa();
    const auto& wt = G::weights();
    for (std::size_t k = 0; k < ab.size(); ++k) {
        if (ab[k] == 0.0) {
            r.x.push_back(0.0);
            r.w.push_back(wt[k]);
        } else {
            r.x.push_back(ab[k]);
            r.w.push_back(wt[k]);
            r.x.push_back(-ab[k]);
            r.w.push_back(wt[k]);
        }
    }
    return r;
}

const GaussRule& gauss_rule(int n) {
    static const std::vector<GaussRule> rules = {
        make_rule<1>(), make_rule<2>(), make_rule<3>(), make_rule<4>(), make_rule<5>(),
        make_rule<6>(), make_rule<7>(), make_rule<8>(), make_rule<9>(), make_rule<10>(),
    };
    if (n < 1 || n > 10) throw std::out_of_range("gauss_rule: 1..10 points");
    return rules[n - 1];
}

namespace {

int rule_points(const ProblemData& d) {
    int deg = 2 * std::max(1, d.f.degree()) + d.p.degree();
    int n = deg / 2 + 1;
    if (n > 10) throw std::domain_error("risk_sweep: data degree too high for the Gauss rule");
    return n;
}

void push_inside(std::vector<double>& g, double x, double a, double b) {
    if (x > a && x < b) g.push_back(x);
}

double clampd(double x, double a, double b) { return std::min(std::max(x, a), b); }

std::size_t idx(const std::vector<double>& g, double x) {
    return std::lower_bound(g.begin(), g.end(), x) - g.begin();
}

}  // namespace

SweepResult risk_sweep(const ShallowParams& P, const ProblemData& d, bool want_grad) {
    const int h = P.h();
    const double a = d.a, b = d.b;
    SweepResult R;
    auto& g = R.grid;
    g.reserve(2 * h + d.f.breaks().size() + d.p.breaks().size() + 2);
    g.push_back(a);
    g.push_back(b);
    for (double x : d.f.breaks()) push_inside(g, x, a, b);
    for (double x : d.p.breaks()) push_inside(g, x, a, b);
    std::vector<double> lo(h), hi(h);
    for (int i = 0; i < h; ++i) {
        if (P.variant == Variant::clipping) {
            double ps = P.psi(i);
            lo[i] = ps;
            hi[i] = ps + 1.0 / P.w[i];
            push_inside(g, lo[i], a, b);
            push_inside(g, hi[i], a, b);
        } else {
            lo[i] = P.inner_bias[i];
            hi[i] = b;
            push_inside(g, lo[i], a, b);
        }
    }
    std::sort(g.begin(), g.end());
    g.erase(std::unique(g.begin(), g.end()), g.end());

    const GaussRule& gr = gauss_rule(rule_points(d));
    const std::size_t K = g.size() - 1;
    R.seg_res.assign(K, 0.0);
    for (std::size_t k = 0; k < K; ++k) {
        double x0 = g[k], x1 = g[k + 1];
        double m = 0.5 * (x0 + x1), half = 0.5 * (x1 - x0);
        double Nm = P.outer_bias, s = 0.0;
        if (P.variant == Variant::clipping) {
            for (int i = 0; i < h; ++i) {
                if (m >= hi[i]) Nm += P.v[i];
                else if (m > lo[i]) {
                    double vw = P.v[i] * P.w[i];
                    Nm += vw * (m - lo[i]);
                    s += vw;
                }
            }
        } else {
            for (int j = 0; j < h; ++j)
                if (m > lo[j]) {
                    Nm += P.v[j] * (m - lo[j]);
                    s += P.v[j];
                }
        }
        std::size_t kf = d.f.segment_of(m), kp = d.p.segment_of(m);
        double i1 = 0.0, i2 = 0.0;
        for (std::size_t q = 0; q < gr.x.size(); ++q) {
            double dx = half * gr.x[q], x = m + dx;
            double r = Nm + s * dx - d.f.eval_segment(kf, x);
            double pw = d.p.eval_segment(kp, x) * gr.w[q];
            i1 += r * pw;
            i2 += r * r * pw;
        }
        R.seg_res[k] = half * i1;
        R.risk += half * i2;
    }
    if (!want_grad) return R;

    std::vector<double> pre(K + 1, 0.0);
    for (std::size_t k = 0; k < K; ++k) pre[k + 1] = pre[k] + R.seg_res[k];
    R.grad = Eigen::VectorXd::Zero(h + 1);
    for (int i = 0; i < h; ++i) {
        if (P.variant == Variant::clipping) {
            double l = clampd(lo[i], a, b), u = clampd(hi[i], a, b);
            if (u > l) R.grad[i] = 2.0 * P.v[i] * (pre[idx(g, u)] - pre[idx(g, l)]);
        } else {
            double l = clampd(lo[i], a, b);
            R.grad[i] = -2.0 * P.v[i] * (pre[K] - pre[idx(g, l)]);
        }
    }
    R.grad[h] = 2.0 * pre[K];
    return R;
}

Eigen::VectorXd risk_gradient_full(const ShallowParams& P, const ProblemData& d) {
    return risk_sweep(P, d, true).grad;
}

Eigen::MatrixXd risk_hessian_full(const ShallowParams& P, const ProblemData& d) {
    const int h = P.h();
    const double a = d.a, b = d.b;
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(h + 1, h + 1);
    auto residual_p = [&](double x) { return (realization(P, x) - d.f.eval(x)) * d.p.eval(x); };
    H(h, h) = 2.0 * d.p.integrate(a, b);
    if (P.variant == Variant::clipping) {
        std::vector<std::optional<Interval>> I(h);
        for (int i = 0; i < h; ++i) I[i] = activity_interval(P, i, d);
        for (int i = 0; i < h; ++i) {
            if (!I[i]) continue;
            double mass = d.p.integrate(I[i]->first, I[i]->second);
            H(i, h) = H(h, i) = 2.0 * P.v[i] * mass;
            double diag = 2.0 * P.v[i] * P.v[i] * mass;
            double ps = P.psi(i), up = ps + 1.0 / P.w[i];
            double bt = 0.0;
            if (up > a && up < b) bt += residual_p(up);
            if (ps > a && ps < b) bt -= residual_p(ps);
            H(i, i) = diag - 2.0 * (P.v[i] / P.w[i]) * bt;
            for (int j = i + 1; j < h; ++j) {
                if (!I[j]) continue;
                double l = std::max(I[i]->first, I[j]->first), u = std::min(I[i]->second, I[j]->second);
                if (u > l) H(i, j) = H(j, i) = 2.0 * P.v[i] * P.v[j] * d.p.integrate(l, u);
            }
        }
    } else {
        std::vector<double> k(h);
        for (int j = 0; j < h; ++j) k[j] = clampd(P.inner_bias[j], a, b);
        for (int i = 0; i < h; ++i) {
            H(i, h) = H(h, i) = -2.0 * P.v[i] * d.p.integrate(k[i], b);
            for (int j = i; j < h; ++j) {
                double val = 2.0 * P.v[i] * P.v[j] * d.p.integrate(std::max(k[i], k[j]), b);
                if (i == j && P.inner_bias[j] > a && P.inner_bias[j] < b)
                    val += 2.0 * P.v[j] * residual_p(P.inner_bias[j]);
                H(i, j) = H(j, i) = val;
            }
        }
    }
    return H;
}

Eigen::VectorXd risk_gradient(const ShallowParams& P, const ProblemData& d) {
    return risk_gradient_full(P, d).cwiseProduct(P.mask());
}

Eigen::MatrixXd risk_hessian(const ShallowParams& P, const ProblemData& d) {
    Eigen::VectorXd m = P.mask();
    return m.asDiagonal() * risk_hessian_full(P, d) * m.asDiagonal();
}

}  // namespace gflow
