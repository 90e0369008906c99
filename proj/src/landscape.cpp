#include "gflow/landscape.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace gflow {

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

std::vector<double> poly_derivative(const std::vector<double>& c) {
    std::vector<double> d;
    for (std::size_t k = 1; k < c.size(); ++k) d.push_back(k * c[k]);
    if (d.empty()) d.push_back(0.0);
    return d;
}

// extremum of one polynomial piece (local coefficients about t0) on [s, e]
double piece_extremum(const std::vector<double>& c, double t0, double s, double e, bool want_max) {
    auto val = [&](double x) { return poly::eval(c, x - t0); };
    auto better = [&](double a, double b) { return want_max ? std::max(a, b) : std::min(a, b); };
    double best = better(val(s), val(e));
    if (c.size() <= 2 || !(e > s)) return best;
    auto dc = poly_derivative(c);
    auto dv = [&](double x) { return poly::eval(dc, x - t0); };
    // interior extrema sit where the derivative changes sign
    const int n = 64;
    double xl = s, fl = dv(s);
    for (int k = 1; k <= n; ++k) {
        double xr = s + (e - s) * k / n, fr = dv(xr);
        if (fl == 0.0) best = better(best, val(xl));
        if ((fl < 0) != (fr < 0) && fl != 0.0 && fr != 0.0) {
            double lo = xl, hi = xr, flo = fl;
            for (int it = 0; it < 80 && hi - lo > 1e-15 * std::max(1.0, std::abs(lo)); ++it) {
                double m = 0.5 * (lo + hi), fm = dv(m);
                if ((fm < 0) == (flo < 0)) {
                    lo = m;
                    flo = fm;
                } else {
                    hi = m;
                }
            }
            best = better(best, val(0.5 * (lo + hi)));
        }
        xl = xr;
        fl = fr;
    }
    return best;
}

double extremum_on(const PiecewisePolynomial& g, double lo, double hi, bool want_max) {
    if (!(lo <= hi)) throw std::invalid_argument("extremum_on: empty interval");
    const auto& B = g.breaks();
    double best = want_max ? -inf : inf;
    for (std::size_t k = 0; k < g.segment_count(); ++k) {
        double left = k == 0 ? -inf : B[k - 1], right = k == B.size() ? inf : B[k];
        double s = std::max(lo, left), e = std::min(hi, right);
        // pieces touching [lo,hi] in a single point only matter for a degenerate interval
        if (s > e || (s == e && lo < hi)) continue;
        double v = piece_extremum(g.segments()[k], g.anchor(k), s, e, want_max);
        best = want_max ? std::max(best, v) : std::min(best, v);
    }
    return best;
}

// largest jump of g at a break inside (lo, hi)
double max_jump(const PiecewisePolynomial& g, double lo, double hi) {
    const auto& B = g.breaks();
    double j = 0.0;
    for (std::size_t k = 0; k < B.size(); ++k)
        if (B[k] > lo && B[k] < hi) j = std::max(j, std::abs(g.eval_segment(k + 1, B[k]) - g.eval_segment(k, B[k])));
    return j;
}

struct Span {
    double lo, hi;
    int j;
};

std::vector<Span> active_spans(const ShallowParams& P, const ProblemData& d, double min_len = 0.0) {
    std::vector<Span> out;
    for (int j = 0; j < P.h(); ++j) {
        auto I = P.variant == Variant::clipping ? activity_interval(P, j, d) : relu_active_interval(P, j, d);
        if (I && I->second - I->first > min_len) out.push_back({I->first, I->second, j});
    }
    return out;
}

// calls visit(midpoint, spans containing it) on every elementary piece of (a,b)
template <class Visit>
void sweep(const std::vector<Span>& spans, const ProblemData& d, Visit visit) {
    std::vector<double> pts = {d.a, d.b};
    for (auto& s : spans) {
        pts.push_back(s.lo);
        pts.push_back(s.hi);
    }
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    std::vector<int> act;
    for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
        double m = 0.5 * (pts[k] + pts[k + 1]);
        if (m <= d.a || m >= d.b) continue;
        act.clear();
        for (auto& s : spans)
            if (s.lo < m && m < s.hi) act.push_back(s.j);
        visit(m, act);
    }
}

double min_vw(const ShallowParams& P) {
    double m = inf;
    for (int i = 0; i < P.h(); ++i) m = std::min(m, P.v[i] * P.w[i]);
    return m;
}

double lip_f(const ProblemData& d) {
    if (max_jump(d.f, d.a, d.b) > 1e-12) return inf;
    return lipschitz_on(d.f.derivative(), d.a, d.b);
}

}  // namespace

double sup_on(const PiecewisePolynomial& g, double lo, double hi) { return extremum_on(g, lo, hi, true); }
double inf_on(const PiecewisePolynomial& g, double lo, double hi) { return extremum_on(g, lo, hi, false); }

double lipschitz_on(const PiecewisePolynomial& dg, double lo, double hi) {
    return std::max(std::abs(sup_on(dg, lo, hi)), std::abs(inf_on(dg, lo, hi)));
}

std::string to_string(CriticalReport::Classification c) {
    return c == CriticalReport::descending ? "descending" : "non-descending";
}

double overlap_mass(const ShallowParams& P, const ProblemData& d, double min_len) {
    double V = 0.0;
    sweep(active_spans(P, d, min_len), d, [&](double, const std::vector<int>& act) {
        double s = 0.0;
        for (int j : act) s += P.v[j];
        V = std::max(V, s);
    });
    return V;
}

double slope_sum_excess(const ShallowParams& P, const ProblemData& d) {
    if (P.variant != Variant::clipping) throw std::invalid_argument("slope_sum_excess: clipping only");
    double worst = -inf;
    sweep(active_spans(P, d), d, [&](double, const std::vector<int>& act) {
        if (act.empty()) return;
        double s = 0.0, mx = 0.0;
        for (int j : act) {
            s += P.v[j] * P.w[j];
            mx = std::max(mx, P.v[j] * P.w[j]);
        }
        worst = std::max(worst, s - 4.0 * mx);
    });
    return worst;
}

bool nestedness_check(const ShallowParams& P, const ProblemData& d, double tol) {
    if (P.variant != Variant::clipping) throw std::invalid_argument("nestedness_check: clipping only");
    auto S = active_spans(P, d);
    for (std::size_t i = 0; i < S.size(); ++i)
        for (std::size_t j = i + 1; j < S.size(); ++j) {
            if (std::max(S[i].lo, S[j].lo) >= std::min(S[i].hi, S[j].hi) - tol) continue;  // disjoint
            bool ij = S[i].lo >= S[j].lo - tol && S[i].hi <= S[j].hi + tol;
            bool ji = S[j].lo >= S[i].lo - tol && S[j].hi <= S[i].hi + tol;
            if (!ij && !ji) return false;
        }
    return true;
}

LimitBounds bounds_at_limit(const ShallowParams& P, const ProblemData& d) {
    LimitBounds B;
    B.V = overlap_mass(P, d, limit_min_len(d));
    double fa = d.f.eval(d.a), fb = d.f.eval(d.b);
    double mass = d.p.integrate(d.a, d.b);
    B.theorem_2_25_rhs = (2 * B.V * B.V + (fb - fa) * B.V) * mass;
    double M = std::abs(P.outer_bias);
    for (double v : P.v) M = std::max(M, v);
    double L = sup_on(d.f.derivative(), d.a, d.b);
    B.cor_3_7_rhs = M * (L + M) * sup_on(d.p, d.a, d.b) * (d.b - d.a);
    B.endpoint_gaps = {std::abs(realization(P, d.a) - fa), std::abs(realization(P, d.b) - fb)};
    return B;
}

double endpoint_excess(const ShallowParams& P, const ProblemData& d) {
    double V = overlap_mass(P, d);
    return std::max(realization(P, d.b) - d.f.eval(d.b), d.f.eval(d.a) - realization(P, d.a)) - V;
}

double kink_gap_excess(const ShallowParams& P, const ProblemData& d) {
    if (P.variant != Variant::relu) throw std::invalid_argument("kink_gap_excess: relu only");
    double worst = -inf;
    for (int j = 0; j < P.h(); ++j) {
        double t = P.inner_bias[j];
        if (!(t > d.a && t < d.b)) continue;
        double gap = d.f.eval(t) - realization(P, t);
        if (gap > 0) worst = std::max(worst, gap - P.v[j]);
    }
    return worst;
}

bool clipping_monotone_lip(const ShallowParams& P, const ProblemData& d) {
    if (P.variant != Variant::clipping) return false;
    auto df = d.f.derivative();
    if (inf_on(df, d.a, d.b) < 0.0) return false;
    // a downward jump breaks monotonicity, any jump breaks the Lipschitz bound
    if (max_jump(d.f, d.a, d.b) > 1e-12) return false;
    return lip_f(d) < min_vw(P);
}

bool theorem_2_25_hypotheses(const ShallowParams& init, const ShallowParams& limit, const ProblemData& d) {
    if (!clipping_monotone_lip(limit, d)) return false;
    double V = overlap_mass(limit, d, limit_min_len(d));
    double fa = d.f.eval(d.a), fb = d.f.eval(d.b);
    double mass = d.p.integrate(d.a, d.b);
    auto fp = d.f * d.p;
    double upper = fb * mass - fp.integrate(d.a, d.b), lower = fp.integrate(d.a, d.b) - fa * mass;
    if (!(V < std::min(upper, lower) / mass)) return false;
    double active = 0.0;
    for (int i = 0; i < init.h(); ++i) {
        double psi = init.psi(i);
        if (psi > d.a - 1.0 / init.w[i] && psi < d.b) active += init.v[i];
    }
    return active > fb - fa + 4 * V;
}

bool slope_sum_hypotheses(const ShallowParams& P, const ProblemData& d) {
    if (!(P.variant == Variant::clipping) || !(lip_f(d) < min_vw(P))) return false;
    if (max_jump(d.p, d.a, d.b) > 1e-12) return false;
    double W = *std::min_element(P.w.begin(), P.w.end());
    auto dp = d.p.derivative();
    double Lp = lipschitz_on(dp, d.a, d.b);
    const int n = 2000;
    const double dx = (d.b - d.a) / n;
    // how far p stays strictly increasing from a and strictly decreasing into b
    double eL = 0.0, eR = 0.0;
    for (int k = 1; k <= n && inf_on(dp, d.a, d.a + k * dx) > 0; ++k) eL = k * dx;
    for (int k = 1; k <= n && sup_on(dp, d.b - k * dx, d.b) < 0; ++k) eR = k * dx;
    double eps = std::min(eL, eR);
    for (int k = 1; k < n / 2; ++k) {
        double delta = k * dx;
        if (eps - delta <= 2.0 / W) break;
        if (inf_on(d.p, d.a + delta, d.b - delta) >= Lp / W) return true;
    }
    return false;
}

bool relu_target_ok(const ProblemData& d) {
    if (!(d.b > std::max(d.a, 0.0))) return false;
    if (std::abs(d.f.eval(d.a)) > 1e-12) return false;
    if (max_jump(d.f, d.a, d.b) > 1e-12) return false;
    auto df = d.f.derivative(), d2f = df.derivative();
    if (inf_on(df, d.a, d.b) < 0.0) return false;
    const auto& B = d.f.breaks();
    // derivative may only jump upwards
    for (std::size_t k = 0; k < B.size(); ++k)
        if (B[k] > d.a && B[k] < d.b && df.eval_segment(k + 1, B[k]) < df.eval_segment(k, B[k]) - 1e-12)
            return false;
    for (std::size_t k = 0; k < d2f.segment_count(); ++k) {
        double left = k == 0 ? -inf : d2f.breaks()[k - 1], right = k == d2f.breaks().size() ? inf : d2f.breaks()[k];
        double s = std::max(d.a, left), e = std::min(d.b, right);
        if (!(s < e)) continue;
        if (inf_on(d2f, s, e) < -1e-12) return false;
        if (sup_on(d2f, s, e) <= 0.0) return false;  // affine piece
    }
    return true;
}

bool cor_3_7_hypotheses(const ShallowParams& limit, const ProblemData& d, double tol) {
    if (limit.variant != Variant::relu || !relu_target_ok(d)) return false;
    if (inf_on(d.p, d.a, d.b) < 0.0) return false;
    for (double v : limit.v)
        if (!(v > 0)) return false;
    return realization(limit, d.b) >= d.f.eval(d.b) - tol;
}

CriticalReport classify(const ShallowParams& P, const ProblemData& d, double grad_tol, double eig_tol) {
    P.validate();
    CriticalReport R;
    R.risk = risk_exact(P, d);
    Eigen::VectorXd g = risk_gradient(P, d);
    std::vector<int> idx;
    for (int k = 0; k < P.dim(); ++k)
        if (P.trainable[k]) idx.push_back(k);
    Eigen::VectorXd sq(P.dim());
    for (int k = 0; k < P.dim(); ++k) sq[k] = std::sqrt(P.flow_scale[k]);
    R.gradient_norm = g.cwiseProduct(sq).norm();
    R.is_critical = R.gradient_norm <= grad_tol;

    if (!idx.empty()) {
        Eigen::MatrixXd H = risk_hessian_full(P, d), Hs(idx.size(), idx.size());
        for (std::size_t a = 0; a < idx.size(); ++a)
            for (std::size_t b = 0; b < idx.size(); ++b) Hs(a, b) = sq[idx[a]] * H(idx[a], idx[b]) * sq[idx[b]];
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Hs, Eigen::EigenvaluesOnly);
        if (es.info() != Eigen::Success) throw std::runtime_error("classify: eigensolver failed");
        R.min_trainable_eigenvalue = es.eigenvalues()[0];
    }
    R.classification = R.min_trainable_eigenvalue < -eig_tol ? CriticalReport::descending : CriticalReport::non_descending;

    auto Bd = bounds_at_limit(P, d);
    R.V = Bd.V;
    R.endpoint_bounds = Bd.endpoint_gaps;
    auto res = (realization_pp(P) - d.f) * d.p;
    if (P.variant == Variant::clipping) {
        R.nestedness_ok = nestedness_check(P, d);
        R.slope_sum_ok = slope_sum_excess(P, d) <= 1e-8;
        R.limit_risk_bound = Bd.theorem_2_25_rhs;
        for (int i = 0; i < P.h(); ++i)
            if (auto I = activity_interval(P, i, d)) R.residuals.push_back(res.integrate(I->first, I->second));
        R.residuals.push_back(res.integrate(d.a, d.b));
    } else {
        R.limit_risk_bound = Bd.cor_3_7_rhs;
        std::vector<double> ks;
        double kmin = inf;
        for (int j = 0; j < P.h(); ++j) {
            if (P.v[j] == 0.0) continue;
            kmin = std::min(kmin, P.inner_bias[j]);
            if (P.inner_bias[j] >= d.a && P.inner_bias[j] <= d.b) ks.push_back(P.inner_bias[j]);
        }
        std::sort(ks.begin(), ks.end());
        ks.erase(std::unique(ks.begin(), ks.end(), [](double x, double y) { return same_break(x, y); }), ks.end());
        if (kmin <= d.a && (ks.empty() || ks.front() > d.a))
            R.residuals.push_back(res.integrate(d.a, ks.empty() ? d.b : ks.front()));
        for (std::size_t k = 0; k + 1 < ks.size(); ++k) R.residuals.push_back(res.integrate(ks[k], ks[k + 1]));
        if (!ks.empty()) R.residuals.push_back(res.integrate(ks.back(), d.b));
    }
    return R;
}

std::string csv_header_critical() {
    return "risk,gradient_norm,is_critical,min_eigenvalue,classification,nestedness_ok,slope_sum_ok,V,"
           "limit_risk_bound,endpoint_gap_a,endpoint_gap_b";
}

std::string csv_row(const CriticalReport& r) {
    char buf[512];
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%d,%.17g,%s,%d,%d,%.17g,%.17g,%.17g,%.17g", r.risk,
                  r.gradient_norm, r.is_critical ? 1 : 0, r.min_trainable_eigenvalue,
                  to_string(r.classification).c_str(), r.nestedness_ok ? 1 : 0,
                  r.slope_sum_ok ? 1 : 0, r.V, r.limit_risk_bound, r.endpoint_bounds.first,
                  r.endpoint_bounds.second);
    return buf;
}

}  // namespace gflow
