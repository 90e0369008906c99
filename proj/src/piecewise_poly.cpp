#include "gflow/piecewise_poly.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace gflow {

bool same_break(double x, double y) {
    return std::abs(x - y) <= 1e-12 * std::max(1.0, std::abs(x));
}

namespace poly {

double eval(const std::vector<double>& c, double t) {
    double r = 0.0;
    for (std::size_t j = c.size(); j-- > 0;) r = r * t + c[j];
    return r;
}

std::vector<double> shift(const std::vector<double>& c, double d) {
    if (d == 0.0) return c;
    // repeated synthetic division, Horner-style Taylor shift
    std::vector<double> r = c;
    const std::size_t n = r.size();
    for (std::size_t i = 0; i + 1 < n; ++i)
        for (std::size_t j = n - 1; j > i; --j) r[j - 1] += d * r[j];
    return r;
}

std::vector<double> mul(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> r(a.size() + b.size() - 1, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j) r[i + j] += a[i] * b[j];
    return r;
}

void trim(std::vector<double>& c) {
    while (c.size() > 1 && c.back() == 0.0) c.pop_back();
    if (c.empty()) c.push_back(0.0);
}

}  // namespace poly

PiecewisePolynomial::PiecewisePolynomial() : segs_{{0.0}} {}

PiecewisePolynomial PiecewisePolynomial::constant(double c) {
    PiecewisePolynomial p;
    p.segs_ = {{c}};
    return p;
}

PiecewisePolynomial PiecewisePolynomial::polynomial(const std::vector<double>& coeffs) {
    return from_global({}, {coeffs});
}

static void check_layout(const std::vector<double>& breaks, std::size_t rows) {
    if (rows != breaks.size() + 1)
        throw std::invalid_argument("piecewise polynomial: need one more segment than breakpoints");
    for (std::size_t i = 0; i < breaks.size(); ++i) {
        if (!std::isfinite(breaks[i])) throw std::invalid_argument("piecewise polynomial: non-finite breakpoint");
        if (i > 0 && !(breaks[i] > breaks[i - 1]))
            throw std::invalid_argument("piecewise polynomial: breakpoints must be strictly increasing");
    }
}

PiecewisePolynomial PiecewisePolynomial::from_local(const std::vector<double>& breaks,
                                                    const std::vector<std::vector<double>>& rows) {
    check_layout(breaks, rows.size());
    PiecewisePolynomial p;
    p.breaks_ = breaks;
    p.segs_ = rows;
    for (auto& s : p.segs_) {
        poly::trim(s);
        if ((int)s.size() - 1 > max_degree) throw std::domain_error("piecewise polynomial: degree cap exceeded");
    }
    return p;
}

PiecewisePolynomial PiecewisePolynomial::from_global(const std::vector<double>& breaks,
                                                     const std::vector<std::vector<double>>& rows) {
    check_layout(breaks, rows.size());
    PiecewisePolynomial p;
    p.breaks_ = breaks;
    p.segs_.resize(rows.size());
    for (std::size_t k = 0; k < rows.size(); ++k) {
        p.segs_[k] = rows[k].empty() ? std::vector<double>{0.0} : poly::shift(rows[k], p.anchor(k));
        poly::trim(p.segs_[k]);
        if ((int)p.segs_[k].size() - 1 > max_degree)
            throw std::domain_error("piecewise polynomial: degree cap exceeded");
    }
    return p;
}

PiecewisePolynomial PiecewisePolynomial::indicator(double lo, double hi, double c) {
    if (!(lo < hi)) return PiecewisePolynomial();
    return from_local({lo, hi}, {{0.0}, {c}, {0.0}});
}

double PiecewisePolynomial::anchor(std::size_t k) const {
    if (breaks_.empty()) return 0.0;
    return k == 0 ? breaks_[0] : breaks_[k - 1];
}

std::size_t PiecewisePolynomial::segment_of(double x) const {
    return std::upper_bound(breaks_.begin(), breaks_.end(), x) - breaks_.begin();
}

double PiecewisePolynomial::eval_segment(std::size_t k, double x) const {
    return poly::eval(segs_[k], x - anchor(k));
}

double PiecewisePolynomial::eval(double x) const { return eval_segment(segment_of(x), x); }

double PiecewisePolynomial::derivative_at(double x) const {
    std::size_t k = segment_of(x);
    const auto& c = segs_[k];
    double t = x - anchor(k), r = 0.0;
    for (std::size_t j = c.size(); j-- > 1;) r = r * t + j * c[j];
    return r;
}

std::vector<double> PiecewisePolynomial::global_coeffs(std::size_t k) const {
    auto g = poly::shift(segs_[k], -anchor(k));
    poly::trim(g);
    return g;
}

int PiecewisePolynomial::degree() const {
    int d = 0;
    for (auto& s : segs_) d = std::max(d, (int)s.size() - 1);
    return d;
}

double PiecewisePolynomial::integrate(double lo, double hi) const {
    if (!std::isfinite(lo) || !std::isfinite(hi)) throw std::domain_error("integrate: non-finite bound");
    if (hi < lo) throw std::domain_error("integrate: lo > hi");
    if (hi == lo) return 0.0;
    double total = 0.0;
    std::size_t k = segment_of(lo);
    double x0 = lo;
    while (true) {
        double right = k < breaks_.size() ? breaks_[k] : hi;
        double x1 = std::min(right, hi);
        if (x1 > x0) {
            const auto& c = segs_[k];
            double a = anchor(k), t0 = x0 - a, t1 = x1 - a, s = 0.0;
            for (std::size_t j = c.size(); j-- > 0;) {
                // sum c_j (t1^{j+1} - t0^{j+1})/(j+1)
                double p1 = std::pow(t1, (double)(j + 1)), p0 = std::pow(t0, (double)(j + 1));
                s += c[j] * (p1 - p0) / (double)(j + 1);
            }
            total += s;
        }
        if (x1 >= hi) break;
        x0 = x1;
        ++k;
    }
    return total;
}

PiecewisePolynomial PiecewisePolynomial::derivative() const {
    PiecewisePolynomial d;
    d.breaks_ = breaks_;
    d.segs_.resize(segs_.size());
    for (std::size_t k = 0; k < segs_.size(); ++k) {
        const auto& c = segs_[k];
        std::vector<double> r;
        for (std::size_t j = 1; j < c.size(); ++j) r.push_back(j * c[j]);
        poly::trim(r);
        d.segs_[k] = r;
    }
    return d;
}

template <class Op>
PiecewisePolynomial PiecewisePolynomial::combine(const PiecewisePolynomial& o, Op op) const {
    std::vector<double> all;
    all.reserve(breaks_.size() + o.breaks_.size());
    std::merge(breaks_.begin(), breaks_.end(), o.breaks_.begin(), o.breaks_.end(), std::back_inserter(all));
    PiecewisePolynomial r;
    r.breaks_.clear();
    for (double x : all)
        if (r.breaks_.empty() || !same_break(r.breaks_.back(), x)) r.breaks_.push_back(x);
    const auto& B = r.breaks_;
    r.segs_.resize(B.size() + 1);
    for (std::size_t k = 0; k <= B.size(); ++k) {
        double rep;
        if (B.empty()) rep = 0.0;
        else if (k == 0) rep = B[0] - 1.0;
        else if (k == B.size()) rep = B.back() + 1.0;
        else rep = 0.5 * (B[k - 1] + B[k]);
        double an = r.anchor(k);
        std::size_t ka = segment_of(rep), kb = o.segment_of(rep);
        auto ca = poly::shift(segs_[ka], an - anchor(ka));
        auto cb = poly::shift(o.segs_[kb], an - o.anchor(kb));
        auto c = op(ca, cb);
        poly::trim(c);
        if ((int)c.size() - 1 > max_degree) throw std::domain_error("piecewise polynomial: degree cap exceeded");
        r.segs_[k] = std::move(c);
    }
    return r;
}

static std::vector<double> add_coeffs(const std::vector<double>& a, const std::vector<double>& b, double sb) {
    std::vector<double> r(std::max(a.size(), b.size()), 0.0);
    for (std::size_t i = 0; i < a.size(); ++i) r[i] += a[i];
    for (std::size_t i = 0; i < b.size(); ++i) r[i] += sb * b[i];
    return r;
}

PiecewisePolynomial PiecewisePolynomial::operator+(const PiecewisePolynomial& o) const {
    return combine(o, [](auto& a, auto& b) { return add_coeffs(a, b, 1.0); });
}
PiecewisePolynomial PiecewisePolynomial::operator-(const PiecewisePolynomial& o) const {
    return combine(o, [](auto& a, auto& b) { return add_coeffs(a, b, -1.0); });
}
PiecewisePolynomial PiecewisePolynomial::operator*(const PiecewisePolynomial& o) const {
    if (degree() + o.degree() > max_degree) throw std::domain_error("piecewise polynomial: degree cap exceeded");
    return combine(o, [](auto& a, auto& b) { return poly::mul(a, b); });
}
PiecewisePolynomial PiecewisePolynomial::operator*(double s) const {
    PiecewisePolynomial r = *this;
    for (auto& c : r.segs_) {
        for (auto& x : c) x *= s;
        poly::trim(c);
    }
    return r;
}
PiecewisePolynomial PiecewisePolynomial::operator+(double c) const {
    PiecewisePolynomial r = *this;
    for (std::size_t k = 0; k < r.segs_.size(); ++k) r.segs_[k][0] += c;
    return r;
}
PiecewisePolynomial PiecewisePolynomial::operator-(double c) const { return *this + (-c); }

std::string PiecewisePolynomial::describe() const {
    std::ostringstream os;
    os.precision(17);
    os << "breaks:";
    for (double b : breaks_) os << ' ' << b;
    for (std::size_t k = 0; k < segs_.size(); ++k) {
        os << "\nseg" << k << ":";
        for (double c : global_coeffs(k)) os << ' ' << c;
    }
    return os.str();
}

PiecewisePolynomial arithmetic(ArithOp op, const PiecewisePolynomial& a, const PiecewisePolynomial& b) {
    switch (op) {
        case ArithOp::add: return a + b;
        case ArithOp::sub: return a - b;
        case ArithOp::mul: return a * b;
    }
    throw std::invalid_argument("arithmetic: unknown op");
}

PiecewisePolynomial scale(const PiecewisePolynomial& a, double s) { return a * s; }

double integrate_exact(const PiecewisePolynomial& pp, double lo, double hi) { return pp.integrate(lo, hi); }

}  // namespace gflow
