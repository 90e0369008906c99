#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace gflow {

// Piecewise polynomial on the real line.
//
// Segment k lives on (breaks[k-1], breaks[k]) with breaks[-1] = -inf and
// breaks[n] = +inf. Each segment stores ascending coefficients in the local
// variable (x - anchor(k)), where anchor(k) is the segment's left breakpoint
// (the first breakpoint for the leftmost segment, 0 if there are none).
// Local anchoring keeps steep narrow pieces well conditioned.
class PiecewisePolynomial {
public:
    static constexpr int max_degree = 16;

    PiecewisePolynomial();  // zero function

    static PiecewisePolynomial constant(double c);
    // single polynomial, coefficients in powers of x
    static PiecewisePolynomial polynomial(const std::vector<double>& coeffs);
    // rows[k] are coefficients in powers of x (global basis) for segment k
    static PiecewisePolynomial from_global(const std::vector<double>& breaks,
                                           const std::vector<std::vector<double>>& rows);
    // rows[k] already in the local basis about anchor(k)
    static PiecewisePolynomial from_local(const std::vector<double>& breaks,
                                          const std::vector<std::vector<double>>& rows);
    // c on (lo, hi), zero elsewhere
    static PiecewisePolynomial indicator(double lo, double hi, double c = 1.0);

    double operator()(double x) const { return eval(x); }
    double eval(double x) const;
    double derivative_at(double x) const;

    std::size_t segment_of(double x) const;
    double eval_segment(std::size_t k, double x) const;
    double anchor(std::size_t k) const;

    const std::vector<double>& breaks() const { return breaks_; }
    const std::vector<std::vector<double>>& segments() const { return segs_; }
    std::size_t segment_count() const { return segs_.size(); }
    std::vector<double> global_coeffs(std::size_t k) const;
    int degree() const;

    double integrate(double lo, double hi) const;
    PiecewisePolynomial derivative() const;

    PiecewisePolynomial operator+(const PiecewisePolynomial& o) const;
    PiecewisePolynomial operator-(const PiecewisePolynomial& o) const;
    PiecewisePolynomial operator*(const PiecewisePolynomial& o) const;
    PiecewisePolynomial operator*(double s) const;
    PiecewisePolynomial operator+(double c) const;
    PiecewisePolynomial operator-(double c) const;

    std::string describe() const;

private:
    std::vector<double> breaks_;
    std::vector<std::vector<double>> segs_;

    template <class Op>
    PiecewisePolynomial combine(const PiecewisePolynomial& o, Op op) const;
};

enum class ArithOp { add, sub, mul };
PiecewisePolynomial arithmetic(ArithOp op, const PiecewisePolynomial& a, const PiecewisePolynomial& b);
PiecewisePolynomial scale(const PiecewisePolynomial& a, double s);
double integrate_exact(const PiecewisePolynomial& pp, double lo, double hi);

namespace poly {
double eval(const std::vector<double>& c, double t);
// coefficients of p(t + d) given those of p(t)
std::vector<double> shift(const std::vector<double>& c, double d);
std::vector<double> mul(const std::vector<double>& a, const std::vector<double>& b);
void trim(std::vector<double>& c);
}  // namespace poly

bool same_break(double x, double y);

}  // namespace gflow
