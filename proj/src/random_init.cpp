#include "gflow/random_init.hpp"

#include <cmath>
#include <stdexcept>

#include <boost/random/normal_distribution.hpp>

namespace gflow {

void InitScheme::validate() const {
    if (kind == clipping_theorem) {
        if (!(alpha > 0.75 && alpha < 1.0)) throw std::invalid_argument("clipping scheme needs alpha in (3/4, 1)");
        if (!(beta > alpha + 2.0)) throw std::invalid_argument("clipping scheme needs beta > alpha + 2");
    } else if (kind == relu_theorem) {
        if (!(alpha + beta > 0.0 && alpha + beta < 1.0))
            throw std::invalid_argument("relu scheme needs 0 < alpha + beta < 1");
        if (!(2.0 * alpha + beta < gamma)) throw std::invalid_argument("relu scheme needs 2 alpha + beta < gamma");
        if (!(delta > 0.0)) throw std::invalid_argument("relu scheme needs delta > 0");
    }
}

InitScheme InitScheme::clipping(double alpha, double beta) {
    InitScheme s;
    s.kind = clipping_theorem;
    s.alpha = alpha;
    s.beta = beta;
    s.validate();
    return s;
}

InitScheme InitScheme::relu(double alpha, double beta, double gamma, double delta) {
    InitScheme s;
    s.kind = relu_theorem;
    s.alpha = alpha;
    s.beta = beta;
    s.gamma = gamma;
    s.delta = delta;
    s.validate();
    return s;
}

std::string to_string(InitScheme::Kind k) {
    switch (k) {
        case InitScheme::clipping_theorem: return "clipping_theorem";
        case InitScheme::relu_theorem: return "relu_theorem";
        case InitScheme::custom_4_4: return "custom_4_4";
        case InitScheme::custom_4_5: return "custom_4_5";
        case InitScheme::custom_4_6: return "custom_4_6";
        case InitScheme::xavier_normal: return "xavier_normal";
        case InitScheme::he_normal: return "he_normal";
    }
    return "?";
}

InitScheme::Kind parse_init_kind(const std::string& s) {
    for (int k = 0; k <= InitScheme::he_normal; ++k)
        if (to_string((InitScheme::Kind)k) == s) return (InitScheme::Kind)k;
    throw std::invalid_argument("unknown init scheme: " + s);
}

double sample_normal(Rng& rng) {
    boost::random::normal_distribution<double> N(0.0, 1.0);
    return N(rng);
}

double sample_half_normal(double scale, Rng& rng) {
    if (!(scale > 0.0)) throw std::invalid_argument("half-normal scale must be positive");
    double z;
    do z = std::abs(sample_normal(rng));
    while (z == 0.0);
    return scale * z;
}

ShallowParams init_shallow(const InitScheme& s, int h, Rng& rng) {
    s.validate();
    if (h < 1) throw std::invalid_argument("init_shallow: h >= 1");
    const double H = h;
    std::vector<double> v(h), w(h), b(h);
    if (s.kind == InitScheme::clipping_theorem) {
        // coordinate order of the theorem: inner biases, inner weights, outer weights, outer bias
        double sb = std::pow(H, s.beta), sv = std::pow(H, -s.alpha);
        for (auto& x : b) x = sb * sample_normal(rng);
        for (auto& x : w) x = sample_half_normal(sb, rng);
        for (auto& x : v) x = sample_half_normal(sv, rng);
        double c = sample_normal(rng);
        return ShallowParams::clipping(v, w, b, c);
    }
    if (s.kind == InitScheme::relu_theorem) {
        double sb = std::pow(H, -s.gamma), sw = std::pow(H, -s.alpha), sv = std::pow(H, -s.beta);
        for (auto& x : b) x = sb * sample_normal(rng);
        for (auto& x : w) x = sample_half_normal(sw, rng);
        for (auto& x : v) x = sample_half_normal(sv, rng);
        double c = std::pow(H, -s.delta) * sample_normal(rng);
        std::vector<double> kink(h), slope(h);
        for (int j = 0; j < h; ++j) {
            kink[j] = -b[j] / w[j];
            slope[j] = v[j] * w[j];
        }
        auto P = ShallowParams::relu(slope, kink, c);
        for (int j = 0; j < h; ++j) P.flow_scale[j] = 1.0 / (w[j] * w[j]);
        return P;
    }
    throw std::invalid_argument("init_shallow: scheme " + to_string(s.kind) + " is a deep-net scheme");
}

FlatParams init_deep(const Architecture& A, const InitScheme& s, Rng& rng) {
    A.validate();
    FlatParams th = FlatParams::Zero(A.param_count());
    const int L = A.L();
    auto normal_layer = [&](int k, double sd) {
        for (int i = 1; i <= A.dims[k]; ++i)
            for (int j = 1; j <= A.dims[k - 1]; ++j) {
                double z = sample_normal(rng);
                th[A.weight_index(k, i, j) - 1] = sd * (s.folded ? std::abs(z) : z);
            }
    };
    switch (s.kind) {
        case InitScheme::xavier_normal:
            for (int k = 1; k <= L; ++k) normal_layer(k, std::sqrt(2.0 / (A.dims[k - 1] + A.dims[k])));
            return th;  // biases stay zero
        case InitScheme::he_normal:
            for (int k = 1; k <= L; ++k) normal_layer(k, std::sqrt(2.0 / A.dims[k - 1]));
            return th;
        case InitScheme::custom_4_4:
        case InitScheme::custom_4_5:
        case InitScheme::custom_4_6: {
            if (L != 2 || A.dims[0] != 1 || A.dims[2] != 1)
                throw std::invalid_argument("init_deep: shallow (1,l,1) scheme needs a (1,l,1) architecture");
            const int l = A.dims[1];
            const double ll = l;
            double s_w1, s_b1, s_w2, s_b2;
            if (s.kind == InitScheme::custom_4_4) {
                s_w1 = std::pow(ll, 3.0);
                s_b1 = std::pow(ll, 3.0);
                s_w2 = std::pow(ll, -7.0 / 8.0);
                s_b2 = 1.0;
            } else if (s.kind == InitScheme::custom_4_5) {
                s_w1 = s_w2 = std::pow(ll, -4.0 / 15.0);
                s_b1 = s_b2 = std::pow(ll, -9.0 / 10.0);
            } else {
                s_w1 = s_w2 = std::pow(ll, -1.0 / 7.0);
                s_b1 = s_b2 = std::pow(ll, -0.5);
            }
            // flat order: w1 (l), b1 (l), w2 (l), b2
            for (int i = 0; i < l; ++i) th[i] = sample_half_normal(s_w1, rng);
            for (int i = 0; i < l; ++i) th[l + i] = s_b1 * sample_normal(rng);
            for (int i = 0; i < l; ++i) th[2 * l + i] = sample_half_normal(s_w2, rng);
            th[3 * l] = s_b2 * sample_normal(rng);
            return th;
        }
        default:
            throw std::invalid_argument("init_deep: scheme " + to_string(s.kind) + " is a shallow scheme");
    }
}

}  // namespace gflow
