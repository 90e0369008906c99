#pragma once

#include <string>

#include "gflow/deep_sgd.hpp"
#include "gflow/rng.hpp"
#include "gflow/shallow_net.hpp"

namespace gflow {

struct InitScheme {
    enum Kind {
        clipping_theorem,  // alpha, beta
        relu_theorem,      // alpha, beta, gamma, delta
        custom_4_4,        // clipping (1,l,1): l^3 inner, l^{-7/8} outer weights
        custom_4_5,        // relu (1,l,1): weights l^{-4/15}, biases l^{-9/10}
        custom_4_6,        // relu (1,l,1): weights l^{-1/7}, biases l^{-1/2}
        xavier_normal,
        he_normal,
    } kind = clipping_theorem;
    double alpha = 0.875, beta = 3.0, gamma = 1.0, delta = 1.0;
    bool folded = false;  // xavier/he: positive half-normal instead of the full normal

    void validate() const;
    static InitScheme clipping(double alpha, double beta);
    static InitScheme relu(double alpha, double beta, double gamma, double delta);
};

std::string to_string(InitScheme::Kind k);
InitScheme::Kind parse_init_kind(const std::string& s);

double sample_normal(Rng& rng);
double sample_half_normal(double scale, Rng& rng);

// Draws the shallow parameters of the theorem schemes. The relu scheme samples
// N(x) = c + sum v_j max(w_j x + b_j, 0) and maps it onto kinks -b_j/w_j with
// slopes v_j w_j; the flow scale 1/w_j^2 keeps gradient flow in the b_j coordinates.
ShallowParams init_shallow(const InitScheme& s, int h, Rng& rng);

FlatParams init_deep(const Architecture& A, const InitScheme& s, Rng& rng);

}  // namespace gflow
