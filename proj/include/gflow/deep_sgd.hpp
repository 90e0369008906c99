#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gflow/rng.hpp"

namespace gflow {

enum class Activation { relu, clipping };
std::string to_string(Activation a);
Activation parse_activation(const std::string& s);

// Fully connected net with dims (l_0, ..., l_L). Parameters are packed layer
// by layer: the row-major weight matrix of layer k, then its bias vector.
struct Architecture {
    std::vector<int> dims;
    Activation act = Activation::relu;

    int L() const { return (int)dims.size() - 1; }
    long param_count() const;
    long offset(int k) const;  // 0-based start of layer k (1-based k)
    // 1-based flat index, 1-based (k, i, j)
    long weight_index(int k, int i, int j) const;
    long bias_index(int k, int i) const;
    void validate() const;
};

using FlatParams = Eigen::VectorXd;
using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// columns of X are inputs
Eigen::MatrixXd forward(const Architecture& A, const FlatParams& th, const Eigen::MatrixXd& X);
Eigen::VectorXd forward(const Architecture& A, const FlatParams& th, const Eigen::VectorXd& x);

// mean of squared output errors, Y holds target columns
double minibatch_loss(const Architecture& A, const FlatParams& th, const Eigen::MatrixXd& X,
                      const Eigen::MatrixXd& Y);

// gradient of minibatch_loss with relu'(0) = 0 and clip' = 1 on (0,1) only;
// entries where mask is 0 are zeroed. Optionally returns the loss.
Eigen::VectorXd generalized_gradient(const Architecture& A, const FlatParams& th, const Eigen::MatrixXd& X,
                                     const Eigen::MatrixXd& Y, const Eigen::VectorXd& mask,
                                     double* loss = nullptr);

Eigen::MatrixXd eval_target(const std::function<double(double)>& f, const Eigen::MatrixXd& X);

struct OptimizerConfig {
    enum Kind { sgd, adam } kind = sgd;
    double lr0 = 1e-2;
    int halve_every = 0;  // lr_n = lr0 * 2^{-floor(n / halve_every)}; 0 keeps it constant
    double alpha = 0.9, beta = 0.999, eps = 1e-8;
    double lr(long n) const;
};

struct OptimizerState {
    long n = 0;
    Eigen::VectorXd m, M;  // Adam moments: m_n = alpha m_{n-1} + (1 - alpha) g_n, likewise M with g_n^2
    Eigen::VectorXd S, Q;  // m_n / (1 - alpha) and M_n / (1 - beta), accumulated directly
};

// one step with the n-th gradient (n = state.n + 1 after the call)
void optimizer_step(const OptimizerConfig& cfg, OptimizerState& st, const Eigen::VectorXd& g,
                    FlatParams& th);

struct TrialRecord {
    std::uint64_t seed = 0;
    double initial_loss = 0.0;
    double final_loss = 0.0;
    std::vector<long> checkpoints;
    std::vector<double> loss;       // L_{n+1}(Theta_n)
    std::vector<double> grad_norm;  // |G_{n+1}(Theta_n)|
    std::vector<double> dist;       // |Theta_n - Theta_ref|
    std::vector<FlatParams> snapshots;  // only when kept
    FlatParams final_params;
    bool aborted = false;
    long abort_step = -1;
    std::string error;
};

struct TrainSpec {
    Architecture arch;
    Eigen::VectorXd mask;
    OptimizerConfig opt;
    std::function<double(double)> target;
    int batch = 1024;
    long steps = 10000;
    std::vector<long> checkpoints;
    long ref_step = -1;  // -1: no distance curve
    bool keep_snapshots = false;
};

TrialRecord train(const TrainSpec& spec, const FlatParams& theta0, Rng& rng);

}  // namespace gflow
