#include "gflow/deep_sgd.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <boost/random/uniform_real_distribution.hpp>

namespace gflow {

std::string to_string(Activation a) { return a == Activation::relu ? "relu" : "clipping"; }

Activation parse_activation(const std::string& s) {
    if (s == "relu") return Activation::relu;
    if (s == "clipping" || s == "clip") return Activation::clipping;
    throw std::invalid_argument("unknown activation: " + s);
}

long Architecture::param_count() const {
    long d = 0;
    for (int k = 1; k <= L(); ++k) d += (long)dims[k] * (dims[k - 1] + 1);
    return d;
}

long Architecture::offset(int k) const {
    long d = 0;
    for (int h = 1; h < k; ++h) d += (long)dims[h] * (dims[h - 1] + 1);
    return d;
}

long Architecture::weight_index(int k, int i, int j) const {
    return (long)(i - 1) * dims[k - 1] + j + offset(k);
}

long Architecture::bias_index(int k, int i) const { return (long)dims[k] * dims[k - 1] + i + offset(k); }

void Architecture::validate() const {
    if (dims.size() < 2) throw std::invalid_argument("architecture needs at least two layers");
    for (int d : dims)
        if (d < 1) throw std::invalid_argument("architecture: layer sizes must be positive");
}

namespace {

Eigen::Map<const RowMat> weights(const Architecture& A, const FlatParams& th, int k) {
    return Eigen::Map<const RowMat>(th.data() + A.offset(k), A.dims[k], A.dims[k - 1]);
}

Eigen::Map<const Eigen::VectorXd> biases(const Architecture& A, const FlatParams& th, int k) {
    return Eigen::Map<const Eigen::VectorXd>(th.data() + A.offset(k) + (long)A.dims[k] * A.dims[k - 1],
                                             A.dims[k]);
}

void activate(Activation a, Eigen::MatrixXd& Z) {
    if (a == Activation::relu) Z = Z.cwiseMax(0.0);
    else Z = Z.cwiseMax(0.0).cwiseMin(1.0);
}

// derivative at the pre-activation, zero on the breakpoints
Eigen::MatrixXd activation_slope(Activation a, const Eigen::MatrixXd& Z) {
    if (a == Activation::relu) return (Z.array() > 0.0).cast<double>().matrix();
    return ((Z.array() > 0.0) && (Z.array() < 1.0)).cast<double>().matrix();
}

void check(const Architecture& A, const FlatParams& th, const Eigen::MatrixXd& X) {
    if (th.size() != A.param_count()) throw std::invalid_argument("parameter vector has wrong length");
    if (X.rows() != A.dims[0]) throw std::invalid_argument("input dimension mismatch");
}

}  // namespace

Eigen::MatrixXd forward(const Architecture& A, const FlatParams& th, const Eigen::MatrixXd& X) {
    check(A, th, X);
    Eigen::MatrixXd H = X;
    for (int k = 1; k <= A.L(); ++k) {
        Eigen::MatrixXd Z = weights(A, th, k) * H;
        Z.colwise() += biases(A, th, k);
        if (k < A.L()) activate(A.act, Z);
        H = std::move(Z);
    }
    return H;
}

Eigen::VectorXd forward(const Architecture& A, const FlatParams& th, const Eigen::VectorXd& x) {
    Eigen::MatrixXd X = x;
    return forward(A, th, X).col(0);
}

double minibatch_loss(const Architecture& A, const FlatParams& th, const Eigen::MatrixXd& X,
                      const Eigen::MatrixXd& Y) {
    return (forward(A, th, X) - Y).squaredNorm() / (double)X.cols();
}

Eigen::VectorXd generalized_gradient(const Architecture& A, const FlatParams& th, const Eigen::MatrixXd& X,
                                     const Eigen::MatrixXd& Y, const Eigen::VectorXd& mask, double* loss) {
    check(A, th, X);
    const int L = A.L();
    const double m = (double)X.cols();
    std::vector<Eigen::MatrixXd> H(L), Z(L);  // H[k-1] feeds layer k, Z[k] pre-activation of layer k
    H[0] = X;
    Eigen::MatrixXd out;
    for (int k = 1; k <= L; ++k) {
        Eigen::MatrixXd z = weights(A, th, k) * H[k - 1];
        z.colwise() += biases(A, th, k);
        if (k < L) {
            Z[k] = z;
            activate(A.act, z);
            H[k] = std::move(z);
        } else {
            out = std::move(z);
        }
    }
    Eigen::MatrixXd delta = out - Y;
    if (loss) *loss = delta.squaredNorm() / m;
    delta *= 2.0 / m;
    Eigen::VectorXd g(th.size());
    for (int k = L; k >= 1; --k) {
        long off = A.offset(k);
        Eigen::Map<RowMat> gW(g.data() + off, A.dims[k], A.dims[k - 1]);
        gW.noalias() = delta * H[k - 1].transpose();
        g.segment(off + (long)A.dims[k] * A.dims[k - 1], A.dims[k]) = delta.rowwise().sum();
        if (k > 1) {
            Eigen::MatrixXd back = weights(A, th, k).transpose() * delta;
            delta = back.cwiseProduct(activation_slope(A.act, Z[k - 1]));
        }
    }
    return g.cwiseProduct(mask);
}

Eigen::MatrixXd eval_target(const std::function<double(double)>& f, const Eigen::MatrixXd& X) {
    Eigen::MatrixXd Y(1, X.cols());
    for (Eigen::Index c = 0; c < X.cols(); ++c) Y(0, c) = f(X(0, c));
    return Y;
}

double OptimizerConfig::lr(long n) const {
    if (halve_every <= 0) return lr0;
    return lr0 * std::ldexp(1.0, -(int)(n / halve_every));
}

void optimizer_step(const OptimizerConfig& cfg, OptimizerState& st, const Eigen::VectorXd& g, FlatParams& th) {
    const long n = ++st.n;
    const double gamma = cfg.lr(n);
    if (cfg.kind == OptimizerConfig::sgd) {
        th -= gamma * g;
        return;
    }
    if (st.S.size() != g.size()) {
        st.S = Eigen::VectorXd::Zero(g.size());
        st.Q = Eigen::VectorXd::Zero(g.size());
    }
    st.S = cfg.alpha * st.S + g;
    st.Q = cfg.beta * st.Q + g.cwiseAbs2();
    st.m = (1.0 - cfg.alpha) * st.S;
    st.M = (1.0 - cfg.beta) * st.Q;
    // (1 - alpha) / (1 - alpha^n) is exactly 1 at n = 1, so the first step is gamma g / (eps + |g|)
    const double ca = (1.0 - cfg.alpha) / (1.0 - std::pow(cfg.alpha, (double)n));
    const double cb = (1.0 - cfg.beta) / (1.0 - std::pow(cfg.beta, (double)n));
    th.array() -= gamma * (st.S.array() * ca) / (cfg.eps + (st.Q.array() * cb).sqrt());
}

TrialRecord train(const TrainSpec& spec, const FlatParams& theta0, Rng& rng) {
    const auto& A = spec.arch;
    A.validate();
    if (A.dims.front() != 1 || A.dims.back() != 1) throw std::invalid_argument("train: scalar input/output only");
    if (spec.steps < 1) throw std::invalid_argument("train: steps must be >= 1");
    TrialRecord rec;
    std::vector<long> cps = spec.checkpoints;
    std::sort(cps.begin(), cps.end());
    cps.erase(std::unique(cps.begin(), cps.end()), cps.end());
    cps.erase(std::remove_if(cps.begin(), cps.end(), [&](long n) { return n < 0 || n > spec.steps; }), cps.end());
    if (spec.ref_step > spec.steps) throw std::invalid_argument("train: reference step beyond horizon");

    boost::random::uniform_real_distribution<double> U(0.0, 1.0);
    auto draw = [&]() {
        Eigen::MatrixXd X(1, spec.batch);
        for (int c = 0; c < spec.batch; ++c) X(0, c) = U(rng);
        return X;
    };

    FlatParams th = theta0;
    OptimizerState st;
    std::vector<FlatParams> snaps;
    FlatParams ref;
    std::size_t next = 0;
    // step n+1 evaluates G_{n+1}(Theta_n) on a fresh batch
    for (long n = 0; n <= spec.steps; ++n) {
        Eigen::MatrixXd X = draw();
        Eigen::MatrixXd Y = eval_target(spec.target, X);
        double loss = 0.0;
        Eigen::VectorXd g = generalized_gradient(A, th, X, Y, spec.mask, &loss);
        if (!std::isfinite(loss) || !g.allFinite()) {
            rec.aborted = true;
            rec.abort_step = n;
            rec.error = "non-finite loss or gradient at step " + std::to_string(n);
            rec.final_params = th;
            return rec;
        }
        if (n == 0) rec.initial_loss = loss;
        if (next < cps.size() && cps[next] == n) {
            rec.checkpoints.push_back(n);
            rec.loss.push_back(loss);
            rec.grad_norm.push_back(g.norm());
            snaps.push_back(th);
            ++next;
        }
        if (n == spec.ref_step) ref = th;
        if (n == spec.steps) {
            rec.final_loss = loss;
            break;
        }
        optimizer_step(spec.opt, st, g, th);
    }
    rec.final_params = th;
    if (spec.ref_step >= 0)
        for (auto& s : snaps) rec.dist.push_back((s - ref).norm());
    if (spec.keep_snapshots) rec.snapshots = std::move(snaps);
    return rec;
}

}  // namespace gflow
