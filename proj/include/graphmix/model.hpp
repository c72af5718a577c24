#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "graphmix/rng.hpp"

namespace graphmix {

// Orthogonal-means mixture: Y_i = b_i * mu_{kstar(i)} + Z_i with K
// orthogonal mean directions of norm delta, uniform assignments, Rademacher
// signs, and unit Gaussian noise (sigma = 1 throughout).
struct ModelParams {
    int n = 0;
    int d = 0;
    int K = 0;
    double delta = 0.0;

    void validate() const {
        if (n < 3) throw std::invalid_argument("model: n must be >= 3");
        if (d < 1) throw std::invalid_argument("model: d must be >= 1");
        if (K < 1) throw std::invalid_argument("model: K must be >= 1");
        if (K > d) throw std::invalid_argument("model: K <= d required for orthogonal means");
        if (!(delta >= 0.0)) throw std::invalid_argument("model: delta must be >= 0");
    }
};

struct Instance {
    Eigen::MatrixXd Y;    // n x d observations
    Eigen::MatrixXd mu;   // K x d hidden means, rows orthogonal of norm delta
    std::vector<int> kstar;  // hidden assignments, 0-based
    std::vector<int> b;      // hidden signs, +1 / -1
    ModelParams params;
    std::uint64_t seed = 0;

    Eigen::MatrixXd signal() const {
        Eigen::MatrixXd X(params.n, params.d);
        for (int i = 0; i < params.n; ++i)
            X.row(i) = static_cast<double>(b[i]) * mu.row(kstar[i]);
        return X;
    }
};

// K orthogonal rows of norm delta whose joint distribution is invariant by
// rotation: modified Gram-Schmidt on a d x K standard Gaussian draw.
inline Eigen::MatrixXd sample_means(const ModelParams& params, std::uint64_t seed) {
    params.validate();
    Rng rng(mix_seed(seed, 0x6d65616e73ULL));  // "means"
    Eigen::MatrixXd g(params.d, params.K);
    for (int j = 0; j < params.K; ++j)
        for (int i = 0; i < params.d; ++i) g(i, j) = rng.next_gauss();
    for (int j = 0; j < params.K; ++j) {
        for (int prev = 0; prev < j; ++prev)
            g.col(j) -= g.col(prev).dot(g.col(j)) * g.col(prev);
        const double norm = g.col(j).norm();
        if (norm < 1e-12) throw std::runtime_error("sample_means: degenerate draw");
        g.col(j) /= norm;
    }
    return params.delta * g.transpose();  // K x d
}

inline Instance sample_instance(const ModelParams& params, std::uint64_t seed) {
    params.validate();
    Instance inst;
    inst.params = params;
    inst.seed = seed;
    inst.mu = sample_means(params, seed);
    Rng rng(mix_seed(seed, 0x696e7374ULL));  // "inst"
    inst.kstar.resize(params.n);
    inst.b.resize(params.n);
    for (int i = 0; i < params.n; ++i) {
        inst.kstar[i] = static_cast<int>(rng.next_below(params.K));
        inst.b[i] = rng.next_sign();
    }
    inst.Y.resize(params.n, params.d);
    for (int i = 0; i < params.n; ++i)
        for (int j = 0; j < params.d; ++j)
            inst.Y(i, j) = static_cast<double>(inst.b[i]) * inst.mu(inst.kstar[i], j) +
                           rng.next_gauss();
    return inst;
}

// x = 1{kstar(1) = kstar(2)}, the pairwise clustering functional.
inline int functional_x(const Instance& inst) {
    if (inst.params.n < 2) throw std::invalid_argument("functional_x: n >= 2 required");
    return inst.kstar[0] == inst.kstar[1] ? 1 : 0;
}

// Instance with kstar(2) forced so that x = want_x (needs K >= 2 for
// x = 0); used by the conditional-moment oracles.
inline Instance sample_instance_conditioned(const ModelParams& params, int want_x,
                                            std::uint64_t seed) {
    params.validate();
    if (want_x == 0 && params.K < 2)
        throw std::invalid_argument("conditioning on x = 0 needs K >= 2");
    Instance inst = sample_instance(params, seed);
    Rng rng(mix_seed(seed, 0x636f6e64ULL));  // "cond"
    int k2 = inst.kstar[0];
    if (want_x == 0)
        k2 = (inst.kstar[0] + 1 +
              static_cast<int>(rng.next_below(static_cast<std::uint64_t>(params.K - 1)))) %
             params.K;
    // resample row 2 with the forced assignment
    inst.kstar[1] = k2;
    for (int j = 0; j < params.d; ++j)
        inst.Y(1, j) = static_cast<double>(inst.b[1]) * inst.mu(k2, j) + rng.next_gauss();
    return inst;
}

// Haar-distributed d x d orthogonal matrix (Gram-Schmidt on a Gaussian).
inline Eigen::MatrixXd sample_rotation(int d, std::uint64_t seed) {
    ModelParams p;
    p.n = 3;
    p.d = d;
    p.K = d;
    p.delta = 1.0;
    return sample_means(p, seed);  // K = d orthonormal rows
}

}  // namespace graphmix
