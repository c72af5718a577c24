#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <vector>

#include "graphmix/hermite.hpp"
#include "graphmix/model.hpp"
#include "graphmix/moments.hpp"
#include "graphmix/multigraph.hpp"
#include "graphmix/util.hpp"

namespace graphmix {

struct GramEstimate {
    std::vector<Template> templates;
    Eigen::MatrixXd gram;  // normalized E[psi_tilde psi_tilde] estimates
    Eigen::MatrixXd se;    // standard errors, same indexing
    std::int64_t trials = 0;
};

// Monte Carlo Gram matrix of the normalized recentered family over shared
// instances. Entries are E[psi_tilde_G1 psi_tilde_G2] / sqrt(V(G1) V(G2)).
inline GramEstimate gram_matrix(const std::vector<Template>& templates,
                                const MomentParams& p, std::int64_t trials,
                                std::uint64_t seed, int threads = 1,
                                std::int64_t budget = 50000000) {
    p.validate();
    const int m = static_cast<int>(templates.size());
    GramEstimate out;
    out.templates = templates;
    out.trials = trials;
    out.gram.setZero(m, m);
    out.se.setZero(m, m);

    std::vector<double> norms(m);
    for (int a = 0; a < m; ++a) norms[a] = std::sqrt(variance_proxy(templates[a], p));

    const ModelParams mp{p.n, p.d, p.K, p.delta};
    const HermiteContext ctx{p.delta, p.K};

    // accumulate sums and sums of squares per (a, b) pair over shared draws
    const int pairs = m * (m + 1) / 2;
    std::vector<KahanSum> sum(pairs), sumsq(pairs);
    auto pair_index = [m](int a, int b) { return a * m - a * (a - 1) / 2 + (b - a); };
    (void)threads;  // entries share the instance stream; kept sequential

    std::vector<double> values(m);
    for (std::int64_t t = 0; t < trials; ++t) {
        const Instance inst =
            sample_instance(mp, mix_seed(seed, static_cast<std::uint64_t>(t)));
        for (int a = 0; a < m; ++a)
            values[a] = eval_psitilde(templates[a], inst.Y, ctx, budget).value / norms[a];
        for (int a = 0; a < m; ++a)
            for (int b = a; b < m; ++b) {
                const double v = values[a] * values[b];
                sum[pair_index(a, b)].add(v);
                sumsq[pair_index(a, b)].add(v * v);
            }
    }
    for (int a = 0; a < m; ++a)
        for (int b = a; b < m; ++b) {
            const double mean = sum[pair_index(a, b)].value() / trials;
            const double var =
                std::max(0.0, sumsq[pair_index(a, b)].value() / trials - mean * mean);
            out.gram(a, b) = out.gram(b, a) = mean;
            out.se(a, b) = out.se(b, a) = std::sqrt(var / trials);
        }
    return out;
}

// Gershgorin-style bracket from the l1 row norms of Gamma - I.
struct EigenBracket {
    double min_eig_lb = 0.0;
    double max_eig_ub = 0.0;
    double max_row_sum = 0.0;  // of |Gamma - I|
};

inline EigenBracket eigen_bracket(const Eigen::MatrixXd& gram) {
    EigenBracket out;
    const int m = static_cast<int>(gram.rows());
    for (int a = 0; a < m; ++a) {
        double row = 0.0;
        for (int b = 0; b < m; ++b) {
            const double h = gram(a, b) - (a == b ? 1.0 : 0.0);
            row += std::abs(h);
        }
        out.max_row_sum = std::max(out.max_row_sum, row);
    }
    out.min_eig_lb = 1.0 - out.max_row_sum;
    out.max_eig_ub = 1.0 + out.max_row_sum;
    return out;
}

struct CorrContribution {
    Template tmpl;
    double mean_x_psitilde = 0.0;
    double proxy = 0.0;
    double contribution = 0.0;  // [E(x psi_tilde)]^2 / V(G)
};

// The per-template correlation contributions whose sum bounds the squared
// low-degree correlation; compared against 1/K^2 by the caller.
inline std::vector<CorrContribution> corr_contributions(
    const std::vector<Template>& templates, const MomentParams& p) {
    std::vector<CorrContribution> out;
    for (const auto& t : templates) {
        CorrContribution c{t, 0.0, 0.0, 0.0};
        c.mean_x_psitilde = mean_x_psitilde(t, p);
        c.proxy = variance_proxy(t, p);
        c.contribution = c.mean_x_psitilde * c.mean_x_psitilde / c.proxy;
        out.push_back(std::move(c));
    }
    return out;
}

}  // namespace graphmix
