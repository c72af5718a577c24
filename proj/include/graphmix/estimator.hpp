#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "graphmix/assignment.hpp"
#include "graphmix/hermite.hpp"
#include "graphmix/model.hpp"
#include "graphmix/multigraph.hpp"
#include "graphmix/rng.hpp"
#include "graphmix/util.hpp"

namespace graphmix {

// Configuration of the pairwise decision statistic: the chain template
// (L, M odd), the number of median-of-means batches (odd), and the oracle
// separation / group count entering the decision threshold.
struct EstimatorConfig {
    int L = 1;
    int M = 1;               // odd
    int lambda = 1;          // odd batch count
    double delta = 1.0;      // oracle separation used by the threshold
    int K = 2;               // oracle group count
    std::optional<double> override_threshold;

    void validate() const {
        if (L < 1) throw std::invalid_argument("estimator: L >= 1");
        if (M < 1 || M % 2 == 0) throw std::invalid_argument("estimator: M must be odd");
        if (lambda < 1 || lambda % 2 == 0)
            throw std::invalid_argument("estimator: lambda must be odd");
        if (K < 1) throw std::invalid_argument("estimator: K >= 1");
        if (!(delta >= 0)) throw std::invalid_argument("estimator: delta >= 0");
    }

    // Defaults in the large-sample statement: M the smallest odd integer
    // >= log K v 24, L = floor(log K) clamped to >= 1, Lambda = ceil(24 log n)
    // rounded up to odd. Desk-scale runs override all of these.
    static EstimatorConfig theorem_defaults(int n, int K, double delta) {
        EstimatorConfig cfg;
        const double logK = std::log(std::max(2, K));
        int M = static_cast<int>(std::ceil(std::max(logK, 24.0)));
        if (M % 2 == 0) ++M;
        int L = std::max(1, static_cast<int>(std::floor(logK)));
        int lam = static_cast<int>(std::ceil(24.0 * std::log(std::max(3, n))));
        if (lam % 2 == 0) ++lam;
        cfg.L = L;
        cfg.M = M;
        cfg.lambda = lam;
        cfg.delta = delta;
        cfg.K = K;
        return cfg;
    }
};

// The sample-split view: every row is expanded into lambda independent
// copies with means shrunk by sqrt(lambda) (orthogonal Householder mix with
// fresh Gaussians); batch l sees copy l of the two pivot rows and of its own
// block of the remaining rows.
struct SplitData {
    int lambda = 1;
    int batch_rows = 0;             // rows per batch beyond the two pivots
    std::vector<Eigen::MatrixXd> batches;  // each (2 + batch_rows) x d
};

inline SplitData split_samples(const Instance& inst, int i, int j,
                               const EstimatorConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    const int n = inst.params.n;
    const int d = inst.params.d;
    if (i == j || i < 0 || j < 0 || i >= n || j >= n)
        throw std::invalid_argument("split_samples: bad pivot rows");
    const int lambda = cfg.lambda;
    const int per_batch = (n - 2) / lambda;  // leftovers discarded
    if (per_batch < 1) throw std::invalid_argument("split_samples: not enough samples");

    // Householder reflection sending e_1 to the constant unit vector; its
    // first column is 1/sqrt(lambda).
    Eigen::MatrixXd O = Eigen::MatrixXd::Identity(lambda, lambda);
    if (lambda > 1) {
        Eigen::VectorXd w = -Eigen::VectorXd::Ones(lambda) / std::sqrt(double(lambda));
        w(0) += 1.0;
        w.normalize();
        O -= 2.0 * w * w.transpose();
    }

    // remaining rows in index order
    std::vector<int> rest;
    rest.reserve(n - 2);
    for (int r = 0; r < n; ++r)
        if (r != i && r != j) rest.push_back(r);

    SplitData out;
    out.lambda = lambda;
    out.batch_rows = per_batch;
    out.batches.assign(lambda, Eigen::MatrixXd(2 + per_batch, d));

    Rng rng(mix_seed(seed, 0x73706c6974ULL));  // "split"
    Eigen::VectorXd mixed(lambda), raw(lambda);
    auto split_row = [&](int source_row, const std::function<void(int, int)>& sink_cols) {
        // sink_cols(l, c) writes mixed(l) into batch l at column c
        for (int c = 0; c < d; ++c) {
            raw(0) = inst.Y(source_row, c);
            for (int l = 1; l < lambda; ++l) raw(l) = rng.next_gauss();
            mixed.noalias() = O * raw;
            for (int l = 0; l < lambda; ++l) sink_cols(l, c);
        }
    };

    split_row(i, [&](int l, int c) { out.batches[l](0, c) = mixed(l); });
    split_row(j, [&](int l, int c) { out.batches[l](1, c) = mixed(l); });
    for (int b = 0; b < lambda; ++b)
        for (int r = 0; r < per_batch; ++r) {
            const int source = rest[static_cast<std::size_t>(b) * per_batch + r];
            split_row(source, [&](int l, int c) {
                if (l == b) out.batches[b](2 + r, c) = mixed(l);
            });
        }
    return out;
}

// The per-batch statistic: psi_bar of the chain template on the batch view,
// with the shrunken-separation Hermite context delta/sqrt(lambda).
inline double t_statistic(const SplitData& split, int batch, const EstimatorConfig& cfg,
                          std::int64_t budget = 50000000) {
    cfg.validate();
    if (batch < 0 || batch >= split.lambda)
        throw std::invalid_argument("t_statistic: batch out of range");
    const Template g = build_gstar(cfg.L, cfg.M);
    if (split.batch_rows < g.num_nodes() - 2)
        throw std::invalid_argument("t_statistic: batch too small for a labeling");
    const HermiteContext ctx{cfg.delta / std::sqrt(static_cast<double>(cfg.lambda)),
                             cfg.K};
    return eval_psibar(g, split.batches[batch], ctx, budget).value;
}

inline double mom_threshold(int n, const EstimatorConfig& cfg) {
    cfg.validate();
    if (cfg.override_threshold) return *cfg.override_threshold;
    const Template g = build_gstar(cfg.L, cfg.M);
    const int nb = (n - 2) / cfg.lambda;
    return 0.5 * falling_factorial(nb, g.num_nodes() - 2) *
           ipow(cfg.delta, 2 * g.num_edges()) /
           (ipow(static_cast<double>(cfg.lambda), g.num_edges()) *
            ipow(static_cast<double>(cfg.K), g.num_nodes() - 2));
}

struct MomDecision {
    int x_hat = 0;
    double median_t = 0.0;
    double threshold = 0.0;
    std::vector<double> batch_t;
};

inline MomDecision mom_decision(const SplitData& split, int n, const EstimatorConfig& cfg,
                                std::int64_t budget = 50000000) {
    MomDecision out;
    out.threshold = mom_threshold(n, cfg);
    out.batch_t.reserve(split.lambda);
    for (int l = 0; l < split.lambda; ++l) out.batch_t.push_back(t_statistic(split, l, cfg, budget));
    std::vector<double> sorted = out.batch_t;
    std::nth_element(sorted.begin(), sorted.begin() + split.lambda / 2, sorted.end());
    out.median_t = sorted[split.lambda / 2];
    out.x_hat = out.median_t > out.threshold ? 1 : 0;
    return out;
}

// One-call pairwise decision for rows (i, j).
inline MomDecision decide_pair(const Instance& inst, int i, int j,
                               const EstimatorConfig& cfg, std::uint64_t seed,
                               std::int64_t budget = 50000000) {
    const SplitData split = split_samples(inst, i, j, cfg, seed);
    return mom_decision(split, inst.params.n, cfg, budget);
}

struct PartitionResult {
    std::vector<int> labels;  // component index per row, 0-based contiguous
    int num_components = 0;
    bool degenerate = false;  // everything merged or nothing merged
};

// Connected components of the same-group graph.
inline PartitionResult partition_from_edges(
    int n, const std::vector<std::pair<int, int>>& same_edges) {
    std::vector<int> parent(n);
    for (int r = 0; r < n; ++r) parent[r] = r;
    std::function<int(int)> find = [&](int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    for (const auto& [i, j] : same_edges) parent[find(i)] = find(j);
    PartitionResult out;
    out.labels.assign(n, -1);
    int next = 0;
    for (int r = 0; r < n; ++r) {
        const int root = find(r);
        if (out.labels[root] < 0) out.labels[root] = next++;
        out.labels[r] = out.labels[root];
    }
    out.num_components = next;
    out.degenerate = next == 1 || next == n;
    return out;
}

// Same-group graph from all pairwise decisions; connected components are the
// recovered groups. robust_margin > 0 drops edges whose statistic clears the
// threshold by less than that fraction of it.
inline PartitionResult pairwise_partition(const Instance& inst, const EstimatorConfig& cfg,
                                          std::uint64_t seed, double robust_margin = 0.0,
                                          std::int64_t budget = 50000000) {
    const int n = inst.params.n;
    std::vector<std::pair<int, int>> same_edges;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            const auto dec = decide_pair(inst, i, j, cfg,
                                         mix_seed(seed, static_cast<std::uint64_t>(i),
                                                  static_cast<std::uint64_t>(j)),
                                         budget);
            bool same = dec.x_hat == 1;
            if (same && robust_margin > 0.0)
                same = dec.median_t - dec.threshold >= robust_margin * dec.threshold;
            if (same) same_edges.emplace_back(i, j);
        }
    return partition_from_edges(n, same_edges);
}

// Sign labels inside one recovered group: sign of the projection on the
// dominant eigenvector of the group's outer-product sum (power iteration),
// canonicalized so the first row gets +1.
inline std::vector<int> sign_recovery(const Eigen::MatrixXd& group_rows,
                                      std::uint64_t seed) {
    const int m = static_cast<int>(group_rows.rows());
    const int d = static_cast<int>(group_rows.cols());
    if (m == 0) throw std::invalid_argument("sign_recovery: empty group");
    if (m == 1) return {1};
    const Eigen::MatrixXd S = group_rows.transpose() * group_rows;
    Rng rng(mix_seed(seed, 0x7369676eULL));  // "sign"
    Eigen::VectorXd v(d);
    for (int c = 0; c < d; ++c) v(c) = rng.next_gauss();
    v.normalize();
    for (int it = 0; it < 100; ++it) {
        Eigen::VectorXd next = S * v;
        const double norm = next.norm();
        if (norm == 0.0) break;
        next /= norm;
        const double move = (next - v).norm();
        v = next;
        if (move < 1e-8) break;
    }
    std::vector<int> labels(m);
    for (int r = 0; r < m; ++r) labels[r] = group_rows.row(r).dot(v) >= 0.0 ? 1 : -1;
    if (labels[0] == -1)
        for (int& l : labels) l = -l;
    return labels;
}

// Alignment loss: (1/2n) min over label permutations of the summed symmetric
// differences, solved as an assignment problem on the K x K overlap table.
inline double cluster_error(const std::vector<int>& est, const std::vector<int>& truth) {
    if (est.size() != truth.size() || est.empty())
        throw std::invalid_argument("cluster_error: partitions must cover the same [n]");
    const int n = static_cast<int>(est.size());
    int ka = 0, kb = 0;
    for (int v : est) {
        if (v < 0) throw std::invalid_argument("cluster_error: negative label");
        ka = std::max(ka, v + 1);
    }
    for (int v : truth) {
        if (v < 0) throw std::invalid_argument("cluster_error: negative label");
        kb = std::max(kb, v + 1);
    }
    const int k = std::max(ka, kb);
    // |S_a| + |S*_b| - 2 overlap(a, b) is the symmetric difference
    std::vector<std::vector<int>> overlap(k, std::vector<int>(k, 0));
    std::vector<int> size_a(k, 0), size_b(k, 0);
    for (int r = 0; r < n; ++r) {
        ++overlap[est[r]][truth[r]];
        ++size_a[est[r]];
        ++size_b[truth[r]];
    }
    std::vector<std::vector<double>> cost(k, std::vector<double>(k, 0.0));
    for (int a = 0; a < k; ++a)
        for (int b = 0; b < k; ++b)
            cost[a][b] = static_cast<double>(size_a[a] + size_b[b] - 2 * overlap[a][b]);
    const auto match = solve_assignment(cost);
    double total = 0.0;
    for (int a = 0; a < k; ++a) total += cost[a][match[a]];
    return total / (2.0 * n);
}

}  // namespace graphmix
