#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "graphmix/util.hpp"

namespace graphmix {

enum class Linkage { single, complete, average };

// Agglomerative clustering on squared Euclidean distances, cut at
// num_clusters. Single linkage is the reference variant; the others sit
// behind the flag. Lance-Williams updates, O(n^3), exact.
inline std::vector<int> hierarchical_clustering(const Eigen::MatrixXd& Y, int num_clusters,
                                                Linkage linkage = Linkage::single) {
    const int n = static_cast<int>(Y.rows());
    if (num_clusters < 1 || num_clusters > n)
        throw std::invalid_argument("hierarchical_clustering: bad cluster count");
    std::vector<std::vector<double>> dist(n, std::vector<double>(n, 0.0));
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            dist[i][j] = dist[j][i] = (Y.row(i) - Y.row(j)).squaredNorm();

    std::vector<int> size(n, 1);
    std::vector<char> alive(n, 1);
    std::vector<int> member(n);
    for (int i = 0; i < n; ++i) member[i] = i;  // row -> cluster id
    int clusters = n;
    while (clusters > num_clusters) {
        int best_a = -1, best_b = -1;
        double best = std::numeric_limits<double>::infinity();
        for (int a = 0; a < n; ++a) {
            if (!alive[a]) continue;
            for (int b = a + 1; b < n; ++b) {
                if (!alive[b]) continue;
                if (dist[a][b] < best) {
                    best = dist[a][b];
                    best_a = a;
                    best_b = b;
                }
            }
        }
        // merge b into a
        for (int c = 0; c < n; ++c) {
            if (!alive[c] || c == best_a || c == best_b) continue;
            double nd = 0.0;
            switch (linkage) {
                case Linkage::single: nd = std::min(dist[best_a][c], dist[best_b][c]); break;
                case Linkage::complete: nd = std::max(dist[best_a][c], dist[best_b][c]); break;
                case Linkage::average:
                    nd = (size[best_a] * dist[best_a][c] + size[best_b] * dist[best_b][c]) /
                         static_cast<double>(size[best_a] + size[best_b]);
                    break;
            }
            dist[best_a][c] = dist[c][best_a] = nd;
        }
        size[best_a] += size[best_b];
        alive[best_b] = 0;
        for (int r = 0; r < n; ++r)
            if (member[r] == best_b) member[r] = best_a;
        --clusters;
    }
    // compact labels in order of first appearance
    std::vector<int> relabel(n, -1);
    std::vector<int> labels(n);
    int next = 0;
    for (int r = 0; r < n; ++r) {
        if (relabel[member[r]] < 0) relabel[member[r]] = next++;
        labels[r] = relabel[member[r]];
    }
    return labels;
}

struct SpectralProjection {
    Eigen::MatrixXd projected;   // n x K
    Eigen::MatrixXd directions;  // d x K, orthonormal columns
    bool rank_deficient = false;
};

// Projection onto the top-K right singular directions of Y.
inline SpectralProjection spectral_project(const Eigen::MatrixXd& Y, int K) {
    const int d = static_cast<int>(Y.cols());
    if (K < 1 || K > d) throw std::invalid_argument("spectral_project: need 1 <= K <= d");
    const Eigen::MatrixXd gram = Y.transpose() * Y;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
    SpectralProjection out;
    out.directions.resize(d, K);
    // eigenvalues ascending; take the top K
    int nonzero = 0;
    for (int k = 0; k < K; ++k) {
        const int idx = d - 1 - k;
        out.directions.col(k) = eig.eigenvectors().col(idx);
        if (eig.eigenvalues()(idx) > 1e-10 * std::max(1.0, eig.eigenvalues()(d - 1)))
            ++nonzero;
    }
    out.rank_deficient = nonzero < K;  // padded with null directions, flagged
    out.projected = Y * out.directions;
    return out;
}

// || (1/n) Y^T Y - (1 + delta^2/K) I ||_F
inline double gram_identity_gap(const Eigen::MatrixXd& Y, double delta, int K) {
    const int n = static_cast<int>(Y.rows());
    const int d = static_cast<int>(Y.cols());
    Eigen::MatrixXd g = Y.transpose() * Y / static_cast<double>(n);
    g -= (1.0 + delta * delta / K) * Eigen::MatrixXd::Identity(d, d);
    return g.norm();
}

// (Y Y^T)^D entry (1,2), computed through the d x d Gram power. The simple
// path carries no group information under this prior when d = K; the
// statistic exists to demonstrate that.
inline double path_polynomial_diagnostic(const Eigen::MatrixXd& Y, int D) {
    if (D < 1 || D > 6) throw std::invalid_argument("path_polynomial_diagnostic: 1 <= D <= 6");
    const Eigen::MatrixXd gram = Y.transpose() * Y;
    Eigen::MatrixXd p = Eigen::MatrixXd::Identity(Y.cols(), Y.cols());
    for (int i = 0; i < D - 1; ++i) p = p * gram;
    return Y.row(0) * p * Y.row(1).transpose();
}

// area under the ROC curve of score separating the two samples (probability
// that a positive-sample score exceeds a negative one, ties at half)
inline double ranking_auc(const std::vector<double>& negatives,
                          const std::vector<double>& positives) {
    double wins = 0.0;
    for (double p : positives)
        for (double q : negatives) {
            if (p > q) wins += 1.0;
            else if (p == q) wins += 0.5;
        }
    return wins / (static_cast<double>(negatives.size()) * positives.size());
}

}  // namespace graphmix
