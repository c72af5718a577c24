#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cstdint>
#include <set>
#include <stdexcept>
#include <vector>

#include "graphmix/multigraph.hpp"
#include "graphmix/util.hpp"

namespace graphmix {

// Probabilists' Hermite polynomial psi_k via the three-term recurrence
// psi_{k+1}(x) = x psi_k(x) - k psi_{k-1}(x); E[psi_k(z + mu)] = mu^k and
// E[psi_k(z)^2] = k! under z ~ N(0,1).
inline double hermite(int k, double x) {
    if (k < 0) throw std::invalid_argument("hermite: negative order");
    if (k > 32) throw CapacityError("hermite: order above 32");
    if (k == 0) return 1.0;
    double prev = 1.0, cur = x;
    for (int i = 1; i < k; ++i) {
        const double nxt = x * cur - static_cast<double>(i) * prev;
        prev = cur;
        cur = nxt;
    }
    return cur;
}

// Scalars entering the modified polynomial: interior degree-2 nodes get the
// x^2 - (1 + delta^2/K) correction instead of psi_2.
struct HermiteContext {
    double delta = 0.0;
    int K = 1;
    double correction() const { return 1.0 + delta * delta / static_cast<double>(K); }
};

inline double hermite_bar(int beta, bool node_is_interior_deg2, double x,
                          const HermiteContext& ctx) {
    if (beta == 2 && node_is_interior_deg2) return x * x - ctx.correction();
    return hermite(beta, x);
}

// Per-instance cache of psi_beta(Y(i,j)) for beta = 0..kmax plus the
// corrected degree-2 value; node-factor fills become table lookups.
class PsiCache {
public:
    PsiCache(const Eigen::MatrixXd& Y, const HermiteContext& ctx, int kmax)
        : n_(static_cast<int>(Y.rows())),
          d_(static_cast<int>(Y.cols())),
          kmax_(kmax),
          plain_(static_cast<std::size_t>(n_) * d_ * (kmax + 1)),
          corrected_(static_cast<std::size_t>(n_) * d_) {
        for (int i = 0; i < n_; ++i)
            for (int j = 0; j < d_; ++j) {
                const double x = Y(i, j);
                double prev = 1.0, cur = x;
                at_plain(i, j, 0) = 1.0;
                if (kmax_ >= 1) at_plain(i, j, 1) = x;
                for (int k = 2; k <= kmax_; ++k) {
                    const double nxt = x * cur - static_cast<double>(k - 1) * prev;
                    prev = cur;
                    cur = nxt;
                    at_plain(i, j, k) = cur;
                }
                corrected_[static_cast<std::size_t>(i) * d_ + j] = x * x - ctx.correction();
            }
    }

    int dims() const { return d_; }
    int kmax() const { return kmax_; }

    double psi(int row, int j, int beta) const {
        return plain_[(static_cast<std::size_t>(row) * d_ + j) * (kmax_ + 1) + beta];
    }
    double psi2_corrected(int row, int j) const {
        return corrected_[static_cast<std::size_t>(row) * d_ + j];
    }

private:
    double& at_plain(int i, int j, int k) {
        return plain_[(static_cast<std::size_t>(i) * d_ + j) * (kmax_ + 1) + k];
    }
    int n_, d_, kmax_;
    std::vector<double> plain_;
    std::vector<double> corrected_;
};

// Exact evaluation of the graph polynomial for one labeling by variable
// elimination over the edge-feature variables. Node factors couple only the
// features of incident edges; the elimination order is chosen greedily by
// smallest joint table and the total table work is pre-estimated so cost
// guards are exact, never approximate.
class PsiBarEvaluator {
public:
    PsiBarEvaluator(const Template& t, int d) : t_(t), d_(d) {
        if (d < 1) throw std::invalid_argument("PsiBarEvaluator: d >= 1 required");
        if (t.num_edges() > 20)
            throw CapacityError("PsiBarEvaluator: more than 20 edges");
        build_node_factors();
        build_plan();
    }

    const Template& graph() const { return t_; }
    int dims() const { return d_; }

    // table entries written per labeled evaluation
    std::int64_t cost_per_labeling() const { return cost_; }

    // reusable table storage for hot loops
    struct Scratch {
        std::vector<std::vector<double>> tables;
        std::vector<int> rows;
        std::vector<char> used;
    };

    // rows[v] = data row assigned to template node v
    double eval_labeled(const std::vector<int>& rows, const PsiCache& cache) const {
        Scratch scratch;
        return eval_labeled(rows, cache, scratch);
    }

    double eval_labeled(const std::vector<int>& rows, const PsiCache& cache,
                        Scratch& scratch) const {
        if (cache.dims() != d_)
            throw std::invalid_argument("PsiBarEvaluator: cache dimension mismatch");
        auto& tables = scratch.tables;
        tables.resize(node_factors_.size() + steps_.size());
        for (std::size_t f = 0; f < node_factors_.size(); ++f)
            fill_node_table(node_factors_[f], rows[node_factors_[f].node], cache,
                            tables[f]);
        for (std::size_t s = 0; s < steps_.size(); ++s)
            run_step(steps_[s], tables, tables[node_factors_.size() + s]);
        double out = 1.0;
        for (int f : final_factors_) out *= tables[f][0];
        return out;
    }

    // sum over all injective labelings of the interior nodes into rows 2..n-1
    double eval_summed(const Eigen::MatrixXd& Y, const PsiCache& cache,
                       Scratch& scratch) const {
        KahanSum sum;
        auto& rows = scratch.rows;
        rows.assign(t_.num_nodes(), 0);
        if (t_.num_nodes() > 1) rows[1] = 1;
        const int n = static_cast<int>(Y.rows());
        auto& used = scratch.used;
        used.assign(n, 0);
        std::function<void(int)> rec = [&](int v) {
            if (v == t_.num_nodes()) {
                sum.add(eval_labeled(rows, cache, scratch));
                return;
            }
            for (int r = 2; r < n; ++r) {
                if (used[r]) continue;
                used[r] = 1;
                rows[v] = r;
                rec(v + 1);
                used[r] = 0;
            }
        };
        rec(2);
        return sum.value();
    }

private:
    struct NodeFactor {
        int node = 0;
        std::vector<int> scope;    // incident edge ids, sorted, unique
        std::vector<int> weight;   // 2 for a self-loop, else 1
        bool interior_deg2 = false;
    };
    struct Step {
        std::vector<int> inputs;          // factor ids
        std::vector<int> union_scope;     // sorted; contains var
        std::vector<int> out_scope;       // union minus var
        int var = 0;
        int var_pos = 0;                  // position of var in union_scope
        // digit positions of each input's scope inside union_scope
        std::vector<std::vector<int>> input_positions;
    };

    void build_node_factors() {
        for (int v = 0; v < t_.num_nodes(); ++v) {
            if (t_.degree(v) == 0) continue;
            NodeFactor f;
            f.node = v;
            for (int e = 0; e < t_.num_edges(); ++e) {
                const auto& [a, b] = t_.edges()[e];
                if (a != v && b != v) continue;
                f.scope.push_back(e);
                f.weight.push_back(a == b ? 2 : 1);
            }
            f.interior_deg2 = v >= 2 && t_.degree(v) == 2;
            node_factors_.push_back(std::move(f));
        }
    }

    void build_plan() {
        // symbolic factors: scopes only
        std::vector<std::vector<int>> scopes;
        std::vector<int> ids;
        for (std::size_t f = 0; f < node_factors_.size(); ++f) {
            scopes.push_back(node_factors_[f].scope);
            ids.push_back(static_cast<int>(f));
            cost_ += pow_d(node_factors_[f].scope.size());
        }
        std::set<int> remaining;
        for (int e = 0; e < t_.num_edges(); ++e) remaining.insert(e);

        while (!remaining.empty()) {
            // greedy: variable with the smallest joint scope
            int best_var = -1;
            std::size_t best_size = SIZE_MAX;
            for (int x : remaining) {
                std::set<int> u;
                for (const auto& sc : scopes)
                    if (std::find(sc.begin(), sc.end(), x) != sc.end())
                        u.insert(sc.begin(), sc.end());
                if (u.size() < best_size) {
                    best_size = u.size();
                    best_var = x;
                }
            }
            Step step;
            step.var = best_var;
            std::set<int> u;
            std::vector<std::vector<int>> kept_scopes;
            std::vector<int> kept_ids;
            for (std::size_t i = 0; i < scopes.size(); ++i) {
                if (std::find(scopes[i].begin(), scopes[i].end(), best_var) !=
                    scopes[i].end()) {
                    step.inputs.push_back(ids[i]);
                    u.insert(scopes[i].begin(), scopes[i].end());
                } else {
                    kept_scopes.push_back(scopes[i]);
                    kept_ids.push_back(ids[i]);
                }
            }
            step.union_scope.assign(u.begin(), u.end());
            step.var_pos = static_cast<int>(
                std::find(step.union_scope.begin(), step.union_scope.end(), best_var) -
                step.union_scope.begin());
            for (int x : step.union_scope)
                if (x != best_var) step.out_scope.push_back(x);
            for (int id : step.inputs) {
                const auto& sc = id < static_cast<int>(node_factors_.size())
                                     ? node_factors_[id].scope
                                     : steps_[id - node_factors_.size()].out_scope;
                std::vector<int> pos;
                for (int x : sc)
                    pos.push_back(static_cast<int>(
                        std::find(step.union_scope.begin(), step.union_scope.end(), x) -
                        step.union_scope.begin()));
                step.input_positions.push_back(std::move(pos));
            }
            cost_ += pow_d(step.union_scope.size()) *
                     static_cast<std::int64_t>(step.inputs.size());

            kept_scopes.push_back(step.out_scope);
            kept_ids.push_back(static_cast<int>(node_factors_.size() + steps_.size()));
            scopes = std::move(kept_scopes);
            ids = std::move(kept_ids);
            remaining.erase(best_var);
            steps_.push_back(std::move(step));
        }
        final_factors_ = ids;  // all scalar now
        for (std::size_t i = 0; i < scopes.size(); ++i)
            if (!scopes[i].empty())
                throw std::logic_error("PsiBarEvaluator: non-scalar residual factor");
    }

    std::int64_t pow_d(std::size_t k) const {
        std::int64_t p = 1;
        for (std::size_t i = 0; i < k; ++i) {
            p *= d_;
            if (p > (std::int64_t{1} << 62) / d_) throw CapacityError(
                "PsiBarEvaluator: elimination table overflow");
        }
        return p;
    }

    static constexpr std::size_t kMaxScope = 24;

    void fill_node_table(const NodeFactor& f, int row, const PsiCache& cache,
                         std::vector<double>& table) const {
        const std::size_t s = f.scope.size();
        const std::int64_t size = pow_d(s);
        table.assign(static_cast<std::size_t>(size), 0.0);
        int digits[kMaxScope] = {0};
        for (std::int64_t idx = 0;; ++idx) {
            // value: product over distinct features of psi_bar(beta, x)
            double value = 1.0;
            for (std::size_t a = 0; a < s; ++a) {
                bool seen = false;
                for (std::size_t b0 = 0; b0 < a; ++b0)
                    if (digits[b0] == digits[a]) {
                        seen = true;
                        break;
                    }
                if (seen) continue;
                int beta = 0;
                for (std::size_t b0 = a; b0 < s; ++b0)
                    if (digits[b0] == digits[a]) beta += f.weight[b0];
                if (beta == 2 && f.interior_deg2)
                    value *= cache.psi2_corrected(row, digits[a]);
                else
                    value *= cache.psi(row, digits[a], beta);
            }
            table[static_cast<std::size_t>(idx)] = value;
            // next mixed-radix digit vector (digit 0 least significant)
            std::size_t pos = 0;
            while (pos < s && ++digits[pos] == d_) digits[pos++] = 0;
            if (pos == s) break;
        }
    }

    void run_step(const Step& step, const std::vector<std::vector<double>>& tables,
                  std::vector<double>& out) const {
        const std::size_t u = step.union_scope.size();
        const std::int64_t out_size = pow_d(u - 1);
        out.assign(static_cast<std::size_t>(out_size), 0.0);
        int digits[kMaxScope] = {0};
        // iterate the full union table; accumulate into the projection
        for (;;) {
            double prod = 1.0;
            for (std::size_t i = 0; i < step.inputs.size(); ++i) {
                std::int64_t idx = 0;
                const auto& pos = step.input_positions[i];
                for (std::size_t a = pos.size(); a-- > 0;) idx = idx * d_ + digits[pos[a]];
                prod *= tables[step.inputs[i]][static_cast<std::size_t>(idx)];
            }
            std::int64_t oidx = 0;
            for (std::size_t a = u; a-- > 0;) {
                if (static_cast<int>(a) == step.var_pos) continue;
                oidx = oidx * d_ + digits[a];
            }
            out[static_cast<std::size_t>(oidx)] += prod;
            std::size_t p = 0;
            while (p < u && ++digits[p] == d_) digits[p++] = 0;
            if (p == u) break;
        }
    }

    Template t_;
    int d_;
    std::vector<NodeFactor> node_factors_;
    std::vector<Step> steps_;
    std::vector<int> final_factors_;
    std::int64_t cost_ = 0;
};

struct PolyValue {
    double value = 0.0;
    std::int64_t num_labelings = 0;
    // nominal monomial count d^{|E|} x labelings, the work a direct
    // feature-sum would have done
    double n_terms_evaluated = 0.0;
};

namespace detail {

// visit all injective labelings of the interior nodes into rows {2..n-1}
inline void for_each_labeling(int num_nodes, int n,
                              const std::function<void(const std::vector<int>&)>& fn) {
    std::vector<int> rows(num_nodes);
    rows[0] = 0;
    if (num_nodes > 1) rows[1] = 1;
    std::vector<char> used(n, 0);
    std::function<void(int)> rec = [&](int v) {
        if (v == num_nodes) {
            fn(rows);
            return;
        }
        for (int r = 2; r < n; ++r) {
            if (used[r]) continue;
            used[r] = 1;
            rows[v] = r;
            rec(v + 1);
            used[r] = 0;
        }
    };
    rec(2);
}

}  // namespace detail

inline double eval_psibar_labeled(const Template& t, const std::vector<int>& labeling,
                                  const Eigen::MatrixXd& Y, const HermiteContext& ctx,
                                  std::int64_t budget = 50000000) {
    if (static_cast<int>(labeling.size()) != t.num_nodes())
        throw std::invalid_argument("eval_psibar_labeled: labeling size mismatch");
    if (t.num_nodes() >= 1 && labeling[0] != 0)
        throw std::invalid_argument("eval_psibar_labeled: labeling must pin v1 to row 0");
    if (t.num_nodes() >= 2 && labeling[1] != 1)
        throw std::invalid_argument("eval_psibar_labeled: labeling must pin v2 to row 1");
    std::vector<char> used(Y.rows(), 0);
    for (int r : labeling) {
        if (r < 0 || r >= Y.rows())
            throw std::invalid_argument("eval_psibar_labeled: row out of range");
        if (used[r]) throw std::invalid_argument("eval_psibar_labeled: labeling not injective");
        used[r] = 1;
    }
    PsiBarEvaluator ev(t, static_cast<int>(Y.cols()));
    if (ev.cost_per_labeling() > budget)
        throw CapacityError("eval_psibar_labeled: cost " +
                            std::to_string(ev.cost_per_labeling()) + " exceeds budget");
    int kmax = 0;
    for (int v = 0; v < t.num_nodes(); ++v) kmax = std::max(kmax, t.degree(v));
    PsiCache cache(Y, ctx, kmax);
    return ev.eval_labeled(labeling, cache);
}

// Sum over all injective labelings (v1 -> row 0, v2 -> row 1).
inline PolyValue eval_psibar(const Template& t, const Eigen::MatrixXd& Y,
                             const HermiteContext& ctx,
                             std::int64_t budget = 50000000) {
    const int n = static_cast<int>(Y.rows());
    const int interior = t.num_nodes() - 2;
    if (n - 2 < interior)
        throw CapacityError("eval_psibar: not enough rows for an injective labeling");
    const double labelings = falling_factorial(n - 2, interior);
    if (labelings > 1e7) throw CapacityError("eval_psibar: labeling count beyond guard");

    PsiBarEvaluator ev(t, static_cast<int>(Y.cols()));
    if (ev.cost_per_labeling() * static_cast<double>(labelings) > static_cast<double>(budget))
        throw CapacityError("eval_psibar: total cost exceeds budget");
    int kmax = 0;
    for (int v = 0; v < t.num_nodes(); ++v) kmax = std::max(kmax, t.degree(v));
    PsiCache cache(Y, ctx, std::max(kmax, 2));

    KahanSum sum;
    PolyValue out;
    detail::for_each_labeling(t.num_nodes(), n, [&](const std::vector<int>& rows) {
        sum.add(ev.eval_labeled(rows, cache));
        ++out.num_labelings;
    });
    out.value = sum.value();
    out.n_terms_evaluated =
        static_cast<double>(out.num_labelings) * ipow(static_cast<double>(Y.cols()),
                                                      t.num_edges());
    return out;
}

// Mean of the labeled polynomial under the model (independent of the
// labeling): zero when some node has odd degree or an interior node has
// degree 2, else delta^{2|E|} K^{-(|V| - |CC|)}.
inline double psibar_labeled_mean(const Template& t, double delta, int K) {
    if (t.has_odd_degree_node()) return 0.0;
    if (t.has_interior_degree2_node()) return 0.0;
    return ipow(delta, 2 * t.num_edges()) /
           ipow(static_cast<double>(K), t.num_nodes() - t.num_components());
}

// The connected components of t, each packaged as a template with v1 and v2
// present (isolated if need be) plus the map from component node to node of t.
struct ComponentPiece {
    Template piece;
    std::vector<int> node_map;  // piece node -> node of t
};

inline std::vector<ComponentPiece> edge_components(const Template& t) {
    const auto comp = t.component_of_node();
    std::vector<ComponentPiece> out;
    std::set<int> comp_ids;
    for (int e = 0; e < t.num_edges(); ++e) comp_ids.insert(comp[t.edges()[e].first]);
    for (int c : comp_ids) {
        std::vector<int> nodes{0, 1};
        for (int v = 2; v < t.num_nodes(); ++v)
            if (comp[v] == c) nodes.push_back(v);
        std::vector<int> local(t.num_nodes(), -1);
        for (std::size_t i = 0; i < nodes.size(); ++i) local[nodes[i]] = static_cast<int>(i);
        std::vector<std::pair<int, int>> edges;
        for (const auto& [a, b] : t.edges())
            if (comp[a] == c) edges.emplace_back(local[a], local[b]);
        ComponentPiece piece{Template(static_cast<int>(nodes.size()), edges), nodes};
        out.push_back(std::move(piece));
    }
    return out;
}

// Component-wise recentered polynomial: sum over labelings of the product
// over components of (psi_bar - E psi_bar). Equals 1 for the edgeless
// template. Centering constants are exact closed forms.
inline PolyValue eval_psitilde(const Template& t, const Eigen::MatrixXd& Y,
                               const HermiteContext& ctx,
                               std::int64_t budget = 50000000) {
    const int n = static_cast<int>(Y.rows());
    if (t.num_edges() == 0) return PolyValue{1.0, 1, 1.0};
    const int interior = t.num_nodes() - 2;
    if (n - 2 < interior)
        throw CapacityError("eval_psitilde: not enough rows for an injective labeling");
    const double labelings = falling_factorial(n - 2, interior);
    if (labelings > 1e7) throw CapacityError("eval_psitilde: labeling count beyond guard");

    const auto pieces = edge_components(t);
    std::vector<PsiBarEvaluator> evs;
    std::vector<double> means;
    std::int64_t per_labeling = 0;
    int kmax = 2;
    for (const auto& pc : pieces) {
        evs.emplace_back(pc.piece, static_cast<int>(Y.cols()));
        means.push_back(psibar_labeled_mean(pc.piece, ctx.delta, ctx.K));
        per_labeling += evs.back().cost_per_labeling();
        for (int v = 0; v < pc.piece.num_nodes(); ++v)
            kmax = std::max(kmax, pc.piece.degree(v));
    }
    if (per_labeling * static_cast<double>(labelings) > static_cast<double>(budget))
        throw CapacityError("eval_psitilde: total cost exceeds budget");
    PsiCache cache(Y, ctx, kmax);

    KahanSum sum;
    PolyValue out;
    detail::for_each_labeling(t.num_nodes(), n, [&](const std::vector<int>& rows) {
        double prod = 1.0;
        for (std::size_t l = 0; l < pieces.size(); ++l) {
            std::vector<int> sub_rows(pieces[l].node_map.size());
            for (std::size_t i = 0; i < pieces[l].node_map.size(); ++i)
                sub_rows[i] = rows[pieces[l].node_map[i]];
            prod *= evs[l].eval_labeled(sub_rows, cache) - means[l];
        }
        sum.add(prod);
        ++out.num_labelings;
    });
    out.value = sum.value();
    out.n_terms_evaluated =
        static_cast<double>(out.num_labelings) * ipow(static_cast<double>(Y.cols()),
                                                      t.num_edges());
    return out;
}

}  // namespace graphmix
