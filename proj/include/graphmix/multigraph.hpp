#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <functional>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "graphmix/util.hpp"

namespace graphmix {

// A template: a multigraph on nodes {0, 1, ..., r-1} with the two
// distinguished nodes 0 (v1) and 1 (v2). Self-loops and parallel edges are
// allowed; nodes 2.. must be non-isolated. Edges are stored as normalized
// (u <= v) pairs; edge e owns the two half-edges 2e (at u) and 2e+1 (at v),
// so half-edge ids are stable (edge, side) pairs.
class Template {
public:
    Template(int num_nodes, std::vector<std::pair<int, int>> edges)
        : num_nodes_(num_nodes), edges_(std::move(edges)) {
        if (num_nodes_ < 2) throw std::invalid_argument("template needs nodes v1, v2");
        for (auto& [u, v] : edges_) {
            if (u > v) std::swap(u, v);
            if (u < 0 || v >= num_nodes_)
                throw std::invalid_argument("edge endpoint out of range");
        }
        std::sort(edges_.begin(), edges_.end());
        degrees_.assign(num_nodes_, 0);
        for (const auto& [u, v] : edges_) {
            degrees_[u] += 1;
            degrees_[v] += 1;  // self-loop counts twice
        }
        for (int w = 2; w < num_nodes_; ++w)
            if (degrees_[w] == 0)
                throw std::invalid_argument("interior node " + std::to_string(w + 1) +
                                            " is isolated");
    }

    static Template edgeless() { return Template(2, {}); }

    int num_nodes() const { return num_nodes_; }
    int num_edges() const { return static_cast<int>(edges_.size()); }
    int num_halfedges() const { return 2 * num_edges(); }
    const std::vector<std::pair<int, int>>& edges() const { return edges_; }
    int degree(int v) const { return degrees_[v]; }
    const std::vector<int>& degrees() const { return degrees_; }

    // node incident to half-edge h
    int halfedge_node(int h) const {
        const auto& e = edges_[h / 2];
        return (h % 2 == 0) ? e.first : e.second;
    }
    // the other half of the same edge
    static int halfedge_partner(int h) { return h ^ 1; }

    bool is_self_loop(int e) const { return edges_[e].first == edges_[e].second; }

    std::vector<int> halfedges_at(int v) const {
        std::vector<int> out;
        for (int h = 0; h < num_halfedges(); ++h)
            if (halfedge_node(h) == v) out.push_back(h);
        return out;
    }

    bool all_degrees_even() const {
        for (int d : degrees_)
            if (d % 2 != 0) return false;
        return true;
    }

    bool has_odd_degree_node() const { return !all_degrees_even(); }

    bool has_interior_degree2_node() const {
        for (int v = 2; v < num_nodes_; ++v)
            if (degrees_[v] == 2) return true;
        return false;
    }

    // connected components over all nodes; isolated nodes are singletons
    std::vector<int> component_of_node() const {
        std::vector<int> comp(num_nodes_, -1);
        int c = 0;
        for (int s = 0; s < num_nodes_; ++s) {
            if (comp[s] >= 0) continue;
            comp[s] = c;
            std::vector<int> stack{s};
            while (!stack.empty()) {
                const int v = stack.back();
                stack.pop_back();
                for (const auto& [a, b] : edges_) {
                    if (a == v && comp[b] < 0) { comp[b] = c; stack.push_back(b); }
                    if (b == v && comp[a] < 0) { comp[a] = c; stack.push_back(a); }
                }
            }
            ++c;
        }
        return comp;
    }

    int num_components() const {
        const auto comp = component_of_node();
        return comp.empty() ? 0 : 1 + *std::max_element(comp.begin(), comp.end());
    }

    bool is_connected() const { return num_components() == 1; }

    // Canonical key: minimum over relabelings of the interior nodes (v1 and
    // v2 stay fixed) of the sorted edge list. Interior nodes are first
    // partitioned by an invariant so only within-class permutations are
    // tried. Exact, intended for desk-scale templates.
    std::vector<std::pair<int, int>> canonical_key() const {
        const int r = num_nodes_;
        std::vector<int> interior;
        for (int v = 2; v < r; ++v) interior.push_back(v);

        // invariant per interior node: (degree, #self-loops, mult to v1, mult to v2)
        auto invariant = [&](int v) {
            int loops = 0, m1 = 0, m2 = 0;
            for (const auto& [a, b] : edges_) {
                if (a == v && b == v) ++loops;
                else if ((a == 0 && b == v) || (a == v && b == 0)) ++m1;
                else if ((a == 1 && b == v) || (a == v && b == 1)) ++m2;
            }
            return std::array<int, 4>{degrees_[v], loops, m1, m2};
        };
        std::sort(interior.begin(), interior.end(), [&](int a, int b) {
            return invariant(a) < invariant(b);
        });

        // class boundaries
        std::vector<std::pair<std::size_t, std::size_t>> classes;
        std::size_t i = 0;
        while (i < interior.size()) {
            std::size_t j = i + 1;
            while (j < interior.size() && invariant(interior[j]) == invariant(interior[i])) ++j;
            classes.emplace_back(i, j);
            i = j;
        }

        std::vector<std::pair<int, int>> best;
        bool have_best = false;
        std::vector<int> relabel(r);
        relabel[0] = 0;
        if (r > 1) relabel[1] = 1;

        // permute within classes only
        std::vector<int> perm(interior);
        auto try_perm = [&]() {
            for (std::size_t t = 0; t < perm.size(); ++t) relabel[perm[t]] = 2 + static_cast<int>(t);
            std::vector<std::pair<int, int>> key;
            key.reserve(edges_.size());
            for (const auto& [a, b] : edges_) {
                int u = relabel[a], v = relabel[b];
                if (u > v) std::swap(u, v);
                key.emplace_back(u, v);
            }
            std::sort(key.begin(), key.end());
            if (!have_best || key < best) {
                best = std::move(key);
                have_best = true;
            }
        };

        std::function<void(std::size_t)> rec = [&](std::size_t c) {
            if (c == classes.size()) {
                try_perm();
                return;
            }
            auto [lo, hi] = classes[c];
            std::sort(perm.begin() + lo, perm.begin() + hi);
            do {
                rec(c + 1);
            } while (std::next_permutation(perm.begin() + lo, perm.begin() + hi));
        };
        rec(0);
        return best;
    }

    bool isomorphic_to(const Template& other) const {
        return num_nodes_ == other.num_nodes_ &&
               canonical_key() == other.canonical_key();
    }

    bool operator==(const Template& other) const {
        return num_nodes_ == other.num_nodes_ && edges_ == other.edges_;
    }

    std::string to_text() const {
        std::ostringstream os;
        os << "nodes " << num_nodes_ << "\n";
        for (const auto& [u, v] : edges_) os << (u + 1) << " " << (v + 1) << "\n";
        return os.str();
    }

    static Template from_text(std::istream& in) {
        std::string word;
        if (!(in >> word) || word != "nodes")
            throw std::invalid_argument("template text must start with 'nodes r'");
        int r = 0;
        if (!(in >> r) || r < 2) throw std::invalid_argument("bad node count");
        std::vector<std::pair<int, int>> edges;
        int u, v;
        while (in >> u >> v) {
            if (u < 1 || v < 1 || u > r || v > r)
                throw std::invalid_argument("edge endpoint out of range");
            edges.emplace_back(u - 1, v - 1);
        }
        return Template(r, std::move(edges));
    }

    static Template from_text(const std::string& text) {
        std::istringstream is(text);
        return from_text(is);
    }

private:
    int num_nodes_;
    std::vector<std::pair<int, int>> edges_;
    std::vector<int> degrees_;
};

// The "double chain with fastener" template. Nodes are v1, v2 and the chain
// nodes v3..v_{LM+2}; M odd. Edge multiset:
//   - (v1, v3) and (v2, v_{LM+2}) doubled,
//   - (v_{l+mL+2}, v_{l+mL+3}) doubled for 0 <= m <= M-1, 1 <= l <= L-1,
//   - for 1 <= m <= M-1 the fastener (v_{mL+2}, v_{mL+3}), (v1, v_{mL+2}),
//     (v2, v_{mL+3}), each single.
// Resulting degrees: deg(v1) = deg(v2) = M+1, interior degrees 4, and
// |E| = 2LM + M + 1.
inline Template build_gstar(int L, int M) {
    if (L < 1) throw std::invalid_argument("build_gstar: L must be >= 1");
    if (M < 1 || M % 2 == 0) throw std::invalid_argument("build_gstar: M must be odd and >= 1");
    const int r = L * M + 2;
    std::vector<std::pair<int, int>> edges;
    auto node = [](int one_based) { return one_based - 1; };
    edges.emplace_back(node(1), node(3));
    edges.emplace_back(node(1), node(3));
    edges.emplace_back(node(2), node(L * M + 2));
    edges.emplace_back(node(2), node(L * M + 2));
    for (int m = 0; m <= M - 1; ++m)
        for (int l = 1; l <= L - 1; ++l) {
            edges.emplace_back(node(l + m * L + 2), node(l + m * L + 3));
            edges.emplace_back(node(l + m * L + 2), node(l + m * L + 3));
        }
    for (int m = 1; m <= M - 1; ++m) {
        edges.emplace_back(node(m * L + 2), node(m * L + 3));
        edges.emplace_back(node(1), node(m * L + 2));
        edges.emplace_back(node(2), node(m * L + 3));
    }
    return Template(r, std::move(edges));
}

// Number of half-edge bijections of t onto itself that preserve the edge
// partnership and incidence relations and fix v1 and v2. Counted as: for
// every multiplicity-preserving node relabeling, parallel edges between a
// node pair permute freely (m!) and each self-loop may additionally swap
// its two halves (2^m per loop family with m! orderings).
inline std::int64_t automorphism_count(const Template& t) {
    if (t.num_halfedges() > 24)
        throw CapacityError("automorphism_count: more than 24 half-edges");
    const int r = t.num_nodes();
    // multiplicity map
    std::map<std::pair<int, int>, int> mult;
    for (const auto& e : t.edges()) ++mult[e];

    std::vector<int> interior;
    for (int v = 2; v < r; ++v) interior.push_back(v);

    std::vector<int> relabel(r);
    relabel[0] = 0;
    relabel[1] = 1;

    std::int64_t count = 0;
    std::vector<int> perm(interior);
    std::sort(perm.begin(), perm.end());
    do {
        for (std::size_t i = 0; i < perm.size(); ++i)
            relabel[interior[i]] = perm[i];
        bool ok = true;
        for (const auto& [pair, m] : mult) {
            int u = relabel[pair.first], v = relabel[pair.second];
            if (u > v) std::swap(u, v);
            auto it = mult.find({u, v});
            if (it == mult.end() || it->second != m) {
                ok = false;
                break;
            }
        }
        if (!ok) continue;
        std::int64_t ways = 1;
        for (const auto& [pair, m] : mult) {
            ways *= static_cast<std::int64_t>(factorial_u64(m));
            if (pair.first == pair.second)
                for (int i = 0; i < m; ++i) ways *= 2;
        }
        count += ways;
    } while (std::next_permutation(perm.begin(), perm.end()));
    return count;
}

// One canonical representative per equivalence class of templates with at
// most max_edges edges (isolated nodes only among v1, v2), sorted by
// canonical key. even_only keeps templates whose degrees are all even.
inline std::vector<Template> enumerate_templates(int max_edges, bool even_only) {
    if (max_edges < 0) throw std::invalid_argument("max_edges < 0");
    if (max_edges > 4)
        throw CapacityError("enumerate_templates: max_edges > 4 is beyond desk scale");

    const int max_interior = 2 * max_edges;
    const int pool = 2 + max_interior;

    // all normalized node pairs over the pool
    std::vector<std::pair<int, int>> pairs;
    for (int u = 0; u < pool; ++u)
        for (int v = u; v < pool; ++v) pairs.emplace_back(u, v);

    std::map<std::vector<std::pair<int, int>>, Template> reps;
    auto consider = [&](const std::vector<std::pair<int, int>>& edge_list) {
        // interior nodes must be used contiguously 2..2+k-1
        int max_node = 1;
        std::vector<bool> used(pool, false);
        for (const auto& [u, v] : edge_list) {
            used[u] = used[v] = true;
            max_node = std::max({max_node, u, v});
        }
        for (int w = 2; w <= max_node; ++w)
            if (!used[w]) return;  // non-contiguous; an equivalent copy exists
        Template t(std::max(2, max_node + 1), edge_list);
        if (even_only && !t.all_degrees_even()) return;
        auto key = t.canonical_key();
        key.emplace_back(t.num_nodes(), -1);  // keep node count in the key
        reps.emplace(std::move(key), std::move(t));
    };

    // non-decreasing sequences of pair indices, length 0..max_edges
    std::vector<std::pair<int, int>> current;
    std::function<void(std::size_t, int)> rec = [&](std::size_t start, int remaining) {
        consider(current);
        if (remaining == 0) return;
        for (std::size_t p = start; p < pairs.size(); ++p) {
            current.push_back(pairs[p]);
            rec(p, remaining - 1);
            current.pop_back();
        }
    };
    rec(0, max_edges);

    std::vector<Template> out;
    out.reserve(reps.size());
    for (auto& [key, t] : reps) out.push_back(std::move(t));
    return out;
}

}  // namespace graphmix
