#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "graphmix/multigraph.hpp"
#include "graphmix/util.hpp"

namespace graphmix {

// A node matching between two template replicas: injective on both sides,
// always contains (v1,v1) and (v2,v2), and covers every interior degree-2
// node of either side (condition (c)).
struct Matching {
    std::vector<std::pair<int, int>> pairs;  // sorted by first component

    bool contains_first(int u) const {
        for (const auto& [a, b] : pairs)
            if (a == u) return true;
        return false;
    }
    bool contains_second(int w) const {
        for (const auto& [a, b] : pairs)
            if (b == w) return true;
        return false;
    }
    int size() const { return static_cast<int>(pairs.size()); }
};

// A half-edge pairing: (half-edge of replica 1, half-edge of replica 2),
// injective on both sides, allowed only at matched nodes.
using Pairing = std::vector<std::pair<int, int>>;

// Bookkeeping of the pruned graph G_delta produced by prune().
struct PruneSummary {
    int v_delta_size = 0;   // |V1| + |V2| - |M|
    int e_delta_size = 0;   // |E1| + |E2| - |P|
    int n_cyc = 0;          // pruned cycles
    int n_op_even = 0;      // open paths with an even number of pairs
    int n_op_odd = 0;       // open paths with an odd number of pairs
    int n_cc = 0;           // connected components of G_delta (isolated nodes count)
    int n_m_full = 0;       // matched node pairs with every incident half-edge paired
    bool v1_isolated = false;
    bool v2_isolated = false;
    bool v1_sim_v2 = false;  // v1 and v2 in the same component of G_delta
};

struct MatchPair {
    Matching matching;
    Pairing pairing;
    PruneSummary summary;
};

// Residue after deleting perfectly paired edges and perfectly matched nodes.
struct Shadow {
    std::vector<int> unpaired_half1;  // half-edges of t1 not perfectly paired
    std::vector<int> unpaired_half2;
    Matching residual_matching;
    Pairing residual_pairing;
    int m = 0;  // count of half-edges that are not perfectly paired
};

namespace detail {

// All local pairings between the half-edges at one matched node pair:
// subsets of equal size plus a bijection. Emitted via callback.
inline void for_each_local_pairing(
    const std::vector<int>& halves1, const std::vector<int>& halves2,
    Pairing& current, const std::function<void()>& emit) {
    std::vector<char> used2(halves2.size(), 0);
    std::function<void(std::size_t)> rec = [&](std::size_t i) {
        if (i == halves1.size()) {
            emit();
            return;
        }
        rec(i + 1);  // leave halves1[i] unpaired
        for (std::size_t j = 0; j < halves2.size(); ++j) {
            if (used2[j]) continue;
            used2[j] = 1;
            current.emplace_back(halves1[i], halves2[j]);
            rec(i + 1);
            current.pop_back();
            used2[j] = 0;
        }
    };
    rec(0);
}

inline std::uint64_t local_pairing_count(int a, int b) {
    std::uint64_t total = 0;
    for (int k = 0; k <= std::min(a, b); ++k)
        total += binomial(a, k) * binomial(b, k) * factorial_u64(k);
    return total;
}

}  // namespace detail

// All node matchings between t1 and t2. With star_only, keeps only
// matchings in M*: every connected component of t1 and of t2 contains at
// least one matched node. Throws CapacityError beyond max_count.
inline std::vector<Matching> enumerate_matchings(const Template& t1, const Template& t2,
                                                 bool star_only,
                                                 std::size_t max_count = 200000) {
    std::vector<int> interior1, interior2;
    for (int v = 2; v < t1.num_nodes(); ++v) interior1.push_back(v);
    for (int v = 2; v < t2.num_nodes(); ++v) interior2.push_back(v);

    const auto comp1 = t1.component_of_node();
    const auto comp2 = t2.component_of_node();
    const int ncomp1 = t1.num_components();
    const int ncomp2 = t2.num_components();

    std::vector<Matching> out;
    std::vector<int> map1(t1.num_nodes(), -1);  // node of t1 -> node of t2
    map1[0] = 0;
    map1[1] = 1;
    std::vector<char> used2(t2.num_nodes(), 0);
    used2[0] = used2[1] = 1;

    auto emit = [&]() {
        // condition (c): all degree-2 nodes of t2 must be matched
        for (int w : interior2)
            if (t2.degree(w) == 2 && !used2[w]) return;
        if (star_only) {
            std::vector<char> hit1(ncomp1, 0), hit2(ncomp2, 0);
            for (int u = 0; u < t1.num_nodes(); ++u)
                if (map1[u] >= 0) {
                    hit1[comp1[u]] = 1;
                    hit2[comp2[map1[u]]] = 1;
                }
            for (char h : hit1)
                if (!h) return;
            for (char h : hit2)
                if (!h) return;
        }
        Matching m;
        for (int u = 0; u < t1.num_nodes(); ++u)
            if (map1[u] >= 0) m.pairs.emplace_back(u, map1[u]);
        if (out.size() >= max_count)
            throw CapacityError("enumerate_matchings: more than " +
                                std::to_string(max_count) + " matchings");
        out.push_back(std::move(m));
    };

    std::function<void(std::size_t)> rec = [&](std::size_t i) {
        if (i == interior1.size()) {
            emit();
            return;
        }
        const int u = interior1[i];
        if (t1.degree(u) != 2) rec(i + 1);  // unmatched allowed unless degree 2
        for (int w : interior2) {
            if (used2[w]) continue;
            used2[w] = 1;
            map1[u] = w;
            rec(i + 1);
            map1[u] = -1;
            used2[w] = 0;
        }
    };
    rec(0);
    return out;
}

// Exact number of pairings compatible with a matching.
inline std::uint64_t count_pairings(const Template& t1, const Template& t2,
                                    const Matching& m) {
    std::uint64_t total = 1;
    for (const auto& [u, w] : m.pairs)
        total *= detail::local_pairing_count(t1.degree(u), t2.degree(w));
    return total;
}

// Visits every pairing compatible with the matching (empty one included).
inline void for_each_pairing(const Template& t1, const Template& t2, const Matching& m,
                             const std::function<void(const Pairing&)>& visit) {
    std::vector<std::vector<int>> halves1, halves2;
    for (const auto& [u, w] : m.pairs) {
        halves1.push_back(t1.halfedges_at(u));
        halves2.push_back(t2.halfedges_at(w));
    }
    Pairing current;
    std::function<void(std::size_t)> rec = [&](std::size_t i) {
        if (i == m.pairs.size()) {
            visit(current);
            return;
        }
        detail::for_each_local_pairing(halves1[i], halves2[i], current,
                                       [&] { rec(i + 1); });
    };
    rec(0);
}

// Materialized pairing list (the CLI/test surface); guarded.
inline std::vector<Pairing> enumerate_pairings(const Template& t1, const Template& t2,
                                               const Matching& m,
                                               std::uint64_t max_count = 1000000) {
    const std::uint64_t total = count_pairings(t1, t2, m);
    if (total > max_count)
        throw CapacityError("enumerate_pairings: " + std::to_string(total) +
                            " pairings exceed the cap of " + std::to_string(max_count));
    std::vector<Pairing> out;
    out.reserve(static_cast<std::size_t>(total));
    for_each_pairing(t1, t2, m, [&](const Pairing& p) { out.push_back(p); });
    return out;
}

namespace detail {

struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(int n) : parent(n) {
        for (int i = 0; i < n; ++i) parent[i] = i;
    }
    int find(int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    }
    void unite(int a, int b) { parent[find(a)] = find(b); }
};

}  // namespace detail

// The edge list of G_delta (merged node ids) plus the structure counts.
struct PrunedGraph {
    int num_merged_nodes = 0;
    std::vector<std::pair<int, int>> edges;  // surviving + contracted edges
    int n_cyc = 0;
    int n_op_even = 0;
    int n_op_odd = 0;
};

// Builds the merged graph, walks the colored pair-structures (disjoint
// paths and cycles since each edge instance carries at most two paired
// halves), and returns G_delta explicitly.
inline PrunedGraph prune_graph(const Template& t1, const Template& t2,
                               const Matching& m, const Pairing& p) {
    PrunedGraph g;
    const int r1 = t1.num_nodes();
    const int r2 = t2.num_nodes();

    // merged node ids: t1 keeps its ids; matched t2 nodes collapse onto
    // their partner, the rest get fresh ids
    std::vector<int> merged2(r2, -1);
    for (const auto& [u, w] : m.pairs) merged2[w] = u;
    int next_id = r1;
    for (int w = 0; w < r2; ++w)
        if (merged2[w] < 0) merged2[w] = next_id++;
    g.num_merged_nodes = next_id;

    auto merged_node = [&](int side, int halfedge) {
        return side == 0 ? t1.halfedge_node(halfedge)
                         : merged2[t2.halfedge_node(halfedge)];
    };

    // pair index per half-edge, -1 if unpaired
    std::vector<int> pair_at1(static_cast<std::size_t>(t1.num_halfedges()), -1);
    std::vector<int> pair_at2(static_cast<std::size_t>(t2.num_halfedges()), -1);
    for (std::size_t i = 0; i < p.size(); ++i) {
        pair_at1[p[i].first] = static_cast<int>(i);
        pair_at2[p[i].second] = static_cast<int>(i);
    }

    std::vector<char> pair_visited(p.size(), 0);
    for (std::size_t start = 0; start < p.size(); ++start) {
        if (pair_visited[start]) continue;
        pair_visited[start] = 1;
        int pair_count = 1;
        bool is_cycle = false;
        std::vector<std::pair<int, int>> ends;  // (side, extremity half-edge)

        // two fronts: the edge partner of each member, staying on its side
        struct Front {
            int side;
            int half;
        };
        Front fronts[2] = {{0, Template::halfedge_partner(p[start].first)},
                           {1, Template::halfedge_partner(p[start].second)}};
        for (auto& f : fronts) {
            while (true) {
                const int pi = f.side == 0 ? pair_at1[f.half] : pair_at2[f.half];
                if (pi < 0) break;  // unpaired extremity
                if (pair_visited[pi]) {
                    is_cycle = true;  // walked back onto the structure
                    break;
                }
                pair_visited[pi] = 1;
                ++pair_count;
                const int other_half = f.side == 0 ? p[pi].second : p[pi].first;
                f.side = 1 - f.side;
                f.half = Template::halfedge_partner(other_half);
            }
            if (is_cycle) break;
            ends.emplace_back(f.side, f.half);
        }

        if (is_cycle) {
            ++g.n_cyc;
        } else {
            if (pair_count % 2 == 0) ++g.n_op_even;
            else ++g.n_op_odd;
            g.edges.emplace_back(merged_node(ends[0].first, ends[0].second),
                                 merged_node(ends[1].first, ends[1].second));
        }
    }

    // edges with no paired half survive unchanged
    for (int side = 0; side < 2; ++side) {
        const Template& t = side == 0 ? t1 : t2;
        const auto& pair_at = side == 0 ? pair_at1 : pair_at2;
        for (int e = 0; e < t.num_edges(); ++e) {
            if (pair_at[2 * e] >= 0 || pair_at[2 * e + 1] >= 0) continue;
            g.edges.emplace_back(merged_node(side, 2 * e), merged_node(side, 2 * e + 1));
        }
    }
    return g;
}

// Prunes and condenses the bookkeeping needed by the moment formulas.
inline PruneSummary prune(const Template& t1, const Template& t2, const Matching& m,
                          const Pairing& p) {
    const PrunedGraph g = prune_graph(t1, t2, m, p);
    PruneSummary s;
    s.v_delta_size = g.num_merged_nodes;
    s.e_delta_size = static_cast<int>(g.edges.size());
    s.n_cyc = g.n_cyc;
    s.n_op_even = g.n_op_even;
    s.n_op_odd = g.n_op_odd;

    detail::UnionFind uf(g.num_merged_nodes);
    std::vector<int> deg(g.num_merged_nodes, 0);
    for (const auto& [a, b] : g.edges) {
        uf.unite(a, b);
        ++deg[a];
        ++deg[b];
    }
    int cc = 0;
    std::vector<char> seen_root(g.num_merged_nodes, 0);
    for (int v = 0; v < g.num_merged_nodes; ++v) {
        const int r = uf.find(v);
        if (!seen_root[r]) {
            seen_root[r] = 1;
            ++cc;
        }
    }
    s.n_cc = cc;
    s.v1_sim_v2 = uf.find(0) == uf.find(1);
    s.v1_isolated = deg[0] == 0;
    s.v2_isolated = deg[1] == 0;

    std::vector<char> paired1(static_cast<std::size_t>(t1.num_halfedges()), 0);
    std::vector<char> paired2(static_cast<std::size_t>(t2.num_halfedges()), 0);
    for (const auto& [h1, h2] : p) {
        paired1[h1] = 1;
        paired2[h2] = 1;
    }
    for (const auto& [u, w] : m.pairs) {
        bool full = true;
        for (int h : t1.halfedges_at(u))
            if (!paired1[h]) {
                full = false;
                break;
            }
        if (full)
            for (int h : t2.halfedges_at(w))
                if (!paired2[h]) {
                    full = false;
                    break;
                }
        if (full) ++s.n_m_full;
    }
    return s;
}

inline MatchPair make_match_pair(const Template& t1, const Template& t2,
                                 const Matching& m, const Pairing& p) {
    return MatchPair{m, p, prune(t1, t2, m, p)};
}

// Deletes perfectly paired edges (those whose two half-edge pairs form a
// length-2 cycle) and perfectly matched nodes; reports the residue.
inline Shadow shadow_of(const Template& t1, const Template& t2, const Matching& m,
                        const Pairing& p) {
    std::vector<int> mate1(static_cast<std::size_t>(t1.num_halfedges()), -1);
    std::vector<int> mate2(static_cast<std::size_t>(t2.num_halfedges()), -1);
    for (const auto& [h1, h2] : p) {
        mate1[h1] = h2;
        mate2[h2] = h1;
    }
    // edge e of t1 is perfectly paired with edge f of t2 when its two halves
    // are paired exactly with the two halves of f
    std::vector<char> perfect1(static_cast<std::size_t>(t1.num_edges()), 0);
    std::vector<char> perfect2(static_cast<std::size_t>(t2.num_edges()), 0);
    for (int e = 0; e < t1.num_edges(); ++e) {
        const int a = mate1[2 * e], b = mate1[2 * e + 1];
        if (a < 0 || b < 0) continue;
        if (a / 2 == b / 2) {
            perfect1[e] = 1;
            perfect2[a / 2] = 1;
        }
    }

    Shadow sh;
    for (int h = 0; h < t1.num_halfedges(); ++h)
        if (!perfect1[h / 2]) sh.unpaired_half1.push_back(h);
    for (int h = 0; h < t2.num_halfedges(); ++h)
        if (!perfect2[h / 2]) sh.unpaired_half2.push_back(h);
    sh.m = static_cast<int>(sh.unpaired_half1.size() + sh.unpaired_half2.size());

    for (const auto& [h1, h2] : p)
        if (!perfect1[h1 / 2]) sh.residual_pairing.emplace_back(h1, h2);

    for (const auto& [u, w] : m.pairs) {
        bool perfectly_matched = true;
        for (int h : t1.halfedges_at(u))
            if (!perfect1[h / 2]) {
                perfectly_matched = false;
                break;
            }
        if (perfectly_matched)
            for (int h : t2.halfedges_at(w))
                if (!perfect2[h / 2]) {
                    perfectly_matched = false;
                    break;
                }
        if (perfectly_matched) continue;
        sh.residual_matching.pairs.emplace_back(u, w);
    }
    return sh;
}

}  // namespace graphmix
