#include <catch_amalgamated.hpp>

#include <algorithm>
#include <map>
#include <numeric>
#include <set>

#include "graphmix/multigraph.hpp"
#include "graphmix/rng.hpp"

using namespace graphmix;

namespace {

// Brute-force oracle: count half-edge bijections preserving the edge
// partnership and incidence (via a consistent induced node map fixing v1
// and v2). Exponential; only for tiny templates.
std::int64_t brute_force_aut(const Template& t) {
    const int h = t.num_halfedges();
    std::vector<int> sigma(h, -1);
    std::vector<char> used(h, 0);
    std::vector<int> node_map(t.num_nodes(), -1);
    node_map[0] = 0;
    if (t.num_nodes() > 1) node_map[1] = 1;
    std::vector<int> node_uses(t.num_nodes(), 0);

    std::int64_t count = 0;
    std::function<void(int)> rec = [&](int i) {
        if (i == h) {
            ++count;
            return;
        }
        for (int j = 0; j < h; ++j) {
            if (used[j]) continue;
            // partner consistency: if partner already assigned, must map to j's partner
            const int pi = Template::halfedge_partner(i);
            if (pi < i && sigma[pi] != Template::halfedge_partner(j)) continue;
            // incidence consistency
            const int a = t.halfedge_node(i);
            const int b = t.halfedge_node(j);
            const int prev = node_map[a];
            if (prev >= 0 && prev != b) continue;
            bool fresh = prev < 0;
            if (fresh) {
                // injectivity of the induced node map
                bool taken = false;
                for (int v = 0; v < t.num_nodes(); ++v)
                    if (node_map[v] == b) taken = true;
                if (taken) continue;
                node_map[a] = b;
            }
            used[j] = 1;
            sigma[i] = j;
            rec(i + 1);
            sigma[i] = -1;
            used[j] = 0;
            if (fresh) node_map[a] = -1;
        }
    };
    (void)node_uses;
    rec(0);
    return count;
}

Template relabeled_copy(const Template& t, Rng& rng) {
    std::vector<int> perm;
    for (int v = 2; v < t.num_nodes(); ++v) perm.push_back(v);
    for (std::size_t i = perm.size(); i > 1; --i)
        std::swap(perm[i - 1], perm[rng.next_below(i)]);
    std::vector<int> relabel(t.num_nodes());
    relabel[0] = 0;
    if (t.num_nodes() > 1) relabel[1] = 1;
    for (std::size_t i = 0; i < perm.size(); ++i)
        relabel[2 + static_cast<int>(i)] = perm[i];
    std::vector<std::pair<int, int>> edges;
    for (auto [u, v] : t.edges()) edges.emplace_back(relabel[u], relabel[v]);
    for (std::size_t i = edges.size(); i > 1; --i)
        std::swap(edges[i - 1], edges[rng.next_below(i)]);
    return Template(t.num_nodes(), edges);
}

}  // namespace

TEST_CASE("gstar L=1 M=1 is the double chain with no fastener") {
    const Template t = build_gstar(1, 1);
    REQUIRE(t.num_nodes() == 3);
    REQUIRE(t.num_edges() == 4);
    CHECK(t.degree(0) == 2);
    CHECK(t.degree(1) == 2);
    CHECK(t.degree(2) == 4);
    // double edge v1-v3, double edge v2-v3
    std::map<std::pair<int, int>, int> mult;
    for (auto e : t.edges()) ++mult[e];
    CHECK(mult[{0, 2}] == 2);
    CHECK(mult[{1, 2}] == 2);
}

TEST_CASE("gstar L=2 M=3") {
    const Template t = build_gstar(2, 3);
    REQUIRE(t.num_nodes() == 8);
    REQUIRE(t.num_edges() == 16);
    CHECK(t.degree(0) == 4);
    CHECK(t.degree(1) == 4);
    for (int v = 2; v < 8; ++v) CHECK(t.degree(v) == 4);
    const int degsum = std::accumulate(t.degrees().begin(), t.degrees().end(), 0);
    CHECK(degsum == 2 * t.num_edges());
}

TEST_CASE("gstar sizes follow 2LM + M + 1 and degree M+1") {
    for (auto [L, M] : std::vector<std::pair<int, int>>{{1, 1}, {1, 3}, {2, 1}, {3, 3}, {2, 5}}) {
        const Template t = build_gstar(L, M);
        CHECK(t.num_nodes() == L * M + 2);
        CHECK(t.num_edges() == 2 * L * M + M + 1);
        CHECK(t.degree(0) == M + 1);
        CHECK(t.degree(1) == M + 1);
        for (int v = 2; v < t.num_nodes(); ++v) CHECK(t.degree(v) == 4);
        CHECK(t.is_connected());
    }
}

TEST_CASE("gstar rejects even M") {
    CHECK_THROWS_AS(build_gstar(1, 2), std::invalid_argument);
    CHECK_THROWS_AS(build_gstar(0, 1), std::invalid_argument);
}

TEST_CASE("automorphism counts on the named small templates") {
    CHECK(automorphism_count(Template(2, {{0, 0}})) == 2);  // self-loop at v1
    CHECK(automorphism_count(Template(2, {{0, 1}, {0, 1}})) == 2);  // double edge
    CHECK(automorphism_count(Template(2, {{0, 1}})) == 1);  // single edge
    CHECK(automorphism_count(Template::edgeless()) == 1);
}

TEST_CASE("automorphism count matches half-edge brute force on small templates") {
    for (const auto& t : enumerate_templates(2, false)) {
        INFO(t.to_text());
        CHECK(automorphism_count(t) == brute_force_aut(t));
    }
    CHECK(automorphism_count(build_gstar(1, 1)) == brute_force_aut(build_gstar(1, 1)));
}

TEST_CASE("automorphism count guards on size") {
    CHECK_THROWS_AS(automorphism_count(build_gstar(3, 5)), CapacityError);
}

TEST_CASE("template enumeration at D=1") {
    const auto even = enumerate_templates(1, true);
    REQUIRE(even.size() == 4);  // edgeless, loop@v1, loop@v2, loop@interior
    const auto all = enumerate_templates(1, false);
    REQUIRE(all.size() == 8);  // + v1-v2, v1-u, v2-u, u-u'
    int edgeless = 0;
    for (const auto& t : all)
        if (t.num_edges() == 0) ++edgeless;
    CHECK(edgeless == 1);
}

TEST_CASE("enumeration classes are canonical and pairwise distinct at D<=3") {
    const auto all = enumerate_templates(3, false);
    std::set<std::vector<std::pair<int, int>>> keys;
    Rng rng(7);
    for (const auto& t : all) {
        auto key = t.canonical_key();
        key.emplace_back(t.num_nodes(), -1);
        CHECK(keys.insert(key).second);  // non-isomorphic -> distinct keys
        // isomorphic relabelings -> equal keys
        const Template copy = relabeled_copy(t, rng);
        CHECK(copy.canonical_key() == t.canonical_key());
    }
    // the family is not tiny; spot-check the count is stable
    CHECK(all.size() > 50);
}

TEST_CASE("capacity guard on enumeration depth") {
    CHECK_THROWS_AS(enumerate_templates(5, false), CapacityError);
}

TEST_CASE("interior nodes may not be isolated") {
    CHECK_THROWS_AS(Template(3, {{0, 1}}), std::invalid_argument);
}

TEST_CASE("text format round trip") {
    const Template t = build_gstar(2, 3);
    const Template back = Template::from_text(t.to_text());
    CHECK(back == t);
    const Template loop = Template::from_text("nodes 2\n1 1\n");
    CHECK(loop.num_edges() == 1);
    CHECK(loop.degree(0) == 2);
}
