#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "graphmix/hermite.hpp"
#include "graphmix/model.hpp"
#include "graphmix/pairing.hpp"
#include "graphmix/util.hpp"

namespace graphmix {

struct MomentParams {
    int n = 0;
    int d = 0;
    int K = 0;
    double delta = 0.0;

    void validate() const {
        ModelParams{n, d, K, delta}.validate();
    }
    double labelings(int num_nodes) const {
        return falling_factorial(n - 2, num_nodes - 2);
    }
};

class UnsupportedTemplate : public std::runtime_error {
public:
    explicit UnsupportedTemplate(const std::string& what) : std::runtime_error(what) {}
};

// ---------------------------------------------------------------------------
// First moments (zero cases by the parity / degree-2 killing lemmas, the
// rest in closed form).
// ---------------------------------------------------------------------------

inline double mean_psibar(const Template& t, const MomentParams& p) {
    p.validate();
    if (t.has_odd_degree_node()) return 0.0;
    if (t.has_interior_degree2_node()) return 0.0;
    return p.labelings(t.num_nodes()) * ipow(p.delta, 2 * t.num_edges()) /
           ipow(static_cast<double>(p.K), t.num_nodes() - t.num_components());
}

inline double mean_x_psibar(const Template& t, const MomentParams& p) {
    p.validate();
    if (t.has_odd_degree_node()) return 0.0;
    if (t.has_interior_degree2_node()) return 0.0;
    // components of G with the (v1, v2) edge added; the k*(1) = k*(2)
    // constraint is what that extra edge encodes
    auto edges = t.edges();
    edges.emplace_back(0, 1);
    const Template closed(t.num_nodes(), edges);
    return p.labelings(t.num_nodes()) * ipow(p.delta, 2 * t.num_edges()) /
           ipow(static_cast<double>(p.K), t.num_nodes() - closed.num_components());
}

inline double mean_x_psitilde(const Template& t, const MomentParams& p) {
    p.validate();
    if (t.num_edges() == 0) return 1.0 / p.K;
    if (t.has_odd_degree_node()) return 0.0;
    if (t.has_interior_degree2_node()) return 0.0;
    if (!t.is_connected()) return 0.0;
    return p.labelings(t.num_nodes()) * ipow(p.delta, 2 * t.num_edges()) /
           ipow(static_cast<double>(p.K), t.num_nodes() - 1) * (1.0 - 1.0 / p.K);
}

// ---------------------------------------------------------------------------
// Second moments: exact enumeration over matchings and pairings, grouped by
// the integer signature of each term so the combinatorial counting stays
// exact and the float conversion happens once per class.
// ---------------------------------------------------------------------------

namespace detail {

struct TermSignature {
    int v_delta;
    int e_delta;
    int cyc;
    int cc;
    bool v1_sim_v2;
    auto operator<=>(const TermSignature&) const = default;
};

using SignatureCounts = std::map<TermSignature, std::uint64_t>;

// enumeration work estimate: total number of (matching, pairing) terms
inline double pair_term_estimate(const Template& t1, const Template& t2,
                                 const std::vector<Matching>& ms) {
    double total = 0.0;
    for (const auto& m : ms)
        total += static_cast<double>(count_pairings(t1, t2, m));
    return total;
}

inline SignatureCounts collect_signatures(const Template& t1, const Template& t2,
                                          const std::vector<Matching>& ms,
                                          double budget) {
    const double estimate = pair_term_estimate(t1, t2, ms);
    if (estimate > budget) {
        std::ostringstream os;
        os << "moment enumeration needs " << estimate << " (matching, pairing) terms, "
           << "budget is " << budget;
        throw CapacityError(os.str());
    }
    SignatureCounts counts;
    for (const auto& m : ms) {
        for_each_pairing(t1, t2, m, [&](const Pairing& pr) {
            const PruneSummary s = prune(t1, t2, m, pr);
            ++counts[TermSignature{s.v_delta_size, s.e_delta_size, s.n_cyc, s.n_cc,
                                   s.v1_sim_v2}];
        });
    }
    return counts;
}

}  // namespace detail

inline bool second_moment_hypothesis(const Template& t) {
    return t.all_degrees_even() && !t.has_interior_degree2_node();
}

// E[psi_bar_G^2]: valid for all-even templates with no interior degree-2
// node (the paper states it for minimum degree 4; the enumeration identity
// only needs the evenness and the absence of corrected nodes).
inline double second_moment_psibar(const Template& t, const MomentParams& p,
                                   double budget = 5e7) {
    p.validate();
    if (!second_moment_hypothesis(t))
        throw UnsupportedTemplate(
            "second_moment_psibar: template must be all-even without interior degree-2 nodes");
    const auto ms = enumerate_matchings(t, t, false);
    const auto counts = detail::collect_signatures(t, t, ms, budget);
    KahanSum sum;
    for (const auto& [sig, count] : counts) {
        sum.add(static_cast<double>(count) * falling_factorial(p.n - 2, sig.v_delta - 2) *
                ipow(p.delta, 2 * sig.e_delta) * ipow(static_cast<double>(p.d), sig.cyc) /
                ipow(static_cast<double>(p.K), sig.v_delta - sig.cc));
    }
    return sum.value();
}

// E[psi_bar_{G1,pi1} psi_bar_{G2,pi2}] for fixed labelings. Exact zero when
// some merged row has odd total degree (sign symmetry); otherwise the sum
// over pairings of the matching induced by the shared labels.
inline double cross_moment_labeled(const Template& t1, const std::vector<int>& pi1,
                                   const Template& t2, const std::vector<int>& pi2,
                                   const MomentParams& p, double budget = 5e7) {
    p.validate();
    if (t1.has_interior_degree2_node() || t2.has_interior_degree2_node())
        throw UnsupportedTemplate(
            "cross_moment_labeled: interior degree-2 nodes need the envelope form");
    if (static_cast<int>(pi1.size()) != t1.num_nodes() ||
        static_cast<int>(pi2.size()) != t2.num_nodes())
        throw std::invalid_argument("cross_moment_labeled: labeling size mismatch");
    if (pi1[0] != 0 || pi1[1] != 1 || pi2[0] != 0 || pi2[1] != 1)
        throw std::invalid_argument("cross_moment_labeled: labelings must pin rows 1, 2");

    // merged degree parity per row
    std::map<int, int> row_degree;
    for (int v = 0; v < t1.num_nodes(); ++v) row_degree[pi1[v]] += t1.degree(v);
    for (int v = 0; v < t2.num_nodes(); ++v) row_degree[pi2[v]] += t2.degree(v);
    for (const auto& [row, deg] : row_degree)
        if (deg % 2 != 0) return 0.0;

    // matching induced by shared rows
    Matching m;
    for (int v = 0; v < t1.num_nodes(); ++v)
        for (int w = 0; w < t2.num_nodes(); ++w)
            if (pi1[v] == pi2[w]) m.pairs.emplace_back(v, w);

    const double estimate = static_cast<double>(count_pairings(t1, t2, m));
    if (estimate > budget)
        throw CapacityError("cross_moment_labeled: " + std::to_string(estimate) +
                            " pairings exceed the budget");
    KahanSum sum;
    for_each_pairing(t1, t2, m, [&](const Pairing& pr) {
        const PruneSummary s = prune(t1, t2, m, pr);
        sum.add(ipow(p.delta, 2 * s.e_delta_size) *
                ipow(static_cast<double>(p.d), s.n_cyc) /
                ipow(static_cast<double>(p.K), s.v_delta_size - s.n_cc));
    });
    return sum.value();
}

// Envelope for templates with interior degree-2 nodes: center is the sum
// over full pairings, the slack sums the non-full terms with their
// 2^{|V_2,np|} factors. The truth lies in [center - slack, center + slack].
struct CrossMomentEnvelope {
    double center = 0.0;
    double slack = 0.0;
    double lower() const { return center - slack; }
    double upper() const { return center + slack; }
};

inline CrossMomentEnvelope cross_moment_envelope_labeled(
    const Template& t1, const std::vector<int>& pi1, const Template& t2,
    const std::vector<int>& pi2, const MomentParams& p, double budget = 5e7) {
    p.validate();
    Matching m;
    for (int v = 0; v < t1.num_nodes(); ++v)
        for (int w = 0; w < t2.num_nodes(); ++w)
            if (pi1[v] == pi2[w]) m.pairs.emplace_back(v, w);
    for (int v = 2; v < t1.num_nodes(); ++v)
        if (t1.degree(v) == 2 && !m.contains_first(v))
            throw UnsupportedTemplate(
                "cross_moment_envelope_labeled: all degree-2 nodes must be matched");
    for (int w = 2; w < t2.num_nodes(); ++w)
        if (t2.degree(w) == 2 && !m.contains_second(w))
            throw UnsupportedTemplate(
                "cross_moment_envelope_labeled: all degree-2 nodes must be matched");

    const double estimate = static_cast<double>(count_pairings(t1, t2, m));
    if (estimate > budget)
        throw CapacityError("cross_moment_envelope_labeled: over budget");

    std::vector<char> paired_node1(t1.num_nodes(), 0), paired_node2(t2.num_nodes(), 0);
    CrossMomentEnvelope env;
    KahanSum center, slack;
    for_each_pairing(t1, t2, m, [&](const Pairing& pr) {
        const PruneSummary s = prune(t1, t2, m, pr);
        const double w = ipow(p.delta, 2 * s.e_delta_size) *
                         ipow(static_cast<double>(p.d), s.n_cyc) /
                         ipow(static_cast<double>(p.K), s.v_delta_size - s.n_cc);
        const bool full = static_cast<int>(pr.size()) == t1.num_halfedges() &&
                          t1.num_halfedges() == t2.num_halfedges();
        if (full) {
            center.add(w);
            return;
        }
        // V_2,np: interior degree-2 nodes with no incident half paired
        std::fill(paired_node1.begin(), paired_node1.end(), 0);
        std::fill(paired_node2.begin(), paired_node2.end(), 0);
        for (const auto& [h1, h2] : pr) {
            paired_node1[t1.halfedge_node(h1)] = 1;
            paired_node2[t2.halfedge_node(h2)] = 1;
        }
        int v2np = 0;
        for (int v = 2; v < t1.num_nodes(); ++v)
            if (t1.degree(v) == 2 && !paired_node1[v]) ++v2np;
        for (int w2 = 2; w2 < t2.num_nodes(); ++w2)
            if (t2.degree(w2) == 2 && !paired_node2[w2]) ++v2np;
        slack.add(ipow(2.0, v2np) * w);
    });
    env.center = center.value();
    env.slack = slack.value();
    return env;
}

// variance proxy |Aut(G)| d^{|E|} (n-2)!/(n-|V|)!
inline double variance_proxy(const Template& t, const MomentParams& p) {
    p.validate();
    return static_cast<double>(automorphism_count(t)) *
           ipow(static_cast<double>(p.d), t.num_edges()) * p.labelings(t.num_nodes());
}

// ---------------------------------------------------------------------------
// Conditional variances of psi_bar_{G*} given x (both enumerated exactly),
// and the displayed variance-ratio bound.
// ---------------------------------------------------------------------------

struct ConditionalVariances {
    double var0 = 0.0;
    double var1 = 0.0;
    double mean1 = 0.0;           // E[psi_bar | x = 1]
    double second_moment0 = 0.0;  // E[psi_bar^2 | x = 0]
    double second_moment1 = 0.0;  // E[psi_bar^2 | x = 1]
};

inline ConditionalVariances conditional_variances_gstar(int L, int M,
                                                        const MomentParams& p,
                                                        double budget = 5e7) {
    p.validate();
    if (p.d != p.K)
        throw std::invalid_argument("conditional_variances_gstar: requires d = K");
    if (L * M + 2 > 5)
        throw CapacityError("conditional_variances_gstar: LM + 2 above the guard of 5");
    const Template g = build_gstar(L, M);
    if (p.n - 2 < g.num_nodes() - 2)
        throw std::invalid_argument("conditional_variances_gstar: n too small");

    const auto ms = enumerate_matchings(g, g, false);
    const auto counts = detail::collect_signatures(g, g, ms, budget);

    ConditionalVariances out;
    out.mean1 = p.labelings(g.num_nodes()) * ipow(p.delta, 2 * g.num_edges()) /
                ipow(static_cast<double>(p.K), g.num_nodes() - 2);
    KahanSum s0, s1;
    for (const auto& [sig, count] : counts) {
        const double base = static_cast<double>(count) *
                            falling_factorial(p.n - 2, sig.v_delta - 2) *
                            ipow(p.delta, 2 * sig.e_delta) *
                            ipow(static_cast<double>(p.d), sig.cyc);
        const double k_unshifted =
            ipow(static_cast<double>(p.K), sig.v_delta - sig.cc);
        if (!sig.v1_sim_v2) s0.add(base / k_unshifted);
        s1.add(base * (sig.v1_sim_v2 ? static_cast<double>(p.K) : 1.0) / k_unshifted);
    }
    out.second_moment0 = s0.value();
    out.second_moment1 = s1.value();
    out.var0 = out.second_moment0;  // E[psi_bar | x = 0] = 0
    out.var1 = out.second_moment1 - out.mean1 * out.mean1;
    if (out.var0 > out.var1 * (1.0 + 1e-12) + 1e-12)
        throw std::logic_error("conditional_variances_gstar: Var0 <= Var1 failed");
    return out;
}

struct VarianceRatioBound {
    double value = 0.0;
    bool m_at_least_24 = false;
    bool n_condition = false;      // n >= 64 [4 M^2 L^2 v 10^4 (M+2)^4] K
    bool delta_condition = false;  // the displayed separation condition
    bool all_preconditions() const {
        return m_at_least_24 && n_condition && delta_condition;
    }
};

// Pure arithmetic; n and K as doubles so paper-scale inputs are expressible.
inline VarianceRatioBound variance_ratio_bound(int L, int M, double n, double K,
                                               double delta) {
    if (L < 1 || M < 1) throw std::invalid_argument("variance_ratio_bound: L, M >= 1");
    const double d2 = delta * delta;
    const double Mp1 = M + 1.0;
    const double Mp2 = M + 2.0;

    VarianceRatioBound b;
    const double head = 1e4 * std::pow(Mp2, 4.0) *
                        std::max(std::pow(K, 4.0 + 2.0 / Mp1 + 4.0 / L) /
                                     (n * std::pow(d2, 4.0 * (1.0 - 1.0 / Mp1))),
                                 K / n);
    const double tail1 = K * std::pow(Mp1, 2.0 * Mp1) / std::pow(d2, 2.0 * Mp1);
    const double tail2 = 2.0 * std::pow(Mp1, 5.0) / d2;
    const double tail3 = 4.0 * M * M * static_cast<double>(L) * L * K / n;
    b.value = head + tail1 + tail2 + tail3;

    b.m_at_least_24 = M >= 24;
    b.n_condition =
        n >= 64.0 * std::max(4.0 * M * M * static_cast<double>(L) * L,
                             1e4 * std::pow(Mp2, 4.0)) * K;
    const double sep =
        std::max({std::pow(40.0 * Mp2 * std::pow(K, 1.0 + 0.5 / Mp1 + 1.0 / L) /
                               std::pow(n, 0.25),
                           Mp1 / M),
                  8.0 * std::pow(Mp1, 6.0) * std::pow(K, 6.0 / Mp1),
                  128.0 * std::pow(Mp1, 12.0)});
    b.delta_condition = d2 >= sep;
    return b;
}

inline VarianceRatioBound variance_ratio_bound(int L, int M, const MomentParams& p) {
    return variance_ratio_bound(L, M, static_cast<double>(p.n),
                                static_cast<double>(p.K), p.delta);
}

// ---------------------------------------------------------------------------
// Combinatorial inequality checks (Step-2 quantities).
// ---------------------------------------------------------------------------

struct InequalityReport {
    std::uint64_t terms_checked = 0;
    std::uint64_t b_nonneg_violations = 0;
    std::uint64_t c_nonneg_violations = 0;
    std::uint64_t cc_bound_violations = 0;
    std::uint64_t b1_identity_violations = 0;
    std::uint64_t b2_ge_b_violations = 0;
    std::vector<std::string> examples;

    std::uint64_t total_violations() const {
        return b_nonneg_violations + c_nonneg_violations + cc_bound_violations +
               b1_identity_violations + b2_ge_b_violations;
    }
};

// Evaluates B, C, b0, b1, b2 for every (matching, pairing) of the pair.
// B >= 0 is asserted always; C >= 0, the b1 identity, b2 >= B and the
// component bound need both templates even (and M in M* for the latter two).
inline InequalityReport check_combinatorial_inequalities(const Template& t1,
                                                         const Template& t2,
                                                         double budget = 5e7) {
    InequalityReport rep;
    const bool both_even = t1.all_degrees_even() && t2.all_degrees_even();

    const auto comp1 = t1.component_of_node();
    const auto comp2 = t2.component_of_node();
    const int ncomp1 = t1.num_components();
    const int ncomp2 = t2.num_components();

    const auto ms = enumerate_matchings(t1, t2, false);
    if (detail::pair_term_estimate(t1, t2, ms) > budget)
        throw CapacityError("check_combinatorial_inequalities: over budget");

    for (const auto& m : ms) {
        // membership in M*: every component of both templates has a matched node
        std::vector<char> hit1(ncomp1, 0), hit2(ncomp2, 0);
        for (const auto& [u, w] : m.pairs) {
            hit1[comp1[u]] = 1;
            hit2[comp2[w]] = 1;
        }
        bool in_star = true;
        for (char h : hit1) in_star = in_star && h;
        for (char h : hit2) in_star = in_star && h;

        for_each_pairing(t1, t2, m, [&](const Pairing& pr) {
            const PruneSummary s = prune(t1, t2, m, pr);
            ++rep.terms_checked;
            const int P = static_cast<int>(pr.size());
            const int Msize = m.size();
            const int B = P - 2 * s.n_cyc - 2 * s.n_op_even - s.n_op_odd;
            const int C = t1.num_edges() + t2.num_edges() -
                          (2 * t1.num_nodes() + 2 * t2.num_nodes() - 3 * Msize -
                           s.n_m_full) -
                          P;
            const int b0 = t1.num_nodes() + t2.num_nodes() - 2 * Msize;
            const int b1 = s.e_delta_size - 2 * b0;
            const int b2 = (t1.num_edges() + t2.num_edges() - 2 * s.n_cyc) -
                           s.e_delta_size - 2 * s.n_cc + 2 * s.v_delta_size - 2 * b0;

            auto flag = [&](const char* which) {
                if (rep.examples.size() < 5) {
                    std::ostringstream os;
                    os << which << " violated: |M|=" << Msize << " |P|=" << P
                       << " cyc=" << s.n_cyc << " op_even=" << s.n_op_even
                       << " op_odd=" << s.n_op_odd << " cc=" << s.n_cc
                       << " m_full=" << s.n_m_full;
                    rep.examples.push_back(os.str());
                }
            };

            if (B < 0) {
                ++rep.b_nonneg_violations;
                flag("B >= 0");
            }
            if (b0 < 0) {
                ++rep.b_nonneg_violations;
                flag("b0 >= 0");
            }
            if (both_even) {
                if (C < 0) {
                    ++rep.c_nonneg_violations;
                    flag("C >= 0");
                }
                if (b1 != C + (Msize - s.n_m_full)) {
                    ++rep.b1_identity_violations;
                    flag("b1 identity");
                }
                if (in_star) {
                    if (2 * s.n_cc > 2 * s.n_op_even + s.n_op_odd + 2 * Msize) {
                        ++rep.cc_bound_violations;
                        flag("component bound");
                    }
                    if (b2 < B) {
                        ++rep.b2_ge_b_violations;
                        flag("b2 >= B");
                    }
                }
            }
        });
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Monte Carlo oracle hooks. Each closed form is validated against plain
// averaging of the evaluated polynomials over fresh instances; common random
// numbers are achieved by sharing the instance stream across statistics.
// ---------------------------------------------------------------------------

struct MomentReport {
    std::string name;
    double closed_form = 0.0;
    double mc_estimate = 0.0;
    double mc_se = 0.0;
    std::int64_t n_trials = 0;
    std::string verdict;  // pass | fail | inconclusive

    bool passed() const { return verdict == "pass"; }
};

inline MomentReport make_moment_report(const std::string& name, double closed,
                                       const MeanSe& mc) {
    MomentReport r;
    r.name = name;
    r.closed_form = closed;
    r.mc_estimate = mc.mean;
    r.mc_se = mc.se;
    r.n_trials = mc.n;
    const bool within = std::abs(closed - mc.mean) <= 3.0 * mc.se;
    const bool precise = mc.se <= std::max(0.01 * std::abs(closed), 1e-3);
    r.verdict = within ? (precise ? "pass" : "inconclusive") : "fail";
    return r;
}

}  // namespace graphmix
