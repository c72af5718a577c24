#include <catch_amalgamated.hpp>

#include "graphmix/moments.hpp"
#include "graphmix/util.hpp"

using namespace graphmix;

namespace {

const Template kDoubleEdge(2, {{0, 1}, {0, 1}});
const Template kQuadEdge(2, {{0, 1}, {0, 1}, {0, 1}, {0, 1}});
const Template kSingleEdge(2, {{0, 1}});
const Template kPath(3, {{0, 2}, {1, 2}});

MeanSe mc_statistic(const MomentParams& p, std::int64_t trials, std::uint64_t seed,
                    const std::function<double(const Instance&)>& stat) {
    const ModelParams mp{p.n, p.d, p.K, p.delta};
    return parallel_mean_se(trials, 2, [&](std::int64_t i) {
        return stat(sample_instance(mp, mix_seed(seed, static_cast<std::uint64_t>(i))));
    });
}

}  // namespace

TEST_CASE("mean_psibar closed forms and zero cases") {
    const MomentParams p{6, 2, 2, 1.0};
    CHECK(mean_psibar(kDoubleEdge, p) == Catch::Approx(0.5));
    CHECK(mean_psibar(kPath, p) == 0.0);
    CHECK(mean_psibar(kSingleEdge, p) == 0.0);
    // self-loop at v2 only: value delta^2 (two components)
    const Template loop2(2, {{1, 1}});
    CHECK(mean_psibar(loop2, MomentParams{6, 3, 2, 1.5}) == Catch::Approx(1.5 * 1.5));
}

TEST_CASE("mean_psibar matches MC on the double edge") {
    const MomentParams p{6, 2, 2, 1.0};
    const HermiteContext ctx{p.delta, p.K};
    const auto ms = mc_statistic(p, 300000, 42, [&](const Instance& inst) {
        return eval_psibar(kDoubleEdge, inst.Y, ctx).value;
    });
    CHECK(std::abs(ms.mean - 0.5) <= 4.0 * ms.se);
}

TEST_CASE("mean_x_psibar values") {
    const MomentParams p{6, 2, 2, 1.0};
    CHECK(mean_x_psibar(kDoubleEdge, p) == Catch::Approx(0.5));
    CHECK(mean_x_psibar(build_gstar(1, 1), p) == Catch::Approx(1.0));
    CHECK(mean_x_psibar(kSingleEdge, p) == 0.0);
    const HermiteContext ctx{p.delta, p.K};
    const auto ms = mc_statistic(p, 300000, 43, [&](const Instance& inst) {
        return functional_x(inst) * eval_psibar(build_gstar(1, 1), inst.Y, ctx).value;
    });
    CHECK(std::abs(ms.mean - 1.0) <= 4.0 * ms.se);
}

TEST_CASE("mean_x_psitilde trichotomy") {
    const MomentParams p{6, 2, 2, 1.0};
    CHECK(mean_x_psitilde(Template::edgeless(), p) == Catch::Approx(0.5));
    CHECK(mean_x_psitilde(build_gstar(1, 1), p) == Catch::Approx(0.5));
    const Template two_loops(4, {{2, 2}, {3, 3}});
    CHECK(mean_x_psitilde(two_loops, p) == 0.0);
    const Template loop1(2, {{0, 0}});  // v2 isolated: disconnected
    CHECK(mean_x_psitilde(loop1, p) == 0.0);
    const HermiteContext ctx{p.delta, p.K};
    const auto ms = mc_statistic(p, 300000, 44, [&](const Instance& inst) {
        return functional_x(inst) * eval_psitilde(build_gstar(1, 1), inst.Y, ctx).value;
    });
    CHECK(std::abs(ms.mean - 0.5) <= 4.0 * ms.se);
}

TEST_CASE("homogeneity in delta") {
    for (const Template& t : {kDoubleEdge, kQuadEdge, build_gstar(1, 1)}) {
        const MomentParams p1{8, 2, 2, 1.3};
        const MomentParams p2{8, 2, 2, 2.6};
        const double scale = ipow(2.0, 2 * t.num_edges());
        CHECK(mean_psibar(t, p2) == Catch::Approx(scale * mean_psibar(t, p1)));
        CHECK(mean_x_psibar(t, p2) == Catch::Approx(scale * mean_x_psibar(t, p1)));
    }
}

TEST_CASE("cross moment of two single edges (even merged degrees)") {
    const MomentParams p{6, 3, 2, 1.1};
    const double want = ipow(p.delta, 4) / p.K + 2.0 * p.delta * p.delta + p.d;
    const double got =
        cross_moment_labeled(kSingleEdge, {0, 1}, kSingleEdge, {0, 1}, p);
    CHECK(got == Catch::Approx(want));
    const HermiteContext ctx{p.delta, p.K};
    const auto ms = mc_statistic(p, 300000, 45, [&](const Instance& inst) {
        const double v = inst.Y.row(0).dot(inst.Y.row(1));
        return v * v;
    });
    CHECK(std::abs(ms.mean - got) <= 4.0 * ms.se);
    (void)ctx;
}

TEST_CASE("cross moment odd x even is exactly zero") {
    const MomentParams p{6, 2, 2, 1.0};
    CHECK(cross_moment_labeled(kSingleEdge, {0, 1}, kDoubleEdge, {0, 1}, p) == 0.0);
    const HermiteContext ctx{p.delta, p.K};
    const auto ms = mc_statistic(p, 300000, 46, [&](const Instance& inst) {
        return eval_psibar_labeled(kSingleEdge, {0, 1}, inst.Y, ctx) *
               eval_psibar_labeled(kDoubleEdge, {0, 1}, inst.Y, ctx);
    });
    CHECK(std::abs(ms.mean) <= 4.0 * ms.se);
}

TEST_CASE("cross moment of the double edge with itself matches MC") {
    const MomentParams p{6, 2, 2, 1.0};
    const double closed =
        cross_moment_labeled(kDoubleEdge, {0, 1}, kDoubleEdge, {0, 1}, p);
    // |V| = 2: the full second moment is the single-labeling cross moment
    CHECK(second_moment_psibar(kDoubleEdge, p) == Catch::Approx(closed));
    const HermiteContext ctx{p.delta, p.K};
    const auto ms = mc_statistic(p, 400000, 47, [&](const Instance& inst) {
        const double v = eval_psibar_labeled(kDoubleEdge, {0, 1}, inst.Y, ctx);
        return v * v;
    });
    CHECK(std::abs(ms.mean - closed) <= 4.0 * ms.se);
}

TEST_CASE("interior degree-2 templates are routed to the envelope") {
    const MomentParams p{6, 2, 2, 1.0};
    CHECK_THROWS_AS(cross_moment_labeled(kPath, {0, 1, 2}, kPath, {0, 1, 2}, p),
                    UnsupportedTemplate);
    const auto env = cross_moment_envelope_labeled(kPath, {0, 1, 2}, kPath, {0, 1, 2}, p);
    CHECK(env.lower() <= env.upper());
    // MC value must live inside the envelope (3 se tolerance)
    const HermiteContext ctx{p.delta, p.K};
    const auto ms = mc_statistic(p, 300000, 48, [&](const Instance& inst) {
        const double v = eval_psibar_labeled(kPath, {0, 1, 2}, inst.Y, ctx);
        return v * v;
    });
    CHECK(ms.mean >= env.lower() - 3 * ms.se);
    CHECK(ms.mean <= env.upper() + 3 * ms.se);
}

TEST_CASE("second moment of the quadruple edge") {
    const MomentParams p{6, 2, 2, 1.0};
    const double closed = second_moment_psibar(kQuadEdge, p);
    const HermiteContext ctx{p.delta, p.K};
    const auto ms = mc_statistic(p, 600000, 49, [&](const Instance& inst) {
        const double v = eval_psibar(kQuadEdge, inst.Y, ctx).value;
        return v * v;
    });
    CHECK(std::abs(ms.mean - closed) <= 4.0 * ms.se);

    SECTION("delta = 0 reduces to the full-pairing noise sum") {
        const MomentParams p0{6, 2, 2, 0.0};
        const double closed0 = second_moment_psibar(kQuadEdge, p0);
        const auto ms0 = mc_statistic(p0, 600000, 50, [&](const Instance& inst) {
            const double v = eval_psibar(kQuadEdge, inst.Y, ctx).value;
            return v * v;
        });
        CHECK(std::abs(ms0.mean - closed0) <= 4.0 * ms0.se);
    }
}

TEST_CASE("second moment guards") {
    const MomentParams p{12, 2, 2, 1.0};
    CHECK_THROWS_AS(second_moment_psibar(build_gstar(2, 3), p), CapacityError);
    CHECK_THROWS_AS(second_moment_psibar(kSingleEdge, p), UnsupportedTemplate);
    CHECK_THROWS_AS(second_moment_psibar(kPath, p), UnsupportedTemplate);
}

TEST_CASE("conditional variances of gstar(1,1)") {
    const MomentParams p{8, 2, 2, 1.5};
    const auto cv = conditional_variances_gstar(1, 1, p);
    CHECK(cv.var0 <= cv.var1);

    // Lemma consistency: E[psi^2] = E_x E[psi^2 | x]
    const double unconditional = second_moment_psibar(build_gstar(1, 1), p);
    CHECK(unconditional ==
          Catch::Approx(cv.second_moment1 / p.K +
                        cv.second_moment0 * (1.0 - 1.0 / p.K)).epsilon(1e-10));

    const ModelParams mp{p.n, p.d, p.K, p.delta};
    const HermiteContext ctx{p.delta, p.K};
    const Template g = build_gstar(1, 1);

    const auto m1 = parallel_mean_se(400000, 2, [&](std::int64_t i) {
        const auto inst =
            sample_instance_conditioned(mp, 1, mix_seed(51, static_cast<std::uint64_t>(i)));
        return eval_psibar(g, inst.Y, ctx).value;
    });
    CHECK(std::abs(m1.mean - cv.mean1) <= 4.0 * m1.se);

    const auto sm1 = parallel_mean_se(400000, 2, [&](std::int64_t i) {
        const auto inst =
            sample_instance_conditioned(mp, 1, mix_seed(52, static_cast<std::uint64_t>(i)));
        const double v = eval_psibar(g, inst.Y, ctx).value;
        return v * v;
    });
    CHECK(std::abs(sm1.mean - cv.second_moment1) <= 4.0 * sm1.se);

    const auto sm0 = parallel_mean_se(400000, 2, [&](std::int64_t i) {
        const auto inst =
            sample_instance_conditioned(mp, 0, mix_seed(53, static_cast<std::uint64_t>(i)));
        const double v = eval_psibar(g, inst.Y, ctx).value;
        return v * v;
    });
    CHECK(std::abs(sm0.mean - cv.second_moment0) <= 4.0 * sm0.se);
}

TEST_CASE("gstar(2,1) conditional moments mix to the unconditional one") {
    // exact enumeration identity, no Monte Carlo: E[psi^2] = E_x E[psi^2|x]
    const MomentParams p{10, 2, 2, 2.5};
    const auto cv = conditional_variances_gstar(2, 1, p);
    const double unconditional = second_moment_psibar(build_gstar(2, 1), p);
    CHECK(unconditional ==
          Catch::Approx(cv.second_moment1 / p.K +
                        cv.second_moment0 * (1.0 - 1.0 / p.K)).epsilon(1e-10));
    CHECK(cv.var0 <= cv.var1);
    // the conditional mean is the closed form of Lemma-style expectations
    CHECK(cv.mean1 == Catch::Approx(mean_x_psibar(build_gstar(2, 1), p) * p.K));
}

TEST_CASE("conditional variances coincide at delta = 0") {
    const MomentParams p{8, 2, 2, 0.0};
    const auto cv = conditional_variances_gstar(1, 1, p);
    CHECK(cv.mean1 == 0.0);
    CHECK(cv.var0 == Catch::Approx(cv.var1));
}

TEST_CASE("conditional variance guards") {
    const MomentParams p{20, 2, 2, 1.0};
    CHECK_THROWS_AS(conditional_variances_gstar(2, 3, p), CapacityError);
    CHECK_THROWS_AS(conditional_variances_gstar(1, 3, p), CapacityError);  // work estimate
    const MomentParams bad{8, 3, 2, 1.0};
    CHECK_THROWS_AS(conditional_variances_gstar(1, 1, bad), std::invalid_argument);
}

TEST_CASE("base-matching slice of the gstar variance matches the binomial formula") {
    // With only (v1,v1),(v2,v2) matched, pairings factor into the two nodes:
    // sum over sizes m1, m2 of C(M+1,m)^2 m! products with the appropriate
    // delta and K exponents.
    for (auto [L, M] : std::vector<std::pair<int, int>>{{1, 1}, {2, 1}}) {
        const MomentParams p{10, 2, 2, 1.25};
        const Template g = build_gstar(L, M);
        Matching m0;
        m0.pairs = {{0, 0}, {1, 1}};

        KahanSum enumerated;
        for_each_pairing(g, g, m0, [&](const Pairing& pr) {
            if (pr.empty()) return;
            const auto s = prune(g, g, m0, pr);
            enumerated.add(falling_factorial(p.n - 2, s.v_delta_size - 2) *
                           ipow(p.delta, 2 * s.e_delta_size) *
                           ipow(static_cast<double>(p.d), s.n_cyc) /
                           ipow(static_cast<double>(p.K),
                                s.v_delta_size - s.n_cc - (s.v1_sim_v2 ? 1 : 0)));
        });

        KahanSum formula;
        const int V = g.num_nodes(), E = g.num_edges();
        for (int m1 = 0; m1 <= M + 1; ++m1)
            for (int m2 = 0; m2 <= M + 1; ++m2) {
                if (m1 + m2 == 0) continue;
                const double combo =
                    static_cast<double>(binomial(M + 1, m1) * binomial(M + 1, m1) *
                                        factorial_u64(m1)) *
                    static_cast<double>(binomial(M + 1, m2) * binomial(M + 1, m2) *
                                        factorial_u64(m2));
                const int kexp = 2 * (V - 2) - (m1 + m2 == 2 * (M + 1) ? 1 : 0);
                formula.add(combo * falling_factorial(p.n - 2, 2 * V - 4) *
                            ipow(p.delta, 4 * E - 2 * (m1 + m2)) /
                            ipow(static_cast<double>(p.K), kexp));
            }
        INFO("L=" << L << " M=" << M);
        CHECK(enumerated.value() == Catch::Approx(formula.value()).epsilon(1e-12));
    }
}

TEST_CASE("variance proxy") {
    CHECK(variance_proxy(kDoubleEdge, MomentParams{6, 2, 2, 1.0}) == Catch::Approx(8.0));
    CHECK(variance_proxy(Template::edgeless(), MomentParams{6, 2, 2, 1.0}) ==
          Catch::Approx(1.0));
    CHECK(variance_proxy(Template(2, {{0, 0}}), MomentParams{5, 3, 2, 1.0}) ==
          Catch::Approx(6.0));
}

TEST_CASE("variance ratio bound arithmetic") {
    SECTION("paper-scale point passes below 1/16 with all flags set") {
        const int M = 25, L = 24;  // M: smallest odd >= 24
        // n must clear 64 [4 M^2 L^2 v 10^4 (M+2)^4] K ~ 2.9e14
        const double n = 3.5e14, K = 1e3;
        // delta^2 sitting exactly at the displayed separation condition
        const double Mp1 = M + 1.0, Mp2 = M + 2.0;
        const double sep = std::max(
            {std::pow(40.0 * Mp2 * std::pow(K, 1.0 + 0.5 / Mp1 + 1.0 / L) /
                          std::pow(n, 0.25),
                      Mp1 / M),
             8.0 * std::pow(Mp1, 6.0) * std::pow(K, 6.0 / Mp1),
             128.0 * std::pow(Mp1, 12.0)});
        const auto b = variance_ratio_bound(L, M, n, K, std::sqrt(sep));
        CHECK(b.m_at_least_24);
        CHECK(b.n_condition);
        CHECK(b.delta_condition);
        CHECK(b.value <= 1.0 / 16.0);
    }
    SECTION("delta to infinity leaves only the K/n arms") {
        const int L = 3, M = 25;
        const auto b = variance_ratio_bound(L, M, 1e6, 100.0, 1e8);
        const double limit = 1e4 * std::pow(27.0, 4.0) * 100.0 / 1e6 +
                             4.0 * M * M * L * L * 100.0 / 1e6;
        CHECK(b.value == Catch::Approx(limit).epsilon(1e-6));
    }
    SECTION("flags report precondition failures without blocking the value") {
        const auto b = variance_ratio_bound(2, 3, 100.0, 4.0, 0.5);
        CHECK_FALSE(b.m_at_least_24);
        CHECK_FALSE(b.delta_condition);
        CHECK(b.value > 0.0);
    }
}

TEST_CASE("combinatorial inequalities hold on small even pairs") {
    const auto even = enumerate_templates(2, true);
    for (const auto& t1 : even)
        for (const auto& t2 : even) {
            const auto rep = check_combinatorial_inequalities(t1, t2);
            INFO(t1.to_text() << "--\n" << t2.to_text());
            for (const auto& e : rep.examples) INFO(e);
            CHECK(rep.total_violations() == 0);
        }
}

TEST_CASE("B is nonnegative even on odd-degree pairs") {
    const auto all = enumerate_templates(2, false);
    for (const auto& t1 : all)
        for (const auto& t2 : all) {
            const auto rep = check_combinatorial_inequalities(t1, t2);
            CHECK(rep.b_nonneg_violations == 0);
        }
}

TEST_CASE("perfect pairing corner: b0 = 0 and C = 0") {
    // double edge against itself, everything matched and perfectly paired
    Matching m;
    m.pairs = {{0, 0}, {1, 1}};
    const Pairing perfect{{0, 0}, {1, 1}, {2, 2}, {3, 3}};
    const auto s = prune(kDoubleEdge, kDoubleEdge, m, perfect);
    const int b0 = 2 + 2 - 2 * m.size();
    const int C = 2 + 2 - (2 * 2 + 2 * 2 - 3 * m.size() - s.n_m_full) -
                  static_cast<int>(perfect.size());
    CHECK(b0 == 0);
    CHECK(C == 0);
    // empty pairing with the minimal matching: B = 0
    const auto s0 = prune(kDoubleEdge, kDoubleEdge, m, {});
    CHECK(0 - 2 * s0.n_cyc - 2 * s0.n_op_even - s0.n_op_odd == 0);
}

TEST_CASE("moment report verdicts") {
    MeanSe good{1.0001, 0.0005, 1000};
    CHECK(make_moment_report("x", 1.0, good).verdict == "pass");
    MeanSe vague{1.3, 0.5, 10};
    CHECK(make_moment_report("x", 1.0, vague).verdict == "inconclusive");
    MeanSe off{2.0, 0.01, 1000};
    CHECK(make_moment_report("x", 1.0, off).verdict == "fail");
}
