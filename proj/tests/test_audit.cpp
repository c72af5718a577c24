#include <catch_amalgamated.hpp>

#include "graphmix/audit.hpp"

using namespace graphmix;

TEST_CASE("eigen bracket") {
    SECTION("identity input") {
        const auto br = eigen_bracket(Eigen::MatrixXd::Identity(4, 4));
        CHECK(br.min_eig_lb == 1.0);
        CHECK(br.max_eig_ub == 1.0);
    }
    SECTION("off-diagonal mass widens the bracket") {
        Eigen::MatrixXd g = Eigen::MatrixXd::Identity(3, 3);
        g(0, 1) = g(1, 0) = 0.25;
        g(2, 2) = 0.9;
        const auto br = eigen_bracket(g);
        CHECK(br.max_row_sum == Catch::Approx(0.25));
        CHECK(br.min_eig_lb == Catch::Approx(0.75));
        CHECK(br.max_eig_ub == Catch::Approx(1.25));
    }
}

TEST_CASE("gram matrix at delta = 0 is the identity within MC error") {
    // pure noise: multivariate Hermite orthonormality
    const auto even = enumerate_templates(1, true);  // 4 templates, cheap
    const MomentParams p{12, 3, 3, 0.0};
    const auto est = gram_matrix(even, p, 4000, 123);
    for (int a = 0; a < est.gram.rows(); ++a)
        for (int b = 0; b < est.gram.cols(); ++b) {
            const double want = a == b ? 1.0 : 0.0;
            INFO("entry " << a << "," << b);
            CHECK(std::abs(est.gram(a, b) - want) <=
                  4.0 * est.se(a, b) + (a == b && est.se(a, b) == 0.0 ? 1e-12 : 0.0));
        }
}

TEST_CASE("edgeless row of the gram matrix is a basis vector") {
    const auto even = enumerate_templates(1, true);
    int e = -1;
    for (std::size_t i = 0; i < even.size(); ++i)
        if (even[i].num_edges() == 0) e = static_cast<int>(i);
    REQUIRE(e >= 0);
    const MomentParams p{12, 2, 2, 0.8};
    const auto est = gram_matrix(even, p, 4000, 124);
    CHECK(est.gram(e, e) == Catch::Approx(1.0));  // psitilde = 1 exactly
    CHECK(est.se(e, e) == 0.0);
    for (int b = 0; b < est.gram.cols(); ++b) {
        if (b == e) continue;
        CHECK(std::abs(est.gram(e, b)) <= 4.0 * est.se(e, b));
    }
}

TEST_CASE("odd against even cross moments vanish") {
    // MC check of the odd/even covariance kill through the gram machinery
    const Template odd(2, {{0, 1}});
    const Template even_loop(2, {{0, 0}});
    const MomentParams p{10, 2, 2, 1.0};
    const auto est = gram_matrix({odd, even_loop}, p, 30000, 125);
    CHECK(std::abs(est.gram(0, 1)) <= 4.0 * est.se(0, 1));
}

TEST_CASE("corr contributions") {
    const MomentParams p{40, 4, 4, 0.7};
    const auto family = enumerate_templates(2, true);
    const auto contribs = corr_contributions(family, p);
    REQUIRE(contribs.size() == family.size());

    KahanSum total;
    bool found_edgeless = false;
    for (const auto& c : contribs) {
        total.add(c.contribution);
        if (c.tmpl.num_edges() == 0) {
            found_edgeless = true;
            CHECK(c.contribution == Catch::Approx(1.0 / (p.K * p.K)));
        }
        if (c.tmpl.num_components() > 1 && c.tmpl.num_edges() > 0)
            CHECK(c.contribution == 0.0);
    }
    CHECK(found_edgeless);

    SECTION("connected interior-deg-4 contributions decrease in K") {
        const Template quad(2, {{0, 1}, {0, 1}, {0, 1}, {0, 1}});
        double prev = std::numeric_limits<double>::infinity();
        for (int K : {2, 4, 8}) {
            const MomentParams q{40, K, K, 0.7};
            const auto one = corr_contributions({quad}, q);
            CHECK(one[0].contribution < prev);
            prev = one[0].contribution;
        }
    }
}
