// Copyright (c) 2026 the simvae authors
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "simvae/rng.hpp"
#include "simvae/ssl_model.hpp"
#include "test_util.hpp"

using namespace simvae;
using Catch::Approx;

TEST_CASE("gaussian_log_pdf: standard normal at mode and hand cases") {
    REQUIRE(gaussian_log_pdf({0.0}, {0.0}, 1.0) ==
            Approx(-0.5 * std::log(2.0 * std::numbers::pi)).epsilon(1e-12));
    REQUIRE(gaussian_log_pdf({0.0}, {0.0}, 1.0) == Approx(-0.918939).margin(1e-6));

    // x = mu: only the normalization survives.
    std::vector<double> var{0.5, 2.0, 0.02};
    double expected = 0.0;
    for (double v : var) expected += -0.5 * std::log(2.0 * std::numbers::pi * v);
    REQUIRE(gaussian_log_pdf({1, 2, 3}, {1, 2, 3}, var) == Approx(expected).epsilon(1e-12));

    // x=1, mu=0, var=0.02: -1/0.04 - log(2*pi*0.02)/2.
    const double hand = -0.5 * std::log(2.0 * std::numbers::pi * 0.02) - 1.0 / 0.04;
    REQUIRE(gaussian_log_pdf({1.0}, {0.0}, 0.02) == Approx(hand).epsilon(1e-12));
    REQUIRE(gaussian_log_pdf({1.0}, {0.0}, 0.02) ==
            Approx(-25.0 - 0.5 * std::log(0.125663706)).margin(1e-6));

    REQUIRE_THROWS_AS(gaussian_log_pdf({0.0}, {0.0}, 0.0), DomainError);
    REQUIRE_THROWS_AS(gaussian_log_pdf({0.0}, {0.0}, -1.0), DomainError);
}

TEST_CASE("posterior_entropy: unit case, scaling law, MC oracle") {
    const double unit = posterior_entropy(std::vector<double>(10, 0.0));
    REQUIRE(unit == Approx(5.0 * (1.0 + std::log(2.0 * std::numbers::pi))).epsilon(1e-12));
    REQUIRE(unit == Approx(14.18939).margin(1e-5));

    // Doubling all variances adds (d/2) log 2.
    std::vector<double> lv{0.3, -0.7, 1.1, 0.0};
    std::vector<double> lv2 = lv;
    for (auto& v : lv2) v += std::log(2.0);
    REQUIRE(posterior_entropy(lv2) - posterior_entropy(lv) ==
            Approx(2.0 * std::log(2.0)).epsilon(1e-12));

    // Monte-Carlo: H = -E[log q(z)] over draws from q.
    Rng rng(404);
    std::vector<double> mu{0.4, -1.2, 2.0};
    std::vector<double> logvar{0.5, -0.3, 1.4};
    std::vector<double> var(3);
    for (int d = 0; d < 3; ++d) var[d] = std::exp(logvar[d]);
    const int n = 200000;
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        std::vector<double> z(3);
        for (int d = 0; d < 3; ++d) z[d] = mu[d] + std::sqrt(var[d]) * rng.normal();
        acc += -gaussian_log_pdf(z, mu, var);
    }
    REQUIRE(acc / n == Approx(posterior_entropy(logvar)).epsilon(0.01));
}

TEST_CASE("kl_to_standard_normal: zero case, mean shift, MC oracle") {
    REQUIRE(kl_to_standard_normal({0, 0, 0}, {0, 0, 0}) == 0.0);
    REQUIRE(kl_to_standard_normal({1, 0, 0}, {0, 0, 0}) == Approx(0.5).epsilon(1e-12));

    Rng rng(505);
    std::vector<double> mu{0.8, -0.5};
    std::vector<double> logvar{-0.4, 0.6};
    std::vector<double> var{std::exp(-0.4), std::exp(0.6)};
    const int n = 400000;
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        std::vector<double> z(2);
        for (int d = 0; d < 2; ++d) z[d] = mu[d] + std::sqrt(var[d]) * rng.normal();
        acc += gaussian_log_pdf(z, mu, var) - gaussian_log_pdf(z, {0.0, 0.0}, 1.0);
    }
    REQUIRE(acc / n == Approx(kl_to_standard_normal(mu, logvar)).epsilon(0.01));
}

TEST_CASE("log_prior_uniform_psi: hand case, invariances, non-positivity") {
    // J=2, z1=(1,0), z2=(0,1), sigma2=0.15: sum ||z-zbar||^2 = 1.
    ZSet pair({{1.0, 0.0}, {0.0, 1.0}});
    REQUIRE(log_prior_uniform_psi(pair, 0.15) == Approx(-1.0 / 0.3).epsilon(1e-12));
    REQUIRE(log_prior_uniform_psi(pair, 0.15) == Approx(-3.3333).margin(1e-4));

    ZSet same({{0.3, -0.2}, {0.3, -0.2}, {0.3, -0.2}});
    REQUIRE(log_prior_uniform_psi(same, 0.15) == Approx(0.0).margin(1e-30));
    ZSet single({{5.0, 5.0}});
    REQUIRE(log_prior_uniform_psi(single, 0.15) == 0.0);

    // Translation invariance.
    ZSet shifted({{1.0 + 7.5, 0.0 - 2.0}, {0.0 + 7.5, 1.0 - 2.0}});
    REQUIRE(log_prior_uniform_psi(shifted, 0.15) ==
            Approx(log_prior_uniform_psi(pair, 0.15)).epsilon(1e-12));

    // Non-positive; zero only when all members coincide. Permutation invariant.
    Rng rng(6);
    for (int trial = 0; trial < 20; ++trial) {
        auto zs = testutil::random_zset(4, 3, 1.0, rng);
        const double v = log_prior_uniform_psi(zs, 0.15);
        REQUIRE(v < 0.0);
        auto perm = zs.members;
        std::rotate(perm.begin(), perm.begin() + 1, perm.end());
        std::swap(perm[0], perm[2]);
        REQUIRE(log_prior_uniform_psi(ZSet(perm), 0.15) == Approx(v).epsilon(1e-12));
    }
    REQUIRE_THROWS_AS(log_prior_uniform_psi(pair, 0.0), DomainError);
}

TEST_CASE("log_prior_gaussian_psi: uniform limit and J=1 shrinkage") {
    Rng rng(7);
    for (int trial = 0; trial < 10; ++trial) {
        auto a = testutil::random_zset(3, 2, 1.0, rng);
        auto b = testutil::random_zset(3, 2, 1.0, rng);
        // Difference of values cancels the additive constant in both forms.
        const double gauss_diff = log_prior_gaussian_psi(a, 0.15, 1e12) -
                                  log_prior_gaussian_psi(b, 0.15, 1e12);
        const double unif_diff =
            log_prior_uniform_psi(a, 0.15) - log_prior_uniform_psi(b, 0.15);
        REQUIRE(gauss_diff == Approx(unif_diff).margin(1e-6));
    }

    // J=1 reduces to shrinkage toward the origin.
    ZSet single({{0.6, -0.8, 0.2}});
    const double sigma2 = 0.15, gamma2 = 0.5;
    const double shrink = 1.0 - 1.0 / (sigma2 / gamma2 + 1.0);
    double norm_sq = 0.6 * 0.6 + 0.8 * 0.8 + 0.2 * 0.2;
    REQUIRE(log_prior_gaussian_psi(single, sigma2, gamma2) ==
            Approx(-shrink * norm_sq / (2.0 * sigma2)).epsilon(1e-12));

    REQUIRE_THROWS_AS(log_prior_gaussian_psi(single, -0.1, 1.0), DomainError);
    REQUIRE_THROWS_AS(log_prior_gaussian_psi(single, 0.15, 0.0), DomainError);
}

TEST_CASE("log_prior_gaussian_psi: Monte-Carlo center-integration oracle") {
    // d=2, J=3: differences of log-densities between ZSets, constants cancel.
    const double sigma2 = 0.15, gamma2 = 1.0;
    Rng rng(808);
    auto psi = testutil::sample_centers(200000, 2, gamma2, rng);
    for (int trial = 0; trial < 5; ++trial) {
        auto a = testutil::random_zset(3, 2, 0.8, rng);
        auto b = testutil::random_zset(3, 2, 0.8, rng);
        const double analytic = log_prior_gaussian_psi(a, sigma2, gamma2) -
                                log_prior_gaussian_psi(b, sigma2, gamma2);
        const double mc = testutil::mc_log_prior(a, sigma2, psi) -
                          testutil::mc_log_prior(b, sigma2, psi);
        REQUIRE(analytic == Approx(mc).margin(0.1));
    }
}

TEST_CASE("log_prior_dot_form: unit-norm agreement with the integrated form") {
    const double sigma2 = 0.15, gamma2 = 2.0;

    // Orthogonal unit vectors: all cross terms vanish.
    ZSet ortho({{1.0, 0.0}, {0.0, 1.0}});
    REQUIRE(log_prior_dot_form(ortho, sigma2, gamma2) == 0.0);

    // Identical unit vectors, J=2: |value| = 2/(2 sigma2 (sigma2/gamma2+2)),
    // and the prior is maximal there, consistent with the integrated form.
    ZSet same({{1.0, 0.0}, {1.0, 0.0}});
    const double magnitude = 2.0 / (2.0 * sigma2 * (sigma2 / gamma2 + 2.0));
    REQUIRE(std::abs(log_prior_dot_form(same, sigma2, gamma2)) ==
            Approx(magnitude).epsilon(1e-12));
    REQUIRE(log_prior_gaussian_psi(same, sigma2, gamma2) >
            log_prior_gaussian_psi(ortho, sigma2, gamma2));
    REQUIRE(log_prior_dot_form(same, sigma2, gamma2) >
            log_prior_dot_form(ortho, sigma2, gamma2));

    // Difference with the integrated form is constant across random unit sets.
    Rng rng(9);
    std::vector<double> diffs;
    for (int trial = 0; trial < 30; ++trial) {
        auto zs = testutil::random_unit_zset(4, 3, rng);
        diffs.push_back(log_prior_dot_form(zs, sigma2, gamma2) -
                        log_prior_gaussian_psi(zs, sigma2, gamma2));
    }
    double mean = 0.0;
    for (double d : diffs) mean += d;
    mean /= static_cast<double>(diffs.size());
    double var = 0.0;
    for (double d : diffs) var += (d - mean) * (d - mean);
    var /= static_cast<double>(diffs.size());
    REQUIRE(var < 1e-10);

    ZSet not_unit({{2.0, 0.0}, {0.0, 1.0}});
    REQUIRE_THROWS_AS(log_prior_dot_form(not_unit, sigma2, gamma2), PreconditionError);
}

TEST_CASE("prior forms: permutation invariance holds for all three") {
    Rng rng(10);
    auto zs = testutil::random_unit_zset(5, 4, rng);
    auto perm = zs.members;
    std::reverse(perm.begin(), perm.end());
    ZSet rzs(perm);
    REQUIRE(log_prior_uniform_psi(rzs, 0.2) ==
            Approx(log_prior_uniform_psi(zs, 0.2)).epsilon(1e-12));
    REQUIRE(log_prior_gaussian_psi(rzs, 0.2, 3.0) ==
            Approx(log_prior_gaussian_psi(zs, 0.2, 3.0)).epsilon(1e-12));
    REQUIRE(log_prior_dot_form(rzs, 0.2, 3.0) ==
            Approx(log_prior_dot_form(zs, 0.2, 3.0)).epsilon(1e-12));
}
