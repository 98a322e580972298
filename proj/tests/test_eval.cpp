// Copyright (c) 2026 the simvae authors
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "simvae/eval.hpp"
#include "simvae/rng.hpp"

using namespace simvae;

namespace {

RepresentationTable make_table(std::int64_t d, const std::vector<std::vector<float>>& rows,
                               const std::vector<std::int64_t>& labels) {
    RepresentationTable t;
    t.n = static_cast<std::int64_t>(rows.size());
    t.d = d;
    t.y = labels;
    for (const auto& r : rows) t.z.insert(t.z.end(), r.begin(), r.end());
    t.checkpoint_id = "test";
    t.dataset_id = "test";
    return t;
}

// Isotropic Gaussian blobs, one center per class.
RepresentationTable make_blobs(const std::vector<std::vector<float>>& centers,
                               std::int64_t per_class, float noise, std::uint64_t seed) {
    const auto d = static_cast<std::int64_t>(centers.front().size());
    RepresentationTable t;
    t.d = d;
    Rng rng(seed);
    for (std::size_t c = 0; c < centers.size(); ++c)
        for (std::int64_t i = 0; i < per_class; ++i) {
            for (std::int64_t j = 0; j < d; ++j)
                t.z.push_back(centers[c][static_cast<std::size_t>(j)] +
                              noise * static_cast<float>(rng.normal()));
            t.y.push_back(static_cast<std::int64_t>(c));
            ++t.n;
        }
    t.checkpoint_id = "test";
    t.dataset_id = "blobs";
    return t;
}

// Independent brute-force kNN with the same tie rules, via full sort.
std::int64_t brute_knn_one(const RepresentationTable& train, const float* q, std::int64_t k) {
    std::vector<std::pair<double, std::int64_t>> all;
    for (std::int64_t i = 0; i < train.n; ++i) {
        double s = 0;
        for (std::int64_t j = 0; j < train.d; ++j) {
            const double diff = double(train.row(i)[j]) - double(q[j]);
            s += diff * diff;
        }
        all.emplace_back(s, i);
    }
    std::sort(all.begin(), all.end());
    std::map<std::int64_t, std::pair<std::int64_t, double>> votes;
    for (std::int64_t i = 0; i < k; ++i) {
        auto& [cnt, dsum] = votes[train.y[static_cast<std::size_t>(all[std::size_t(i)].second)]];
        ++cnt;
        dsum += all[std::size_t(i)].first;
    }
    std::int64_t best = -1, bc = -1;
    double bd = 1e300;
    for (const auto& [label, cd] : votes)
        if (cd.first > bc || (cd.first == bc && cd.second < bd)) {
            best = label;
            bc = cd.first;
            bd = cd.second;
        }
    return best;
}

} // namespace

TEST_CASE("knn_classify basics and tie rules", "[eval][knn]") {
    SECTION("nearest point wins at k=1") {
        const auto train = make_table(2, {{0, 0}, {1, 1}}, {0, 1});
        const auto test = make_table(2, {{0.1f, 0.1f}}, {0});
        CHECK(knn_classify(train, test, 1) == 1.0);
    }
    SECTION("vote tie broken by summed distance") {
        const auto train = make_table(2, {{0, 0}, {1, 1}}, {0, 1});
        const auto test = make_table(2, {{0.1f, 0.1f}}, {0});
        // k=2: one vote each; (0,0) is closer, so label 0 wins.
        CHECK(knn_classify(train, test, 2) == 1.0);
    }
    SECTION("distance tie broken by smaller label") {
        const auto train = make_table(1, {{1.0f}, {-1.0f}}, {1, 0});
        const auto test = make_table(1, {{0.0f}}, {0});
        CHECK(knn_classify(train, test, 2) == 1.0); // picks label 0
    }
    SECTION("empty tables and bad k are rejected") {
        const auto train = make_table(2, {{0, 0}, {1, 1}}, {0, 1});
        RepresentationTable empty;
        empty.d = 2;
        REQUIRE_THROWS_AS(knn_classify(train, empty, 1), PreconditionError);
        const auto test = make_table(2, {{0, 0}}, {0});
        REQUIRE_THROWS_AS(knn_classify(train, test, 0), PreconditionError);
        REQUIRE_THROWS_AS(knn_classify(train, test, 3), PreconditionError);
    }
    SECTION("agrees with a brute-force oracle on 200 random points") {
        Rng rng(404);
        RepresentationTable train;
        train.d = 3;
        for (std::int64_t i = 0; i < 200; ++i) {
            for (int j = 0; j < 3; ++j) train.z.push_back(static_cast<float>(rng.normal()));
            train.y.push_back(static_cast<std::int64_t>(rng.below(4)));
            ++train.n;
        }
        for (std::int64_t k : {1, 3, 7, 15}) {
            for (int q = 0; q < 50; ++q) {
                float query[3];
                for (auto& v : query) v = static_cast<float>(rng.normal());
                CHECK(knn_predict_one(train, query, k, KnnMetric::Euclidean) ==
                      brute_knn_one(train, query, k));
            }
        }
    }
}

TEST_CASE("knn_sweep picks the best k", "[eval][knn]") {
    const auto train = make_blobs({{0, 0}, {6, 6}}, 30, 0.5f, 1);
    const auto test = make_blobs({{0, 0}, {6, 6}}, 20, 0.5f, 2);
    SECTION("single-k range reduces to knn_classify") {
        const auto res = knn_sweep(train, test, 3, 3);
        CHECK(res.best_k == 3);
        CHECK(res.best_accuracy == knn_classify(train, test, 3));
    }
    SECTION("best accuracy dominates k=1 and separable blobs are perfect") {
        const auto res = knn_sweep(train, test);
        CHECK(res.best_accuracy >= knn_classify(train, test, 1));
        CHECK(res.best_accuracy == 1.0);
        for (const auto& [k, acc] : res.per_k)
            if (k <= 15) CHECK(acc == 1.0);
    }
    SECTION("empty range is rejected") {
        REQUIRE_THROWS_AS(knn_sweep(train, test, 5, 4), PreconditionError);
    }
}

TEST_CASE("linear probe", "[eval][probe]") {
    const auto train = make_blobs({{-3, -3, -3, -3}, {3, 3, 3, 3}}, 100, 1.0f, 7);
    const auto test = make_blobs({{-3, -3, -3, -3}, {3, 3, 3, 3}}, 100, 1.0f, 8);
    // The reference recipe (3e-4, 200 epochs) is tuned for full-scale data;
    // at 2 steps per epoch the blobs need a faster rate to converge.
    ProbeConfig cfg;
    cfg.lr = 1e-2;
    SECTION("separable blobs reach 0.99") {
        CHECK(linear_probe(train, test, cfg) >= 0.99);
    }
    SECTION("label-shuffled training stays near chance") {
        // Features carry no label signal, so training on shuffled labels
        // cannot transfer to the held-out labels.
        Rng rng(55);
        const auto noise_table = [&](std::int64_t n) {
            RepresentationTable t;
            t.n = n;
            t.d = 4;
            for (std::int64_t i = 0; i < n * t.d; ++i)
                t.z.push_back(static_cast<float>(rng.normal()));
            for (std::int64_t i = 0; i < n; ++i) t.y.push_back(i % 2);
            return t;
        };
        RepresentationTable shuffled = noise_table(200);
        const RepresentationTable held_out = noise_table(400);
        for (std::int64_t i = shuffled.n - 1; i > 0; --i) {
            const auto k = static_cast<std::int64_t>(rng.below(std::uint64_t(i + 1)));
            std::swap(shuffled.y[std::size_t(i)], shuffled.y[std::size_t(k)]);
        }
        const double acc = linear_probe(shuffled, held_out, cfg);
        CHECK(std::abs(acc - 0.5) <= 0.05);
    }
    SECTION("single-class training set is rejected") {
        RepresentationTable degenerate = train;
        std::fill(degenerate.y.begin(), degenerate.y.end(), 0);
        REQUIRE_THROWS_AS(linear_probe(degenerate, test), PreconditionError);
    }
    SECTION("deterministic given seed") {
        ProbeConfig cfg;
        cfg.epochs = 20;
        CHECK(linear_probe(train, test, cfg) == linear_probe(train, test, cfg));
    }
}

TEST_CASE("mlp probe separates what a linear probe cannot", "[eval][probe]") {
    // XOR arrangement: same label on opposite corners.
    RepresentationTable train = make_blobs({{-2, -2}, {2, 2}, {-2, 2}, {2, -2}}, 80, 0.3f, 9);
    RepresentationTable test = make_blobs({{-2, -2}, {2, 2}, {-2, 2}, {2, -2}}, 50, 0.3f, 10);
    for (auto* t : {&train, &test})
        for (auto& y : t->y) y = (y < 2) ? 0 : 1;

    ProbeConfig cfg;
    cfg.lr = 1e-3;
    cfg.epochs = 300;
    const double lin = linear_probe(train, test, cfg);
    const double mlp = mlp_probe(train, test, 32, cfg);
    CHECK(lin <= 0.6);
    CHECK(mlp >= 0.95);

    SECTION("mlp subsumes the linear probe on separable blobs") {
        const auto btrain = make_blobs({{-3, -3}, {3, 3}}, 80, 1.0f, 11);
        const auto btest = make_blobs({{-3, -3}, {3, 3}}, 50, 1.0f, 12);
        ProbeConfig quick;
        quick.lr = 1e-2;
        quick.epochs = 100;
        CHECK(mlp_probe(btrain, btest, 32, quick) >= linear_probe(btrain, btest, quick) - 0.01);
    }
}

TEST_CASE("gmm_fit", "[eval][gmm]") {
    SECTION("K=1 recovers the maximum-likelihood Gaussian") {
        Rng rng(21);
        const std::int64_t n = 60, d = 3;
        std::vector<double> x(std::size_t(n * d));
        for (auto& v : x) v = rng.normal() * 1.5 + 0.3;
        GmmOptions opt;
        opt.reg = 0.0;
        opt.n_init = 1;
        const GmmModel m = gmm_fit(x, n, d, 1, opt);

        std::vector<double> mean(std::size_t(d), 0.0);
        for (std::int64_t i = 0; i < n; ++i)
            for (std::int64_t j = 0; j < d; ++j) mean[std::size_t(j)] += x[std::size_t(i * d + j)];
        for (auto& v : mean) v /= double(n);
        for (std::int64_t j = 0; j < d; ++j)
            CHECK(m.means[std::size_t(j)] == Catch::Approx(mean[std::size_t(j)]).margin(1e-9));
        for (std::int64_t a = 0; a < d; ++a)
            for (std::int64_t b = 0; b < d; ++b) {
                double cov = 0.0;
                for (std::int64_t i = 0; i < n; ++i)
                    cov += (x[std::size_t(i * d + a)] - mean[std::size_t(a)]) *
                           (x[std::size_t(i * d + b)] - mean[std::size_t(b)]);
                cov /= double(n);
                CHECK(m.covs[std::size_t(a * d + b)] == Catch::Approx(cov).margin(1e-9));
            }
        CHECK(m.weights[0] == 1.0);
    }
    SECTION("log-likelihood trace is non-decreasing") {
        const auto blobs = make_blobs({{0, 0}, {5, 5}}, 40, 0.8f, 31);
        std::vector<double> x(blobs.z.begin(), blobs.z.end());
        GmmOptions opt;
        opt.n_init = 3;
        const GmmModel m = gmm_fit(x, blobs.n, blobs.d, 2, opt);
        REQUIRE(m.ll_trace.size() >= 2);
        for (std::size_t i = 1; i < m.ll_trace.size(); ++i)
            CHECK(m.ll_trace[i] >= m.ll_trace[i - 1] - 1e-9);
        CHECK(m.final_ll == m.ll_trace.back());
        double wsum = 0.0;
        for (double w : m.weights) wsum += w;
        CHECK(wsum == Catch::Approx(1.0).margin(1e-12));
    }
    SECTION("responsibilities match a closed-form oracle on 8 points") {
        const std::vector<double> x = {0.0, 0.1, 0.2, -0.1, -0.2, 0.0,  0.1,  0.2,
                                       10., 10.1, 9.9, 10.2, 10.1, 9.8, 10.0, 9.9};
        const std::int64_t n = 8, d = 2;
        GmmOptions opt;
        opt.n_init = 4;
        const GmmModel m = gmm_fit(x, n, d, 2, opt);
        const auto resp = gmm_responsibilities(m, x, n);

        for (std::int64_t i = 0; i < n; ++i) {
            double joint[2];
            for (std::int64_t c = 0; c < 2; ++c) {
                const double a = m.covs[std::size_t((c * d + 0) * d + 0)];
                const double b = m.covs[std::size_t((c * d + 0) * d + 1)];
                const double cdd = m.covs[std::size_t((c * d + 1) * d + 1)];
                const double det = a * cdd - b * b;
                const double dx = x[std::size_t(i * d)] - m.means[std::size_t(c * d)];
                const double dy = x[std::size_t(i * d + 1)] - m.means[std::size_t(c * d + 1)];
                const double quad = (cdd * dx * dx - 2 * b * dx * dy + a * dy * dy) / det;
                joint[c] = m.weights[std::size_t(c)] *
                           std::exp(-0.5 * quad) / (2.0 * M_PI * std::sqrt(det));
            }
            for (std::int64_t c = 0; c < 2; ++c)
                CHECK(resp[std::size_t(i * 2 + c)] ==
                      Catch::Approx(joint[c] / (joint[0] + joint[1])).margin(1e-9));
        }
    }
    SECTION("more restarts can only improve the kept likelihood") {
        const auto blobs = make_blobs({{0, 0}, {4, 0}, {0, 4}}, 25, 0.6f, 77);
        std::vector<double> x(blobs.z.begin(), blobs.z.end());
        GmmOptions few;
        few.n_init = 2;
        GmmOptions many;
        many.n_init = 8;
        CHECK(gmm_fit(x, blobs.n, blobs.d, 3, many).final_ll >=
              gmm_fit(x, blobs.n, blobs.d, 3, few).final_ll - 1e-9);
    }
    SECTION("degenerate data collapses with an error naming the component") {
        std::vector<double> x(std::size_t(10 * 2), 1.0); // all points identical
        GmmOptions opt;
        opt.reg = 0.0;
        opt.n_init = 1;
        REQUIRE_THROWS_WITH(gmm_fit(x, 10, 2, 2, opt),
                            Catch::Matchers::ContainsSubstring("component") &&
                                Catch::Matchers::ContainsSubstring("collapsed"));
    }
    SECTION("needs more points than components") {
        std::vector<double> x(std::size_t(2 * 2), 0.0);
        REQUIRE_THROWS_AS(gmm_fit(x, 2, 2, 2, {}), PreconditionError);
    }
}

TEST_CASE("nmi", "[eval][scores]") {
    CHECK(nmi({0, 0, 1, 1}, {0, 0, 1, 1}) == Catch::Approx(1.0));
    CHECK(nmi({0, 0, 1, 1}, {1, 1, 0, 0}) == Catch::Approx(1.0)); // permutation
    CHECK(nmi({0, 0, 1, 1}, {0, 1, 0, 1}) == Catch::Approx(0.0).margin(1e-12));
    CHECK(nmi({0, 0, 0, 0}, {0, 1, 2, 3}) == 0.0); // 0/0 convention
    REQUIRE_THROWS_AS(nmi({0, 1}, {0, 1, 2}), DimensionError);

    SECTION("invariant to relabeling") {
        Rng rng(3);
        std::vector<std::int64_t> a, b;
        for (int i = 0; i < 40; ++i) {
            a.push_back(static_cast<std::int64_t>(rng.below(4)));
            b.push_back(static_cast<std::int64_t>(rng.below(3)));
        }
        std::vector<std::int64_t> perm = {2, 0, 3, 1};
        std::vector<std::int64_t> a2;
        for (auto v : a) a2.push_back(perm[std::size_t(v)]);
        CHECK(nmi(a, b) == Catch::Approx(nmi(a2, b)).margin(1e-12));
    }
}

TEST_CASE("ari", "[eval][scores]") {
    CHECK(ari({0, 0, 1, 1}, {0, 0, 1, 1}) == Catch::Approx(1.0));
    CHECK(ari({0, 0, 1, 1}, {0, 1, 0, 1}) == Catch::Approx(-0.5));
    REQUIRE_THROWS_AS(ari({0, 1}, {0, 1, 2}), DimensionError);

    SECTION("matches a brute-force pair-counting oracle on random labelings") {
        Rng rng(99);
        for (int trial = 0; trial < 50; ++trial) {
            const auto len = 4 + rng.below(7); // 4..10
            std::vector<std::int64_t> a, b;
            for (std::uint64_t i = 0; i < len; ++i) {
                a.push_back(static_cast<std::int64_t>(rng.below(3)));
                b.push_back(static_cast<std::int64_t>(rng.below(3)));
            }
            double both = 0, same_a = 0, same_b = 0, total = 0;
            for (std::size_t i = 0; i < a.size(); ++i)
                for (std::size_t j = i + 1; j < a.size(); ++j) {
                    ++total;
                    if (a[i] == a[j]) ++same_a;
                    if (b[i] == b[j]) ++same_b;
                    if (a[i] == a[j] && b[i] == b[j]) ++both;
                }
            const double expected = same_a * same_b / total;
            const double maximum = 0.5 * (same_a + same_b);
            const double oracle =
                maximum == expected ? 1.0 : (both - expected) / (maximum - expected);
            CHECK(ari(a, b) == Catch::Approx(oracle).margin(1e-12));
        }
    }
}

TEST_CASE("style_probe", "[eval][style]") {
    Rng rng(41);
    RepresentationTable t;
    t.n = 200;
    t.d = 4;
    t.s = 2;
    for (std::int64_t i = 0; i < t.n * t.d; ++i) t.z.push_back(static_cast<float>(rng.normal()));
    t.y.assign(std::size_t(t.n), 0);
    // style 0: fixed linear function of z; style 1: independent noise
    for (std::int64_t i = 0; i < t.n; ++i) {
        const float* z = t.z.data() + i * t.d;
        t.style.push_back(2.0f * z[0] - z[2] + 0.5f);
        t.style.push_back(static_cast<float>(rng.normal()));
    }

    SECTION("realizable target gives R^2 = 1, noise stays near 0") {
        const auto r2 = style_probe(t, 1e-10);
        REQUIRE(r2.size() == 2);
        CHECK(r2[0] == Catch::Approx(1.0).margin(1e-6));
        CHECK(r2[1] <= 0.05);
    }
    SECTION("deterministic and scale invariant") {
        const auto a = style_probe(t, 1e-8);
        const auto b = style_probe(t, 1e-8);
        CHECK(a == b);
        RepresentationTable scaled = t;
        for (std::int64_t i = 0; i < t.n; ++i) {
            scaled.style[std::size_t(i * 2)] = 7.0f * t.style[std::size_t(i * 2)] - 3.0f;
            scaled.style[std::size_t(i * 2 + 1)] = -0.1f * t.style[std::size_t(i * 2 + 1)];
        }
        const auto c = style_probe(scaled, 1e-8);
        CHECK(c[0] == Catch::Approx(a[0]).margin(1e-5));
        CHECK(c[1] == Catch::Approx(a[1]).margin(1e-5));
    }
    SECTION("singular Gram with lambda = 0 is an error") {
        RepresentationTable degenerate = t;
        for (std::int64_t i = 0; i < t.n; ++i) degenerate.z[std::size_t(i * t.d + 3)] = 0.0f;
        REQUIRE_THROWS_AS(style_probe(degenerate, 0.0), NumericError);
    }
    SECTION("empty style matrix is rejected") {
        RepresentationTable bare = t;
        bare.s = 0;
        bare.style.clear();
        REQUIRE_THROWS_AS(style_probe(bare), PreconditionError);
    }
}

TEST_CASE("reconstruction_mse", "[eval]") {
    const std::vector<float> x = {0.1f, 0.4f, 0.9f, 0.0f};
    CHECK(reconstruction_mse(x, x) == 0.0);
    std::vector<float> shifted = x;
    for (auto& v : shifted) v += 0.1f;
    CHECK(reconstruction_mse(x, shifted) == Catch::Approx(0.01).margin(1e-9));
    CHECK(reconstruction_mse(x, shifted) == Catch::Approx(reconstruction_mse(shifted, x)));
    REQUIRE_THROWS_AS(reconstruction_mse(x, {0.1f}), DimensionError);
}

TEST_CASE("frozen decoder training", "[eval][decoder]") {
    // Representations are an invertible linear image of the data, so a
    // linear decoder can reach (near) zero error.
    Rng rng(61);
    const std::int64_t n = 256, d = 3;
    std::vector<float> x(std::size_t(n * d));
    for (auto& v : x) v = static_cast<float>(rng.normal());
    const float a[9] = {1.2f, 0.3f, -0.4f, -0.2f, 0.9f, 0.5f, 0.1f, -0.6f, 1.1f};
    RepresentationTable t;
    t.n = n;
    t.d = d;
    t.y.assign(std::size_t(n), 0);
    t.z.resize(std::size_t(n * d));
    for (std::int64_t i = 0; i < n; ++i)
        for (std::int64_t j = 0; j < d; ++j) {
            float s = 0;
            for (std::int64_t k = 0; k < d; ++k)
                s += x[std::size_t(i * d + k)] * a[std::size_t(k * d + j)];
            t.z[std::size_t(i * d + j)] = s;
        }

    const FrozenDecoder dec = frozen_decoder_train(t, x, d, {}, 1e-2, 300, 64, 5);
    CHECK(dec.mean_mse < 1e-3);

    SECTION("train MSE is non-increasing under a moving average") {
        REQUIRE(dec.train_mse_trace.size() >= 10);
        const auto avg = [&](std::size_t from) {
            double s = 0;
            for (std::size_t i = from; i < from + 5; ++i) s += dec.train_mse_trace[i];
            return s / 5.0;
        };
        for (std::size_t i = 0; i + 10 < dec.train_mse_trace.size(); ++i)
            CHECK(avg(i + 5) <= avg(i) * 1.01);
    }
    SECTION("decode_frozen evaluates the trained decoder") {
        const auto rec = decode_frozen(dec, t.z, n);
        CHECK(reconstruction_mse(x, rec) == Catch::Approx(dec.mean_mse).margin(1e-9));
    }
}

TEST_CASE("conditional generation", "[eval][generate]") {
    // Identity decoder: generated "images" are the latent samples themselves.
    const std::int64_t d = 3;
    MlpSpec spec = MlpSpec::with_relu_hidden({d, d});
    MlpParams<float> params;
    std::vector<float> eye(std::size_t(d * d), 0.0f);
    for (std::int64_t i = 0; i < d; ++i) eye[std::size_t(i * d + i)] = 1.0f;
    params.weights.push_back(Tensor<float>::parameter(Shape{d, d}, eye));
    params.biases.push_back(Tensor<float>::parameter(Shape{d}, std::vector<float>(std::size_t(d), 0.0f)));

    const auto table = make_blobs({{1, 2, 3}, {-4, 0, 2}}, 120, 0.5f, 13);

    SECTION("n = 0 gives empty output") {
        CHECK(conditional_generate(table, spec, params, 0, 0).empty());
    }
    SECTION("sampled mean approaches the class mean") {
        const std::int64_t n = 4000;
        const auto imgs = conditional_generate(table, spec, params, 1, n, 5);
        REQUIRE(imgs.size() == std::size_t(n * d));
        double mean[3] = {0, 0, 0};
        for (std::int64_t i = 0; i < n; ++i)
            for (std::int64_t j = 0; j < d; ++j) mean[j] += imgs[std::size_t(i * d + j)];
        for (auto& v : mean) v /= double(n);

        double class_mean[3] = {0, 0, 0};
        std::int64_t count = 0;
        for (std::int64_t i = 0; i < table.n; ++i)
            if (table.y[std::size_t(i)] == 1) {
                for (std::int64_t j = 0; j < d; ++j) class_mean[j] += table.row(i)[j];
                ++count;
            }
        for (auto& v : class_mean) v /= double(count);
        for (std::int64_t j = 0; j < d; ++j)
            CHECK(mean[j] == Catch::Approx(class_mean[j]).margin(0.05));
    }
    SECTION("deterministic given seed") {
        CHECK(conditional_generate(table, spec, params, 0, 10, 9) ==
              conditional_generate(table, spec, params, 0, 10, 9));
    }
    SECTION("missing class is an error") {
        REQUIRE_THROWS_AS(conditional_generate(table, spec, params, 5, 3), DataError);
    }
}

TEST_CASE("evaluation report format", "[eval][report]") {
    const std::string path = "/tmp/simvae_eval_report.csv";
    write_report(path, {{"knn", "synth", "accuracy", 0.9125, 7, "ckpt-1"},
                        {"gmm", "synth", "nmi", 0.5, 7, "ckpt-1"}});
    std::ifstream f(path);
    std::string line;
    REQUIRE(std::getline(f, line));
    CHECK(line == "probe,dataset,metric,value,seed,checkpoint_id");
    REQUIRE(std::getline(f, line));
    CHECK(line == "knn,synth,accuracy,0.9125,7,ckpt-1");
    REQUIRE(std::getline(f, line));
    CHECK(line == "gmm,synth,nmi,0.5,7,ckpt-1");
}
