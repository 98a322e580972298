// Copyright (c) 2026 the simvae authors
// SPDX-License-Identifier: Apache-2.0
//
// Evaluation protocol over frozen representations: k-nearest-neighbor and
// trained probes, Gaussian-mixture clustering scored by NMI/ARI, style
// regression, frozen-decoder reconstruction, and conditional generation.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "simvae/losses.hpp"
#include "simvae/nn.hpp"
#include "simvae/representation.hpp"
#include "simvae/rng.hpp"

namespace simvae {

// ---------------------------------------------------------------------------
// k-nearest neighbors
// ---------------------------------------------------------------------------

enum class KnnMetric : std::uint8_t { Euclidean = 0, Cosine = 1 };

namespace detail {

inline double knn_distance(const float* a, const float* b, std::int64_t d, KnnMetric metric) {
    if (metric == KnnMetric::Euclidean) {
        double s = 0.0;
        for (std::int64_t i = 0; i < d; ++i) {
            const double diff = double(a[i]) - double(b[i]);
            s += diff * diff;
        }
        return s; // squared distance preserves the ordering
    }
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::int64_t i = 0; i < d; ++i) {
        dot += double(a[i]) * double(b[i]);
        na += double(a[i]) * double(a[i]);
        nb += double(b[i]) * double(b[i]);
    }
    const double denom = std::sqrt(na * nb);
    return denom > 0.0 ? 1.0 - dot / denom : 1.0;
}

} // namespace detail

// Majority vote over the k nearest train rows. Vote ties go to the label
// with the smallest summed distance, then to the smallest label.
inline std::int64_t knn_predict_one(const RepresentationTable& train, const float* query,
                                    std::int64_t k, KnnMetric metric) {
    const std::int64_t n = train.n;
    std::vector<std::pair<double, std::int64_t>> dist(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i)
        dist[static_cast<std::size_t>(i)] = {
            detail::knn_distance(train.row(i), query, train.d, metric), i};
    std::partial_sort(dist.begin(), dist.begin() + k, dist.end());

    std::map<std::int64_t, std::pair<std::int64_t, double>> votes; // label -> (count, dist sum)
    for (std::int64_t i = 0; i < k; ++i) {
        const auto [dsq, idx] = dist[static_cast<std::size_t>(i)];
        auto& [count, dsum] = votes[train.y[static_cast<std::size_t>(idx)]];
        ++count;
        dsum += dsq;
    }
    std::int64_t best = -1;
    std::int64_t best_count = -1;
    double best_dsum = std::numeric_limits<double>::infinity();
    for (const auto& [label, cd] : votes) {
        const auto [count, dsum] = cd;
        if (count > best_count || (count == best_count && dsum < best_dsum)) {
            best = label;
            best_count = count;
            best_dsum = dsum;
        } // equal count and dsum: keep the smaller label (map iterates ascending)
    }
    return best;
}

inline double knn_classify(const RepresentationTable& train, const RepresentationTable& test,
                           std::int64_t k, KnnMetric metric = KnnMetric::Euclidean) {
    if (train.n == 0 || test.n == 0) throw PreconditionError("knn_classify: empty table");
    if (k < 1 || k > train.n)
        throw PreconditionError("knn_classify: k must lie in [1, train size]");
    if (train.d != test.d) throw DimensionError("knn_classify: dimension mismatch");
    std::int64_t hits = 0;
    for (std::int64_t q = 0; q < test.n; ++q)
        if (knn_predict_one(train, test.row(q), k, metric) == test.y[static_cast<std::size_t>(q)])
            ++hits;
    return double(hits) / double(test.n);
}

struct KnnSweepResult {
    std::int64_t best_k = 0;
    double best_accuracy = 0.0;
    std::vector<std::pair<std::int64_t, double>> per_k;
};

// Max accuracy over a k range; the smallest achieving k is reported.
inline KnnSweepResult knn_sweep(const RepresentationTable& train,
                                const RepresentationTable& test, std::int64_t k_lo = 1,
                                std::int64_t k_hi = 15,
                                KnnMetric metric = KnnMetric::Euclidean) {
    if (k_lo < 1 || k_hi < k_lo) throw PreconditionError("knn_sweep: empty k range");
    KnnSweepResult out;
    for (std::int64_t k = k_lo; k <= std::min(k_hi, train.n); ++k) {
        const double acc = knn_classify(train, test, k, metric);
        out.per_k.emplace_back(k, acc);
        if (acc > out.best_accuracy) {
            out.best_accuracy = acc;
            out.best_k = k;
        }
    }
    if (out.per_k.empty()) throw PreconditionError("knn_sweep: no usable k");
    return out;
}

// ---------------------------------------------------------------------------
// Trained probes
// ---------------------------------------------------------------------------

struct ProbeConfig {
    double lr = 3e-4;
    std::int64_t epochs = 200;
    std::int64_t batch = 128;
    std::uint64_t seed = 1;
};

namespace detail {

inline std::int64_t class_count(const RepresentationTable& a, const RepresentationTable& b) {
    std::int64_t hi = 0;
    for (auto v : a.y) hi = std::max(hi, v);
    for (auto v : b.y) hi = std::max(hi, v);
    return hi + 1;
}

// Softmax cross-entropy against integer labels (batch mean).
inline Tensor<float> softmax_ce(const Tensor<float>& logits,
                                const std::vector<std::int64_t>& labels) {
    const std::int64_t n = logits.dim(0), c = logits.dim(1);
    std::vector<float> onehot(static_cast<std::size_t>(n * c), 0.0f);
    for (std::int64_t i = 0; i < n; ++i)
        onehot[static_cast<std::size_t>(i * c + labels[static_cast<std::size_t>(i)])] = 1.0f;
    auto target = Tensor<float>({n, c}, std::move(onehot));
    auto pos = sum(mul(logits, target), 1, true);
    return mean(sub(detail::logsumexp_rows(logits), pos));
}

// Shared probe loop: an MLP classifier trained with Adam on cross-entropy.
inline double probe_train_eval(const RepresentationTable& train,
                               const RepresentationTable& test, const MlpSpec& spec,
                               const ProbeConfig& cfg) {
    if (train.n == 0 || test.n == 0) throw PreconditionError("probe: empty table");
    bool multi_class = false;
    for (auto v : train.y)
        if (v != train.y.front()) {
            multi_class = true;
            break;
        }
    if (!multi_class)
        throw PreconditionError("probe: training labels contain a single class");

    Rng init = Rng(cfg.seed).fork(stream::kEval, 1);
    MlpParams<float> params = init_params<float>(spec, init);
    auto tensors = params.all();
    AdamState<float> adam = AdamState<float>::init(tensors);
    AdamConfig opt;
    opt.lr = cfg.lr;

    const std::int64_t n = train.n, d = train.d;
    std::vector<std::int64_t> order(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;

    for (std::int64_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        Rng shuffle = Rng(cfg.seed).fork(stream::kEval, 2, static_cast<std::uint64_t>(epoch));
        for (std::int64_t i = n - 1; i > 0; --i) {
            const auto k =
                static_cast<std::int64_t>(shuffle.below(static_cast<std::uint64_t>(i + 1)));
            std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(k)]);
        }
        for (std::int64_t at = 0; at < n; at += cfg.batch) {
            const std::int64_t take = std::min(cfg.batch, n - at);
            std::vector<float> xb(static_cast<std::size_t>(take * d));
            std::vector<std::int64_t> yb(static_cast<std::size_t>(take));
            for (std::int64_t i = 0; i < take; ++i) {
                const std::int64_t src = order[static_cast<std::size_t>(at + i)];
                std::copy(train.row(src), train.row(src) + d, xb.begin() + i * d);
                yb[static_cast<std::size_t>(i)] = train.y[static_cast<std::size_t>(src)];
            }
            auto logits = mlp_forward(spec, params, Tensor<float>(Shape{take, d}, std::move(xb)));
            auto loss = softmax_ce(logits, yb);
            zero_grads(tensors);
            backward(loss);
            adam_step(tensors, adam, opt);
        }
    }

    // Accuracy on the test table.
    std::int64_t hits = 0;
    const std::int64_t chunk = 1024;
    for (std::int64_t at = 0; at < test.n; at += chunk) {
        const std::int64_t take = std::min(chunk, test.n - at);
        std::vector<float> xb(test.row(at), test.row(at) + take * d);
        auto logits = mlp_forward(spec, params, Tensor<float>(Shape{take, d}, std::move(xb)));
        const auto& vals = logits.data();
        const std::int64_t c = logits.dim(1);
        for (std::int64_t i = 0; i < take; ++i) {
            std::int64_t arg = 0;
            for (std::int64_t j = 1; j < c; ++j)
                if (vals[static_cast<std::size_t>(i * c + j)] >
                    vals[static_cast<std::size_t>(i * c + arg)])
                    arg = j;
            if (arg == test.y[static_cast<std::size_t>(at + i)]) ++hits;
        }
    }
    return double(hits) / double(test.n);
}

} // namespace detail

// Single affine layer + softmax.
inline double linear_probe(const RepresentationTable& train, const RepresentationTable& test,
                           const ProbeConfig& cfg = {}) {
    if (train.d != test.d) throw DimensionError("linear_probe: dimension mismatch");
    const std::int64_t c = detail::class_count(train, test);
    return detail::probe_train_eval(train, test, MlpSpec::with_relu_hidden({train.d, c}), cfg);
}

// One hidden ReLU layer of configurable width.
inline double mlp_probe(const RepresentationTable& train, const RepresentationTable& test,
                        std::int64_t hidden = 256, const ProbeConfig& cfg = {}) {
    if (train.d != test.d) throw DimensionError("mlp_probe: dimension mismatch");
    if (hidden < 1) throw PreconditionError("mlp_probe: hidden width must be positive");
    const std::int64_t c = detail::class_count(train, test);
    return detail::probe_train_eval(train, test, MlpSpec::with_relu_hidden({train.d, hidden, c}),
                                    cfg);
}

// ---------------------------------------------------------------------------
// Gaussian mixture clustering
// ---------------------------------------------------------------------------

struct GmmOptions {
    std::int64_t n_init = 10; // restarts; the reference protocol uses 200
    std::int64_t max_iter = 100;
    double reg = 1e-6; // ridge added to every covariance
    double tol = 1e-7; // absolute log-likelihood stop
    std::uint64_t seed = 1;
};

struct GmmModel {
    std::int64_t k = 0, d = 0;
    std::vector<double> weights; // [k]
    std::vector<double> means;   // [k, d]
    std::vector<double> covs;    // [k, d, d]
    std::vector<double> ll_trace;
    double final_ll = -std::numeric_limits<double>::infinity();
};

namespace detail {

struct GmmWork {
    std::vector<Eigen::LLT<Eigen::MatrixXd>> llts;
    std::vector<double> logdets;
};

inline GmmWork gmm_factorize(const GmmModel& m) {
    GmmWork w;
    for (std::int64_t c = 0; c < m.k; ++c) {
        Eigen::MatrixXd cov(m.d, m.d);
        for (std::int64_t i = 0; i < m.d; ++i)
            for (std::int64_t j = 0; j < m.d; ++j)
                cov(i, j) = m.covs[static_cast<std::size_t>((c * m.d + i) * m.d + j)];
        if (!cov.allFinite())
            throw NumericError("gmm_fit: component " + std::to_string(c) +
                               " covariance collapsed (non-finite entries)");
        Eigen::LLT<Eigen::MatrixXd> llt(cov);
        if (llt.info() != Eigen::Success)
            throw NumericError("gmm_fit: component " + std::to_string(c) +
                               " covariance collapsed despite regularization");
        double logdet = 0.0;
        for (std::int64_t i = 0; i < m.d; ++i) logdet += 2.0 * std::log(llt.matrixL()(i, i));
        w.llts.push_back(std::move(llt));
        w.logdets.push_back(logdet);
    }
    return w;
}

// Row-wise log joint log w_c + log N(x; mu_c, Sigma_c) -> [n, k].
inline std::vector<double> gmm_log_joint(const GmmModel& m, const GmmWork& w,
                                         const std::vector<double>& x, std::int64_t n) {
    const double c0 = -0.5 * double(m.d) * std::log(2.0 * M_PI);
    std::vector<double> out(static_cast<std::size_t>(n * m.k));
    Eigen::VectorXd diff(m.d);
    for (std::int64_t c = 0; c < m.k; ++c) {
        const double base = std::log(m.weights[static_cast<std::size_t>(c)]) + c0 -
                            0.5 * w.logdets[static_cast<std::size_t>(c)];
        for (std::int64_t i = 0; i < n; ++i) {
            for (std::int64_t j = 0; j < m.d; ++j)
                diff(j) = x[static_cast<std::size_t>(i * m.d + j)] -
                          m.means[static_cast<std::size_t>(c * m.d + j)];
            const double quad = diff.dot(w.llts[static_cast<std::size_t>(c)].solve(diff));
            out[static_cast<std::size_t>(i * m.k + c)] = base - 0.5 * quad;
        }
    }
    return out;
}

} // namespace detail

// Posterior responsibilities [n, k] under the model.
inline std::vector<double> gmm_responsibilities(const GmmModel& m, const std::vector<double>& x,
                                                std::int64_t n) {
    const auto work = detail::gmm_factorize(m);
    auto lj = detail::gmm_log_joint(m, work, x, n);
    for (std::int64_t i = 0; i < n; ++i) {
        double hi = -std::numeric_limits<double>::infinity();
        for (std::int64_t c = 0; c < m.k; ++c)
            hi = std::max(hi, lj[static_cast<std::size_t>(i * m.k + c)]);
        double z = 0.0;
        for (std::int64_t c = 0; c < m.k; ++c)
            z += std::exp(lj[static_cast<std::size_t>(i * m.k + c)] - hi);
        for (std::int64_t c = 0; c < m.k; ++c) {
            auto& v = lj[static_cast<std::size_t>(i * m.k + c)];
            v = std::exp(v - hi) / z;
        }
    }
    return lj;
}

inline std::vector<std::int64_t> gmm_predict(const GmmModel& m, const std::vector<double>& x,
                                             std::int64_t n) {
    const auto resp = gmm_responsibilities(m, x, n);
    std::vector<std::int64_t> out(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) {
        std::int64_t arg = 0;
        for (std::int64_t c = 1; c < m.k; ++c)
            if (resp[static_cast<std::size_t>(i * m.k + c)] >
                resp[static_cast<std::size_t>(i * m.k + arg)])
                arg = c;
        out[static_cast<std::size_t>(i)] = arg;
    }
    return out;
}

// Expectation-maximization with full covariances and k-means++-style
// seeding; n_init restarts, best final log-likelihood kept.
inline GmmModel gmm_fit(const std::vector<double>& x, std::int64_t n, std::int64_t d,
                        std::int64_t k, const GmmOptions& opt = {}) {
    if (k < 1) throw PreconditionError("gmm_fit: k must be at least 1");
    if (n <= k) throw PreconditionError("gmm_fit: need more points than components");
    if (static_cast<std::int64_t>(x.size()) != n * d)
        throw DimensionError("gmm_fit: data size does not match n*d");

    // Global moments for covariance seeding.
    std::vector<double> gmean(static_cast<std::size_t>(d), 0.0);
    for (std::int64_t i = 0; i < n; ++i)
        for (std::int64_t j = 0; j < d; ++j)
            gmean[static_cast<std::size_t>(j)] += x[static_cast<std::size_t>(i * d + j)];
    for (auto& v : gmean) v /= double(n);
    std::vector<double> gcov(static_cast<std::size_t>(d * d), 0.0);
    for (std::int64_t i = 0; i < n; ++i)
        for (std::int64_t a = 0; a < d; ++a)
            for (std::int64_t b = 0; b < d; ++b)
                gcov[static_cast<std::size_t>(a * d + b)] +=
                    (x[static_cast<std::size_t>(i * d + a)] - gmean[static_cast<std::size_t>(a)]) *
                    (x[static_cast<std::size_t>(i * d + b)] - gmean[static_cast<std::size_t>(b)]);
    for (auto& v : gcov) v /= double(n);

    GmmModel best;
    for (std::int64_t restart = 0; restart < opt.n_init; ++restart) {
        Rng rng = Rng(opt.seed).fork(stream::kEval, 3, static_cast<std::uint64_t>(restart));

        GmmModel m;
        m.k = k;
        m.d = d;
        m.weights.assign(static_cast<std::size_t>(k), 1.0 / double(k));
        m.means.resize(static_cast<std::size_t>(k * d));
        m.covs.assign(static_cast<std::size_t>(k * d * d), 0.0);
        for (std::int64_t c = 0; c < k; ++c)
            for (std::int64_t a = 0; a < d; ++a)
                for (std::int64_t b = 0; b < d; ++b)
                    m.covs[static_cast<std::size_t>((c * d + a) * d + b)] =
                        gcov[static_cast<std::size_t>(a * d + b)] + (a == b ? opt.reg : 0.0);

        // k-means++ seeding: first center uniform, then proportional to the
        // squared distance to the nearest chosen center.
        std::vector<std::int64_t> centers;
        centers.push_back(static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(n))));
        std::vector<double> d2(static_cast<std::size_t>(n),
                               std::numeric_limits<double>::infinity());
        while (static_cast<std::int64_t>(centers.size()) < k) {
            const std::int64_t last = centers.back();
            double total = 0.0;
            for (std::int64_t i = 0; i < n; ++i) {
                double s = 0.0;
                for (std::int64_t j = 0; j < d; ++j) {
                    const double diff = x[static_cast<std::size_t>(i * d + j)] -
                                        x[static_cast<std::size_t>(last * d + j)];
                    s += diff * diff;
                }
                d2[static_cast<std::size_t>(i)] = std::min(d2[static_cast<std::size_t>(i)], s);
                total += d2[static_cast<std::size_t>(i)];
            }
            std::int64_t pick = 0;
            if (total > 0.0) {
                double u = rng.next_double() * total;
                for (std::int64_t i = 0; i < n; ++i) {
                    u -= d2[static_cast<std::size_t>(i)];
                    if (u <= 0.0) {
                        pick = i;
                        break;
                    }
                }
            } else {
                pick = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(n)));
            }
            centers.push_back(pick);
        }
        for (std::int64_t c = 0; c < k; ++c)
            for (std::int64_t j = 0; j < d; ++j)
                m.means[static_cast<std::size_t>(c * d + j)] =
                    x[static_cast<std::size_t>(centers[static_cast<std::size_t>(c)] * d + j)];

        // EM iterations.
        double prev_ll = -std::numeric_limits<double>::infinity();
        for (std::int64_t iter = 0; iter < opt.max_iter; ++iter) {
            const auto work = detail::gmm_factorize(m);
            auto lj = detail::gmm_log_joint(m, work, x, n);
            double ll = 0.0;
            for (std::int64_t i = 0; i < n; ++i) {
                double hi = -std::numeric_limits<double>::infinity();
                for (std::int64_t c = 0; c < k; ++c)
                    hi = std::max(hi, lj[static_cast<std::size_t>(i * k + c)]);
                double z = 0.0;
                for (std::int64_t c = 0; c < k; ++c)
                    z += std::exp(lj[static_cast<std::size_t>(i * k + c)] - hi);
                ll += hi + std::log(z);
                for (std::int64_t c = 0; c < k; ++c) {
                    auto& v = lj[static_cast<std::size_t>(i * k + c)];
                    v = std::exp(v - hi) / z; // lj now stores responsibilities
                }
            }
            m.ll_trace.push_back(ll);

            // M-step.
            for (std::int64_t c = 0; c < k; ++c) {
                double nk = 0.0;
                for (std::int64_t i = 0; i < n; ++i)
                    nk += lj[static_cast<std::size_t>(i * k + c)];
                m.weights[static_cast<std::size_t>(c)] = nk / double(n);
                for (std::int64_t j = 0; j < d; ++j) {
                    double s = 0.0;
                    for (std::int64_t i = 0; i < n; ++i)
                        s += lj[static_cast<std::size_t>(i * k + c)] *
                             x[static_cast<std::size_t>(i * d + j)];
                    m.means[static_cast<std::size_t>(c * d + j)] = s / nk;
                }
                for (std::int64_t a = 0; a < d; ++a)
                    for (std::int64_t b = a; b < d; ++b) {
                        double s = 0.0;
                        for (std::int64_t i = 0; i < n; ++i)
                            s += lj[static_cast<std::size_t>(i * k + c)] *
                                 (x[static_cast<std::size_t>(i * d + a)] -
                                  m.means[static_cast<std::size_t>(c * d + a)]) *
                                 (x[static_cast<std::size_t>(i * d + b)] -
                                  m.means[static_cast<std::size_t>(c * d + b)]);
                        const double v = s / nk + (a == b ? opt.reg : 0.0);
                        m.covs[static_cast<std::size_t>((c * d + a) * d + b)] = v;
                        m.covs[static_cast<std::size_t>((c * d + b) * d + a)] = v;
                    }
            }
            if (std::abs(ll - prev_ll) < opt.tol) break;
            prev_ll = ll;
        }
        m.final_ll = m.ll_trace.back();
        if (m.final_ll > best.final_ll) best = std::move(m);
    }
    return best;
}

// ---------------------------------------------------------------------------
// Clustering agreement scores
// ---------------------------------------------------------------------------

namespace detail {

inline std::map<std::pair<std::int64_t, std::int64_t>, std::int64_t> contingency(
    const std::vector<std::int64_t>& a, const std::vector<std::int64_t>& b) {
    if (a.size() != b.size())
        throw DimensionError("labelings have different lengths: " + std::to_string(a.size()) +
                             " vs " + std::to_string(b.size()));
    std::map<std::pair<std::int64_t, std::int64_t>, std::int64_t> cells;
    for (std::size_t i = 0; i < a.size(); ++i) ++cells[{a[i], b[i]}];
    return cells;
}

} // namespace detail

// Normalized mutual information I(a;b)/sqrt(H(a) H(b)), natural logs,
// with the 0/0 -> 0 convention.
inline double nmi(const std::vector<std::int64_t>& a, const std::vector<std::int64_t>& b) {
    const auto cells = detail::contingency(a, b);
    const double n = double(a.size());
    if (n == 0.0) throw PreconditionError("nmi: empty labelings");
    std::map<std::int64_t, double> pa, pb;
    for (const auto& [ab, c] : cells) {
        pa[ab.first] += double(c) / n;
        pb[ab.second] += double(c) / n;
    }
    double info = 0.0;
    for (const auto& [ab, c] : cells) {
        const double pij = double(c) / n;
        info += pij * std::log(pij / (pa[ab.first] * pb[ab.second]));
    }
    double ha = 0.0, hb = 0.0;
    for (const auto& [_, p] : pa) ha -= p * std::log(p);
    for (const auto& [_, p] : pb) hb -= p * std::log(p);
    if (ha * hb <= 0.0) return 0.0;
    return std::clamp(info / std::sqrt(ha * hb), 0.0, 1.0);
}

// Adjusted Rand index via pair counting.
inline double ari(const std::vector<std::int64_t>& a, const std::vector<std::int64_t>& b) {
    const auto cells = detail::contingency(a, b);
    const double n = double(a.size());
    if (n == 0.0) throw PreconditionError("ari: empty labelings");
    const auto comb2 = [](double m) { return m * (m - 1.0) / 2.0; };
    std::map<std::int64_t, double> ra, rb;
    double index = 0.0;
    for (const auto& [ab, c] : cells) {
        ra[ab.first] += double(c);
        rb[ab.second] += double(c);
        index += comb2(double(c));
    }
    double suma = 0.0, sumb = 0.0;
    for (const auto& [_, c] : ra) suma += comb2(c);
    for (const auto& [_, c] : rb) sumb += comb2(c);
    const double expected = suma * sumb / comb2(n);
    const double maximum = 0.5 * (suma + sumb);
    if (maximum == expected) return 1.0; // both partitions trivial and equal
    return (index - expected) / (maximum - expected);
}

// ---------------------------------------------------------------------------
// Style regression
// ---------------------------------------------------------------------------

// Closed-form ridge regression from representations to each style target on
// the first 80% of rows; returns held-out R-squared per style column.
inline std::vector<double> style_probe(const RepresentationTable& table,
                                       const std::vector<float>& targets, std::int64_t s,
                                       double lambda = 1e-6) {
    if (lambda < 0.0) throw PreconditionError("style_probe: lambda must be non-negative");
    if (static_cast<std::int64_t>(targets.size()) != table.n * s)
        throw DimensionError("style_probe: target size does not match n*s");
    const std::int64_t n_train = table.n * 4 / 5;
    const std::int64_t n_test = table.n - n_train;
    if (n_train < 1 || n_test < 1)
        throw PreconditionError("style_probe: table too small for an 80/20 split");

    const std::int64_t p = table.d + 1; // bias column appended
    Eigen::MatrixXd xtr(n_train, p), xte(n_test, p);
    Eigen::MatrixXd ytr(n_train, s), yte(n_test, s);
    for (std::int64_t i = 0; i < table.n; ++i) {
        Eigen::MatrixXd& xm = i < n_train ? xtr : xte;
        Eigen::MatrixXd& ym = i < n_train ? ytr : yte;
        const std::int64_t r = i < n_train ? i : i - n_train;
        for (std::int64_t j = 0; j < table.d; ++j) xm(r, j) = double(table.row(i)[j]);
        xm(r, table.d) = 1.0;
        for (std::int64_t j = 0; j < s; ++j)
            ym(r, j) = double(targets[static_cast<std::size_t>(i * s + j)]);
    }

    Eigen::MatrixXd gram = xtr.transpose() * xtr;
    for (std::int64_t j = 0; j < p; ++j) gram(j, j) += lambda;
    Eigen::LLT<Eigen::MatrixXd> llt(gram);
    if (llt.info() != Eigen::Success)
        throw NumericError("style_probe: singular Gram matrix (increase lambda)");
    Eigen::MatrixXd w = llt.solve(xtr.transpose() * ytr);

    Eigen::MatrixXd pred = xte * w;
    std::vector<double> r2(static_cast<std::size_t>(s));
    for (std::int64_t j = 0; j < s; ++j) {
        const double mean = yte.col(j).mean();
        const double ss_tot = (yte.col(j).array() - mean).square().sum();
        const double ss_res = (yte.col(j) - pred.col(j)).array().square().sum();
        r2[static_cast<std::size_t>(j)] = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 0.0;
    }
    return r2;
}

inline std::vector<double> style_probe(const RepresentationTable& table, double lambda = 1e-6) {
    if (table.s == 0) throw PreconditionError("style_probe: table has no style variables");
    return style_probe(table, table.style, table.s, lambda);
}

// ---------------------------------------------------------------------------
// Frozen-decoder reconstruction and conditional generation
// ---------------------------------------------------------------------------

inline double reconstruction_mse(const std::vector<float>& x, const std::vector<float>& x_tilde) {
    if (x.size() != x_tilde.size())
        throw DimensionError("reconstruction_mse: size mismatch: " + std::to_string(x.size()) +
                             " vs " + std::to_string(x_tilde.size()));
    if (x.empty()) throw PreconditionError("reconstruction_mse: empty input");
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double diff = double(x[i]) - double(x_tilde[i]);
        s += diff * diff;
    }
    return s / double(x.size());
}

struct FrozenDecoder {
    MlpSpec spec;
    MlpParams<float> params;
    std::vector<double> train_mse_trace;
    double mean_mse = 0.0; // over the full table after training
};

// Trains a fresh decoder by MSE from frozen representations back to the
// inputs; stops when the validation MSE plateaus (or at max_epochs).
inline FrozenDecoder frozen_decoder_train(const RepresentationTable& table,
                                          const std::vector<float>& x, std::int64_t x_dim,
                                          const std::vector<std::int64_t>& hidden,
                                          double lr = 1e-4, std::int64_t max_epochs = 200,
                                          std::int64_t batch = 128, std::uint64_t seed = 1) {
    if (static_cast<std::int64_t>(x.size()) != table.n * x_dim)
        throw DimensionError("frozen_decoder_train: input size does not match n*x_dim");
    const std::int64_t n_val = std::max<std::int64_t>(1, table.n / 10);
    const std::int64_t n_train = table.n - n_val;
    if (n_train < 1) throw PreconditionError("frozen_decoder_train: table too small");

    std::vector<std::int64_t> widths = hidden;
    widths.insert(widths.begin(), table.d);
    widths.push_back(x_dim);
    FrozenDecoder out;
    out.spec = MlpSpec::with_relu_hidden(widths);
    Rng init = Rng(seed).fork(stream::kEval, 4);
    out.params = init_params<float>(out.spec, init);
    auto tensors = out.params.all();
    AdamState<float> adam = AdamState<float>::init(tensors);
    AdamConfig opt;
    opt.lr = lr;

    const auto split_mse = [&](std::int64_t from, std::int64_t count) {
        double total = 0.0;
        const std::int64_t chunk = 512;
        for (std::int64_t at = from; at < from + count; at += chunk) {
            const std::int64_t take = std::min(chunk, from + count - at);
            std::vector<float> zb(table.row(at), table.row(at) + take * table.d);
            auto pred =
                mlp_forward(out.spec, out.params, Tensor<float>(Shape{take, table.d}, std::move(zb)));
            const auto& pv = pred.data();
            for (std::int64_t i = 0; i < take * x_dim; ++i) {
                const double diff = double(pv[static_cast<std::size_t>(i)]) -
                                    double(x[static_cast<std::size_t>(at * x_dim + i)]);
                total += diff * diff;
            }
        }
        return total / double(count * x_dim);
    };

    double best_val = std::numeric_limits<double>::infinity();
    std::int64_t since_best = 0;
    const std::int64_t patience = 10;
    std::vector<std::int64_t> order(static_cast<std::size_t>(n_train));
    for (std::int64_t i = 0; i < n_train; ++i) order[static_cast<std::size_t>(i)] = i;

    for (std::int64_t epoch = 1; epoch <= max_epochs; ++epoch) {
        Rng shuffle = Rng(seed).fork(stream::kEval, 5, static_cast<std::uint64_t>(epoch));
        for (std::int64_t i = n_train - 1; i > 0; --i) {
            const auto k =
                static_cast<std::int64_t>(shuffle.below(static_cast<std::uint64_t>(i + 1)));
            std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(k)]);
        }
        for (std::int64_t at = 0; at < n_train; at += batch) {
            const std::int64_t take = std::min(batch, n_train - at);
            std::vector<float> zb(static_cast<std::size_t>(take * table.d));
            std::vector<float> xb(static_cast<std::size_t>(take * x_dim));
            for (std::int64_t i = 0; i < take; ++i) {
                const std::int64_t src = order[static_cast<std::size_t>(at + i)];
                std::copy(table.row(src), table.row(src) + table.d, zb.begin() + i * table.d);
                std::copy(x.begin() + src * x_dim, x.begin() + (src + 1) * x_dim,
                          xb.begin() + i * x_dim);
            }
            auto pred = mlp_forward(out.spec, out.params,
                                    Tensor<float>(Shape{take, table.d}, std::move(zb)));
            auto target = Tensor<float>(Shape{take, x_dim}, std::move(xb));
            auto loss = mean(square(sub(pred, target)));
            zero_grads(tensors);
            backward(loss);
            adam_step(tensors, adam, opt);
        }
        out.train_mse_trace.push_back(split_mse(0, n_train));
        const double val = split_mse(n_train, n_val);
        if (val < best_val - 1e-7) {
            best_val = val;
            since_best = 0;
        } else if (++since_best >= patience) {
            break;
        }
    }
    out.mean_mse = split_mse(0, table.n);
    return out;
}

// Decodes representations with a frozen decoder (row-major batch in/out).
inline std::vector<float> decode_frozen(const FrozenDecoder& dec, const std::vector<float>& z,
                                        std::int64_t n) {
    auto pred = mlp_forward(dec.spec, dec.params,
                            Tensor<float>(Shape{n, dec.spec.in_dim()}, z));
    return pred.data();
}

// Fits a full-covariance Gaussian to the class-c rows of the table, samples
// n latents, and decodes them. A singular fit is ridge-regularized with a
// warning rather than rejected.
inline std::vector<float> conditional_generate(const RepresentationTable& table,
                                               const MlpSpec& dec_spec,
                                               const MlpParams<float>& dec_params,
                                               std::int64_t cls, std::int64_t n,
                                               std::uint64_t seed = 1) {
    if (n == 0) return {};
    std::vector<std::int64_t> rows;
    for (std::int64_t i = 0; i < table.n; ++i)
        if (table.y[static_cast<std::size_t>(i)] == cls) rows.push_back(i);
    if (rows.empty())
        throw DataError("conditional_generate: class " + std::to_string(cls) +
                        " is not present in the table");

    const std::int64_t d = table.d;
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
    for (auto r : rows)
        for (std::int64_t j = 0; j < d; ++j) mean(j) += double(table.row(r)[j]);
    mean /= double(rows.size());
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
    for (auto r : rows) {
        Eigen::VectorXd diff(d);
        for (std::int64_t j = 0; j < d; ++j) diff(j) = double(table.row(r)[j]) - mean(j);
        cov += diff * diff.transpose();
    }
    cov /= double(rows.size());

    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    double ridge = 1e-9;
    while (llt.info() != Eigen::Success && ridge < 1.0) {
        std::fprintf(stderr,
                     "warning: conditional_generate: singular class covariance; adding %g I\n",
                     ridge);
        llt.compute(cov + ridge * Eigen::MatrixXd::Identity(d, d));
        ridge *= 10.0;
    }
    if (llt.info() != Eigen::Success)
        throw NumericError("conditional_generate: covariance not factorizable");
    const Eigen::MatrixXd l = llt.matrixL();

    Rng rng = Rng(seed).fork(stream::kEval, 6, static_cast<std::uint64_t>(cls));
    std::vector<float> zs(static_cast<std::size_t>(n * d));
    Eigen::VectorXd eps(d);
    for (std::int64_t i = 0; i < n; ++i) {
        for (std::int64_t j = 0; j < d; ++j) eps(j) = rng.normal();
        const Eigen::VectorXd z = mean + l * eps;
        for (std::int64_t j = 0; j < d; ++j)
            zs[static_cast<std::size_t>(i * d + j)] = static_cast<float>(z(j));
    }

    auto pred = mlp_forward(dec_spec, dec_params, Tensor<float>(Shape{n, d}, std::move(zs)));
    return pred.data();
}

// ---------------------------------------------------------------------------
// Report
// ---------------------------------------------------------------------------

struct ReportRow {
    std::string probe;
    std::string dataset;
    std::string metric;
    double value = 0.0;
    std::uint64_t seed = 0;
    std::string checkpoint_id;
};

inline constexpr const char* kReportHeader = "probe,dataset,metric,value,seed,checkpoint_id";

inline void write_report(const std::string& path, const std::vector<ReportRow>& rows) {
    std::ofstream f(path);
    if (!f) throw DataError("cannot open report file: " + path);
    f << kReportHeader << "\n";
    for (const auto& r : rows) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.10g", r.value);
        f << r.probe << "," << r.dataset << "," << r.metric << "," << buf << "," << r.seed << ","
          << r.checkpoint_id << "\n";
    }
    if (!f) throw DataError("failed writing report file: " + path);
}

} // namespace simvae
