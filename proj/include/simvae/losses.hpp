// Copyright (c) 2026 the simvae authors
// SPDX-License-Identifier: Apache-2.0
//
// Training objectives. Every loss returns a LossBreakdown whose `total` is
// the scalar to minimize (the negative of the objective being maximized)
// plus named sub-terms for logging. Documented combinations:
//
//   vae_loss          total = recon + beta * extra["kl"]
//   simvae_loss       total = recon + entropy + prior
//   info_nce_loss     total = extra["infonce"]
//   instance_disc.    total = extra["ce"]
//
// Batch semantics: a minibatch of N sources contributes independent terms
// and totals are means over the N sources; within a source, view terms sum.

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "simvae/errors.hpp"
#include "simvae/nn.hpp"
#include "simvae/tensor.hpp"

namespace simvae {

template <typename T>
struct LossBreakdown {
    Tensor<T> total;
    Tensor<T> recon;
    Tensor<T> entropy;
    Tensor<T> prior;
    std::vector<std::pair<std::string, Tensor<T>>> extra;

    const Tensor<T>& extra_term(const std::string& name) const {
        for (const auto& [k, v] : extra)
            if (k == name) return v;
        throw PreconditionError("LossBreakdown has no extra term named " + name);
    }
};

enum class SimvaeMode { ExactElbo, Algo1Literal };

inline SimvaeMode parse_simvae_mode(const std::string& s) {
    if (s == "exact_elbo") return SimvaeMode::ExactElbo;
    if (s == "algo1_literal") return SimvaeMode::Algo1Literal;
    throw ConfigError("unknown simvae mode: " + s + " (expected exact_elbo or algo1_literal)");
}

namespace detail {

// Batch mean of -log N(x; x_tilde, sigma_x2 I): quadratic part plus the
// D/2 log(2 pi sigma_x2) normalization per row.
template <typename T>
Tensor<T> recon_nll(const Tensor<T>& x, const Tensor<T>& x_tilde, double sigma_x2) {
    if (!(sigma_x2 > 0.0)) throw DomainError("likelihood variance must be positive");
    if (x.shape() != x_tilde.shape())
        throw DimensionError("reconstruction shape " + shape_str(x_tilde.shape()) +
                             " does not match input shape " + shape_str(x.shape()));
    const double n = static_cast<double>(x.dim(0));
    const double d = static_cast<double>(x.dim(1));
    const T quad_w = static_cast<T>(1.0 / (2.0 * sigma_x2 * n));
    const T floor = static_cast<T>(0.5 * d * std::log(2.0 * std::numbers::pi * sigma_x2));
    return add(mul(sum(square(sub(x, x_tilde))), quad_w), Tensor<T>::scalar(floor));
}

// Batch mean of the posterior entropy (d/2)(1+log 2 pi) + (1/2) sum logvar.
template <typename T>
Tensor<T> entropy_mean(const Tensor<T>& logvar) {
    const double n = static_cast<double>(logvar.dim(0));
    const double d = static_cast<double>(logvar.dim(1));
    const T floor = static_cast<T>(0.5 * d * (1.0 + std::log(2.0 * std::numbers::pi)));
    return add(mul(sum(logvar), static_cast<T>(0.5 / n)), Tensor<T>::scalar(floor));
}

// Row-normalized copy (cosine geometry). The epsilon only guards the exact
// zero row; it is far below float round-off otherwise.
template <typename T>
Tensor<T> l2_normalize_rows(const Tensor<T>& z) {
    auto norms = sqrt(add(sum(square(z), 1, true), Tensor<T>::scalar(static_cast<T>(1e-12))));
    return div(z, norms);
}

// Numerically stable row-wise log-sum-exp -> [rows, 1].
template <typename T>
Tensor<T> logsumexp_rows(const Tensor<T>& s) {
    auto mx = rowmax_const(s);
    return add(log(sum(exp(sub(s, mx)), 1, true)), mx);
}

} // namespace detail

// ---------------------------------------------------------------------------
// VAE / beta-VAE
// ---------------------------------------------------------------------------

// total = batch mean of [ -log N(x; x_tilde, sigma_x2 I)
//                         + beta * KL(q(z|x) || N(0,I)) ].  beta = 1 is the
// plain VAE.
template <typename T>
LossBreakdown<T> vae_loss(const Tensor<T>& x, const Tensor<T>& x_tilde,
                          const GaussianPosterior<T>& post, double sigma_x2, double beta) {
    if (!(beta > 0.0)) throw DomainError("beta must be positive");
    const double n = static_cast<double>(x.dim(0));

    Tensor<T> recon = detail::recon_nll(x, x_tilde, sigma_x2);
    // mean_i KL_i = (1/2N) sum(exp(lv) + mu^2 - 1 - lv)
    auto kl_cells = sub(add(exp(post.logvar), square(post.mu)),
                        add(post.logvar, Tensor<T>::scalar(T(1))));
    Tensor<T> kl = mul(sum(kl_cells), static_cast<T>(0.5 / n));

    LossBreakdown<T> out;
    out.recon = recon;
    out.entropy = Tensor<T>::scalar(T(0));
    out.prior = Tensor<T>::scalar(T(0));
    out.total = add(recon, mul(kl, static_cast<T>(beta)));
    out.extra.emplace_back("kl", kl);
    return out;
}

// ---------------------------------------------------------------------------
// SimVAE
// ---------------------------------------------------------------------------

// One view of a source batch: inputs, reconstructions, posterior, and the
// reparameterized latent sample. All tensors are [N, .] with rows aligned
// across views (row i of every view belongs to source i).
template <typename T>
struct ViewTerm {
    Tensor<T> x;
    Tensor<T> x_tilde;
    GaussianPosterior<T> post;
    Tensor<T> z;
};

// Negative single-sample estimate of the multi-view ELBO over a source batch.
//
// mode = exact_elbo (default):
//   total = sum_j [ -log N(x^j; x_tilde^j, sigma_x2 I) - H(q^j) ]
//           - log_prior(z^1..z^J),   all batch means.
// mode = algo1_literal:
//   total = sum_j (1/D) ||x^j - x_tilde^j||^2 + (1/2) sum_j sum_d logvar^j
//           + (1/(2 sigma2)) sum_j ||z^j - zbar||^2.
//
// gamma2 = infinity (default) selects the uniform-center prior
// -(1/(2 sigma2)) sum_j ||z^j - zbar||^2; a finite gamma2 uses the
// integrated Gaussian-center form.
template <typename T>
LossBreakdown<T> simvae_loss(const std::vector<ViewTerm<T>>& views, double sigma2,
                             double sigma_x2, SimvaeMode mode = SimvaeMode::ExactElbo,
                             double gamma2 = std::numeric_limits<double>::infinity()) {
    if (views.empty()) throw PreconditionError("simvae_loss requires J >= 1 views");
    if (!(sigma2 > 0.0)) throw DomainError("sigma2 must be positive");
    const auto j_count = static_cast<double>(views.size());
    const double n = static_cast<double>(views.front().x.dim(0));
    const double d_x = static_cast<double>(views.front().x.dim(1));

    // Reconstruction and entropy contributions, summed over views.
    Tensor<T> recon = Tensor<T>::scalar(T(0));
    Tensor<T> entropy = Tensor<T>::scalar(T(0));
    for (const auto& v : views) {
        if (mode == SimvaeMode::ExactElbo) {
            recon = add(recon, detail::recon_nll(v.x, v.x_tilde, sigma_x2));
            entropy = add(entropy, neg(detail::entropy_mean(v.post.logvar)));
        } else {
            recon = add(recon, mul(sum(square(sub(v.x, v.x_tilde))),
                                   static_cast<T>(1.0 / (d_x * n))));
            entropy = add(entropy, mul(sum(v.post.logvar), static_cast<T>(0.5 / n)));
        }
    }

    // Prior contribution (negative batch-mean log prior, constants dropped).
    Tensor<T> prior;
    if (std::isinf(gamma2)) {
        Tensor<T> zbar = views.front().z;
        for (std::size_t j = 1; j < views.size(); ++j) zbar = add(zbar, views[j].z);
        zbar = mul(zbar, static_cast<T>(1.0 / j_count));
        prior = Tensor<T>::scalar(T(0));
        for (const auto& v : views)
            prior = add(prior, sum(square(sub(v.z, zbar))));
        prior = mul(prior, static_cast<T>(1.0 / (2.0 * sigma2 * n)));
    } else {
        if (!(gamma2 > 0.0)) throw DomainError("gamma2 must be positive");
        const double q = sigma2 / gamma2 + j_count;
        Tensor<T> zsum = views.front().z;
        Tensor<T> sum_sq = sum(square(views.front().z));
        for (std::size_t j = 1; j < views.size(); ++j) {
            zsum = add(zsum, views[j].z);
            sum_sq = add(sum_sq, sum(square(views[j].z)));
        }
        prior = mul(sub(sum_sq, mul(sum(square(zsum)), static_cast<T>(1.0 / q))),
                    static_cast<T>(1.0 / (2.0 * sigma2 * n)));
    }

    LossBreakdown<T> out;
    out.recon = recon;
    out.entropy = entropy;
    out.prior = prior;
    out.total = add(add(recon, entropy), prior);
    return out;
}

// ---------------------------------------------------------------------------
// InfoNCE (symmetric in-batch scheme)
// ---------------------------------------------------------------------------

// Anchors z and positives z_pos are row-aligned [N, d]. The combined batch
// of 2N row-normalized representations scores every other member as a
// candidate (cosine similarity / tau); each item's positive is its partner.
// total = mean cross-entropy over the 2N anchors. With all representations
// identical this is exactly log(2N - 1).
template <typename T>
LossBreakdown<T> info_nce_loss(const Tensor<T>& z, const Tensor<T>& z_pos, double tau) {
    if (!(tau > 0.0)) throw DomainError("temperature must be positive");
    if (z.rank() != 2 || z.shape() != z_pos.shape())
        throw DimensionError("info_nce_loss expects matching [N,d] batches, got " +
                             shape_str(z.shape()) + " and " + shape_str(z_pos.shape()));
    const std::int64_t n = z.dim(0);
    if (n < 2) throw PreconditionError("info_nce_loss needs a batch of at least 2 sources");

    auto zn = detail::l2_normalize_rows(z);
    auto zpn = detail::l2_normalize_rows(z_pos);
    auto u = vstack(zn, zpn); // [2N, d]
    auto sims = mul(matmul(u, u, true), static_cast<T>(1.0 / tau));

    // Mask self-similarity out of the candidate set. exp(-1e9 - shift)
    // underflows to exactly zero, so masked cells get zero weight and zero
    // gradient.
    std::vector<T> mask(static_cast<std::size_t>(4 * n * n), T(0));
    for (std::int64_t i = 0; i < 2 * n; ++i)
        mask[static_cast<std::size_t>(i * 2 * n + i)] = static_cast<T>(-1e9);
    auto masked = add(sims, Tensor<T>({2 * n, 2 * n}, std::move(mask)));

    // Positive logits: partner rows, i.e. cos(z_i, z_pos_i)/tau for both halves.
    auto pos_half = mul(sum(mul(zn, zpn), 1, true), static_cast<T>(1.0 / tau)); // [N,1]
    auto pos = vstack(pos_half, pos_half);                                      // [2N,1]

    auto ce = sub(detail::logsumexp_rows(masked), pos);
    Tensor<T> total = mean(ce);

    LossBreakdown<T> out;
    out.total = total;
    out.recon = Tensor<T>::scalar(T(0));
    out.entropy = Tensor<T>::scalar(T(0));
    out.prior = Tensor<T>::scalar(T(0));
    out.extra.emplace_back("infonce", total);
    return out;
}

// ---------------------------------------------------------------------------
// Instance discrimination
// ---------------------------------------------------------------------------

// Softmax cross-entropy of logits z . w_psi^T against each row's source
// index; w_psi holds one trainable row per dataset item.
template <typename T>
LossBreakdown<T> instance_discrimination_loss(const Tensor<T>& z,
                                              const std::vector<std::int64_t>& source_indices,
                                              const Tensor<T>& w_psi) {
    if (z.rank() != 2 || w_psi.rank() != 2 || z.dim(1) != w_psi.dim(1))
        throw DimensionError("instance_discrimination_loss shapes disagree: " +
                             shape_str(z.shape()) + " vs " + shape_str(w_psi.shape()));
    const std::int64_t m = z.dim(0);
    const std::int64_t n_classes = w_psi.dim(0);
    if (static_cast<std::int64_t>(source_indices.size()) != m)
        throw DimensionError("source index count does not match batch size");
    for (const auto idx : source_indices)
        if (idx < 0 || idx >= n_classes)
            throw DataError("source index " + std::to_string(idx) + " outside [0, " +
                            std::to_string(n_classes) + ")");

    auto logits = matmul(z, w_psi, true); // [M, N]
    std::vector<T> onehot(static_cast<std::size_t>(m * n_classes), T(0));
    for (std::int64_t i = 0; i < m; ++i)
        onehot[static_cast<std::size_t>(i * n_classes + source_indices[i])] = T(1);
    auto target = Tensor<T>({m, n_classes}, std::move(onehot));

    auto pos = sum(mul(logits, target), 1, true);
    auto ce = sub(detail::logsumexp_rows(logits), pos);
    Tensor<T> total = mean(ce);

    LossBreakdown<T> out;
    out.total = total;
    out.recon = Tensor<T>::scalar(T(0));
    out.entropy = Tensor<T>::scalar(T(0));
    out.prior = Tensor<T>::scalar(T(0));
    out.extra.emplace_back("ce", total);
    return out;
}

// ---------------------------------------------------------------------------
// PMI
// ---------------------------------------------------------------------------

// Pointwise mutual information of a C x C joint probability table:
// PMI(a,b) = log joint(a,b) - log p(a) - log p(b); -infinity for zero cells.
inline std::vector<std::vector<double>> pmi_table(const std::vector<std::vector<double>>& joint) {
    const std::size_t c = joint.size();
    double total = 0.0;
    for (const auto& row : joint) {
        if (row.size() != c) throw DataError("pmi_table: joint must be square");
        for (const double p : row) {
            if (p < 0.0) throw DataError("pmi_table: negative probability");
            total += p;
        }
    }
    if (std::abs(total - 1.0) > 1e-9)
        throw DataError("pmi_table: joint does not sum to 1 (sum = " + std::to_string(total) + ")");

    std::vector<double> pa(c, 0.0), pb(c, 0.0);
    for (std::size_t a = 0; a < c; ++a)
        for (std::size_t b = 0; b < c; ++b) {
            pa[a] += joint[a][b];
            pb[b] += joint[a][b];
        }
    for (std::size_t a = 0; a < c; ++a)
        if (pa[a] <= 0.0 || pb[a] <= 0.0)
            throw DataError("pmi_table: marginals must be positive");

    std::vector<std::vector<double>> pmi(c, std::vector<double>(c));
    for (std::size_t a = 0; a < c; ++a)
        for (std::size_t b = 0; b < c; ++b)
            pmi[a][b] = joint[a][b] == 0.0
                            ? -std::numeric_limits<double>::infinity()
                            : std::log(joint[a][b]) - std::log(pa[a]) - std::log(pb[b]);
    return pmi;
}

} // namespace simvae
