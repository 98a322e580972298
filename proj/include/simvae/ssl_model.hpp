// Copyright (c) 2026 the simvae authors
// SPDX-License-Identifier: Apache-2.0
//
// Probability computations for the hierarchical generative model
// y -> z -> x with J conditionally independent latents per source:
// Gaussian log-densities, posterior entropy, KL to the standard normal,
// and the cluster prior p(z|y) with the per-cluster center integrated out
// (Gaussian center prior, its uniform limit, and the unit-norm dot form).
//
// Everything here is plain double math on small vectors; the differentiable
// tensor counterparts used in training live in losses.hpp and are
// cross-checked against these in tests.

#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "simvae/errors.hpp"

namespace simvae {

// Cluster prior parameters. gamma2 = infinity selects the uniform-center
// limit; the model's within-cluster variance sigma2 is isotropic.
struct SslPriorParams {
    double sigma2 = 0.15;
    double gamma2 = std::numeric_limits<double>::infinity();
    std::int64_t latent_dim = 10;
};

// J latent vectors of one source plus their cached mean.
struct ZSet {
    std::vector<std::vector<double>> members;
    std::vector<double> zbar;

    explicit ZSet(std::vector<std::vector<double>> zs) : members(std::move(zs)) {
        if (members.empty()) throw PreconditionError("ZSet requires J >= 1 members");
        const std::size_t d = members.front().size();
        for (const auto& z : members)
            if (z.size() != d)
                throw DimensionError("ZSet members must share one dimension");
        zbar.assign(d, 0.0);
        for (const auto& z : members)
            for (std::size_t k = 0; k < d; ++k) zbar[k] += z[k];
        for (auto& v : zbar) v /= static_cast<double>(members.size());
    }

    std::size_t J() const { return members.size(); }
    std::size_t dim() const { return members.front().size(); }
};

// Sum over dims of log N(x_d; mu_d, var_d).
inline double gaussian_log_pdf(const std::vector<double>& x, const std::vector<double>& mu,
                               const std::vector<double>& var) {
    if (x.size() != mu.size() || x.size() != var.size())
        throw DimensionError("gaussian_log_pdf: mismatched lengths");
    double acc = 0.0;
    for (std::size_t d = 0; d < x.size(); ++d) {
        if (!(var[d] > 0.0)) throw DomainError("gaussian_log_pdf: variance must be positive");
        const double r = x[d] - mu[d];
        acc += -0.5 * std::log(2.0 * std::numbers::pi * var[d]) - r * r / (2.0 * var[d]);
    }
    return acc;
}

inline double gaussian_log_pdf(const std::vector<double>& x, const std::vector<double>& mu,
                               double var) {
    return gaussian_log_pdf(x, mu, std::vector<double>(x.size(), var));
}

// Differential entropy of N(mu, diag(exp(logvar))): (d/2)(1+log 2pi) + (1/2) sum logvar.
inline double posterior_entropy(const std::vector<double>& logvar) {
    double acc = 0.5 * static_cast<double>(logvar.size()) *
                 (1.0 + std::log(2.0 * std::numbers::pi));
    for (const double lv : logvar) acc += 0.5 * lv;
    return acc;
}

// KL( N(mu, diag(exp(logvar))) || N(0, I) ).
inline double kl_to_standard_normal(const std::vector<double>& mu,
                                    const std::vector<double>& logvar) {
    if (mu.size() != logvar.size())
        throw DimensionError("kl_to_standard_normal: mismatched lengths");
    double acc = 0.0;
    for (std::size_t d = 0; d < mu.size(); ++d)
        acc += 0.5 * (std::exp(logvar[d]) + mu[d] * mu[d] - 1.0 - logvar[d]);
    return acc;
}

// log p(z|y) up to an additive constant, uniform-center limit:
// -(1/(2sigma2)) sum_j ||z^j - zbar||^2.  J=1 gives 0.
inline double log_prior_uniform_psi(const ZSet& zs, double sigma2) {
    if (!(sigma2 > 0.0)) throw DomainError("log_prior_uniform_psi: sigma2 must be positive");
    double acc = 0.0;
    for (const auto& z : zs.members)
        for (std::size_t k = 0; k < z.size(); ++k) {
            const double r = z[k] - zs.zbar[k];
            acc += r * r;
        }
    return -acc / (2.0 * sigma2);
}

// log p(z|y) up to an additive constant with a Gaussian center prior
// N(0, gamma2 I), the center integrated out analytically:
// -(1/(2sigma2)) [ sum_j ||z^j||^2 - ||sum_j z^j||^2 / (sigma2/gamma2 + J) ].
inline double log_prior_gaussian_psi(const ZSet& zs, double sigma2, double gamma2) {
    if (!(sigma2 > 0.0)) throw DomainError("log_prior_gaussian_psi: sigma2 must be positive");
    if (!(gamma2 > 0.0)) throw DomainError("log_prior_gaussian_psi: gamma2 must be positive");
    const double q = sigma2 / gamma2 + static_cast<double>(zs.J());
    double sum_sq = 0.0;
    std::vector<double> s(zs.dim(), 0.0);
    for (const auto& z : zs.members)
        for (std::size_t k = 0; k < z.size(); ++k) {
            sum_sq += z[k] * z[k];
            s[k] += z[k];
        }
    double s_sq = 0.0;
    for (const double v : s) s_sq += v * v;
    return -(sum_sq - s_sq / q) / (2.0 * sigma2);
}

// Unit-norm specialization: with every ||z^j|| = 1, sum_j ||z^j||^2 is the
// constant J and ||sum_j z^j||^2 = J + sum_{j!=k} z^j.z^k, so the Gaussian-
// center form reduces (up to an additive constant) to
//   (1/(2sigma2(sigma2/gamma2+J))) sum_{j!=k} z^j . z^k ,
// i.e. pairwise dot products reweighted by the integrated-center factor.
inline double log_prior_dot_form(const ZSet& zs, double sigma2, double gamma2) {
    if (!(sigma2 > 0.0)) throw DomainError("log_prior_dot_form: sigma2 must be positive");
    if (!(gamma2 > 0.0)) throw DomainError("log_prior_dot_form: gamma2 must be positive");
    for (const auto& z : zs.members) {
        double n = 0.0;
        for (const double v : z) n += v * v;
        if (std::abs(std::sqrt(n) - 1.0) > 1e-6)
            throw PreconditionError("log_prior_dot_form requires unit-norm members");
    }
    const double q = sigma2 / gamma2 + static_cast<double>(zs.J());
    double cross = 0.0;
    for (std::size_t j = 0; j < zs.J(); ++j)
        for (std::size_t k = 0; k < zs.J(); ++k) {
            if (j == k) continue;
            double dot = 0.0;
            for (std::size_t d = 0; d < zs.dim(); ++d) dot += zs.members[j][d] * zs.members[k][d];
            cross += dot;
        }
    return cross / (2.0 * sigma2 * q);
}

} // namespace simvae
