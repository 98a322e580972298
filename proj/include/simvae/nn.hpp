// Copyright (c) 2026 the simvae authors
// SPDX-License-Identifier: Apache-2.0
//
// Fully-connected networks with Gaussian heads: architecture specs,
// fan-in initialization, forward pass, reparameterization and Adam.

#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "simvae/errors.hpp"
#include "simvae/rng.hpp"
#include "simvae/tensor.hpp"

namespace simvae {

enum class Act : std::uint8_t { None = 0, Relu = 1 };

// Layer widths plus a per-layer activation. widths has L+1 entries for an
// L-layer network (input dim first).
struct MlpSpec {
    std::vector<std::int64_t> widths;
    std::vector<Act> activations;

    // Conventional shape: ReLU on every hidden layer, linear output.
    static MlpSpec with_relu_hidden(std::vector<std::int64_t> ws) {
        MlpSpec s;
        s.widths = std::move(ws);
        if (s.widths.size() < 2)
            throw PreconditionError("MlpSpec needs at least one layer (two widths)");
        s.activations.assign(s.widths.size() - 1, Act::Relu);
        s.activations.back() = Act::None;
        s.validate();
        return s;
    }

    void validate() const {
        if (widths.size() < 2)
            throw PreconditionError("MlpSpec needs at least one layer (two widths)");
        for (auto w : widths)
            if (w <= 0) throw PreconditionError("MlpSpec widths must be positive");
        if (activations.size() != widths.size() - 1)
            throw PreconditionError("MlpSpec activation count must equal layer count");
    }

    std::size_t num_layers() const { return activations.size(); }
    std::int64_t in_dim() const { return widths.front(); }
    std::int64_t out_dim() const { return widths.back(); }

    bool operator==(const MlpSpec&) const = default;
};

template <typename T>
struct MlpParams {
    std::vector<Tensor<T>> weights; // [in, out] per layer
    std::vector<Tensor<T>> biases;  // [out] per layer

    std::vector<Tensor<T>> all() const {
        std::vector<Tensor<T>> out;
        out.reserve(weights.size() * 2);
        for (std::size_t i = 0; i < weights.size(); ++i) {
            out.push_back(weights[i]);
            out.push_back(biases[i]);
        }
        return out;
    }
};

// Weights ~ N(0, 1/fan_in), biases zero; deterministic given rng.
// The scheme is a standard fan-in scaling and is recorded in checkpoints.
template <typename T>
MlpParams<T> init_params(const MlpSpec& spec, Rng& rng) {
    spec.validate();
    MlpParams<T> p;
    for (std::size_t l = 0; l < spec.num_layers(); ++l) {
        const std::int64_t fan_in = spec.widths[l];
        const std::int64_t fan_out = spec.widths[l + 1];
        const T scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(fan_in)));
        std::vector<T> w(static_cast<std::size_t>(fan_in * fan_out));
        for (auto& v : w) v = static_cast<T>(rng.normal()) * scale;
        p.weights.push_back(Tensor<T>::parameter({fan_in, fan_out}, std::move(w)));
        p.biases.push_back(Tensor<T>::parameter({fan_out}, T(0)));
    }
    return p;
}

// Affine + activation composition over a [N, in_dim] batch. Activations are
// checked for finiteness layer by layer so divergence is reported at its
// source rather than as a cryptic NaN loss.
template <typename T>
Tensor<T> mlp_forward(const MlpSpec& spec, const MlpParams<T>& params, const Tensor<T>& x) {
    if (x.rank() != 2 || x.dim(1) != spec.in_dim())
        throw DimensionError("mlp_forward input shape " + shape_str(x.shape()) +
                             " does not match expected feature dim " +
                             std::to_string(spec.in_dim()));
    if (params.weights.size() != spec.num_layers())
        throw DimensionError("parameter count does not match spec layer count");
    Tensor<T> h = x;
    for (std::size_t l = 0; l < spec.num_layers(); ++l) {
        h = add(matmul(h, params.weights[l]), params.biases[l]);
        if (spec.activations[l] == Act::Relu) h = relu(h);
        assert_finite(h, "mlp layer " + std::to_string(l));
    }
    return h;
}

template <typename T>
struct GaussianPosterior {
    Tensor<T> mu;     // [N, d]
    Tensor<T> logvar; // [N, d]
};

// Encoder + decoder pair with a Gaussian latent head.
template <typename T>
struct Model {
    MlpSpec encoder;
    MlpSpec decoder;
    std::int64_t latent_dim = 0;
    MlpParams<T> enc_params;
    MlpParams<T> dec_params;

    static Model build(const MlpSpec& encoder, const MlpSpec& decoder, std::int64_t latent_dim,
                       Rng& rng) {
        if (encoder.out_dim() != 2 * latent_dim)
            throw PreconditionError("encoder output width must be 2 x latent_dim");
        if (decoder.in_dim() != latent_dim)
            throw PreconditionError("decoder input width must equal latent_dim");
        Model m;
        m.encoder = encoder;
        m.decoder = decoder;
        m.latent_dim = latent_dim;
        m.enc_params = init_params<T>(encoder, rng);
        m.dec_params = init_params<T>(decoder, rng);
        return m;
    }

    std::vector<Tensor<T>> parameters() const {
        auto out = enc_params.all();
        auto d = dec_params.all();
        out.insert(out.end(), d.begin(), d.end());
        return out;
    }

    // Canonical array names for checkpoints, aligned with parameters().
    std::vector<std::string> parameter_names() const {
        std::vector<std::string> names;
        for (std::size_t l = 0; l < encoder.num_layers(); ++l) {
            names.push_back("enc.w" + std::to_string(l));
            names.push_back("enc.b" + std::to_string(l));
        }
        for (std::size_t l = 0; l < decoder.num_layers(); ++l) {
            names.push_back("dec.w" + std::to_string(l));
            names.push_back("dec.b" + std::to_string(l));
        }
        return names;
    }
};

// Final encoder layer emits [mu | logvar]; split here.
template <typename T>
GaussianPosterior<T> encode(const Model<T>& m, const Tensor<T>& x) {
    Tensor<T> out = mlp_forward(m.encoder, m.enc_params, x);
    return {slice_last(out, 0, m.latent_dim), slice_last(out, m.latent_dim, m.latent_dim)};
}

// z = mu + exp(logvar/2) * eps, differentiable in mu and logvar.
template <typename T>
Tensor<T> reparameterize(const GaussianPosterior<T>& post, const Tensor<T>& eps) {
    if (post.mu.shape() != eps.shape())
        throw DimensionError("reparameterize: eps shape " + shape_str(eps.shape()) +
                             " does not match mu shape " + shape_str(post.mu.shape()));
    return add(post.mu, mul(exp(mul(post.logvar, T(0.5))), eps));
}

// Reconstruction mean of p(x|z); final layer is linear, values compared to
// inputs in [0,1] downstream (clamping happens only at image export).
template <typename T>
Tensor<T> decode(const Model<T>& m, const Tensor<T>& z) {
    return mlp_forward(m.decoder, m.dec_params, z);
}

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

template <typename T>
struct AdamState {
    std::vector<std::vector<T>> m;
    std::vector<std::vector<T>> v;
    std::int64_t t = 0;

    template <typename U>
    static AdamState init(const std::vector<Tensor<U>>& params) {
        AdamState s;
        s.m.reserve(params.size());
        s.v.reserve(params.size());
        for (const auto& p : params) {
            s.m.emplace_back(static_cast<std::size_t>(p.size()), T(0));
            s.v.emplace_back(static_cast<std::size_t>(p.size()), T(0));
        }
        return s;
    }
};

// Bias-corrected Adam applied in place. Gradients are read from each
// parameter's grad buffer. A non-finite gradient anywhere aborts the step
// before any parameter or state mutation.
template <typename T>
void adam_step(std::vector<Tensor<T>>& params, AdamState<T>& state, const AdamConfig& cfg) {
    if (params.size() != state.m.size())
        throw PreconditionError("adam_step: state does not match parameter list");
    for (auto& p : params)
        for (const T g : p.grad())
            if (!std::isfinite(static_cast<double>(g)))
                throw NumericError("adam_step: non-finite gradient; step aborted");

    state.t += 1;
    const double b1t = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
    const double b2t = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto& theta = params[i].data_mut();
        const auto& g = params[i].grad();
        auto& m = state.m[i];
        auto& v = state.v[i];
        for (std::size_t k = 0; k < theta.size(); ++k) {
            const double gk = static_cast<double>(g[k]);
            const double mk = cfg.beta1 * static_cast<double>(m[k]) + (1.0 - cfg.beta1) * gk;
            const double vk = cfg.beta2 * static_cast<double>(v[k]) + (1.0 - cfg.beta2) * gk * gk;
            m[k] = static_cast<T>(mk);
            v[k] = static_cast<T>(vk);
            const double mhat = mk / b1t;
            const double vhat = vk / b2t;
            theta[k] -= static_cast<T>(cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps));
        }
    }
}

template <typename T>
void zero_grads(std::vector<Tensor<T>>& params) {
    for (auto& p : params) p.zero_grad();
}

} // namespace simvae
