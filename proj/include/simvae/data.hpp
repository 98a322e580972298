// Copyright (c) 2026 the simvae authors
// SPDX-License-Identifier: Apache-2.0
//
// Dataset ingestion (IDX), the augmentation pipeline with recorded style
// parameters, and the synthetic hierarchical-Gaussian generator with its
// exact linear-Gaussian posterior oracle.

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "simvae/checkpoint.hpp"
#include "simvae/errors.hpp"
#include "simvae/rng.hpp"

namespace simvae {

// ---------------------------------------------------------------------------
// IDX ingestion
// ---------------------------------------------------------------------------

struct ImageDataset {
    std::int64_t n = 0, h = 0, w = 0;
    std::vector<float> pixels; // n*h*w values in [0,1], row-major
    std::vector<std::int64_t> labels;
    std::string name;
    bool binary = false; // pixels restricted to {0,1}

    std::int64_t dim() const { return h * w; }
    const float* image(std::int64_t i) const { return pixels.data() + i * h * w; }
};

namespace detail {

inline std::uint32_t read_be_u32(std::ifstream& f, const std::string& path) {
    std::uint8_t b[4];
    f.read(reinterpret_cast<char*>(b), 4);
    if (f.gcount() != 4) throw DataError("truncated IDX header in " + path);
    return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) |
           (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
}

} // namespace detail

struct IdxArray {
    std::vector<std::int64_t> dims;
    std::vector<std::uint8_t> bytes;
};

// Parses a big-endian IDX file of unsigned bytes. Magic 0x00000803 marks a
// rank-3 image tensor, 0x00000801 a rank-1 label vector.
inline IdxArray load_idx(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open IDX file: " + path);
    const std::uint32_t magic = detail::read_be_u32(f, path);
    std::size_t rank;
    if (magic == 0x00000803u)
        rank = 3;
    else if (magic == 0x00000801u)
        rank = 1;
    else
        throw DataError("bad IDX magic in " + path + ": got " + std::to_string(magic) +
                        ", expected 2051 (images) or 2049 (labels)");
    IdxArray out;
    std::int64_t count = 1;
    for (std::size_t i = 0; i < rank; ++i) {
        const std::int64_t d = detail::read_be_u32(f, path);
        if (d <= 0) throw DataError("IDX dimension " + std::to_string(i) + " is zero in " + path);
        out.dims.push_back(d);
        count *= d;
    }
    out.bytes.resize(static_cast<std::size_t>(count));
    f.read(reinterpret_cast<char*>(out.bytes.data()), count);
    if (f.gcount() != count)
        throw DataError("truncated IDX payload in " + path + ": expected " +
                        std::to_string(count) + " bytes, got " + std::to_string(f.gcount()));
    return out;
}

// Loads an image/label IDX pair, scaling pixels to [0,1].
inline ImageDataset load_idx_dataset(const std::string& images_path,
                                     const std::string& labels_path, const std::string& name) {
    auto imgs = load_idx(images_path);
    auto labs = load_idx(labels_path);
    if (imgs.dims.size() != 3)
        throw DataError("expected a rank-3 image tensor in " + images_path);
    if (labs.dims.size() != 1)
        throw DataError("expected a rank-1 label vector in " + labels_path);
    if (imgs.dims[0] != labs.dims[0])
        throw DataError("image count " + std::to_string(imgs.dims[0]) +
                        " does not match label count " + std::to_string(labs.dims[0]));
    ImageDataset ds;
    ds.name = name;
    ds.n = imgs.dims[0];
    ds.h = imgs.dims[1];
    ds.w = imgs.dims[2];
    ds.pixels.resize(imgs.bytes.size());
    for (std::size_t i = 0; i < imgs.bytes.size(); ++i)
        ds.pixels[i] = static_cast<float>(imgs.bytes[i]) / 255.0f;
    ds.labels.assign(labs.bytes.begin(), labs.bytes.end());
    return ds;
}

// Environment-configurable dataset root.
inline std::string data_dir() {
    if (const char* env = std::getenv("SIMVAE_DATA_DIR")) return env;
    return "./data";
}

// ---------------------------------------------------------------------------
// Augmentation
// ---------------------------------------------------------------------------

// Threshold at theta; the exact-theta pixel maps to 1.
inline void binarize(std::vector<float>& pixels, float theta = 0.5f) {
    for (auto& p : pixels) p = p >= theta ? 1.0f : 0.0f;
}

enum class FlipAxis : std::uint8_t { Horizontal = 0, Vertical = 1 };

struct AugmentConfig {
    double crop_scale_lo = 0.4; // lower bound of sampled area fraction; upper is 1.0
    double crop_ratio_lo = 0.75;
    double crop_ratio_hi = 1.3;
    double flip_p = 0.5;
    FlipAxis flip_axis = FlipAxis::Horizontal;
    bool rebinarize = false; // reapply binarize after interpolation
    bool nearest = false;    // nearest-neighbor resize instead of bilinear
};

// Style parameters recorded per view: normalized crop center, area scale,
// and the flip bit.
struct StyleParams {
    float center_x = 0.5f;
    float center_y = 0.5f;
    float scale = 1.0f;
    float flip = 0.0f;

    std::array<float, 4> as_array() const { return {center_x, center_y, scale, flip}; }
};

namespace detail {

inline float sample_pixel(const std::vector<float>& img, std::int64_t h, std::int64_t w,
                          std::int64_t y, std::int64_t x) {
    y = std::clamp<std::int64_t>(y, 0, h - 1);
    x = std::clamp<std::int64_t>(x, 0, w - 1);
    return img[static_cast<std::size_t>(y * w + x)];
}

// Resizes img[y0..y0+ch, x0..x0+cw] to out_h x out_w.
inline std::vector<float> resize_crop(const std::vector<float>& img, std::int64_t h,
                                      std::int64_t w, std::int64_t y0, std::int64_t x0,
                                      std::int64_t ch, std::int64_t cw, std::int64_t out_h,
                                      std::int64_t out_w, bool nearest) {
    std::vector<float> out(static_cast<std::size_t>(out_h * out_w));
    const double sy = static_cast<double>(ch) / static_cast<double>(out_h);
    const double sx = static_cast<double>(cw) / static_cast<double>(out_w);
    for (std::int64_t oy = 0; oy < out_h; ++oy) {
        // Half-pixel-center convention keeps an identity crop an exact copy.
        const double fy = (static_cast<double>(oy) + 0.5) * sy - 0.5;
        for (std::int64_t ox = 0; ox < out_w; ++ox) {
            const double fx = (static_cast<double>(ox) + 0.5) * sx - 0.5;
            float v;
            if (nearest) {
                v = sample_pixel(img, h, w, y0 + std::llround(fy), x0 + std::llround(fx));
            } else {
                const std::int64_t iy = static_cast<std::int64_t>(std::floor(fy));
                const std::int64_t ix = static_cast<std::int64_t>(std::floor(fx));
                const float ty = static_cast<float>(fy - static_cast<double>(iy));
                const float tx = static_cast<float>(fx - static_cast<double>(ix));
                const float p00 = sample_pixel(img, h, w, y0 + iy, x0 + ix);
                const float p01 = sample_pixel(img, h, w, y0 + iy, x0 + ix + 1);
                const float p10 = sample_pixel(img, h, w, y0 + iy + 1, x0 + ix);
                const float p11 = sample_pixel(img, h, w, y0 + iy + 1, x0 + ix + 1);
                v = (1 - ty) * ((1 - tx) * p00 + tx * p01) + ty * ((1 - tx) * p10 + tx * p11);
            }
            out[static_cast<std::size_t>(oy * out_w + ox)] = v;
        }
    }
    return out;
}

} // namespace detail

// Samples an area fraction in [scale_lo, 1] and a log-uniform aspect ratio,
// crops, and resizes back to (out_h, out_w). After 10 rejected proposals the
// full image is used (documented fallback).
inline std::pair<std::vector<float>, StyleParams> random_resized_crop(
    const std::vector<float>& img, std::int64_t h, std::int64_t w, const AugmentConfig& cfg,
    std::int64_t out_h, std::int64_t out_w, Rng& rng) {
    if (!(cfg.crop_scale_lo > 0.0) || cfg.crop_scale_lo > 1.0)
        throw PreconditionError("crop scale lower bound must lie in (0, 1]");
    if (!(cfg.crop_ratio_lo > 0.0) || cfg.crop_ratio_hi < cfg.crop_ratio_lo)
        throw PreconditionError("invalid crop ratio range");

    const double area = static_cast<double>(h * w);
    std::int64_t ch = h, cw = w, y0 = 0, x0 = 0;
    for (int attempt = 0; attempt < 10; ++attempt) {
        const double target = area * rng.uniform(cfg.crop_scale_lo, 1.0);
        const double ratio =
            std::exp(rng.uniform(std::log(cfg.crop_ratio_lo), std::log(cfg.crop_ratio_hi)));
        const auto pw = static_cast<std::int64_t>(std::llround(std::sqrt(target * ratio)));
        const auto ph = static_cast<std::int64_t>(std::llround(std::sqrt(target / ratio)));
        if (pw >= 1 && ph >= 1 && pw <= w && ph <= h) {
            ch = ph;
            cw = pw;
            y0 = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(h - ph + 1)));
            x0 = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(w - pw + 1)));
            break;
        }
    }

    StyleParams style;
    style.center_y = static_cast<float>((static_cast<double>(y0) + ch / 2.0) / h);
    style.center_x = static_cast<float>((static_cast<double>(x0) + cw / 2.0) / w);
    style.scale = static_cast<float>(static_cast<double>(ch * cw) / area);
    return {detail::resize_crop(img, h, w, y0, x0, ch, cw, out_h, out_w, cfg.nearest), style};
}

// Flips along the chosen axis with probability p; returns the flip bit.
inline bool random_flip(std::vector<float>& img, std::int64_t h, std::int64_t w, double p,
                        FlipAxis axis, Rng& rng) {
    if (p < 0.0 || p > 1.0) throw PreconditionError("flip probability must lie in [0,1]");
    if (!rng.bernoulli(p)) return false;
    if (axis == FlipAxis::Horizontal) {
        for (std::int64_t y = 0; y < h; ++y)
            for (std::int64_t x = 0; x < w / 2; ++x)
                std::swap(img[static_cast<std::size_t>(y * w + x)],
                          img[static_cast<std::size_t>(y * w + (w - 1 - x))]);
    } else {
        for (std::int64_t y = 0; y < h / 2; ++y)
            for (std::int64_t x = 0; x < w; ++x)
                std::swap(img[static_cast<std::size_t>(y * w + x)],
                          img[static_cast<std::size_t>((h - 1 - y) * w + x)]);
    }
    return true;
}

// J augmented views of one source image with recorded style parameters.
struct ViewSet {
    std::int64_t source_index = 0;
    std::vector<std::vector<float>> views;
    std::vector<StyleParams> style;
};

inline ViewSet make_views(const ImageDataset& ds, std::int64_t index, std::int64_t j_views,
                          const AugmentConfig& cfg, Rng& rng) {
    if (j_views < 1) throw PreconditionError("make_views requires J >= 1");
    ViewSet vs;
    vs.source_index = index;
    const std::vector<float> base(ds.image(index), ds.image(index) + ds.dim());
    for (std::int64_t j = 0; j < j_views; ++j) {
        auto [img, style] = random_resized_crop(base, ds.h, ds.w, cfg, ds.h, ds.w, rng);
        style.flip = random_flip(img, ds.h, ds.w, cfg.flip_p, cfg.flip_axis, rng) ? 1.0f : 0.0f;
        if (cfg.rebinarize) binarize(img);
        vs.views.push_back(std::move(img));
        vs.style.push_back(style);
    }
    return vs;
}

// ---------------------------------------------------------------------------
// Synthetic hierarchical-Gaussian data
// ---------------------------------------------------------------------------

struct SynthConfig {
    std::int64_t classes = 10;
    std::int64_t n_per_class = 500;
    std::int64_t j_views = 2;
    double gamma = 1.0;   // std of the class-center prior
    double sigma = 0.2;   // within-class (style) std
    double sigma_x = 0.1; // observation noise std
    std::int64_t d_z = 4;
    std::int64_t d_x = 20;
    std::uint64_t seed = 1;
};

// Full generative record: y -> z -> x with the true latents, class centers
// and style offsets delta = z - psi_y kept for oracle evaluation.
struct SynthDataset {
    SynthConfig cfg;
    std::vector<double> psi;      // [C, d_z]
    std::vector<std::int64_t> y;  // [n_sources]
    std::vector<double> z;        // [n_sources, J, d_z]
    std::vector<double> delta;    // [n_sources, J, d_z]
    std::vector<double> x;        // [n_sources, J, d_x]
    std::vector<double> w;        // [d_x, d_z], unit-norm columns
    std::vector<double> b;        // [d_x]

    std::int64_t n_sources() const { return cfg.classes * cfg.n_per_class; }
};

inline SynthDataset synth_generate(const SynthConfig& cfg) {
    if (cfg.classes < 1 || cfg.n_per_class < 1 || cfg.j_views < 1 || cfg.d_z < 1 || cfg.d_x < 1)
        throw PreconditionError("synth_generate: counts and dims must be positive");
    if (!(cfg.gamma > 0.0) || !(cfg.sigma >= 0.0) || !(cfg.sigma_x >= 0.0))
        throw PreconditionError("synth_generate: variances must be non-negative");

    SynthDataset ds;
    ds.cfg = cfg;
    Rng rng(cfg.seed);

    ds.psi.resize(static_cast<std::size_t>(cfg.classes * cfg.d_z));
    for (auto& v : ds.psi) v = cfg.gamma * rng.normal();

    // Mixing map: standard normal entries, columns normalized to unit length.
    ds.w.assign(static_cast<std::size_t>(cfg.d_x * cfg.d_z), 0.0);
    for (std::int64_t c = 0; c < cfg.d_z; ++c) {
        double norm = 0.0;
        for (std::int64_t r = 0; r < cfg.d_x; ++r) {
            const double v = rng.normal();
            ds.w[static_cast<std::size_t>(r * cfg.d_z + c)] = v;
            norm += v * v;
        }
        norm = std::sqrt(norm);
        for (std::int64_t r = 0; r < cfg.d_x; ++r)
            ds.w[static_cast<std::size_t>(r * cfg.d_z + c)] /= norm;
    }
    ds.b.resize(static_cast<std::size_t>(cfg.d_x));
    for (auto& v : ds.b) v = rng.normal();

    const std::int64_t n = ds.n_sources();
    ds.y.resize(static_cast<std::size_t>(n));
    ds.z.resize(static_cast<std::size_t>(n * cfg.j_views * cfg.d_z));
    ds.delta.resize(ds.z.size());
    ds.x.resize(static_cast<std::size_t>(n * cfg.j_views * cfg.d_x));

    for (std::int64_t s = 0; s < n; ++s) {
        const std::int64_t cls = s / cfg.n_per_class;
        ds.y[static_cast<std::size_t>(s)] = cls;
        const double* center = ds.psi.data() + cls * cfg.d_z;
        for (std::int64_t j = 0; j < cfg.j_views; ++j) {
            double* zrow = ds.z.data() + (s * cfg.j_views + j) * cfg.d_z;
            double* drow = ds.delta.data() + (s * cfg.j_views + j) * cfg.d_z;
            for (std::int64_t k = 0; k < cfg.d_z; ++k) {
                drow[k] = cfg.sigma * rng.normal();
                zrow[k] = center[k] + drow[k];
            }
            double* xrow = ds.x.data() + (s * cfg.j_views + j) * cfg.d_x;
            for (std::int64_t r = 0; r < cfg.d_x; ++r) {
                double acc = ds.b[static_cast<std::size_t>(r)];
                for (std::int64_t k = 0; k < cfg.d_z; ++k)
                    acc += ds.w[static_cast<std::size_t>(r * cfg.d_z + k)] * zrow[k];
                xrow[r] = acc + cfg.sigma_x * rng.normal();
            }
        }
    }
    return ds;
}

// Serialization to the checkpoint container (arrays x, z, psi, delta, y plus
// generator metadata).
inline void synth_save(const std::string& path, const SynthDataset& ds) {
    Checkpoint c;
    c.set_meta("kind", "synth_dataset");
    c.set_meta("classes", ds.cfg.classes);
    c.set_meta("n_per_class", ds.cfg.n_per_class);
    c.set_meta("j_views", ds.cfg.j_views);
    c.set_meta("d_z", ds.cfg.d_z);
    c.set_meta("d_x", ds.cfg.d_x);
    c.set_meta("gamma", std::to_string(ds.cfg.gamma));
    c.set_meta("sigma", std::to_string(ds.cfg.sigma));
    c.set_meta("sigma_x", std::to_string(ds.cfg.sigma_x));
    c.set_meta("seed", ds.cfg.seed);
    const std::int64_t n = ds.n_sources();
    c.put("x", Shape{n, ds.cfg.j_views, ds.cfg.d_x}, ds.x);
    c.put("z", Shape{n, ds.cfg.j_views, ds.cfg.d_z}, ds.z);
    c.put("psi", Shape{ds.cfg.classes, ds.cfg.d_z}, ds.psi);
    c.put("delta", Shape{n, ds.cfg.j_views, ds.cfg.d_z}, ds.delta);
    c.put("y", Shape{n}, ds.y);
    c.put("w", Shape{ds.cfg.d_x, ds.cfg.d_z}, ds.w);
    c.put("b", Shape{ds.cfg.d_x}, ds.b);
    c.save(path);
}

inline SynthDataset synth_load(const std::string& path) {
    Checkpoint c = Checkpoint::load(path);
    if (c.meta("kind").value_or("") != "synth_dataset")
        throw DataError("not a synthetic dataset file: " + path);
    SynthDataset ds;
    ds.cfg.classes = c.meta_i64("classes");
    ds.cfg.n_per_class = c.meta_i64("n_per_class");
    ds.cfg.j_views = c.meta_i64("j_views");
    ds.cfg.d_z = c.meta_i64("d_z");
    ds.cfg.d_x = c.meta_i64("d_x");
    ds.cfg.gamma = std::stod(c.require_meta("gamma"));
    ds.cfg.sigma = std::stod(c.require_meta("sigma"));
    ds.cfg.sigma_x = std::stod(c.require_meta("sigma_x"));
    ds.cfg.seed = c.meta_u64("seed");
    ds.x = c.get<double>("x");
    ds.z = c.get<double>("z");
    ds.psi = c.get<double>("psi");
    ds.delta = c.get<double>("delta");
    ds.y = c.get<std::int64_t>("y");
    ds.w = c.get<double>("w");
    ds.b = c.get<double>("b");
    return ds;
}

// Exact posterior of z under x = Wz + b + eps with z ~ N(0, prior_var I),
// eps ~ N(0, sigma_x2 I):
//   Sigma = (I/prior_var + W^T W / sigma_x2)^{-1},
//   mu    = Sigma W^T (x - b) / sigma_x2.
struct GaussianMoments {
    std::vector<double> mean;
    std::vector<double> cov; // row-major [d, d]
};

inline GaussianMoments exact_posterior_linear_gaussian(const std::vector<double>& x,
                                                       const std::vector<double>& w,
                                                       const std::vector<double>& b,
                                                       std::int64_t d_x, std::int64_t d_z,
                                                       double sigma_x2, double prior_var) {
    if (!(sigma_x2 > 0.0) || !(prior_var > 0.0))
        throw DomainError("exact_posterior_linear_gaussian: variances must be positive");
    if (static_cast<std::int64_t>(x.size()) != d_x ||
        static_cast<std::int64_t>(w.size()) != d_x * d_z ||
        static_cast<std::int64_t>(b.size()) != d_x)
        throw DimensionError("exact_posterior_linear_gaussian: size mismatch");

    using Mat = Eigen::MatrixXd;
    using Vec = Eigen::VectorXd;
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> W(
        w.data(), d_x, d_z);
    Vec r(d_x);
    for (std::int64_t i = 0; i < d_x; ++i) r(i) = x[static_cast<std::size_t>(i)] - b[static_cast<std::size_t>(i)];

    Mat precision = Mat::Identity(d_z, d_z) / prior_var + (W.transpose() * W) / sigma_x2;
    Eigen::LLT<Mat> llt(precision);
    if (llt.info() != Eigen::Success)
        throw NumericError("exact_posterior_linear_gaussian: singular precision matrix");
    Mat cov = llt.solve(Mat::Identity(d_z, d_z));
    Vec mu = cov * (W.transpose() * r) / sigma_x2;

    GaussianMoments out;
    out.mean.assign(mu.data(), mu.data() + d_z);
    out.cov.resize(static_cast<std::size_t>(d_z * d_z));
    for (std::int64_t i = 0; i < d_z; ++i)
        for (std::int64_t k = 0; k < d_z; ++k)
            out.cov[static_cast<std::size_t>(i * d_z + k)] = cov(i, k);
    return out;
}

} // namespace simvae
