// Copyright (c) 2026 the simvae authors
// SPDX-License-Identifier: Apache-2.0
//
// The training loop generalized over loss selectors, plus the flat
// key-value configuration grammar, metrics logging, checkpointing with
// exact resume, and frozen-representation export.

#pragma once

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "simvae/checkpoint.hpp"
#include "simvae/data.hpp"
#include "simvae/losses.hpp"
#include "simvae/nn.hpp"
#include "simvae/representation.hpp"

namespace simvae {

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

// Every trainable run is described by this flat configuration. The config
// file grammar is one `key = value` pair per line; '#' starts a comment;
// unknown keys are errors.
struct TrainConfig {
    // loss selection
    std::string loss = "simvae"; // simvae | vae | beta_vae | infonce | instance_disc
    std::string mode = "exact_elbo"; // simvae only: exact_elbo | algo1_literal

    // optimization
    double lr = 8e-5;
    std::int64_t batch_size = 128; // sources per step; each carries j_views views
    std::int64_t epochs = 5;
    std::int64_t j_views = 10;
    std::int64_t latent_dim = 10;
    double sigma2 = 0.15;   // prior variance around the cluster center
    double sigma_x2 = 0.02; // likelihood variance
    double beta = 1.0;      // beta_vae weight
    double tau = 0.7;       // infonce temperature
    double gamma2 = 0.0;    // >0: Gaussian center prior width; 0: uniform limit
    std::uint64_t seed = 1;
    std::int64_t batch_cap = 8192; // memory guard on batch_size * j_views

    // architecture (hidden widths, comma separated)
    std::string enc_hidden = "64,64";
    std::string dec_hidden = "64,64";

    // dataset selection
    std::string dataset = "synth"; // synth | mnist | idx
    std::string data_file;         // synth: load this file instead of generating
    std::int64_t data_limit = 0;   // keep only the first N sources (0 = all)
    std::string train_images = "train-images-idx3-ubyte";
    std::string train_labels = "train-labels-idx1-ubyte";
    std::string test_images = "t10k-images-idx3-ubyte";
    std::string test_labels = "t10k-labels-idx1-ubyte";

    // synthetic generator
    std::int64_t synth_classes = 10;
    std::int64_t synth_n_per_class = 50;
    std::int64_t synth_d_z = 4;
    std::int64_t synth_d_x = 20;
    double synth_gamma = 1.0;
    double synth_sigma = 0.2;
    double synth_sigma_x = 0.1;
    std::uint64_t synth_seed = 1;

    // augmentation (image datasets only; synthetic views come from the
    // generator itself)
    double crop_scale = 0.4;
    double crop_ratio_lo = 0.75;
    double crop_ratio_hi = 1.3;
    double flip_p = 0.5;
    std::string flip_axis = "horizontal"; // horizontal | vertical
    std::int64_t binarize_input = 1;      // threshold pixels at 0.5 on load

    // bookkeeping
    std::int64_t eval_every = 0;       // epochs between eval-hook calls (0 = off)
    std::int64_t checkpoint_every = 0; // epochs between periodic snapshots (0 = final only)
    std::string timing = "wall";       // wall | none (zero seconds column)
};

namespace detail {

// Single registry of config keys; parsing, serialization and diffing all
// walk this list so they can never drift apart.
template <typename Cfg, typename F>
void visit_config(Cfg& c, F&& f) {
    f("loss", c.loss);
    f("mode", c.mode);
    f("lr", c.lr);
    f("batch_size", c.batch_size);
    f("epochs", c.epochs);
    f("j_views", c.j_views);
    f("latent_dim", c.latent_dim);
    f("sigma2", c.sigma2);
    f("sigma_x2", c.sigma_x2);
    f("beta", c.beta);
    f("tau", c.tau);
    f("gamma2", c.gamma2);
    f("seed", c.seed);
    f("batch_cap", c.batch_cap);
    f("enc_hidden", c.enc_hidden);
    f("dec_hidden", c.dec_hidden);
    f("dataset", c.dataset);
    f("data_file", c.data_file);
    f("data_limit", c.data_limit);
    f("train_images", c.train_images);
    f("train_labels", c.train_labels);
    f("test_images", c.test_images);
    f("test_labels", c.test_labels);
    f("synth_classes", c.synth_classes);
    f("synth_n_per_class", c.synth_n_per_class);
    f("synth_d_z", c.synth_d_z);
    f("synth_d_x", c.synth_d_x);
    f("synth_gamma", c.synth_gamma);
    f("synth_sigma", c.synth_sigma);
    f("synth_sigma_x", c.synth_sigma_x);
    f("synth_seed", c.synth_seed);
    f("crop_scale", c.crop_scale);
    f("crop_ratio_lo", c.crop_ratio_lo);
    f("crop_ratio_hi", c.crop_ratio_hi);
    f("flip_p", c.flip_p);
    f("flip_axis", c.flip_axis);
    f("binarize_input", c.binarize_input);
    f("eval_every", c.eval_every);
    f("checkpoint_every", c.checkpoint_every);
    f("timing", c.timing);
}

inline void assign_config_value(const std::string& key, const std::string& value,
                                std::string& field) {
    (void)key;
    field = value;
}

inline void assign_config_value(const std::string& key, const std::string& value, double& field) {
    try {
        std::size_t used = 0;
        field = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
    } catch (const std::exception&) {
        throw ConfigError("config key " + key + " expects a number, got '" + value + "'");
    }
}

inline void assign_config_value(const std::string& key, const std::string& value,
                                std::int64_t& field) {
    try {
        std::size_t used = 0;
        field = std::stoll(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
    } catch (const std::exception&) {
        throw ConfigError("config key " + key + " expects an integer, got '" + value + "'");
    }
}

inline void assign_config_value(const std::string& key, const std::string& value,
                                std::uint64_t& field) {
    try {
        std::size_t used = 0;
        field = std::stoull(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
    } catch (const std::exception&) {
        throw ConfigError("config key " + key + " expects an unsigned integer, got '" + value +
                          "'");
    }
}

inline std::string config_value_str(const std::string& v) { return v; }
inline std::string config_value_str(std::int64_t v) { return std::to_string(v); }
inline std::string config_value_str(std::uint64_t v) { return std::to_string(v); }
inline std::string config_value_str(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

} // namespace detail

// Applies one key=value pair; unknown keys are rejected.
inline void config_set(TrainConfig& cfg, const std::string& key, const std::string& value) {
    bool found = false;
    detail::visit_config(cfg, [&](const char* name, auto& field) {
        if (key == name) {
            detail::assign_config_value(key, value, field);
            found = true;
        }
    });
    if (!found) throw ConfigError("unknown config key: " + key);
}

// Parses `key = value` lines. Duplicate keys within one document are errors.
inline std::vector<std::pair<std::string, std::string>> parse_config_text(
    const std::string& text) {
    std::vector<std::pair<std::string, std::string>> out;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        const std::string t = detail::trim(line);
        if (t.empty()) continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) +
                              " is not a key=value pair: '" + t + "'");
        const std::string key = detail::trim(t.substr(0, eq));
        const std::string value = detail::trim(t.substr(eq + 1));
        if (key.empty())
            throw ConfigError("config line " + std::to_string(lineno) + " has an empty key");
        for (const auto& [k, v] : out)
            if (k == key)
                throw ConfigError("duplicate config key '" + key + "' at line " +
                                  std::to_string(lineno));
        out.emplace_back(key, value);
    }
    return out;
}

inline TrainConfig config_from_text(const std::string& text) {
    TrainConfig cfg;
    for (const auto& [k, v] : parse_config_text(text)) config_set(cfg, k, v);
    return cfg;
}

inline TrainConfig config_from_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file: " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return config_from_text(ss.str());
}

// Serializes every key in registry order (the recorded-run snapshot format).
inline std::string config_to_text(const TrainConfig& cfg) {
    std::string out;
    detail::visit_config(const_cast<TrainConfig&>(cfg), [&](const char* name, auto& field) {
        out += name;
        out += " = ";
        out += detail::config_value_str(field);
        out += "\n";
    });
    return out;
}

inline std::map<std::string, std::string> config_to_map(const TrainConfig& cfg) {
    std::map<std::string, std::string> out;
    detail::visit_config(const_cast<TrainConfig&>(cfg), [&](const char* name, auto& field) {
        out[name] = detail::config_value_str(field);
    });
    return out;
}

inline void validate_config(const TrainConfig& cfg) {
    const auto one_of = [](const std::string& v, std::initializer_list<const char*> allowed) {
        for (const char* a : allowed)
            if (v == a) return true;
        return false;
    };
    if (!one_of(cfg.loss, {"simvae", "vae", "beta_vae", "infonce", "instance_disc"}))
        throw ConfigError("loss must be one of simvae|vae|beta_vae|infonce|instance_disc, got '" +
                          cfg.loss + "'");
    if (!one_of(cfg.mode, {"exact_elbo", "algo1_literal"}))
        throw ConfigError("mode must be exact_elbo or algo1_literal, got '" + cfg.mode + "'");
    if (!one_of(cfg.dataset, {"synth", "mnist", "idx"}))
        throw ConfigError("dataset must be synth|mnist|idx, got '" + cfg.dataset + "'");
    if (!one_of(cfg.flip_axis, {"horizontal", "vertical"}))
        throw ConfigError("flip_axis must be horizontal or vertical");
    if (!one_of(cfg.timing, {"wall", "none"}))
        throw ConfigError("timing must be wall or none");
    if (!(cfg.lr > 0.0)) throw ConfigError("lr must be positive");
    if (cfg.batch_size < 1) throw ConfigError("batch_size must be at least 1");
    if (cfg.epochs < 0) throw ConfigError("epochs must be non-negative");
    if (cfg.j_views < 1) throw ConfigError("j_views must be at least 1");
    if (cfg.loss == "infonce" && cfg.j_views < 2)
        throw ConfigError("infonce requires j_views >= 2");
    if (cfg.latent_dim < 1) throw ConfigError("latent_dim must be at least 1");
    if (!(cfg.sigma2 > 0.0)) throw ConfigError("sigma2 must be positive");
    if (!(cfg.sigma_x2 > 0.0)) throw ConfigError("sigma_x2 must be positive");
    if (!(cfg.beta > 0.0)) throw ConfigError("beta must be positive");
    if (!(cfg.tau > 0.0)) throw ConfigError("tau must be positive");
    if (cfg.gamma2 < 0.0) throw ConfigError("gamma2 must be non-negative (0 = uniform prior)");
    if (cfg.batch_cap < 1) throw ConfigError("batch_cap must be at least 1");
}

// ---------------------------------------------------------------------------
// Training data
// ---------------------------------------------------------------------------

// A loaded dataset in one of two shapes: a synthetic set whose J views per
// source come from the generator itself, or an image set whose views are
// produced by the augmentation pipeline.
struct TrainData {
    std::optional<SynthDataset> synth;
    std::optional<ImageDataset> images;
    std::optional<ImageDataset> test_images; // image datasets only
    AugmentConfig augment;
    std::int64_t limit = 0; // 0 = all sources
    std::string id;

    std::int64_t n_sources() const {
        const std::int64_t full =
            synth ? synth->n_sources() : (images ? images->n : 0);
        return limit > 0 && limit < full ? limit : full;
    }

    std::int64_t input_dim() const {
        if (synth) return synth->cfg.d_x;
        if (images) return images->dim();
        return 0;
    }

    std::int64_t label(std::int64_t source) const {
        return synth ? synth->y[static_cast<std::size_t>(source)]
                     : images->labels[static_cast<std::size_t>(source)];
    }

    std::int64_t num_classes() const {
        std::int64_t hi = 0;
        for (std::int64_t s = 0; s < n_sources(); ++s) hi = std::max(hi, label(s));
        return hi + 1;
    }
};

inline TrainData load_train_data(const TrainConfig& cfg) {
    validate_config(cfg);
    TrainData data;
    data.limit = cfg.data_limit;
    if (cfg.dataset == "synth") {
        if (!cfg.data_file.empty()) {
            data.synth = synth_load(cfg.data_file);
            data.id = "synth:" + cfg.data_file;
        } else {
            SynthConfig sc;
            sc.classes = cfg.synth_classes;
            sc.n_per_class = cfg.synth_n_per_class;
            sc.j_views = cfg.j_views;
            sc.gamma = cfg.synth_gamma;
            sc.sigma = cfg.synth_sigma;
            sc.sigma_x = cfg.synth_sigma_x;
            sc.d_z = cfg.synth_d_z;
            sc.d_x = cfg.synth_d_x;
            sc.seed = cfg.synth_seed;
            data.synth = synth_generate(sc);
            data.id = "synth:seed=" + std::to_string(sc.seed) +
                      ";classes=" + std::to_string(sc.classes) +
                      ";n_per_class=" + std::to_string(sc.n_per_class);
        }
        if (cfg.j_views > data.synth->cfg.j_views)
            throw ConfigError("j_views = " + std::to_string(cfg.j_views) +
                              " exceeds the " + std::to_string(data.synth->cfg.j_views) +
                              " views stored in the synthetic dataset");
    } else {
        const std::string root = data_dir() + "/";
        data.images = load_idx_dataset(root + cfg.train_images, root + cfg.train_labels,
                                       cfg.dataset);
        try {
            data.test_images =
                load_idx_dataset(root + cfg.test_images, root + cfg.test_labels, cfg.dataset);
        } catch (const DataError&) {
            // A missing test split only matters at evaluation time.
        }
        if (cfg.binarize_input != 0) {
            binarize(data.images->pixels);
            data.images->binary = true;
            if (data.test_images) {
                binarize(data.test_images->pixels);
                data.test_images->binary = true;
            }
        }
        data.augment.crop_scale_lo = cfg.crop_scale;
        data.augment.crop_ratio_lo = cfg.crop_ratio_lo;
        data.augment.crop_ratio_hi = cfg.crop_ratio_hi;
        data.augment.flip_p = cfg.flip_p;
        data.augment.flip_axis =
            cfg.flip_axis == "vertical" ? FlipAxis::Vertical : FlipAxis::Horizontal;
        data.augment.rebinarize = cfg.binarize_input != 0;
        data.id = cfg.dataset + ":" + cfg.train_images;
    }
    return data;
}

namespace detail {

// J views of one source as float rows. Synthetic views are fixed by the
// generator; image views are drawn from the per-(epoch, source) substream.
inline std::vector<std::vector<float>> source_views(const TrainData& data, std::int64_t source,
                                                    std::int64_t j_views, std::uint64_t master,
                                                    std::int64_t epoch) {
    std::vector<std::vector<float>> out;
    out.reserve(static_cast<std::size_t>(j_views));
    if (data.synth) {
        const auto& ds = *data.synth;
        for (std::int64_t j = 0; j < j_views; ++j) {
            const double* row = ds.x.data() + (source * ds.cfg.j_views + j) * ds.cfg.d_x;
            out.emplace_back(row, row + ds.cfg.d_x);
        }
    } else {
        Rng rng = Rng(master).fork(stream::kAugment, static_cast<std::uint64_t>(epoch),
                                   static_cast<std::uint64_t>(source));
        ViewSet vs = make_views(*data.images, source, j_views, data.augment, rng);
        out = std::move(vs.views);
    }
    return out;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Training loop
// ---------------------------------------------------------------------------

inline constexpr const char* kMetricsHeader =
    "epoch,step,loss_total,loss_recon,loss_entropy,loss_prior,loss_extra,lr,seconds";

struct TrainResult {
    std::string checkpoint_path;
    std::string metrics_path;
    std::vector<double> epoch_totals;
    std::int64_t steps = 0;
    std::int64_t epochs_run = 0; // absolute epoch counter after this call
    std::string note;
};

// Called every eval_every epochs when configured.
using EvalHook = std::function<void(std::int64_t epoch, const Model<float>& model)>;

namespace detail {

struct BatchLoss {
    double total = 0, recon = 0, entropy = 0, prior = 0, extra = 0;
};

// Forward + loss for one batch of sources. Discriminative losses skip the
// decoder and read the posterior mean.
inline LossBreakdown<float> batch_loss(const TrainConfig& cfg, Model<float>& model,
                                       Tensor<float>* w_psi,
                                       const std::vector<std::int64_t>& sources,
                                       const TrainData& data, std::int64_t epoch,
                                       std::int64_t batch_index) {
    const std::int64_t b = static_cast<std::int64_t>(sources.size());
    const std::int64_t d = data.input_dim();
    const std::int64_t j = cfg.j_views;
    Rng noise = Rng(cfg.seed).fork(stream::kSample, static_cast<std::uint64_t>(epoch),
                                   static_cast<std::uint64_t>(batch_index));

    // Gather all views first: view-major [j][b, d] matrices.
    std::vector<Tensor<float>> xs;
    xs.reserve(static_cast<std::size_t>(j));
    {
        std::vector<std::vector<float>> flat(static_cast<std::size_t>(j));
        for (auto& v : flat) v.resize(static_cast<std::size_t>(b * d));
        for (std::int64_t i = 0; i < b; ++i) {
            auto views = source_views(data, sources[static_cast<std::size_t>(i)], j, cfg.seed,
                                      epoch);
            for (std::int64_t k = 0; k < j; ++k)
                std::copy(views[static_cast<std::size_t>(k)].begin(),
                          views[static_cast<std::size_t>(k)].end(),
                          flat[static_cast<std::size_t>(k)].begin() + i * d);
        }
        for (std::int64_t k = 0; k < j; ++k)
            xs.emplace_back(Shape{b, d}, std::move(flat[static_cast<std::size_t>(k)]));
    }

    if (cfg.loss == "simvae") {
        std::vector<ViewTerm<float>> views;
        views.reserve(xs.size());
        for (auto& x : xs) {
            auto post = encode(model, x);
            auto eps = gaussian_sample<float>(noise, Shape{b, cfg.latent_dim});
            auto z = reparameterize(post, eps);
            views.push_back({x, decode(model, z), post, z});
        }
        const double gamma2 =
            cfg.gamma2 > 0.0 ? cfg.gamma2 : std::numeric_limits<double>::infinity();
        return simvae_loss(views, cfg.sigma2, cfg.sigma_x2, parse_simvae_mode(cfg.mode), gamma2);
    }
    if (cfg.loss == "vae" || cfg.loss == "beta_vae") {
        const double beta = cfg.loss == "vae" ? 1.0 : cfg.beta;
        // Views are treated as independent data; the per-view losses average.
        LossBreakdown<float> acc;
        bool first = true;
        for (auto& x : xs) {
            auto post = encode(model, x);
            auto eps = gaussian_sample<float>(noise, Shape{b, cfg.latent_dim});
            auto z = reparameterize(post, eps);
            auto one = vae_loss(x, decode(model, z), post, cfg.sigma_x2, beta);
            if (first) {
                acc = one;
                first = false;
            } else {
                acc.total = add(acc.total, one.total);
                acc.recon = add(acc.recon, one.recon);
                acc.extra[0].second = add(acc.extra[0].second, one.extra[0].second);
            }
        }
        const auto scale = static_cast<float>(1.0 / static_cast<double>(j));
        acc.total = mul(acc.total, scale);
        acc.recon = mul(acc.recon, scale);
        acc.extra[0].second = mul(acc.extra[0].second, scale);
        return acc;
    }
    if (cfg.loss == "infonce") {
        auto mu_a = encode(model, xs[0]).mu;
        auto mu_b = encode(model, xs[1]).mu;
        return info_nce_loss(mu_a, mu_b, cfg.tau);
    }
    if (cfg.loss == "instance_disc") {
        if (!w_psi) throw PreconditionError("instance_disc requires the w_psi parameter");
        // Stack all views into one batch whose targets repeat source ids.
        Tensor<float> z = encode(model, xs[0]).mu;
        std::vector<std::int64_t> targets = sources;
        for (std::int64_t k = 1; k < j; ++k) {
            z = vstack(z, encode(model, xs[static_cast<std::size_t>(k)]).mu);
            targets.insert(targets.end(), sources.begin(), sources.end());
        }
        return instance_discrimination_loss(z, targets, *w_psi);
    }
    throw ConfigError("unknown loss: " + cfg.loss);
}

inline void require_finite_loss(const LossBreakdown<float>& l, std::int64_t epoch,
                                std::int64_t batch) {
    const auto bad = [](const Tensor<float>& t) {
        return !std::isfinite(static_cast<double>(t.value()));
    };
    const char* term = nullptr;
    if (bad(l.recon)) term = "recon";
    else if (bad(l.entropy)) term = "entropy";
    else if (bad(l.prior)) term = "prior";
    else if (bad(l.total)) term = "total";
    if (term)
        throw NumericError("non-finite loss term '" + std::string(term) + "' at epoch " +
                           std::to_string(epoch) + ", batch " + std::to_string(batch) +
                           "; no parameter update applied");
}

inline std::string format_metrics_row(std::int64_t epoch, std::int64_t step,
                                      const BatchLoss& mean, double lr, double seconds) {
    char buf[320];
    std::snprintf(buf, sizeof buf, "%lld,%lld,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.3f",
                  static_cast<long long>(epoch), static_cast<long long>(step), mean.total,
                  mean.recon, mean.entropy, mean.prior, mean.extra, lr, seconds);
    return buf;
}

// Snapshot = model + optional w_psi + Adam moments + the full config.
inline void save_snapshot(const std::string& path, const TrainConfig& cfg,
                          const Model<float>& model, const Tensor<float>* w_psi,
                          const AdamState<float>& adam, std::int64_t epoch, std::int64_t step,
                          const TrainData& data) {
    Checkpoint c;
    c.set_meta("kind", "model_snapshot");
    put_model(c, model);
    auto names = model.parameter_names();
    if (w_psi) {
        c.put("instdisc.w", *w_psi);
        names.push_back("instdisc.w");
    }
    c.set_meta("adam.t", adam.t);
    std::vector<Tensor<float>> params = model.parameters();
    if (w_psi) params.push_back(*w_psi);
    for (std::size_t i = 0; i < params.size(); ++i) {
        c.put("adam.m." + names[i], params[i].shape(), adam.m[i]);
        c.put("adam.v." + names[i], params[i].shape(), adam.v[i]);
    }
    c.set_meta("train.epoch", epoch);
    c.set_meta("train.step", step);
    c.set_meta("data.id", data.id);
    c.set_meta("data.n_sources", data.n_sources());
    c.set_meta("data.input_dim", data.input_dim());
    for (const auto& [k, v] : config_to_map(cfg)) c.set_meta("config." + k, v);
    c.save(path);
}

inline std::int64_t effective_batch_size(const TrainConfig& cfg) {
    if (cfg.batch_size * cfg.j_views <= cfg.batch_cap) return cfg.batch_size;
    const std::int64_t reduced = std::max<std::int64_t>(1, cfg.batch_cap / cfg.j_views);
    std::fprintf(stderr,
                 "warning: batch_size %lld x %lld views exceeds batch_cap %lld; using %lld\n",
                 static_cast<long long>(cfg.batch_size), static_cast<long long>(cfg.j_views),
                 static_cast<long long>(cfg.batch_cap), static_cast<long long>(reduced));
    return reduced;
}

inline TrainResult train_loop(const TrainConfig& cfg, const TrainData& data,
                              const std::string& out_dir, Model<float>& model,
                              Tensor<float>* w_psi, AdamState<float>& adam,
                              std::int64_t start_epoch, std::int64_t start_step,
                              const EvalHook& hook) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    const std::string metrics_path = out_dir + "/metrics.csv";
    const bool append = start_epoch > 0 && fs::exists(metrics_path);
    std::ofstream metrics(metrics_path, append ? std::ios::app : std::ios::out);
    if (!metrics) throw DataError("cannot open metrics file: " + metrics_path);
    if (!append) metrics << kMetricsHeader << "\n";

    std::vector<Tensor<float>> params = model.parameters();
    if (w_psi) params.push_back(*w_psi);
    AdamConfig opt;
    opt.lr = cfg.lr;

    const std::int64_t n = data.n_sources();
    if (n < 1) throw DataError("training dataset is empty");
    const std::int64_t bsz = effective_batch_size(cfg);

    TrainResult result;
    result.metrics_path = metrics_path;
    std::int64_t step = start_step;

    for (std::int64_t epoch = start_epoch + 1; epoch <= cfg.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();

        // Seeded Fisher-Yates shuffle of source order.
        std::vector<std::int64_t> order(static_cast<std::size_t>(n));
        for (std::int64_t i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
        Rng shuffle = Rng(cfg.seed).fork(stream::kShuffle, static_cast<std::uint64_t>(epoch));
        for (std::int64_t i = n - 1; i > 0; --i) {
            const auto k = static_cast<std::int64_t>(
                shuffle.below(static_cast<std::uint64_t>(i + 1)));
            std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(k)]);
        }

        BatchLoss sums;
        double weight = 0.0;
        std::int64_t batch_index = 0;
        for (std::int64_t at = 0; at < n; at += bsz, ++batch_index) {
            const std::int64_t take = std::min(bsz, n - at);
            if (cfg.loss == "infonce" && take < 2) continue; // cannot contrast a single source
            std::vector<std::int64_t> batch(order.begin() + at, order.begin() + at + take);

            auto loss = batch_loss(cfg, model, w_psi, batch, data, epoch, batch_index);
            require_finite_loss(loss, epoch, batch_index);

            zero_grads(params);
            backward(loss.total);
            adam_step(params, adam, opt);
            ++step;

            const double w = static_cast<double>(take);
            const double total = loss.total.value();
            const double recon = loss.recon.value();
            const double entropy = loss.entropy.value();
            const double prior = loss.prior.value();
            sums.total += w * total;
            sums.recon += w * recon;
            sums.entropy += w * entropy;
            sums.prior += w * prior;
            sums.extra += w * (total - recon - entropy - prior);
            weight += w;
        }

        BatchLoss epoch_mean;
        if (weight > 0) {
            epoch_mean = {sums.total / weight, sums.recon / weight, sums.entropy / weight,
                          sums.prior / weight, sums.extra / weight};
        }
        const double seconds =
            cfg.timing == "wall"
                ? std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()
                : 0.0;
        metrics << format_metrics_row(epoch, step, epoch_mean, cfg.lr, seconds) << "\n";
        metrics.flush();
        result.epoch_totals.push_back(epoch_mean.total);

        if (cfg.checkpoint_every > 0 && epoch % cfg.checkpoint_every == 0 && epoch < cfg.epochs)
            save_snapshot(out_dir + "/checkpoint_epoch" + std::to_string(epoch) + ".svae", cfg,
                          model, w_psi, adam, epoch, step, data);
        if (hook && cfg.eval_every > 0 && epoch % cfg.eval_every == 0) hook(epoch, model);
    }

    result.steps = step;
    result.epochs_run = cfg.epochs;
    result.checkpoint_path = out_dir + "/model.svae";
    save_snapshot(result.checkpoint_path, cfg, model, w_psi, adam, cfg.epochs, step, data);
    return result;
}

inline MlpSpec encoder_spec(const TrainConfig& cfg, std::int64_t input_dim) {
    auto widths = detail::widths_from_string(cfg.enc_hidden);
    widths.insert(widths.begin(), input_dim);
    widths.push_back(2 * cfg.latent_dim);
    return MlpSpec::with_relu_hidden(widths);
}

inline MlpSpec decoder_spec(const TrainConfig& cfg, std::int64_t input_dim) {
    auto widths = detail::widths_from_string(cfg.dec_hidden);
    widths.insert(widths.begin(), cfg.latent_dim);
    widths.push_back(input_dim);
    return MlpSpec::with_relu_hidden(widths);
}

} // namespace detail

// Fresh training run: initializes the model from the seed's init substream,
// runs cfg.epochs epochs, writes metrics.csv and model.svae under out_dir.
inline TrainResult train(const TrainConfig& cfg, const TrainData& data,
                         const std::string& out_dir, const EvalHook& hook = {}) {
    validate_config(cfg);
    Rng init = Rng(cfg.seed).fork(stream::kInit);
    Model<float> model = Model<float>::build(detail::encoder_spec(cfg, data.input_dim()),
                                             detail::decoder_spec(cfg, data.input_dim()),
                                             cfg.latent_dim, init);
    std::optional<Tensor<float>> w_psi;
    if (cfg.loss == "instance_disc") {
        Rng wr = Rng(cfg.seed).fork(stream::kInit, 1);
        auto t = gaussian_sample<float>(wr, Shape{data.n_sources(), cfg.latent_dim});
        std::vector<float> vals = t.data();
        const auto scale = static_cast<float>(1.0 / std::sqrt(double(cfg.latent_dim)));
        for (auto& v : vals) v *= scale;
        w_psi = Tensor<float>::parameter(Shape{data.n_sources(), cfg.latent_dim}, vals);
    }
    std::vector<Tensor<float>> params = model.parameters();
    if (w_psi) params.push_back(*w_psi);
    AdamState<float> adam = AdamState<float>::init(params);
    return detail::train_loop(cfg, data, out_dir, model, w_psi ? &*w_psi : nullptr, adam, 0, 0,
                              hook);
}

// Continues a snapshot. The stored config must match the requested one on
// every key except epochs; a finished run is a no-op.
inline TrainResult resume(const std::string& checkpoint_path, const TrainConfig& cfg,
                          const TrainData& data, const std::string& out_dir,
                          const EvalHook& hook = {}) {
    validate_config(cfg);
    Checkpoint c = Checkpoint::load(checkpoint_path);
    if (c.meta("kind").value_or("") != "model_snapshot")
        throw CheckpointError(CheckpointError::Kind::NameMismatch,
                              "not a model snapshot: " + checkpoint_path);

    std::string diff;
    for (const auto& [k, v] : config_to_map(cfg)) {
        if (k == "epochs") continue;
        const std::string stored = c.meta("config." + k).value_or("<missing>");
        if (stored != v) diff += "  " + k + ": checkpoint=" + stored + " requested=" + v + "\n";
    }
    if (!diff.empty())
        throw ConfigError("refusing to resume; configuration differs from checkpoint:\n" + diff);

    const std::int64_t done = c.meta_i64("train.epoch");
    const std::int64_t step = c.meta_i64("train.step");
    if (done >= cfg.epochs) {
        TrainResult r;
        r.checkpoint_path = checkpoint_path;
        r.epochs_run = done;
        r.steps = step;
        r.note = "run already finished at epoch " + std::to_string(done) + "; nothing to do";
        return r;
    }

    AdamState<float> adam;
    Model<float> model = get_model<float>(c);
    std::optional<Tensor<float>> w_psi;
    std::vector<std::string> names = model.parameter_names();
    if (cfg.loss == "instance_disc") {
        auto vals = c.get<float>("instdisc.w");
        w_psi = Tensor<float>::parameter(Shape{data.n_sources(), cfg.latent_dim}, vals);
        names.push_back("instdisc.w");
    }
    std::vector<Tensor<float>> params = model.parameters();
    if (w_psi) params.push_back(*w_psi);
    adam = AdamState<float>::init(params);
    adam.t = c.meta_i64("adam.t");
    for (std::size_t i = 0; i < params.size(); ++i) {
        adam.m[i] = c.get<float>("adam.m." + names[i]);
        adam.v[i] = c.get<float>("adam.v." + names[i]);
    }
    return detail::train_loop(cfg, data, out_dir, model, w_psi ? &*w_psi : nullptr, adam, done,
                              step, hook);
}

// ---------------------------------------------------------------------------
// Representation export
// ---------------------------------------------------------------------------

// Posterior representations for every datum, with no augmentation. Rows for
// synthetic data are (source, view) pairs with the true style offsets
// attached; rows for image data are the raw (binarized) images.
inline RepresentationTable export_representations(const Model<float>& model,
                                                  const TrainData& data, bool use_mean = true,
                                                  std::uint64_t seed = 1,
                                                  bool test_split = false) {
    const std::int64_t d_in = data.input_dim();
    if (model.encoder.in_dim() != d_in)
        throw DimensionError("encoder expects input dim " + std::to_string(model.encoder.in_dim()) +
                             " but dataset provides " + std::to_string(d_in));

    RepresentationTable table;
    table.d = model.latent_dim;
    table.dataset_id = data.id + (test_split ? ":test" : ":train");
    Rng noise = Rng(seed).fork(stream::kEval, 7);

    std::vector<float> rows;
    if (data.synth) {
        if (test_split)
            throw DataError("synthetic datasets have no separate test split");
        const auto& ds = *data.synth;
        const std::int64_t n_src = data.n_sources();
        const std::int64_t j = ds.cfg.j_views;
        table.n = n_src * j;
        table.s = ds.cfg.d_z;
        rows.resize(static_cast<std::size_t>(table.n * d_in));
        table.y.resize(static_cast<std::size_t>(table.n));
        table.style.resize(static_cast<std::size_t>(table.n * table.s));
        for (std::int64_t src = 0; src < n_src; ++src)
            for (std::int64_t v = 0; v < j; ++v) {
                const std::int64_t r = src * j + v;
                const double* xrow = ds.x.data() + (src * j + v) * ds.cfg.d_x;
                for (std::int64_t k = 0; k < d_in; ++k)
                    rows[static_cast<std::size_t>(r * d_in + k)] = static_cast<float>(xrow[k]);
                table.y[static_cast<std::size_t>(r)] = ds.y[static_cast<std::size_t>(src)];
                const double* drow = ds.delta.data() + (src * j + v) * ds.cfg.d_z;
                for (std::int64_t k = 0; k < table.s; ++k)
                    table.style[static_cast<std::size_t>(r * table.s + k)] =
                        static_cast<float>(drow[k]);
            }
    } else {
        const ImageDataset* ds = test_split ? (data.test_images ? &*data.test_images : nullptr)
                                            : &*data.images;
        if (!ds) throw DataError("requested test split is not loaded");
        const std::int64_t n = test_split ? ds->n : data.n_sources();
        table.n = n;
        table.s = 0;
        rows.assign(ds->pixels.begin(), ds->pixels.begin() + n * d_in);
        table.y.assign(ds->labels.begin(), ds->labels.begin() + n);
    }

    table.z.resize(static_cast<std::size_t>(table.n * table.d));
    const std::int64_t chunk = 512;
    for (std::int64_t at = 0; at < table.n; at += chunk) {
        const std::int64_t take = std::min(chunk, table.n - at);
        std::vector<float> block(rows.begin() + at * d_in, rows.begin() + (at + take) * d_in);
        Tensor<float> x(Shape{take, d_in}, std::move(block));
        auto post = encode(model, x);
        std::vector<float> zvals;
        if (use_mean) {
            zvals = post.mu.data();
        } else {
            auto eps = gaussian_sample<float>(noise, Shape{take, table.d});
            zvals = reparameterize(post, eps).data();
        }
        std::copy(zvals.begin(), zvals.end(), table.z.begin() + at * table.d);
    }
    table.validate();
    return table;
}

} // namespace simvae
