// Copyright (c) 2026 the simvae authors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line entry point: wires config files to training, evaluation,
// generation, and verification subcommands.
//
// Exit codes: 0 success, 1 usage error, 2 runtime error.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "simvae/data.hpp"
#include "simvae/eval.hpp"
#include "simvae/image_io.hpp"
#include "simvae/losses.hpp"
#include "simvae/ssl_model.hpp"
#include "simvae/training.hpp"

namespace {

using namespace simvae;

struct CommonArgs {
    std::string config_path;
    std::vector<std::string> sets;
    std::string out = "runs/out";
    std::uint64_t seed = 0;
    bool seed_given = false;
    int threads = 1;
};

void add_common(CLI::App* sub, CommonArgs& args, const std::string& default_out) {
    args.out = default_out;
    sub->add_option("--config", args.config_path, "Config file (flat key = value lines)");
    sub->add_option("--set", args.sets, "Override one config key, e.g. --set lr=1e-4")
        ->take_all();
    sub->add_option("--out", args.out, "Output directory")->capture_default_str();
    sub->add_option("--seed", args.seed, "Override the run seed")
        ->each([&args](const std::string&) { args.seed_given = true; });
    sub->add_option("--threads", args.threads, "Worker threads (1 = bit-reproducible)")
        ->capture_default_str();
}

TrainConfig merge_config(const CommonArgs& args) {
    TrainConfig cfg =
        args.config_path.empty() ? TrainConfig{} : config_from_file(args.config_path);
    for (const auto& s : args.sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos || eq == 0)
            throw ConfigError("--set expects KEY=VALUE, got '" + s + "'");
        config_set(cfg, s.substr(0, eq), s.substr(eq + 1));
    }
    if (args.seed_given) cfg.seed = args.seed;
    if (args.threads < 1) throw ConfigError("--threads must be at least 1");
    if (args.threads > 1)
        std::fprintf(stderr, "note: this build runs data work serially; --threads=%d accepted "
                             "but execution stays single-threaded\n",
                     args.threads);
    validate_config(cfg);
    return cfg;
}

// Recorded-run provenance: the merged config is written next to the outputs.
void write_config_snapshot(const std::string& out_dir, const TrainConfig& cfg) {
    std::filesystem::create_directories(out_dir);
    std::ofstream f(out_dir + "/config.txt");
    if (!f) throw DataError("cannot write config snapshot in " + out_dir);
    f << config_to_text(cfg);
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

int cmd_train(const CommonArgs& args, const std::string& resume_path) {
    const TrainConfig cfg = merge_config(args);
    write_config_snapshot(args.out, cfg);
    const TrainData data = load_train_data(cfg);
    const TrainResult res = resume_path.empty() ? train(cfg, data, args.out)
                                                : resume(resume_path, cfg, data, args.out);
    if (!res.note.empty()) {
        std::cout << res.note << "\n";
        return 0;
    }
    std::cout << "trained " << res.epochs_run << " epochs (" << res.steps << " steps) on "
              << data.id << "\n";
    std::cout << "checkpoint: " << res.checkpoint_path << "\n";
    std::cout << "metrics:    " << res.metrics_path << "\n";
    if (!res.epoch_totals.empty())
        std::cout << "final epoch-mean loss: " << res.epoch_totals.back() << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------------

int cmd_synth(const CommonArgs& args) {
    TrainConfig cfg = merge_config(args);
    if (args.seed_given) cfg.synth_seed = args.seed;
    write_config_snapshot(args.out, cfg);
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
    const SynthDataset ds = synth_generate(sc);
    const std::string path = args.out + "/synth.svae";
    synth_save(path, ds);
    std::cout << "wrote " << ds.n_sources() << " sources x " << sc.j_views << " views to "
              << path << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// export-reps
// ---------------------------------------------------------------------------

Model<float> load_model(const std::string& checkpoint) {
    Checkpoint c = Checkpoint::load(checkpoint);
    return get_model<float>(c);
}

int cmd_export_reps(const CommonArgs& args, const std::string& checkpoint, bool sample,
                    const std::string& split) {
    const TrainConfig cfg = merge_config(args);
    write_config_snapshot(args.out, cfg);
    const TrainData data = load_train_data(cfg);
    const Model<float> model = load_model(checkpoint);
    RepresentationTable table =
        export_representations(model, data, !sample, cfg.seed, split == "test");
    table.checkpoint_id = checkpoint;
    const std::string path = args.out + "/representations.svae";
    save_table(path, table);
    std::cout << "wrote " << table.n << " x " << table.d << " representations to " << path
              << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

struct EvalArgs {
    std::string checkpoint;
    std::int64_t probe_epochs = 200;
    double probe_lr = 3e-4;
    std::int64_t mlp_hidden = 256;
    std::int64_t gmm_init = 10;
    std::int64_t kmax = 15;
};

// Seeded row shuffle + 80/20 split for datasets without a provided test split.
std::pair<RepresentationTable, RepresentationTable> split_table(const RepresentationTable& t,
                                                                std::uint64_t seed) {
    std::vector<std::int64_t> order(static_cast<std::size_t>(t.n));
    for (std::int64_t i = 0; i < t.n; ++i) order[static_cast<std::size_t>(i)] = i;
    Rng rng = Rng(seed).fork(stream::kEval, 50);
    for (std::int64_t i = t.n - 1; i > 0; --i) {
        const auto k = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(i + 1)));
        std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(k)]);
    }
    const std::int64_t n_train = t.n * 4 / 5;
    RepresentationTable a, b;
    for (auto* out : {&a, &b}) {
        out->d = t.d;
        out->s = t.s;
        out->checkpoint_id = t.checkpoint_id;
        out->dataset_id = t.dataset_id;
    }
    for (std::int64_t i = 0; i < t.n; ++i) {
        RepresentationTable& dst = i < n_train ? a : b;
        const std::int64_t src = order[static_cast<std::size_t>(i)];
        dst.z.insert(dst.z.end(), t.row(src), t.row(src) + t.d);
        dst.y.push_back(t.y[static_cast<std::size_t>(src)]);
        if (t.s > 0)
            dst.style.insert(dst.style.end(), t.style.begin() + src * t.s,
                             t.style.begin() + (src + 1) * t.s);
        ++dst.n;
    }
    return {a, b};
}

// Inputs aligned with the export row order (synth: (source, view) rows).
std::vector<float> table_inputs(const TrainData& data, bool test_split) {
    if (data.synth) {
        const auto& ds = *data.synth;
        const std::int64_t rows = data.n_sources() * ds.cfg.j_views;
        std::vector<float> x(static_cast<std::size_t>(rows * ds.cfg.d_x));
        for (std::int64_t i = 0; i < rows * ds.cfg.d_x; ++i)
            x[static_cast<std::size_t>(i)] = static_cast<float>(ds.x[static_cast<std::size_t>(i)]);
        return x;
    }
    const ImageDataset& ds = test_split ? *data.test_images : *data.images;
    const std::int64_t n = test_split ? ds.n : data.n_sources();
    return {ds.pixels.begin(), ds.pixels.begin() + n * ds.dim()};
}

int cmd_eval(const CommonArgs& args, const EvalArgs& eargs) {
    const TrainConfig cfg = merge_config(args);
    write_config_snapshot(args.out, cfg);
    const TrainData data = load_train_data(cfg);
    const Model<float> model = load_model(eargs.checkpoint);

    RepresentationTable train_t, test_t;
    bool image_data = static_cast<bool>(data.images);
    RepresentationTable full = export_representations(model, data, true, cfg.seed, false);
    full.checkpoint_id = eargs.checkpoint;
    if (image_data && data.test_images) {
        train_t = full;
        test_t = export_representations(model, data, true, cfg.seed, true);
        test_t.checkpoint_id = eargs.checkpoint;
    } else {
        std::tie(train_t, test_t) = split_table(full, cfg.seed);
    }

    std::vector<ReportRow> rows;
    const auto push = [&](const std::string& probe, const std::string& metric, double value) {
        rows.push_back({probe, data.id, metric, value, cfg.seed, eargs.checkpoint});
        std::cout << probe << " " << metric << " = " << value << "\n";
    };

    const KnnSweepResult knn = knn_sweep(train_t, test_t, 1, eargs.kmax);
    push("knn", "accuracy", knn.best_accuracy);
    push("knn", "best_k", static_cast<double>(knn.best_k));
    const KnnSweepResult knn_cos = knn_sweep(train_t, test_t, 1, eargs.kmax, KnnMetric::Cosine);
    push("knn_cosine", "accuracy", knn_cos.best_accuracy);
    push("knn_cosine", "best_k", static_cast<double>(knn_cos.best_k));

    ProbeConfig pc;
    pc.lr = eargs.probe_lr;
    pc.epochs = eargs.probe_epochs;
    pc.seed = cfg.seed;
    push("linear", "accuracy", linear_probe(train_t, test_t, pc));
    push("mlp", "accuracy", mlp_probe(train_t, test_t, eargs.mlp_hidden, pc));

    // Clustering with the ground-truth component count.
    std::int64_t k = 0;
    for (auto v : train_t.y) k = std::max(k, v + 1);
    std::vector<double> z64(train_t.z.begin(), train_t.z.end());
    GmmOptions gopt;
    gopt.n_init = eargs.gmm_init;
    gopt.seed = cfg.seed;
    const GmmModel gmm = gmm_fit(z64, train_t.n, train_t.d, k, gopt);
    const std::vector<std::int64_t> assign = gmm_predict(gmm, z64, train_t.n);
    push("gmm", "nmi", nmi(assign, train_t.y));
    push("gmm", "ari", ari(assign, train_t.y));

    if (train_t.s > 0) {
        const auto r2 = style_probe(train_t);
        double mean_r2 = 0.0;
        for (std::size_t j = 0; j < r2.size(); ++j) {
            push("style", "r2_" + std::to_string(j), r2[j]);
            mean_r2 += r2[j];
        }
        push("style", "r2_mean", mean_r2 / static_cast<double>(r2.size()));
    }

    // Reconstruction error of decoded posterior means on the held-out rows
    // (or on the full table when the split is synthetic).
    {
        const RepresentationTable& t = image_data && data.test_images ? test_t : full;
        const std::vector<float> inputs = table_inputs(data, image_data && data.test_images);
        std::vector<float> recon(inputs.size());
        const std::int64_t chunk = 512;
        for (std::int64_t at = 0; at < t.n; at += chunk) {
            const std::int64_t take = std::min(chunk, t.n - at);
            std::vector<float> zb(t.row(at), t.row(at) + take * t.d);
            auto pred = decode(model, Tensor<float>(Shape{take, t.d}, std::move(zb)));
            const auto& pv = pred.data();
            std::copy(pv.begin(), pv.end(), recon.begin() + at * data.input_dim());
        }
        push("decoder", "recon_mse", reconstruction_mse(inputs, recon));
    }

    const std::string report = args.out + "/report.csv";
    write_report(report, rows);
    std::cout << "report: " << report << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// generate
// ---------------------------------------------------------------------------

int cmd_generate(const CommonArgs& args, const std::string& checkpoint, std::int64_t cls,
                 std::int64_t count) {
    const TrainConfig cfg = merge_config(args);
    write_config_snapshot(args.out, cfg);
    const TrainData data = load_train_data(cfg);
    const Model<float> model = load_model(checkpoint);
    RepresentationTable table = export_representations(model, data, true, cfg.seed, false);
    table.checkpoint_id = checkpoint;

    std::vector<std::int64_t> classes;
    if (cls >= 0) {
        classes.push_back(cls);
    } else {
        for (std::int64_t c = 0; c < data.num_classes(); ++c) classes.push_back(c);
    }

    Checkpoint out_ckpt;
    out_ckpt.set_meta("kind", "generated_samples");
    out_ckpt.set_meta("checkpoint_id", checkpoint);
    for (const std::int64_t c : classes) {
        const std::vector<float> imgs =
            conditional_generate(table, model.decoder, model.dec_params, c, count, cfg.seed);
        out_ckpt.put("class" + std::to_string(c), Shape{count, data.input_dim()}, imgs);
        // Image datasets render at their native size; other data gets a
        // one-row graymap strip per sample.
        const std::int64_t h = data.images ? data.images->h : 1;
        const std::int64_t w = data.images ? data.images->w : data.input_dim();
        for (std::int64_t i = 0; i < count; ++i) {
            const std::vector<float> one(imgs.begin() + i * data.input_dim(),
                                         imgs.begin() + (i + 1) * data.input_dim());
            write_pgm(args.out + "/gen_c" + std::to_string(c) + "_" + std::to_string(i) + ".pgm",
                      one, h, w);
        }
    }
    const std::string path = args.out + "/generated.svae";
    out_ckpt.save(path);
    std::cout << "wrote " << classes.size() << " class(es) x " << count << " samples to " << path
              << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// gradcheck
// ---------------------------------------------------------------------------

int cmd_gradcheck(std::uint64_t seed, double tolerance) {
    Rng master(seed == 0 ? 2026 : seed);
    const std::int64_t b = 3, d_x = 5, d_z = 2, j = 2;
    Rng init = master.fork(stream::kInit);
    Model<double> model = Model<double>::build(MlpSpec::with_relu_hidden({d_x, 6, 2 * d_z}),
                                               MlpSpec::with_relu_hidden({d_z, 6, d_x}), d_z,
                                               init);
    auto params = model.parameters();

    // Fixed inputs and reparameterization noise so every probe evaluation
    // sees the same function of the parameters.
    Rng dr = master.fork(stream::kData);
    std::vector<Tensor<double>> xs, eps;
    for (std::int64_t v = 0; v < j; ++v) {
        xs.push_back(gaussian_sample<double>(dr, Shape{b, d_x}));
        eps.push_back(gaussian_sample<double>(dr, Shape{b, d_z}));
    }
    Tensor<double> w_psi = Tensor<double>::parameter(
        Shape{b, d_z}, gaussian_sample<double>(dr, Shape{b, d_z}).data());

    const auto views = [&]() {
        std::vector<ViewTerm<double>> out;
        for (std::int64_t v = 0; v < j; ++v) {
            auto post = encode(model, xs[static_cast<std::size_t>(v)]);
            auto z = reparameterize(post, eps[static_cast<std::size_t>(v)]);
            out.push_back({xs[static_cast<std::size_t>(v)], decode(model, z), post, z});
        }
        return out;
    };

    struct Case {
        const char* name;
        std::function<Tensor<double>()> f;
        std::vector<Tensor<double>> params;
    };
    std::vector<Case> cases;
    cases.push_back({"simvae_exact_elbo",
                     [&] { return simvae_loss(views(), 0.15, 0.02).total; }, params});
    cases.push_back(
        {"simvae_algo1_literal",
         [&] { return simvae_loss(views(), 0.15, 0.02, SimvaeMode::Algo1Literal).total; },
         params});
    cases.push_back(
        {"simvae_gaussian_prior",
         [&] { return simvae_loss(views(), 0.15, 0.02, SimvaeMode::ExactElbo, 1.0).total; },
         params});
    cases.push_back({"vae",
                     [&] {
                         auto post = encode(model, xs[0]);
                         auto z = reparameterize(post, eps[0]);
                         return vae_loss(xs[0], decode(model, z), post, 0.02, 1.0).total;
                     },
                     params});
    cases.push_back({"beta_vae",
                     [&] {
                         auto post = encode(model, xs[0]);
                         auto z = reparameterize(post, eps[0]);
                         return vae_loss(xs[0], decode(model, z), post, 0.02, 4.0).total;
                     },
                     params});
    cases.push_back({"infonce",
                     [&] {
                         auto mu_a = encode(model, xs[0]).mu;
                         auto mu_b = encode(model, xs[1]).mu;
                         return info_nce_loss(mu_a, mu_b, 0.7).total;
                     },
                     params});
    {
        auto with_psi = params;
        with_psi.push_back(w_psi);
        cases.push_back({"instance_disc",
                         [&] {
                             auto z = encode(model, xs[0]).mu;
                             return instance_discrimination_loss(z, {0, 1, 2}, w_psi).total;
                         },
                         with_psi});
    }

    bool ok = true;
    for (auto& c : cases) {
        const double err = grad_check(c.f, c.params);
        const bool pass = err < tolerance;
        ok = ok && pass;
        std::printf("gradcheck %-22s max_rel_err = %.3e  [%s]\n", c.name, err,
                    pass ? "pass" : "FAIL");
    }
    if (!ok) {
        std::fprintf(stderr, "gradcheck failed the %.1e gate\n", tolerance);
        return 2;
    }
    return 0;
}

// ---------------------------------------------------------------------------
// verify-prior
// ---------------------------------------------------------------------------

// Monte-Carlo integration over the cluster center: log p(z^1..z^J) =
// log E_{psi ~ N(0, gamma^2 I)} prod_j N(z^j; psi, sigma^2 I), estimated by
// log-sum-exp over draws.
double mc_log_prior_gaussian(const std::vector<std::vector<double>>& zs, double sigma2,
                             double gamma2, std::int64_t m, Rng& rng) {
    const std::size_t d = zs.front().size();
    std::vector<double> logs(static_cast<std::size_t>(m));
    for (std::int64_t s = 0; s < m; ++s) {
        double lp = 0.0;
        std::vector<double> psi(d);
        for (auto& v : psi) v = std::sqrt(gamma2) * rng.normal();
        for (const auto& z : zs)
            for (std::size_t i = 0; i < d; ++i) {
                const double diff = z[i] - psi[i];
                lp += -0.5 * std::log(2.0 * M_PI * sigma2) - 0.5 * diff * diff / sigma2;
            }
        logs[static_cast<std::size_t>(s)] = lp;
    }
    const double hi = *std::max_element(logs.begin(), logs.end());
    double acc = 0.0;
    for (const double l : logs) acc += std::exp(l - hi);
    return hi + std::log(acc / static_cast<double>(m));
}

int cmd_verify_prior(const CommonArgs& args, std::int64_t samples, double tolerance) {
    const TrainConfig cfg = merge_config(args);
    const double gamma2 = cfg.gamma2 > 0.0 ? cfg.gamma2 : 1.0;
    const std::int64_t j = std::min<std::int64_t>(cfg.j_views, 4);
    const std::int64_t d = 2;

    const auto draw_zset = [&](std::uint64_t tag) {
        Rng rng = Rng(cfg.seed).fork(stream::kEval, tag);
        std::vector<std::vector<double>> zs;
        for (std::int64_t v = 0; v < j; ++v) {
            std::vector<double> z(static_cast<std::size_t>(d));
            for (auto& val : z) val = rng.normal();
            zs.push_back(std::move(z));
        }
        return zs;
    };
    const std::vector<std::vector<double>> za = draw_zset(60);
    const std::vector<std::vector<double>> zb = draw_zset(61);

    // The analytic form drops psi-independent additive constants, so the
    // comparison matches differences between two view sets instead.
    const double analytic_diff =
        log_prior_gaussian_psi(ZSet(za), cfg.sigma2, gamma2) -
        log_prior_gaussian_psi(ZSet(zb), cfg.sigma2, gamma2);
    Rng mc_rng = Rng(cfg.seed).fork(stream::kEval, 62);
    // Shared psi draws for both sets reduce the variance of the difference.
    Rng mc_rng_b = mc_rng;
    const double mc_a = mc_log_prior_gaussian(za, cfg.sigma2, gamma2, samples, mc_rng);
    const double mc_b = mc_log_prior_gaussian(zb, cfg.sigma2, gamma2, samples, mc_rng_b);
    const double mc_diff = mc_a - mc_b;
    const double err = std::abs(analytic_diff - mc_diff);

    std::printf("verify-prior: J=%lld d=%lld sigma2=%g gamma2=%g samples=%lld\n",
                static_cast<long long>(j), static_cast<long long>(d), cfg.sigma2, gamma2,
                static_cast<long long>(samples));
    std::printf("  analytic log-prior difference: %.6f\n", analytic_diff);
    std::printf("  monte-carlo estimate:          %.6f\n", mc_diff);
    std::printf("  |error| = %.6f (tolerance %.3f)\n", err, tolerance);
    if (err > tolerance) {
        std::fprintf(stderr, "verify-prior: Monte-Carlo check failed\n");
        return 2;
    }
    std::printf("verify-prior: pass\n");
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"simvae: multi-view generative representation learning at desk scale"};
    app.require_subcommand(1);

    CommonArgs train_args, synth_args, eval_args_c, reps_args, gen_args, prior_args;
    std::string resume_path, reps_checkpoint, gen_checkpoint, reps_split = "train";
    bool reps_sample = false;
    EvalArgs eval_args;
    std::int64_t gen_class = -1, gen_count = 16;
    std::uint64_t gc_seed = 2026;
    double gc_tol = 1e-4;
    std::int64_t vp_samples = 200000;
    double vp_tol = 0.1;

    CLI::App* train_cmd = app.add_subcommand("train", "Train a model from a config");
    add_common(train_cmd, train_args, "runs/train");
    train_cmd->add_option("--resume", resume_path, "Continue from a model snapshot");

    CLI::App* synth_cmd = app.add_subcommand("synth", "Generate a synthetic dataset to disk");
    add_common(synth_cmd, synth_args, "runs/synth");

    CLI::App* eval_cmd =
        app.add_subcommand("eval", "Run the evaluation suite over a checkpoint");
    add_common(eval_cmd, eval_args_c, "runs/eval");
    eval_cmd->add_option("--checkpoint", eval_args.checkpoint, "Model snapshot to evaluate")
        ->required();
    eval_cmd->add_option("--probe-epochs", eval_args.probe_epochs, "Probe training epochs")
        ->capture_default_str();
    eval_cmd->add_option("--probe-lr", eval_args.probe_lr, "Probe learning rate")
        ->capture_default_str();
    eval_cmd->add_option("--mlp-hidden", eval_args.mlp_hidden, "MLP probe hidden width")
        ->capture_default_str();
    eval_cmd->add_option("--gmm-init", eval_args.gmm_init, "GMM restarts")
        ->capture_default_str();
    eval_cmd->add_option("--kmax", eval_args.kmax, "Largest k in the kNN sweep")
        ->capture_default_str();

    CLI::App* reps_cmd =
        app.add_subcommand("export-reps", "Export frozen representations for a checkpoint");
    add_common(reps_cmd, reps_args, "runs/reps");
    reps_cmd->add_option("--checkpoint", reps_checkpoint, "Model snapshot")->required();
    reps_cmd->add_flag("--sample", reps_sample, "Sample the posterior instead of using means");
    reps_cmd->add_option("--split", reps_split, "train or test split")
        ->check(CLI::IsMember({"train", "test"}))
        ->capture_default_str();

    CLI::App* gen_cmd = app.add_subcommand("generate", "Decode class-conditional samples");
    add_common(gen_cmd, gen_args, "runs/generate");
    gen_cmd->add_option("--checkpoint", gen_checkpoint, "Model snapshot")->required();
    gen_cmd->add_option("--class", gen_class, "Class index (-1 = all)")->capture_default_str();
    gen_cmd->add_option("--count", gen_count, "Samples per class")->capture_default_str();

    CLI::App* gc_cmd =
        app.add_subcommand("gradcheck", "Finite-difference check of every loss gradient");
    gc_cmd->add_option("--seed", gc_seed, "Seed for the probe model")->capture_default_str();
    gc_cmd->add_option("--tolerance", gc_tol, "Max relative error gate")->capture_default_str();

    CLI::App* vp_cmd = app.add_subcommand(
        "verify-prior", "Monte-Carlo check of the integrated cluster prior");
    add_common(vp_cmd, prior_args, "runs/verify-prior");
    vp_cmd->add_option("--samples", vp_samples, "Monte-Carlo draws")->capture_default_str();
    vp_cmd->add_option("--tolerance", vp_tol, "Absolute tolerance on the log prior")
        ->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (*train_cmd) return cmd_train(train_args, resume_path);
        if (*synth_cmd) return cmd_synth(synth_args);
        if (*eval_cmd) return cmd_eval(eval_args_c, eval_args);
        if (*reps_cmd) return cmd_export_reps(reps_args, reps_checkpoint, reps_sample, reps_split);
        if (*gen_cmd) return cmd_generate(gen_args, gen_checkpoint, gen_class, gen_count);
        if (*gc_cmd) return cmd_gradcheck(gc_seed, gc_tol);
        if (*vp_cmd) return cmd_verify_prior(prior_args, vp_samples, vp_tol);
    } catch (const std::exception& ex) {
        std::fprintf(stderr, "error: %s\n", ex.what());
        return 2;
    }
    return 1;
}
