// Copyright (c) 2026 the simvae authors
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "simvae/checkpoint.hpp"
#include "simvae/nn.hpp"

using namespace simvae;
namespace fs = std::filesystem;

namespace {

fs::path tmp_file(const std::string& name) {
    return fs::temp_directory_path() / name;
}

std::vector<char> slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

Checkpoint sample_checkpoint() {
    Checkpoint c;
    c.set_meta("seed", std::int64_t{42});
    c.set_meta("epoch", std::int64_t{3});
    c.set_meta("note", "fixture");
    c.put("a", Shape{2, 2}, std::vector<float>{1.f, 2.f, 3.f, 4.f});
    c.put("b", Shape{3}, std::vector<double>{-1.0, 0.5, 9.75});
    c.put("labels", Shape{4}, std::vector<std::int64_t>{0, 1, 2, 1});
    return c;
}

} // namespace

TEST_CASE("checkpoint: save, load, save is byte-identical") {
    const auto p1 = tmp_file("ckpt_rt_1.svae");
    const auto p2 = tmp_file("ckpt_rt_2.svae");
    auto c = sample_checkpoint();
    c.save(p1.string());
    auto loaded = Checkpoint::load(p1.string());
    loaded.save(p2.string());
    REQUIRE(slurp(p1) == slurp(p2));

    REQUIRE(loaded.require_meta("note") == "fixture");
    REQUIRE(loaded.meta_i64("seed") == 42);
    REQUIRE(loaded.get<float>("a") == std::vector<float>{1.f, 2.f, 3.f, 4.f});
    REQUIRE(loaded.get<double>("b") == std::vector<double>{-1.0, 0.5, 9.75});
    REQUIRE(loaded.get<std::int64_t>("labels") == std::vector<std::int64_t>{0, 1, 2, 1});
    fs::remove(p1);
    fs::remove(p2);
}

TEST_CASE("checkpoint: wrong magic bytes are rejected as a format error") {
    const auto p = tmp_file("ckpt_badmagic.svae");
    {
        std::ofstream f(p, std::ios::binary);
        f << "NOPE then some bytes that are long enough to not hit EOF first";
    }
    try {
        Checkpoint::load(p.string());
        FAIL("expected CheckpointError");
    } catch (const CheckpointError& e) {
        REQUIRE(e.kind() == CheckpointError::Kind::BadMagic);
    }
    fs::remove(p);
}

TEST_CASE("checkpoint: version mismatch is a distinct error") {
    const auto p = tmp_file("ckpt_badver.svae");
    auto c = sample_checkpoint();
    c.save(p.string());
    {
        std::fstream f(p, std::ios::binary | std::ios::in | std::ios::out);
        f.seekp(4);
        const std::uint32_t v = 999;
        f.write(reinterpret_cast<const char*>(&v), 4);
    }
    try {
        Checkpoint::load(p.string());
        FAIL("expected CheckpointError");
    } catch (const CheckpointError& e) {
        REQUIRE(e.kind() == CheckpointError::Kind::BadVersion);
    }
    fs::remove(p);
}

TEST_CASE("checkpoint: truncated file is a distinct error") {
    const auto p = tmp_file("ckpt_trunc.svae");
    auto c = sample_checkpoint();
    c.save(p.string());
    const auto bytes = slurp(p);
    {
        std::ofstream f(p, std::ios::binary | std::ios::trunc);
        f.write(bytes.data(), static_cast<std::streamsize>(bytes.size() - 10));
    }
    try {
        Checkpoint::load(p.string());
        FAIL("expected CheckpointError");
    } catch (const CheckpointError& e) {
        REQUIRE(e.kind() == CheckpointError::Kind::Truncated);
    }
    fs::remove(p);
}

TEST_CASE("checkpoint: missing array name and wrong shape are distinct errors") {
    auto c = sample_checkpoint();
    try {
        c.get<float>("nonexistent");
        FAIL("expected CheckpointError");
    } catch (const CheckpointError& e) {
        REQUIRE(e.kind() == CheckpointError::Kind::NameMismatch);
    }
    try {
        c.get_tensor<float>("a", Shape{4, 1});
        FAIL("expected CheckpointError");
    } catch (const CheckpointError& e) {
        REQUIRE(e.kind() == CheckpointError::Kind::ShapeMismatch);
    }
    try {
        c.get<double>("a"); // stored as f32
        FAIL("expected CheckpointError");
    } catch (const CheckpointError& e) {
        REQUIRE(e.kind() == CheckpointError::Kind::ShapeMismatch);
    }
}

TEST_CASE("checkpoint: model round-trip reproduces a fixed-batch loss exactly") {
    Rng rng(77);
    auto enc = MlpSpec::with_relu_hidden({6, 12, 8});
    auto dec = MlpSpec::with_relu_hidden({4, 12, 6});
    auto m = Model<float>::build(enc, dec, 4, rng);
    auto params = m.parameters();
    auto adam = AdamState<float>::init(params);

    // A few steps so optimizer state is non-trivial.
    auto x = gaussian_sample<float>(rng, {8, 6});
    auto eps = gaussian_sample<float>(rng, {8, 4});
    auto loss_fn = [&](Model<float>& model) {
        auto post = encode(model, x);
        auto z = reparameterize(post, eps);
        return mean(square(sub(decode(model, z), x)));
    };
    for (int i = 0; i < 3; ++i) {
        zero_grads(params);
        backward(loss_fn(m));
        adam_step(params, adam, {.lr = 1e-3});
    }
    const float loss_before = loss_fn(m).value();

    const auto p = tmp_file("ckpt_model.svae");
    Checkpoint ckpt;
    ckpt.set_meta("seed", std::int64_t{77});
    put_model(ckpt, m, &adam);
    ckpt.save(p.string());

    AdamState<float> adam2;
    auto loaded = get_model<float>(Checkpoint::load(p.string()), &adam2);
    REQUIRE(loss_fn(loaded).value() == loss_before);
    REQUIRE(adam2.t == adam.t);
    REQUIRE(adam2.m[0] == adam.m[0]);
    REQUIRE(adam2.v.back() == adam.v.back());

    // Continued training matches between original and reloaded instance.
    auto params2 = loaded.parameters();
    for (int i = 0; i < 3; ++i) {
        zero_grads(params);
        backward(loss_fn(m));
        adam_step(params, adam, {.lr = 1e-3});
        zero_grads(params2);
        backward(loss_fn(loaded));
        adam_step(params2, adam2, {.lr = 1e-3});
        REQUIRE(loss_fn(loaded).value() == loss_fn(m).value());
    }
    fs::remove(p);
}
