// Copyright 2026 the ocuverify authors.
// Licensed under the Apache License, Version 2.0. See LICENSE for details.

#include <catch2/catch.hpp>

#include <cmath>

#include "ocuver/jpeg.hpp"
#include "ocuver/network.hpp"
#include "ocuver/rng.hpp"
#include "support/gradcheck.hpp"

using namespace ocuver;
using gradcheck::case_is_usable;
using gradcheck::finite_difference_check;
using gradcheck::random_batch;
using gradcheck::random_upstream;

namespace {

/// Runs FD cases for one architecture until `wanted` usable cases pass.
void run_fd_cases(const ArchConfig& arch, int wanted, std::uint64_t seed_base,
                  double tolerance = 1e-4) {
    int done = 0;
    std::uint64_t seed = seed_base;
    int guard = 0;
    while (done < wanted) {
        ++seed;
        REQUIRE(++guard < 500);
        auto net = init_network<double>(arch, seed, ModelTag::PrePost);
        auto batch = random_batch(arch, 2, seed * 31 + 7);
        if (!case_is_usable(net, batch)) continue;
        auto upstream = random_upstream(2, static_cast<std::size_t>(arch.embedding_dim),
                                        seed * 17 + 3);
        auto stats = finite_difference_check(net, batch, upstream);
        REQUIRE(stats.checked > 0);
        CHECK(stats.unresolved == 0);
        INFO("arch fd case seed " << seed << " worst rel " << stats.worst_rel);
        CHECK(stats.worst_rel < tolerance);
        ++done;
    }
}

} // namespace

TEST_CASE("network initialization") {
    ArchConfig arch;
    arch.input_side = 16;
    arch.input_channels = 1;
    arch.conv_blocks = {{4, 3, 2}};
    arch.embedding_dim = 8;

    SECTION("deterministic given the seed") {
        auto a = init_network<float>(arch, 42, ModelTag::PrePre);
        auto b = init_network<float>(arch, 42, ModelTag::PrePre);
        REQUIRE(a.params.size() == b.params.size());
        for (std::size_t i = 0; i < a.params.size(); ++i)
            CHECK(a.params[i].tensor.data == b.params[i].tensor.data);
        auto c = init_network<float>(arch, 43, ModelTag::PrePre);
        CHECK(a.params[0].tensor.data != c.params[0].tensor.data);
    }
    SECTION("biases start at zero") {
        auto net = init_network<float>(arch, 1, ModelTag::PrePost);
        for (float v : net.param("conv0.bias").data) CHECK(v == 0.0f);
        for (float v : net.param("fc.bias").data) CHECK(v == 0.0f);
    }
    SECTION("weight variance tracks 2/fan_in") {
        ArchConfig wide = arch;
        wide.input_channels = 16;
        wide.conv_blocks = {{8, 3, 2}}; // 8*16*9 = 1152 weights, fan_in 144
        auto net = init_network<double>(wide, 7, ModelTag::PrePost);
        const auto& w = net.param("conv0.weight");
        REQUIRE(w.numel() >= 1000);
        double mean = 0, var = 0;
        for (double v : w.data) mean += v;
        mean /= static_cast<double>(w.numel());
        for (double v : w.data) var += (v - mean) * (v - mean);
        var /= static_cast<double>(w.numel());
        double expected = 2.0 / 144.0;
        CHECK(var > expected * 0.8);
        CHECK(var < expected * 1.2);
    }
    SECTION("architectures that pool below 1x1 are rejected") {
        ArchConfig bad = arch;
        bad.conv_blocks = {{4, 3, 2}, {8, 3, 2}, {8, 3, 2}};
        bad.input_side = 8;
        CHECK_THROWS_AS(init_network<float>(bad, 1, ModelTag::PrePost), ConfigError);
    }
}

TEST_CASE("forward pass basics") {
    ArchConfig arch;
    arch.input_side = 12;
    arch.conv_blocks = {{3, 3, 2}};
    arch.embedding_dim = 4;
    arch.normalize_embeddings = false;

    SECTION("zero weights map zero input to zero output") {
        auto net = init_network<float>(arch, 5, ModelTag::PrePost);
        for (auto& p : net.params)
            for (auto& v : p.tensor.data) v = 0;
        Tensor<float> batch({2, 1, 12, 12});
        auto out = forward(net, batch);
        for (float v : out.data) CHECK(v == 0.0f);
    }
    SECTION("identical batch rows give identical embedding rows") {
        auto net = init_network<float>(arch, 6, ModelTag::PrePost);
        Rng rng(11);
        Tensor<float> batch({3, 1, 12, 12});
        for (std::size_t i = 0; i < 144; ++i)
            batch.data[i] = static_cast<float>(rng.uniform());
        for (std::size_t r = 1; r < 3; ++r)
            std::copy(batch.data.begin(), batch.data.begin() + 144,
                      batch.data.begin() + static_cast<std::ptrdiff_t>(r * 144));
        auto out = forward(net, batch);
        for (std::size_t j = 0; j < 4; ++j) {
            CHECK(out.data[j] == out.data[4 + j]);
            CHECK(out.data[j] == out.data[8 + j]);
        }
    }
    SECTION("permuting batch rows permutes output rows identically") {
        auto net = init_network<float>(arch, 8, ModelTag::PrePost);
        Rng rng(13);
        Tensor<float> batch({3, 1, 12, 12});
        for (auto& v : batch.data) v = static_cast<float>(rng.uniform());
        auto out = forward(net, batch);
        Tensor<float> permuted(batch.shape);
        const std::size_t plane = 144;
        const std::size_t order[3] = {2, 0, 1};
        for (std::size_t r = 0; r < 3; ++r)
            std::copy(batch.data.begin() + static_cast<std::ptrdiff_t>(order[r] * plane),
                      batch.data.begin() + static_cast<std::ptrdiff_t>((order[r] + 1) * plane),
                      permuted.data.begin() + static_cast<std::ptrdiff_t>(r * plane));
        auto pout = forward(net, permuted);
        for (std::size_t r = 0; r < 3; ++r)
            for (std::size_t j = 0; j < 4; ++j)
                CHECK(pout.data[r * 4 + j] == out.data[order[r] * 4 + j]);
    }
    SECTION("hand-computed single-path conv") {
        // 1x1 input 0.5, one 1x1-kernel block with weight 2 and identity
        // pool, first FC row passes the value through: embedding[0] = 1.0
        ArchConfig tiny;
        tiny.input_side = 1;
        tiny.conv_blocks = {{1, 1, 1}};
        tiny.embedding_dim = 2;
        tiny.normalize_embeddings = false;
        auto net = init_network<float>(tiny, 1, ModelTag::PrePost);
        for (auto& p : net.params)
            for (auto& v : p.tensor.data) v = 0;
        for (auto& p : net.params) {
            if (p.name == "conv0.weight") p.tensor.data[0] = 2.0f;
            if (p.name == "fc.weight") p.tensor.data[0] = 1.0f; // [flat=1, d=2] row
        }
        Tensor<float> batch({1, 1, 1, 1});
        batch.data[0] = 0.5f;
        auto out = forward(net, batch);
        CHECK(out.data[0] == 1.0f);
        CHECK(out.data[1] == 0.0f);
    }
    SECTION("shape mismatches name the input layer") {
        auto net = init_network<float>(arch, 9, ModelTag::PrePost);
        Tensor<float> wrong({1, 1, 10, 10});
        CHECK_THROWS_WITH(forward(net, wrong), Catch::Contains("input layer"));
    }
}

TEST_CASE("backward pass properties") {
    ArchConfig arch;
    arch.input_side = 16;
    arch.conv_blocks = {{2, 3, 2}, {3, 3, 2}};
    arch.embedding_dim = 4;
    auto net = init_network<double>(arch, 21, ModelTag::PrePost);
    auto batch = random_batch(arch, 2, 33);
    ForwardCache<double> cache;
    forward(net, batch, &cache);

    SECTION("zero upstream gives zero gradients") {
        Tensor<double> upstream({2, 4});
        auto grads = backward(net, cache, upstream);
        for (const auto& g : grads)
            for (double v : g.tensor.data) CHECK(v == 0.0);
    }
    SECTION("doubling upstream doubles every gradient exactly") {
        auto upstream = random_upstream(2, 4, 55);
        auto g1 = backward(net, cache, upstream);
        for (auto& v : upstream.data) v *= 2;
        auto g2 = backward(net, cache, upstream);
        for (std::size_t i = 0; i < g1.size(); ++i)
            for (std::size_t j = 0; j < g1[i].tensor.numel(); ++j)
                CHECK(g2[i].tensor.data[j] == 2.0 * g1[i].tensor.data[j]);
    }
    SECTION("missing cache is rejected") {
        ForwardCache<double> stale;
        auto upstream = random_upstream(2, 4, 55);
        CHECK_THROWS_AS(backward(net, stale, upstream), ConfigError);
    }
    SECTION("upstream shape mismatch is rejected") {
        Tensor<double> bad({2, 5});
        CHECK_THROWS_AS(backward(net, cache, bad), ConfigError);
    }
}

TEST_CASE("gradients match finite differences for every layer type") {
    SECTION("fully connected + normalization (no conv)") {
        ArchConfig arch;
        arch.input_side = 6;
        arch.conv_blocks = {};
        arch.embedding_dim = 4;
        arch.normalize_embeddings = true;
        run_fd_cases(arch, 6, 1000);
    }
    SECTION("single conv block, identity pool, no normalization") {
        ArchConfig arch;
        arch.input_side = 8;
        arch.conv_blocks = {{2, 3, 1}};
        arch.embedding_dim = 3;
        arch.normalize_embeddings = false;
        run_fd_cases(arch, 6, 2000);
    }
    SECTION("single conv block with max pooling") {
        ArchConfig arch;
        arch.input_side = 10;
        arch.conv_blocks = {{2, 3, 2}};
        arch.embedding_dim = 4;
        arch.normalize_embeddings = true;
        run_fd_cases(arch, 6, 3000);
    }
    SECTION("composed two-block network on 16x16 inputs") {
        ArchConfig arch;
        arch.input_side = 16;
        arch.conv_blocks = {{2, 3, 2}, {3, 3, 2}};
        arch.embedding_dim = 4;
        arch.normalize_embeddings = true;
        run_fd_cases(arch, 6, 4000);
    }
}

TEST_CASE("sgd with momentum") {
    ArchConfig arch;
    arch.input_side = 1;
    arch.conv_blocks = {};
    arch.embedding_dim = 2;
    arch.normalize_embeddings = false;
    auto net = init_network<float>(arch, 3, ModelTag::PrePost);
    // fc.weight is [1, 2]; use element 0 as the scalar under test
    for (auto& p : net.params)
        for (auto& v : p.tensor.data) v = 0;
    auto grads_of = [&](float g0) {
        std::vector<NamedTensor<float>> gs;
        for (const auto& p : net.params) gs.push_back({p.name, Tensor<float>(p.tensor.shape)});
        gs[0].tensor.data[0] = g0;
        return gs;
    };
    auto& w = net.params[0].tensor.data[0];

    SECTION("zero gradients leave parameters unchanged") {
        w = 1.0f;
        SgdState<float> st;
        sgd_step(net, grads_of(0.0f), 0.1, 0.9, st);
        CHECK(w == 1.0f);
    }
    SECTION("single no-momentum step") {
        w = 1.0f;
        SgdState<float> st;
        sgd_step(net, grads_of(0.5f), 0.1, 0.0, st);
        CHECK(w == Approx(0.95).epsilon(1e-6));
    }
    SECTION("two momentum steps reproduce the hand-computed sequence") {
        w = 1.0f;
        SgdState<float> st;
        sgd_step(net, grads_of(0.5f), 0.1, 0.9, st);
        CHECK(w == Approx(0.95).epsilon(1e-6)); // v = 0.5
        sgd_step(net, grads_of(0.5f), 0.1, 0.9, st);
        CHECK(w == Approx(0.855).epsilon(1e-6)); // v = 0.95
    }
    SECTION("non-finite gradients abort with the parameter name and step") {
        w = 1.0f;
        SgdState<float> st;
        auto gs = grads_of(std::numeric_limits<float>::quiet_NaN());
        CHECK_THROWS_WITH(sgd_step(net, gs, 0.1, 0.9, st, 17),
                          Catch::Contains("fc.weight") && Catch::Contains("17"));
    }
}

TEST_CASE("embed") {
    ArchConfig arch;
    arch.input_side = 16;
    arch.conv_blocks = {{4, 3, 2}};
    arch.embedding_dim = 8;
    auto net = init_network<float>(arch, 77, ModelTag::PrePost);

    Rng rng(5);
    Image img(24, 20, 3);
    for (auto& p : img.pixels) p = static_cast<std::uint8_t>(rng.uniform_int(256));

    SECTION("deterministic") {
        auto a = embed(net, img);
        auto b = embed(net, img);
        CHECK(a.values == b.values);
    }
    SECTION("unit norm under normalization") {
        auto e = embed(net, img);
        double n = 0;
        for (float v : e.values) n += static_cast<double>(v) * v;
        CHECK(std::abs(std::sqrt(n) - 1.0) <= 1e-6);
    }
    SECTION("pairwise squared distances stay within [0, 4]") {
        Image img2(16, 16, 1, 200);
        auto a = embed(net, img);
        auto b = embed(net, img2);
        double d = squared_distance(a, b);
        CHECK(d >= 0.0);
        CHECK(d <= 4.0 + 1e-9);
    }
}

TEST_CASE("model files round-trip bit-exactly") {
    ArchConfig arch;
    arch.input_side = 16;
    arch.conv_blocks = {{4, 3, 2}, {6, 3, 2}};
    arch.embedding_dim = 8;
    auto net = init_network<float>(arch, 99, ModelTag::PostPost);

    const std::string p1 = "/tmp/ocuver_model_a.ocv";
    const std::string p2 = "/tmp/ocuver_model_b.ocv";
    save_network(net, p1);
    auto loaded = load_network(p1);
    CHECK(loaded.tag == net.tag);
    CHECK(loaded.arch == net.arch);
    REQUIRE(loaded.params.size() == net.params.size());
    for (std::size_t i = 0; i < net.params.size(); ++i) {
        CHECK(loaded.params[i].name == net.params[i].name);
        CHECK(loaded.params[i].tensor.shape == net.params[i].tensor.shape);
        CHECK(loaded.params[i].tensor.data == net.params[i].tensor.data);
    }
    save_network(loaded, p2);
    CHECK(read_file_bytes(p1) == read_file_bytes(p2));

    SECTION("corrupt magic is rejected") {
        auto bytes = read_file_bytes(p1);
        bytes[0] = 'X';
        write_file_bytes("/tmp/ocuver_model_bad.ocv", bytes);
        CHECK_THROWS_AS(load_network("/tmp/ocuver_model_bad.ocv"), CorruptionError);
    }
}
