// Copyright 2026 the ocuverify authors.
// Licensed under the Apache License, Version 2.0. See LICENSE for details.

#include <catch2/catch.hpp>

#include "ocuver/synthdata.hpp"
#include "ocuver/trainer.hpp"

using namespace ocuver;

namespace {

std::vector<DatasetItem> make_items(int identities, int canvas = 64) {
    std::vector<DatasetItem> items;
    for (int id = 0; id < identities; ++id) {
        auto spec = SynthIdentitySpec::from_seed(500 + static_cast<std::uint64_t>(id));
        auto [pre, post] = gen_identity_pair(spec, canvas);
        DatasetItem a;
        a.identity_id = "id" + std::to_string(id);
        a.phase = Phase::Pre;
        a.image = std::move(pre);
        items.push_back(std::move(a));
        DatasetItem b;
        b.identity_id = "id" + std::to_string(id);
        b.phase = Phase::Post;
        b.image = std::move(post);
        items.push_back(std::move(b));
    }
    return items;
}

TrainConfig small_config() {
    TrainConfig cfg;
    cfg.arch.input_side = 16;
    cfg.arch.conv_blocks = {{2, 3, 2}};
    cfg.arch.embedding_dim = 4;
    cfg.epochs = 2;
    cfg.batch_size = 4;
    cfg.augment_copies = 1;
    cfg.strategy = TripletStrategy::Random;
    cfg.seed = 12;
    return cfg;
}

bool params_equal(const Network<float>& a, const Network<float>& b) {
    if (a.params.size() != b.params.size()) return false;
    for (std::size_t i = 0; i < a.params.size(); ++i)
        if (a.params[i].tensor.data != b.params[i].tensor.data) return false;
    return true;
}

} // namespace

TEST_CASE("variant dataset views") {
    auto items = make_items(3);

    SECTION("PRE-PRE view contains no POST items") {
        auto view = build_variant_dataset(items, ModelTag::PrePre);
        for (auto idx : view.side_a) CHECK(items[idx].phase == Phase::Pre);
        for (auto idx : view.side_b) CHECK(items[idx].phase == Phase::Pre);
        CHECK(view.item_count() == 3);
    }
    SECTION("POST-POST view mirrors it") {
        auto view = build_variant_dataset(items, ModelTag::PostPost);
        for (auto idx : view.side_a) CHECK(items[idx].phase == Phase::Post);
    }
    SECTION("PRE-POST view splits the phases") {
        auto view = build_variant_dataset(items, ModelTag::PrePost);
        CHECK(view.side_a.size() == 3);
        CHECK(view.side_b.size() == 3);
        CHECK(view.item_count() == 6);
    }
    SECTION("empty item list is rejected") {
        CHECK_THROWS_AS(build_variant_dataset({}, ModelTag::PrePost), ConfigError);
    }
    SECTION("variant with zero eligible items is rejected") {
        std::vector<DatasetItem> pre_only(items.begin(), items.end());
        pre_only.erase(std::remove_if(pre_only.begin(), pre_only.end(),
                                      [](const DatasetItem& d) { return d.phase == Phase::Post; }),
                       pre_only.end());
        CHECK_THROWS_AS(build_variant_dataset(pre_only, ModelTag::PostPost), ConfigError);
    }
}

TEST_CASE("genuine pair counting matches the closed form") {
    // 20 identities, 4 augmented copies per original on each side:
    // PRE-POST genuine pairs = 20 * 5 * 5
    auto items = make_items(20);
    AugmentConfig aug; // defaults
    auto expanded = expand_with_augmentation(items, aug, 4, 99);
    REQUIRE(expanded.size() == items.size() * 5);
    auto view = build_variant_dataset(expanded, ModelTag::PrePost);
    auto pairs = genuine_pairs(view);
    CHECK(pairs.size() == 20u * 5u * 5u);

    SECTION("augmented items reference their originals") {
        for (std::size_t i = items.size(); i < expanded.size(); ++i) {
            REQUIRE(expanded[i].augmented_from.has_value());
            std::size_t src = *expanded[i].augmented_from;
            CHECK(expanded[i].identity_id == items[src].identity_id);
            CHECK(expanded[i].phase == items[src].phase);
        }
    }
}

TEST_CASE("training") {
    auto items = make_items(2, 64);

    SECTION("lr = 0 leaves the parameters at initialization") {
        auto cfg = small_config();
        cfg.lr = 0.0;
        auto result = train(items, cfg);
        CHECK(params_equal(result.net, init_for_train(cfg)));
        CHECK(result.epoch_loss.size() == 2);
    }
    SECTION("deterministic: same config, same curve, same bytes") {
        auto cfg = small_config();
        auto r1 = train(items, cfg);
        auto r2 = train(items, cfg);
        CHECK(r1.epoch_loss == r2.epoch_loss);
        save_network(r1.net, "/tmp/ocuver_train_a.ocv");
        save_network(r2.net, "/tmp/ocuver_train_b.ocv");
        CHECK(read_file_bytes("/tmp/ocuver_train_a.ocv") ==
              read_file_bytes("/tmp/ocuver_train_b.ocv"));
        CHECK(r1.net.tag == ModelTag::PrePost);
    }
    SECTION("a different seed gives a different model") {
        auto cfg = small_config();
        auto r1 = train(items, cfg);
        cfg.seed = 13;
        auto r2 = train(items, cfg);
        CHECK_FALSE(params_equal(r1.net, r2.net));
    }
    SECTION("contrastive loss path runs and is deterministic") {
        auto cfg = small_config();
        cfg.loss = TrainConfig::LossKind::Contrastive;
        auto r1 = train(items, cfg);
        auto r2 = train(items, cfg);
        CHECK(r1.epoch_loss == r2.epoch_loss);
        for (double l : r1.epoch_loss) CHECK(std::isfinite(l));
    }
    SECTION("semi-hard strategy runs deterministically") {
        auto cfg = small_config();
        cfg.strategy = TripletStrategy::SemiHard;
        auto r1 = train(items, cfg);
        auto r2 = train(items, cfg);
        CHECK(r1.epoch_loss == r2.epoch_loss);
    }
    SECTION("one identity is rejected") {
        auto cfg = small_config();
        auto lone = make_items(1, 64);
        CHECK_THROWS_AS(train(lone, cfg), ConfigError);
    }
}

TEST_CASE("evaluation metrics") {
    auto items = make_items(3, 64);
    auto cfg = small_config();
    cfg.epochs = 1;
    auto net = train(items, cfg).net;

    std::vector<EvalPair> genuine, impostor;
    for (int id = 0; id < 3; ++id) {
        genuine.push_back({items[static_cast<std::size_t>(2 * id)].image,
                           items[static_cast<std::size_t>(2 * id + 1)].image});
        impostor.push_back({items[static_cast<std::size_t>(2 * id)].image,
                            items[static_cast<std::size_t>((2 * id + 3) % 6)].image});
    }

    SECTION("theta = 0 rejects everything") {
        auto m = evaluate(net, genuine, impostor, 0.0);
        CHECK(m.false_acceptance == 0.0);
        CHECK(m.false_rejection == 1.0);
    }
    SECTION("theta above the 4.0 ceiling accepts everything") {
        auto m = evaluate(net, genuine, impostor, 5.0);
        CHECK(m.false_acceptance == 1.0);
        CHECK(m.false_rejection == 0.0);
    }
    SECTION("metrics equal a brute-force recount") {
        const double theta = 0.7;
        auto m = evaluate(net, genuine, impostor, theta);
        std::size_t fa = 0, fr = 0;
        for (const auto& p : genuine)
            if (squared_distance(embed(net, p.a), embed(net, p.b)) > theta) ++fr;
        for (const auto& p : impostor)
            if (squared_distance(embed(net, p.a), embed(net, p.b)) <= theta) ++fa;
        CHECK(m.false_acceptance == Approx(static_cast<double>(fa) / impostor.size()));
        CHECK(m.false_rejection == Approx(static_cast<double>(fr) / genuine.size()));
        double correct = static_cast<double>(genuine.size() - fr + impostor.size() - fa);
        CHECK(m.accuracy == Approx(correct / (genuine.size() + impostor.size())));
    }
    SECTION("accuracy identity holds") {
        auto m = evaluate(net, genuine, impostor, 0.5);
        double gen_share =
            static_cast<double>(m.genuine_count) / (m.genuine_count + m.impostor_count);
        double imp_share = 1.0 - gen_share;
        double reconstructed =
            1.0 - (m.false_acceptance * imp_share + m.false_rejection * gen_share);
        CHECK(std::abs(m.accuracy - reconstructed) <=
              1.0 / (m.genuine_count + m.impostor_count));
    }
    SECTION("empty pair sets are rejected") {
        CHECK_THROWS_AS(evaluate(net, {}, impostor, 0.5), ConfigError);
        CHECK_THROWS_AS(evaluate(net, genuine, {}, 0.5), ConfigError);
    }
}

TEST_CASE("threshold sweep") {
    // hand-made distances: 10-pair toy set
    std::vector<double> genuine = {0.1, 0.2, 0.25, 0.4, 0.9};
    std::vector<double> impostor = {0.3, 0.5, 0.8, 1.2, 1.5};
    auto grid = theta_grid(0.0, 2.0, 21);

    SECTION("FA is non-decreasing and FR non-increasing in theta") {
        auto res = sweep_from_distances(genuine, impostor, grid);
        for (std::size_t i = 1; i < res.rows.size(); ++i) {
            CHECK(res.rows[i].false_acceptance >= res.rows[i - 1].false_acceptance);
            CHECK(res.rows[i].false_rejection <= res.rows[i - 1].false_rejection);
        }
    }
    SECTION("theta_eer matches the exhaustive scan") {
        auto res = sweep_from_distances(genuine, impostor, grid);
        double best_gap = 1e18, best_theta = 0;
        for (double theta : grid) {
            auto m = metrics_from_distances(genuine, impostor, theta);
            double gap = std::abs(m.false_acceptance - m.false_rejection);
            if (gap < best_gap) {
                best_gap = gap;
                best_theta = theta;
            }
        }
        CHECK(res.theta_eer == best_theta);
    }
    SECTION("single-point grid returns that point") {
        auto res = sweep_from_distances(genuine, impostor, {0.4});
        CHECK(res.theta_eer == 0.4);
        REQUIRE(res.rows.size() == 1);
    }
    SECTION("empty and unsorted grids are rejected") {
        CHECK_THROWS_AS(sweep_from_distances(genuine, impostor, {}), ConfigError);
        CHECK_THROWS_AS(sweep_from_distances(genuine, impostor, {1.0, 0.5}), ConfigError);
    }
    SECTION("ties break toward the smaller theta") {
        // gap is identical at every theta in [0.6, 0.7]: FA=0.4, FR=0.4 fabricated
        std::vector<double> g = {0.1, 0.2, 0.65, 0.9, 1.0};
        std::vector<double> i2 = {0.3, 0.5, 0.75, 1.2, 1.5};
        auto res = sweep_from_distances(g, i2, {0.66, 0.7});
        auto m1 = metrics_from_distances(g, i2, 0.66);
        auto m2 = metrics_from_distances(g, i2, 0.7);
        REQUIRE(std::abs(m1.false_acceptance - m1.false_rejection) ==
                std::abs(m2.false_acceptance - m2.false_rejection));
        CHECK(res.theta_eer == 0.66);
    }
}

TEST_CASE("csv outputs") {
    write_loss_csv("/tmp/ocuver_loss.csv", {1.5, 0.75, 0.5});
    std::ifstream f("/tmp/ocuver_loss.csv");
    std::string line;
    std::getline(f, line);
    CHECK(line == "epoch,mean_loss");
    std::getline(f, line);
    CHECK(line == "1,1.500000");

    SweepResult sweep;
    sweep.rows = {{0.0, 0.0, 1.0, 0.5}, {1.0, 0.5, 0.25, 0.625}};
    sweep.theta_eer = 1.0;
    write_sweep_csv("/tmp/ocuver_sweep.csv", sweep);
    std::ifstream f2("/tmp/ocuver_sweep.csv");
    std::getline(f2, line);
    CHECK(line == "theta,false_acceptance,false_rejection,accuracy");
    std::getline(f2, line);
    CHECK(line == "0.000000,0.000000,1.000000,0.500000");
}
