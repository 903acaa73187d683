// Copyright 2026 the ocuverify authors.
// Licensed under the Apache License, Version 2.0. See LICENSE for details.

#include <catch2/catch.hpp>

#include "ocuver/pipeline.hpp"
#include "ocuver/synthdata.hpp"

using namespace ocuver;

namespace {

ArchConfig tiny_arch() {
    ArchConfig arch;
    arch.input_side = 16;
    arch.conv_blocks = {{2, 3, 2}};
    arch.embedding_dim = 8;
    return arch;
}

ModelSet tiny_models() {
    ModelSet m;
    m.pre_pre = init_network<float>(tiny_arch(), 1, ModelTag::PrePre);
    m.post_post = init_network<float>(tiny_arch(), 2, ModelTag::PostPost);
    m.pre_post = init_network<float>(tiny_arch(), 3, ModelTag::PrePost);
    return m;
}

std::vector<float> random_unit_vec(std::size_t d, Rng& rng) {
    std::vector<float> v(d);
    double n = 0;
    for (auto& x : v) {
        x = static_cast<float>(rng.uniform(-1, 1));
        n += static_cast<double>(x) * x;
    }
    for (auto& x : v) x = static_cast<float>(x / std::sqrt(std::max(n, 1e-12)));
    return v;
}

std::vector<std::uint8_t> face_jpeg(std::uint64_t seed, Phase phase, int q = 90) {
    auto pair = gen_identity_pair(SynthIdentitySpec::from_seed(seed), 96);
    return encode_jpeg(phase == Phase::Pre ? pair.first : pair.second, JpegQuality(q));
}

} // namespace

TEST_CASE("embedding database") {
    SECTION("put then scan returns insertion order") {
        EmbeddingDb db;
        auto id0 = db.put(ModelTag::PrePre, "alice", {1.0f, 0.0f}, 100);
        auto id1 = db.put(ModelTag::PrePre, "bob", {0.0f, 1.0f}, 101);
        auto id2 = db.put(ModelTag::PrePost, "carol", {1.0f, 0.0f, 0.0f}, 102);
        CHECK(id0 == 0);
        CHECK(id1 == 1);
        CHECK(id2 == 2);
        auto scanned = db.scan(ModelTag::PrePre);
        REQUIRE(scanned.size() == 2);
        CHECK(scanned[0]->identity_hint == "alice");
        CHECK(scanned[1]->identity_hint == "bob");
    }
    SECTION("unwritten tags scan empty") {
        EmbeddingDb db;
        db.put(ModelTag::PrePre, "x", {1.0f}, 0);
        CHECK(db.scan(ModelTag::PostPost).empty());
    }
    SECTION("dimension mismatch within a tag is a rejected write") {
        EmbeddingDb db;
        db.put(ModelTag::PrePre, "x", {1.0f, 2.0f}, 0);
        CHECK_THROWS_AS(db.put(ModelTag::PrePre, "y", {1.0f}, 0), ConfigError);
        CHECK(db.size() == 1);
        // other tags are unaffected
        CHECK_NOTHROW(db.put(ModelTag::PostPost, "y", {1.0f}, 0));
    }
    SECTION("1000 random records round-trip bit-exactly") {
        Rng rng(7);
        EmbeddingDb db;
        for (int i = 0; i < 1000; ++i) {
            auto tag = static_cast<ModelTag>(rng.uniform_int(3));
            std::size_t d = tag == ModelTag::PrePre ? 16 : tag == ModelTag::PostPost ? 8 : 32;
            db.put(tag, "rec" + std::to_string(i), random_unit_vec(d, rng), rng.next_u64());
        }
        const std::string p1 = "/tmp/ocuver_db_a.ocdb";
        const std::string p2 = "/tmp/ocuver_db_b.ocdb";
        db.save(p1);
        auto loaded = EmbeddingDb::load(p1);
        REQUIRE(loaded.size() == 1000);
        for (std::size_t i = 0; i < 1000; ++i) {
            CHECK(loaded.records()[i].record_id == db.records()[i].record_id);
            CHECK(loaded.records()[i].identity_hint == db.records()[i].identity_hint);
            CHECK(loaded.records()[i].model_tag == db.records()[i].model_tag);
            CHECK(loaded.records()[i].created_at == db.records()[i].created_at);
            CHECK(loaded.records()[i].vector == db.records()[i].vector);
        }
        loaded.save(p2);
        CHECK(read_file_bytes(p1) == read_file_bytes(p2));
    }
    SECTION("record ids continue after reload, never reused") {
        EmbeddingDb db;
        db.put(ModelTag::PrePre, "a", {1.0f}, 0);
        db.put(ModelTag::PrePre, "b", {2.0f}, 0);
        db.save("/tmp/ocuver_db_ids.ocdb");
        auto loaded = EmbeddingDb::load("/tmp/ocuver_db_ids.ocdb");
        CHECK(loaded.put(ModelTag::PrePre, "c", {3.0f}, 0) == 2);
    }
    SECTION("corrupt files are refused") {
        write_file_bytes("/tmp/ocuver_db_bad.ocdb", {'X', 'X', 'X', 'X', 0, 0, 0, 0});
        CHECK_THROWS_AS(EmbeddingDb::load("/tmp/ocuver_db_bad.ocdb"), CorruptionError);
        EmbeddingDb db;
        db.put(ModelTag::PrePre, "a", {1.0f, 2.0f}, 7);
        db.save("/tmp/ocuver_db_trunc.ocdb");
        auto bytes = read_file_bytes("/tmp/ocuver_db_trunc.ocdb");
        bytes.resize(bytes.size() - 3);
        write_file_bytes("/tmp/ocuver_db_trunc.ocdb", bytes);
        CHECK_THROWS_AS(EmbeddingDb::load("/tmp/ocuver_db_trunc.ocdb"), CorruptionError);
    }
}

TEST_CASE("verify_pair follows the forgery-gate-first order") {
    PipelineConfig cfg;
    cfg.theta = 0.5;
    Verifier verifier(tiny_models(), cfg);

    SECTION("identical genuine images are accepted at distance zero") {
        auto jpeg = face_jpeg(5, Phase::Pre);
        auto verdict = verifier.verify_pair(jpeg, jpeg);
        CHECK(verdict.outcome == VerifyOutcome::Accepted);
        REQUIRE(verdict.distance.has_value());
        CHECK(*verdict.distance == 0.0);
        CHECK(verdict.ela_reports.empty());
    }
    SECTION("a forged input short-circuits before any embedding") {
        auto fix = gen_forgery_fixture(41, 42, JpegQuality(75), JpegQuality(95));
        auto post = face_jpeg(6, Phase::Post);
        auto verdict = verifier.verify_pair(fix.forged_jpeg, post);
        CHECK(verdict.outcome == VerifyOutcome::RejectedForgery);
        CHECK_FALSE(verdict.distance.has_value());
        REQUIRE(verdict.ela_reports.count("pre") == 1);
        REQUIRE(verdict.ela_reports.count("post") == 1);
        CHECK(verdict.ela_reports.at("pre").verdict == ElaReport::Verdict::Forged);
        CHECK(verdict.ela_reports.at("post").verdict == ElaReport::Verdict::Genuine);
        CHECK(verifier.embed_calls() == 0); // the early-return contract
    }
    SECTION("forged post image also gates") {
        auto fix = gen_forgery_fixture(43, 44, JpegQuality(75), JpegQuality(95));
        auto pre = face_jpeg(7, Phase::Pre);
        auto verdict = verifier.verify_pair(pre, fix.forged_jpeg);
        CHECK(verdict.outcome == VerifyOutcome::RejectedForgery);
        CHECK(verifier.embed_calls() == 0);
    }
    SECTION("distant pair is rejected by distance, with the distance reported") {
        PipelineConfig strict = cfg;
        strict.theta = 0.0;
        Verifier v2(tiny_models(), strict);
        auto a = face_jpeg(8, Phase::Pre);
        auto b = face_jpeg(9, Phase::Post);
        auto verdict = v2.verify_pair(a, b);
        CHECK(verdict.outcome == VerifyOutcome::RejectedDistance);
        REQUIRE(verdict.distance.has_value());
        CHECK(*verdict.distance > 0.0);
        CHECK(v2.embed_calls() == 2);
    }
    SECTION("undecodable input is an error, not a verdict") {
        std::vector<std::uint8_t> garbage(16, 0x55);
        auto good = face_jpeg(10, Phase::Pre);
        CHECK_THROWS_AS(verifier.verify_pair(garbage, good), DecodeError);
    }
    SECTION("replays are identical") {
        auto a = face_jpeg(11, Phase::Pre);
        auto b = face_jpeg(12, Phase::Post);
        auto v1 = verifier.verify_pair(a, b);
        auto v2 = verifier.verify_pair(a, b);
        CHECK(v1.outcome == v2.outcome);
        CHECK(v1.distance == v2.distance);
    }
}

TEST_CASE("duplicate lookup") {
    PipelineConfig cfg;
    cfg.theta = 0.5;
    Verifier verifier(tiny_models(), cfg);

    SECTION("empty database: no duplicates, one new record") {
        EmbeddingDb db;
        auto res = verifier.check_duplicates(face_jpeg(20, Phase::Pre), Phase::Pre, db, "a", 1);
        CHECK(res.duplicates.empty());
        CHECK(db.size() == 1);
        CHECK(db.records()[0].model_tag == ModelTag::PrePre);
        CHECK(db.records()[0].identity_hint == "a");
        CHECK(db.records()[0].created_at == 1);
    }
    SECTION("resubmitting the same image flags the first record at distance zero") {
        EmbeddingDb db;
        auto jpeg = face_jpeg(21, Phase::Post);
        auto first = verifier.check_duplicates(jpeg, Phase::Post, db, "a", 1);
        auto second = verifier.check_duplicates(jpeg, Phase::Post, db, "a-again", 2);
        REQUIRE(second.duplicates.size() == 1);
        CHECK(second.duplicates[0] == first.new_record_id);
        CHECK(db.size() == 2); // stored regardless, for the audit trail
    }
    SECTION("reporting is symmetric in effect") {
        auto a = face_jpeg(22, Phase::Pre);
        auto b = face_jpeg(23, Phase::Pre);
        PipelineConfig wide = cfg;
        wide.theta = 4.0; // everything within range
        Verifier v2(tiny_models(), wide);
        EmbeddingDb db_ab, db_ba;
        auto ra = v2.check_duplicates(a, Phase::Pre, db_ab, "a", 0);
        auto rb = v2.check_duplicates(b, Phase::Pre, db_ab, "b", 0);
        auto rb2 = v2.check_duplicates(b, Phase::Pre, db_ba, "b", 0);
        auto ra2 = v2.check_duplicates(a, Phase::Pre, db_ba, "a", 0);
        CHECK(rb.duplicates == std::vector<std::uint64_t>{ra.new_record_id});
        CHECK(ra2.duplicates == std::vector<std::uint64_t>{rb2.new_record_id});
    }
    SECTION("matches a brute-force linear scan over 100 records") {
        Rng rng(31);
        EmbeddingDb db;
        auto jpeg = face_jpeg(24, Phase::Pre);
        // the query's own embedding, computed exactly as the pipeline does
        ModelSet models = tiny_models();
        Verifier probe(models, cfg);
        EmbeddingDb scratch;
        probe.check_duplicates(jpeg, Phase::Pre, scratch, "probe", 0);
        auto query = scratch.records()[0].vector;

        for (int i = 0; i < 100; ++i)
            db.put(ModelTag::PrePre, "r" + std::to_string(i), random_unit_vec(8, rng), 0);
        std::vector<std::uint64_t> expected;
        for (const auto& r : db.records())
            if (squared_distance(r.vector, query) <= cfg.theta)
                expected.push_back(r.record_id);

        auto res = verifier.check_duplicates(jpeg, Phase::Pre, db, "q", 0);
        CHECK(res.duplicates == expected);
    }
    SECTION("tag dimension mismatch in the database is a corruption error") {
        EmbeddingDb db;
        db.put(ModelTag::PrePre, "weird", {1.0f, 0.0f}, 0); // dim 2, model emits 8
        CHECK_THROWS_AS(
            verifier.check_duplicates(face_jpeg(25, Phase::Pre), Phase::Pre, db, "q", 0),
            CorruptionError);
    }
}
