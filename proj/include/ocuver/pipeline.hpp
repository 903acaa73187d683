// Copyright 2026 the ocuverify authors.
// Licensed under the Apache License, Version 2.0. See LICENSE for details.

#ifndef OCUVER_PIPELINE_HPP
#define OCUVER_PIPELINE_HPP

// End-to-end inference: forgery gate first, then embedding verification
// against the squared-distance threshold, plus duplicate lookup against the
// embedding database. On a forgery the pipeline returns before any
// embedding is computed.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ocuver/dataset.hpp"
#include "ocuver/embedding_db.hpp"
#include "ocuver/errors.hpp"
#include "ocuver/forensics.hpp"
#include "ocuver/network.hpp"
#include "ocuver/preprocess.hpp"

namespace ocuver {

enum class VerifyOutcome { Accepted, RejectedForgery, RejectedDistance };

inline std::string to_string(VerifyOutcome v) {
    switch (v) {
        case VerifyOutcome::Accepted: return "accepted";
        case VerifyOutcome::RejectedForgery: return "rejected_forgery";
        case VerifyOutcome::RejectedDistance: return "rejected_distance";
    }
    return "?";
}

struct Verdict {
    VerifyOutcome outcome = VerifyOutcome::RejectedDistance;
    std::optional<double> distance; // squared L2; absent for forgery rejections
    double theta = 0;
    std::map<std::string, ElaReport> ela_reports;      // "pre"/"post" on forgery rejection
    std::map<std::string, Image> ela_images;           // matching display images
    std::vector<std::uint64_t> duplicates_pre;         // filled by duplicate checks
    std::vector<std::uint64_t> duplicates_post;
};

struct PipelineConfig {
    double theta = 0.5;            // squared-distance acceptance threshold
    ElaConfig ela{};
    CannyParams canny{};
    int dilate_k = 2;
    bool background_removal = true;
};

/// The three trained variant models.
struct ModelSet {
    Network<float> pre_pre;
    Network<float> post_post;
    Network<float> pre_post;

    const Network<float>& by_tag(ModelTag tag) const {
        switch (tag) {
            case ModelTag::PrePre: return pre_pre;
            case ModelTag::PostPost: return post_post;
            case ModelTag::PrePost: return pre_post;
        }
        throw ConfigError("bad model tag");
    }
};

class Verifier {
public:
    Verifier(ModelSet models, PipelineConfig cfg)
        : models_(std::move(models)), cfg_(cfg) {}

    const PipelineConfig& config() const { return cfg_; }

    /// Number of embedding forward passes performed so far; a forged pair
    /// must leave this untouched.
    std::size_t embed_calls() const { return embed_calls_; }

    /**
     * @brief Pair verification: forgery gate on both images, then embedding
     * distance through the PRE-POST model. Decode failures throw; they are
     * input errors, not verdicts.
     */
    Verdict verify_pair(const std::vector<std::uint8_t>& pre_jpeg,
                        const std::vector<std::uint8_t>& post_jpeg) const {
        Image pre = decode_jpeg(pre_jpeg);
        Image post = decode_jpeg(post_jpeg);

        Verdict verdict;
        verdict.theta = cfg_.theta;

        auto [pre_rep, pre_ela] = analyze_jpeg(pre_jpeg, cfg_.ela);
        auto [post_rep, post_ela] = analyze_jpeg(post_jpeg, cfg_.ela);
        if (pre_rep.verdict == ElaReport::Verdict::Forged ||
            post_rep.verdict == ElaReport::Verdict::Forged) {
            verdict.outcome = VerifyOutcome::RejectedForgery;
            verdict.ela_reports["pre"] = std::move(pre_rep);
            verdict.ela_reports["post"] = std::move(post_rep);
            verdict.ela_images["pre"] = std::move(pre_ela.ela_image);
            verdict.ela_images["post"] = std::move(post_ela.ela_image);
            return verdict; // no embeddings for forged input
        }

        Embedding e1 = embed_counted(models_.pre_post, preprocess(pre));
        Embedding e2 = embed_counted(models_.pre_post, preprocess(post));
        double d = squared_distance(e1, e2);
        verdict.distance = d;
        verdict.outcome =
            d <= cfg_.theta ? VerifyOutcome::Accepted : VerifyOutcome::RejectedDistance;
        return verdict;
    }

    struct DuplicateResult {
        std::vector<std::uint64_t> duplicates; // every same-tag record within theta
        std::uint64_t new_record_id = 0;
    };

    /**
     * @brief Duplicate lookup with the phase-matching specialist model.
     * Scans same-tag records linearly, then stores the new embedding
     * unconditionally so the audit trail is complete.
     */
    DuplicateResult check_duplicates(const std::vector<std::uint8_t>& jpeg, Phase phase,
                                     EmbeddingDb& db, const std::string& identity_hint,
                                     std::uint64_t created_at) const {
        Image img = decode_jpeg(jpeg);
        ModelTag tag = phase == Phase::Pre ? ModelTag::PrePre : ModelTag::PostPost;
        const auto& net = models_.by_tag(tag);
        Embedding e = embed_counted(net, preprocess(img));

        DuplicateResult res;
        for (const auto* rec : db.scan(tag)) {
            if (rec->vector.size() != e.values.size())
                throw CorruptionError("database record " + std::to_string(rec->record_id) +
                                      " has dimension " + std::to_string(rec->vector.size()) +
                                      ", model produces " + std::to_string(e.values.size()));
            if (squared_distance(rec->vector, e.values) <= cfg_.theta)
                res.duplicates.push_back(rec->record_id);
        }
        res.new_record_id = db.put(tag, identity_hint, e.values, created_at);
        return res;
    }

    /// Same preprocessing the training data went through.
    Image preprocess(const Image& img) const {
        return cfg_.background_removal ? remove_background(img, cfg_.canny, cfg_.dilate_k)
                                       : img;
    }

private:
    Embedding embed_counted(const Network<float>& net, const Image& img) const {
        ++embed_calls_;
        return embed(net, img);
    }

    ModelSet models_;
    PipelineConfig cfg_;
    mutable std::size_t embed_calls_ = 0;
};

} // namespace ocuver

#endif // OCUVER_PIPELINE_HPP
