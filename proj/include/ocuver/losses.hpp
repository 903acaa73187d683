// Copyright 2026 the ocuverify authors.
// Licensed under the Apache License, Version 2.0. See LICENSE for details.

#ifndef OCUVER_LOSSES_HPP
#define OCUVER_LOSSES_HPP

// Pairwise and triplet metric losses over embedding vectors, with exact
// analytic gradients, and the triplet/pair samplers used during training.
//
// Distances are squared L2 throughout. Hinges use subgradient zero exactly
// at the kink, so the active conditions are strict inequalities.

#include <cstdint>
#include <string>
#include <vector>

#include "ocuver/dataset.hpp"
#include "ocuver/errors.hpp"
#include "ocuver/network.hpp"
#include "ocuver/rng.hpp"

namespace ocuver {

/// Pair label convention: Genuine (0) pulls the pair together, Impostor (1)
/// pushes it beyond the margin.
enum class PairLabel : int { Genuine = 0, Impostor = 1 };

struct LossConfig {
    double margin = 1.0;      // contrastive margin m (squared-distance units)
    double alpha = 0.2;       // triplet margin (squared-distance units)
    int batch_size = 32;

    void validate() const {
        if (margin <= 0) throw ConfigError("loss: contrastive margin must be positive");
        if (alpha <= 0) throw ConfigError("loss: triplet margin must be positive");
        if (batch_size < 1) throw ConfigError("loss: batch size must be >= 1");
    }
};

template <typename T>
struct PairLossResult {
    double loss = 0;
    std::vector<T> grad_u, grad_v;
};

/// Per-pair contrastive term 1/2 [(1-Y) D + Y max(0, m - D)], D = |u - v|^2.
template <typename T>
PairLossResult<T> contrastive_loss(const std::vector<T>& u, const std::vector<T>& v,
                                   PairLabel label, double m) {
    if (u.size() != v.size())
        throw ConfigError("contrastive_loss: embedding dimensions differ");
    PairLossResult<T> r;
    r.grad_u.assign(u.size(), T(0));
    r.grad_v.assign(v.size(), T(0));
    double dist = 0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        double t = static_cast<double>(u[i]) - static_cast<double>(v[i]);
        dist += t * t;
    }
    if (label == PairLabel::Genuine) {
        r.loss = 0.5 * dist;
        for (std::size_t i = 0; i < u.size(); ++i) {
            T diff = static_cast<T>(u[i] - v[i]);
            r.grad_u[i] = diff;
            r.grad_v[i] = static_cast<T>(-diff);
        }
    } else if (dist < m) { // hinge active; zero loss and subgradient 0 at dist >= m
        r.loss = 0.5 * (m - dist);
        for (std::size_t i = 0; i < u.size(); ++i) {
            T diff = static_cast<T>(u[i] - v[i]);
            r.grad_u[i] = static_cast<T>(-diff);
            r.grad_v[i] = diff;
        }
    }
    return r;
}

template <typename T>
struct TripletLossResult {
    double loss = 0;
    std::vector<T> grad_a, grad_p, grad_n;
};

/// Per-triplet term [ |a-p|^2 - |a-n|^2 + alpha ]_+ .
template <typename T>
TripletLossResult<T> triplet_loss(const std::vector<T>& a, const std::vector<T>& p,
                                  const std::vector<T>& n, double alpha) {
    if (a.size() != p.size() || a.size() != n.size())
        throw ConfigError("triplet_loss: embedding dimensions differ");
    TripletLossResult<T> r;
    r.grad_a.assign(a.size(), T(0));
    r.grad_p.assign(a.size(), T(0));
    r.grad_n.assign(a.size(), T(0));
    double dpos = 0, dneg = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double tp = static_cast<double>(a[i]) - static_cast<double>(p[i]);
        double tn = static_cast<double>(a[i]) - static_cast<double>(n[i]);
        dpos += tp * tp;
        dneg += tn * tn;
    }
    double arg = dpos - dneg + alpha;
    if (arg > 0) {
        r.loss = arg;
        for (std::size_t i = 0; i < a.size(); ++i) {
            T ap = static_cast<T>(a[i] - p[i]);
            T an = static_cast<T>(a[i] - n[i]);
            r.grad_a[i] = static_cast<T>(2 * (ap - an));
            r.grad_p[i] = static_cast<T>(-2 * ap);
            r.grad_n[i] = static_cast<T>(2 * an);
        }
    }
    return r;
}

/// Anchor / positive / negative item indices into the dataset.
/// identity(anchor) == identity(positive) != identity(negative).
struct Triplet {
    std::size_t anchor = 0;
    std::size_t positive = 0;
    std::size_t negative = 0;
};

enum class TripletStrategy { Random, SemiHard };

inline TripletStrategy triplet_strategy_from_string(const std::string& s) {
    if (s == "random") return TripletStrategy::Random;
    if (s == "semi-hard") return TripletStrategy::SemiHard;
    throw ConfigError("unknown triplet strategy '" + s + "'");
}

namespace lossdetail {

/// Identities usable as anchors: both sides must offer an item, and for
/// one-sided views the pool must hold two distinct items.
inline std::vector<std::string> eligible_anchor_identities(const VariantView& view) {
    std::vector<std::string> ids;
    for (const auto& [id, as] : view.by_identity_a) {
        auto it = view.by_identity_b.find(id);
        if (it == view.by_identity_b.end()) continue;
        if (!view.two_sided() && as.size() < 2) continue;
        ids.push_back(id);
    }
    return ids;
}

struct AnchorPositive {
    std::size_t anchor;
    std::size_t positive;
    bool anchor_on_a; // which side the anchor came from (two-sided views)
};

inline AnchorPositive sample_anchor_positive(const VariantView& view,
                                             const std::vector<std::string>& ids, Rng& rng) {
    const std::string& id = ids[rng.uniform_int(ids.size())];
    if (view.two_sided()) {
        bool anchor_on_a = rng.chance(0.5);
        const auto& apool = anchor_on_a ? view.by_identity_a.at(id) : view.by_identity_b.at(id);
        const auto& ppool = anchor_on_a ? view.by_identity_b.at(id) : view.by_identity_a.at(id);
        return {apool[rng.uniform_int(apool.size())], ppool[rng.uniform_int(ppool.size())], anchor_on_a};
    }
    const auto& pool = view.by_identity_a.at(id);
    std::size_t ai = rng.uniform_int(pool.size());
    std::size_t pi = rng.uniform_int(pool.size() - 1);
    if (pi >= ai) ++pi;
    return {pool[ai], pool[pi], true};
}

/// Items of the partner side belonging to other identities.
inline std::vector<std::size_t> negative_pool(const VariantView& view, const std::string& id,
                                              bool anchor_on_a) {
    const auto& side = (view.two_sided() && anchor_on_a) ? view.side_b : view.side_a;
    // one-sided views draw negatives from the same pool
    const auto& pool = view.two_sided() ? side : view.side_a;
    std::vector<std::size_t> out;
    for (auto idx : pool)
        if (view.item(idx).identity_id != id) out.push_back(idx);
    return out;
}

} // namespace lossdetail

/**
 * @brief Samples cfg.batch_size triplets from a variant view.
 *
 * Random strategy draws uniformly under the triplet identity invariant.
 * Semi-hard selects, per anchor-positive pair, a negative with
 * d_ap < d_an < d_ap + alpha when one exists, otherwise the hardest
 * (closest) available negative. Deterministic given the seed.
 *
 * `embeddings` must hold one embedding per dataset item for the semi-hard
 * strategy (use embed_items); the random strategy ignores it.
 */
inline std::vector<Triplet> sample_triplets(const VariantView& view,
                                            const std::vector<std::vector<float>>* embeddings,
                                            const LossConfig& cfg, TripletStrategy strategy,
                                            std::uint64_t seed) {
    cfg.validate();
    auto ids = lossdetail::eligible_anchor_identities(view);
    std::size_t distinct = view.by_identity_a.size();
    if (view.two_sided())
        for (const auto& [id, _] : view.by_identity_b)
            if (!view.by_identity_a.count(id)) ++distinct;
    if (distinct < 2)
        throw ConfigError("sample_triplets: need at least two identities");
    if (ids.empty())
        throw ConfigError("sample_triplets: no identity has an eligible anchor/positive pair");
    if (strategy == TripletStrategy::SemiHard && embeddings == nullptr)
        throw ConfigError("sample_triplets: semi-hard strategy requires embeddings");

    Rng rng(mix_seed(seed, 0x74726970ULL));
    std::vector<Triplet> out;
    out.reserve(static_cast<std::size_t>(cfg.batch_size));

    for (int t = 0; t < cfg.batch_size; ++t) {
        auto ap = lossdetail::sample_anchor_positive(view, ids, rng);
        const std::string& id = view.item(ap.anchor).identity_id;
        auto negatives = lossdetail::negative_pool(view, id, ap.anchor_on_a);
        if (negatives.empty())
            throw ConfigError("sample_triplets: no negatives available for identity " + id);

        std::size_t neg;
        if (strategy == TripletStrategy::Random) {
            neg = negatives[rng.uniform_int(negatives.size())];
        } else {
            const auto& ea = (*embeddings)[ap.anchor];
            const auto& ep = (*embeddings)[ap.positive];
            double dap = squared_distance(ea, ep);
            std::vector<std::size_t> semihard;
            std::size_t hardest = negatives[0];
            double hardest_d = squared_distance(ea, (*embeddings)[negatives[0]]);
            for (auto ni : negatives) {
                double dan = squared_distance(ea, (*embeddings)[ni]);
                if (dan > dap && dan < dap + cfg.alpha) semihard.push_back(ni);
                if (dan < hardest_d) {
                    hardest_d = dan;
                    hardest = ni;
                }
            }
            neg = semihard.empty() ? hardest
                                   : semihard[rng.uniform_int(semihard.size())];
        }
        out.push_back({ap.anchor, ap.positive, neg});
    }
    return out;
}

/// Embeds every item participating in the view, indexed by item position.
inline std::vector<std::vector<float>> embed_items(const Network<float>& net,
                                                   const VariantView& view) {
    std::vector<std::vector<float>> out(view.items->size());
    auto fill = [&](const std::vector<std::size_t>& side) {
        for (auto idx : side)
            if (out[idx].empty()) out[idx] = embed(net, view.item(idx).image).values;
    };
    fill(view.side_a);
    fill(view.side_b);
    return out;
}

/// Convenience overload that computes the embeddings itself.
inline std::vector<Triplet> sample_triplets(const VariantView& view, const Network<float>& net,
                                            const LossConfig& cfg, TripletStrategy strategy,
                                            std::uint64_t seed) {
    if (strategy == TripletStrategy::Random)
        return sample_triplets(view, nullptr, cfg, strategy, seed);
    auto embs = embed_items(net, view);
    return sample_triplets(view, &embs, cfg, strategy, seed);
}

/// Labeled index pair for contrastive training.
struct LabeledPair {
    std::size_t u = 0;
    std::size_t v = 0;
    PairLabel label = PairLabel::Genuine;
};

/// Samples n pairs, alternating genuine and impostor for exact balance.
inline std::vector<LabeledPair> sample_pairs(const VariantView& view, int n,
                                             std::uint64_t seed) {
    auto ids = lossdetail::eligible_anchor_identities(view);
    if (ids.empty()) throw ConfigError("sample_pairs: no identity has a genuine pair");
    std::size_t distinct = view.by_identity_a.size();
    if (distinct < 2) throw ConfigError("sample_pairs: need at least two identities");

    Rng rng(mix_seed(seed, 0x70616972ULL));
    std::vector<LabeledPair> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        if (i % 2 == 0) {
            auto ap = lossdetail::sample_anchor_positive(view, ids, rng);
            out.push_back({ap.anchor, ap.positive, PairLabel::Genuine});
        } else {
            std::size_t a = view.side_a[rng.uniform_int(view.side_a.size())];
            auto negatives =
                lossdetail::negative_pool(view, view.item(a).identity_id, true);
            if (negatives.empty())
                throw ConfigError("sample_pairs: no impostor partner available");
            out.push_back({a, negatives[rng.uniform_int(negatives.size())],
                           PairLabel::Impostor});
        }
    }
    return out;
}

} // namespace ocuver

#endif // OCUVER_LOSSES_HPP
