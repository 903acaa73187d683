// Copyright 2026 the ocuverify authors.
// Licensed under the Apache License, Version 2.0. See LICENSE for details.

#ifndef OCUVER_DATASET_HPP
#define OCUVER_DATASET_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ocuver/errors.hpp"
#include "ocuver/image.hpp"
#include "ocuver/network.hpp"

namespace ocuver {

/// Surgery phase of a photograph.
enum class Phase : std::uint8_t { Pre = 0, Post = 1 };

inline std::string to_string(Phase p) { return p == Phase::Pre ? "PRE" : "POST"; }

inline Phase phase_from_string(const std::string& s) {
    if (s == "PRE") return Phase::Pre;
    if (s == "POST") return Phase::Post;
    throw ConfigError("unknown phase '" + s + "'");
}

/// One labeled training image. The one-pair regime stores a single original
/// PRE and POST item per identity; augmented copies reference their source.
struct DatasetItem {
    std::string identity_id;
    Phase phase = Phase::Pre;
    Image image;
    std::optional<std::size_t> augmented_from; // index of the original item
};

/**
 * @brief Variant-filtered training view.
 *
 * For PRE-POST, side_a holds PRE items and side_b holds POST items; anchors
 * may come from either side with partners drawn from the other. For PRE-PRE
 * and POST-POST both sides alias the single phase pool.
 */
struct VariantView {
    ModelTag variant = ModelTag::PrePost;
    const std::vector<DatasetItem>* items = nullptr;
    std::vector<std::size_t> side_a;
    std::vector<std::size_t> side_b;
    std::map<std::string, std::vector<std::size_t>> by_identity_a;
    std::map<std::string, std::vector<std::size_t>> by_identity_b;

    bool two_sided() const { return variant == ModelTag::PrePost; }

    /// Number of items participating in the view (union of both sides).
    std::size_t item_count() const {
        return two_sided() ? side_a.size() + side_b.size() : side_a.size();
    }

    const DatasetItem& item(std::size_t idx) const { return (*items)[idx]; }
};

/// Filters items by model variant. Throws if the view would be empty.
inline VariantView build_variant_dataset(const std::vector<DatasetItem>& items,
                                         ModelTag variant) {
    if (items.empty()) throw ConfigError("build_variant_dataset: empty item list");
    VariantView view;
    view.variant = variant;
    view.items = &items;

    auto add = [&](std::vector<std::size_t>& side,
                   std::map<std::string, std::vector<std::size_t>>& by_id, std::size_t idx) {
        side.push_back(idx);
        by_id[items[idx].identity_id].push_back(idx);
    };

    for (std::size_t i = 0; i < items.size(); ++i) {
        Phase ph = items[i].phase;
        switch (variant) {
            case ModelTag::PrePre:
                if (ph == Phase::Pre) add(view.side_a, view.by_identity_a, i);
                break;
            case ModelTag::PostPost:
                if (ph == Phase::Post) add(view.side_a, view.by_identity_a, i);
                break;
            case ModelTag::PrePost:
                if (ph == Phase::Pre)
                    add(view.side_a, view.by_identity_a, i);
                else
                    add(view.side_b, view.by_identity_b, i);
                break;
        }
    }
    if (!view.two_sided()) {
        view.side_b = view.side_a;
        view.by_identity_b = view.by_identity_a;
    }
    if (view.side_a.empty() || view.side_b.empty())
        throw ConfigError("build_variant_dataset: no eligible items for variant " +
                          to_string(variant));
    return view;
}

/// All genuine (same-identity) cross-side pairs of the view. For one-sided
/// views these are unordered distinct in-pool pairs.
inline std::vector<std::pair<std::size_t, std::size_t>> genuine_pairs(const VariantView& view) {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    if (view.two_sided()) {
        for (const auto& [id, as] : view.by_identity_a) {
            auto it = view.by_identity_b.find(id);
            if (it == view.by_identity_b.end()) continue;
            for (auto a : as)
                for (auto b : it->second) out.emplace_back(a, b);
        }
    } else {
        for (const auto& [id, pool] : view.by_identity_a)
            for (std::size_t i = 0; i < pool.size(); ++i)
                for (std::size_t j = i + 1; j < pool.size(); ++j)
                    out.emplace_back(pool[i], pool[j]);
    }
    return out;
}

} // namespace ocuver

#endif // OCUVER_DATASET_HPP
