// Copyright 2026 the ocuverify authors.
// Licensed under the Apache License, Version 2.0. See LICENSE for details.

#ifndef OCUVER_FORENSICS_HPP
#define OCUVER_FORENSICS_HPP

// Error Level Analysis. A JPEG under scrutiny is recompressed at a fixed
// quality and differenced against itself; 8x8 blocks whose error level is
// an outlier against the image's median error level mark regions with a
// different compression history (splices, retouches).

#include <algorithm>
#include <cstdint>
#include <utility>
#include <vector>

#include "ocuver/errors.hpp"
#include "ocuver/image.hpp"
#include "ocuver/jpeg.hpp"

namespace ocuver {

struct ElaConfig {
    int requality = 95;          // recompression quality
    double outlier_factor = 2.5; // block flagged above factor * median
    double absolute_floor = 1.5; // and above this many 8-bit units
    int min_region = 4;          // 4-connected blocks needed for a forged verdict
    double display_gain = 20.0;  // amplification of the difference image
};

/// Per-8x8-block mean absolute recompression error. Partial border blocks
/// (image dimensions not multiple of 8) are dropped.
struct ElaMap {
    int blocks_w = 0;
    int blocks_h = 0;
    std::vector<double> block_means;
    int requality = 0;

    double mean_at(int bx, int by) const {
        return block_means[static_cast<std::size_t>(by) * blocks_w + bx];
    }
};

struct ElaResult {
    ElaMap map;
    Image ela_image; // amplified difference, for display
};

struct ElaReport {
    enum class Verdict { Genuine, Forged };
    Verdict verdict = Verdict::Genuine;
    std::vector<std::pair<int, int>> suspect_blocks; // (bx, by); empty iff genuine
    double median_block_mean = 0;
    double max_block_mean = 0;
};

/**
 * @brief Decode, re-encode at `requality`, decode, difference.
 *
 * block_means holds the mean absolute difference over all channels of each
 * full 8x8 block. The display image is the difference scaled by a fixed
 * gain and clamped; verdicts never depend on it.
 */
inline ElaResult compute_ela(const std::vector<std::uint8_t>& jpeg, JpegQuality requality,
                             double display_gain = 20.0) {
    Image original = decode_jpeg(jpeg);
    if (original.width < 8 || original.height < 8)
        throw ConfigError("compute_ela: image must be at least 8x8");
    Image recompressed = decode_jpeg(encode_jpeg(original, requality));

    ElaResult res;
    res.map.requality = requality.value();
    res.map.blocks_w = original.width / 8;
    res.map.blocks_h = original.height / 8;
    res.map.block_means.assign(
        static_cast<std::size_t>(res.map.blocks_w) * res.map.blocks_h, 0.0);
    res.ela_image = Image(original.width, original.height, original.channels);

    for (int y = 0; y < original.height; ++y)
        for (int x = 0; x < original.width; ++x)
            for (int c = 0; c < original.channels; ++c) {
                int d = std::abs(static_cast<int>(original.at(x, y, c)) -
                                 static_cast<int>(recompressed.at(x, y, c)));
                res.ela_image.at(x, y, c) = clamp_u8(d * display_gain);
                int bx = x / 8, by = y / 8;
                if (bx < res.map.blocks_w && by < res.map.blocks_h)
                    res.map.block_means[static_cast<std::size_t>(by) * res.map.blocks_w + bx] +=
                        d;
            }
    const double per_block = 64.0 * original.channels;
    for (auto& m : res.map.block_means) m /= per_block;
    return res;
}

namespace foredetail {

inline double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    std::size_t n = v.size();
    if (n == 0) return 0;
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

} // namespace foredetail

/**
 * @brief Outlier-based forged/genuine decision over a block error map.
 *
 * A block is suspect if its mean exceeds both factor * median(block_means)
 * and the absolute floor. The verdict is forged iff some 4-connected suspect
 * component holds at least min_region blocks; the reported suspect set is
 * the union of such components (isolated outliers are treated as noise, so
 * a genuine report always carries an empty set).
 */
inline ElaReport classify_forgery(const ElaMap& map, const ElaConfig& cfg = {}) {
    ElaReport rep;
    rep.median_block_mean = foredetail::median(map.block_means);
    rep.max_block_mean =
        map.block_means.empty()
            ? 0
            : *std::max_element(map.block_means.begin(), map.block_means.end());

    const int bw = map.blocks_w, bh = map.blocks_h;
    std::vector<std::uint8_t> suspect(map.block_means.size(), 0);
    for (int by = 0; by < bh; ++by)
        for (int bx = 0; bx < bw; ++bx) {
            double m = map.mean_at(bx, by);
            if (m > cfg.outlier_factor * rep.median_block_mean && m > cfg.absolute_floor)
                suspect[static_cast<std::size_t>(by) * bw + bx] = 1;
        }

    // 4-connected components over suspect blocks.
    std::vector<int> comp(suspect.size(), -1);
    std::vector<std::vector<std::pair<int, int>>> components;
    for (int by = 0; by < bh; ++by)
        for (int bx = 0; bx < bw; ++bx) {
            std::size_t i = static_cast<std::size_t>(by) * bw + bx;
            if (!suspect[i] || comp[i] >= 0) continue;
            int id = static_cast<int>(components.size());
            components.emplace_back();
            std::vector<std::pair<int, int>> stack{{bx, by}};
            comp[i] = id;
            while (!stack.empty()) {
                auto [cx, cy] = stack.back();
                stack.pop_back();
                components[static_cast<std::size_t>(id)].emplace_back(cx, cy);
                const int dx[4] = {1, -1, 0, 0}, dy[4] = {0, 0, 1, -1};
                for (int k = 0; k < 4; ++k) {
                    int nx = cx + dx[k], ny = cy + dy[k];
                    if (nx < 0 || ny < 0 || nx >= bw || ny >= bh) continue;
                    std::size_t ni = static_cast<std::size_t>(ny) * bw + nx;
                    if (suspect[ni] && comp[ni] < 0) {
                        comp[ni] = id;
                        stack.emplace_back(nx, ny);
                    }
                }
            }
        }

    for (const auto& c : components)
        if (static_cast<int>(c.size()) >= cfg.min_region)
            rep.suspect_blocks.insert(rep.suspect_blocks.end(), c.begin(), c.end());
    std::sort(rep.suspect_blocks.begin(), rep.suspect_blocks.end(),
              [](const auto& a, const auto& b) {
                  return a.second != b.second ? a.second < b.second : a.first < b.first;
              });
    rep.verdict = rep.suspect_blocks.empty() ? ElaReport::Verdict::Genuine
                                             : ElaReport::Verdict::Forged;
    return rep;
}

/// One-call convenience: ELA map, verdict, and display image.
inline std::pair<ElaReport, ElaResult> analyze_jpeg(const std::vector<std::uint8_t>& jpeg,
                                                    const ElaConfig& cfg = {}) {
    auto res = compute_ela(jpeg, JpegQuality(cfg.requality), cfg.display_gain);
    auto rep = classify_forgery(res.map, cfg);
    return {std::move(rep), std::move(res)};
}

} // namespace ocuver

#endif // OCUVER_FORENSICS_HPP
