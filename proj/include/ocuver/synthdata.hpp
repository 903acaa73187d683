// Copyright 2026 the ocuverify authors.
// Licensed under the Apache License, Version 2.0. See LICENSE for details.

#ifndef OCUVER_SYNTHDATA_HPP
#define OCUVER_SYNTHDATA_HPP

// Procedural stand-in data: parametric face renderings (one pre/post pair
// per identity, the post image occluded by an eye patch) and genuine/spliced
// JPEG fixtures for the forensics pipeline. Everything is a pure function of
// its seeds.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ocuver/image.hpp"
#include "ocuver/jpeg.hpp"
#include "ocuver/preprocess.hpp"
#include "ocuver/rng.hpp"

namespace ocuver {

/// Half-open pixel rectangle [x0, x1) x [y0, y1).
struct PixelRect {
    int x0 = 0, y0 = 0, x1 = 0, y1 = 0;
    bool contains(int x, int y) const { return x >= x0 && x < x1 && y >= y0 && y < y1; }
    int width() const { return x1 - x0; }
    int height() const { return y1 - y0; }
};

/// Identity geometry drawn deterministically from a seed. Coordinates are
/// fractions of the canvas side.
struct SynthIdentitySpec {
    std::uint64_t seed = 0;

    double head_cx = 0.5, head_cy = 0.48;
    double head_rx = 0.3, head_ry = 0.4;
    double eye_y = 0.42, eye_dx = 0.13, eye_r = 0.05;
    double pupil_ratio = 0.45;
    double brow_dy = 0.045, brow_hw = 0.07, brow_thick = 0.012;
    double nose_len = 0.12, nose_hw = 0.018;
    double mouth_y = 0.68, mouth_hw = 0.16, mouth_curve = 0.03, mouth_thick = 0.014;
    double hair_y = 0.22;
    int hair_tone = 60;
    int skin_tone = 180;
    int feature_tone = 40;
    double tint_r = 1.0, tint_g = 0.92, tint_b = 0.85;
    bool patch_left = false;
    int post_jitter = 0; // brightness offset of the post image, in [-3, 3]

    static SynthIdentitySpec from_seed(std::uint64_t seed) {
        Rng rng(mix_seed(seed, 0x73796e74ULL));
        SynthIdentitySpec s;
        s.seed = seed;
        s.head_cx = rng.uniform(0.43, 0.57);
        s.head_cy = rng.uniform(0.42, 0.54);
        s.head_rx = rng.uniform(0.21, 0.36);
        s.head_ry = rng.uniform(0.29, 0.46);
        s.eye_y = rng.uniform(0.34, 0.48);
        s.eye_dx = rng.uniform(0.08, 0.17);
        s.eye_r = rng.uniform(0.03, 0.06);
        s.pupil_ratio = rng.uniform(0.3, 0.65);
        s.brow_dy = rng.uniform(0.025, 0.065);
        s.brow_hw = rng.uniform(0.045, 0.1);
        s.brow_thick = rng.uniform(0.007, 0.022);
        s.nose_len = rng.uniform(0.07, 0.18);
        s.nose_hw = rng.uniform(0.01, 0.032);
        s.mouth_y = rng.uniform(0.62, 0.75);
        s.mouth_hw = rng.uniform(0.09, 0.22);
        s.mouth_curve = rng.uniform(-0.05, 0.08);
        s.mouth_thick = rng.uniform(0.007, 0.024);
        s.hair_y = rng.uniform(0.12, 0.34);
        s.hair_tone = static_cast<int>(rng.uniform_int(55)) + 185;
        s.skin_tone = static_cast<int>(rng.uniform_int(55)) + 185;
        s.feature_tone = static_cast<int>(rng.uniform_int(35)) + 25;
        s.tint_r = rng.uniform(0.95, 1.0);
        s.tint_g = rng.uniform(0.85, 0.95);
        s.tint_b = rng.uniform(0.75, 0.9);
        s.patch_left = rng.chance(0.5);
        s.post_jitter = static_cast<int>(rng.uniform_int(7)) - 3;

        // keep both eyes strictly inside the head ellipse
        double margin = s.eye_dx + s.eye_r * 1.4;
        if (margin > s.head_rx * 0.85) s.eye_dx = s.head_rx * 0.85 - s.eye_r * 1.4;
        return s;
    }
};

namespace synthdetail {

/// Smooth value-noise plane shared by every rendering (the "clinic wall"):
/// identity-independent so the background carries no identity signal, and
/// dark enough that the head boundary is a strong gradient everywhere.
inline double background_value(int x, int y, int canvas) {
    // coarse lattice interpolated bilinearly, plus a fine deterministic ripple
    constexpr int kCells = 6;
    auto lattice = [](int i, int j) {
        std::uint64_t h = mix_seed(0xba5eba11ULL, static_cast<std::uint64_t>(i) * 73856093ULL ^
                                                      static_cast<std::uint64_t>(j) * 19349663ULL);
        return 10.0 + static_cast<double>(h % 1000) / 1000.0 * 28.0;
    };
    double u = static_cast<double>(x) * kCells / canvas;
    double v = static_cast<double>(y) * kCells / canvas;
    int i = static_cast<int>(u), j = static_cast<int>(v);
    double fu = u - i, fv = v - j;
    double n = (1 - fv) * ((1 - fu) * lattice(i, j) + fu * lattice(i + 1, j)) +
               fv * ((1 - fu) * lattice(i, j + 1) + fu * lattice(i + 1, j + 1));
    std::uint64_t fine = mix_seed(0x7269707 , static_cast<std::uint64_t>(y) * 100003ULL + x);
    return n + static_cast<double>(fine % 9) - 4.0;
}

inline void put_rgb(Image& img, int x, int y, double v, double tr, double tg, double tb) {
    img.at(x, y, 0) = clamp_u8(v * tr);
    img.at(x, y, 1) = clamp_u8(v * tg);
    img.at(x, y, 2) = clamp_u8(v * tb);
}

} // namespace synthdetail

/// Eye-patch bounding rectangle of the post image (pixels), strap excluded.
/// A bandage, not a dot: it buries the eye, the brow and part of the cheek,
/// so matching across phases genuinely has to cope with the occlusion.
inline PixelRect patch_rect(const SynthIdentitySpec& s, int canvas) {
    double ex = s.head_cx + (s.patch_left ? -s.eye_dx : s.eye_dx);
    double hw = s.eye_r * 2.4 + 0.045, hh = s.eye_r * 2.0 + 0.055;
    PixelRect r;
    r.x0 = std::max(0, static_cast<int>((ex - hw) * canvas));
    r.x1 = std::min(canvas, static_cast<int>((ex + hw) * canvas) + 1);
    r.y0 = std::max(0, static_cast<int>((s.eye_y - hh) * canvas));
    r.y1 = std::min(canvas, static_cast<int>((s.eye_y + hh) * canvas) + 1);
    return r;
}

/// Region where the post image may differ from the pre image by more than
/// the brightness jitter: the patch plus its full-width strap rows.
inline PixelRect post_change_bounds(const SynthIdentitySpec& s, int canvas) {
    PixelRect p = patch_rect(s, canvas);
    return {0, p.y0, canvas, p.y1};
}

/// Brightness jitter bound between pre and post outside the patch region.
inline constexpr int kPostJitterMax = 3;

namespace synthdetail {

inline Image render_face(const SynthIdentitySpec& s, int canvas, bool with_patch) {
    Image img(canvas, canvas, 3);
    Rng skin_noise(mix_seed(s.seed, 0xface));

    const double cx = s.head_cx * canvas, cy = s.head_cy * canvas;
    const double rx = s.head_rx * canvas, ry = s.head_ry * canvas;
    const double eye_y = s.eye_y * canvas, eye_dx = s.eye_dx * canvas;
    const double eye_r = s.eye_r * canvas;

    for (int y = 0; y < canvas; ++y)
        for (int x = 0; x < canvas; ++x) {
            double nx = (x - cx) / rx, ny = (y - cy) / ry;
            double e = nx * nx + ny * ny;
            double v;
            double tr = s.tint_r, tg = s.tint_g, tb = s.tint_b;
            if (e <= 1.0) {
                // skin with radial shading and mild grain
                v = s.skin_tone - 10.0 * e + (skin_noise.uniform() - 0.5) * 4.0;
                if (y < s.hair_y * canvas && e > 0.35) v = s.hair_tone;

                // eyes: sclera ellipse + pupil
                for (int side = -1; side <= 1; side += 2) {
                    double ex = cx + side * eye_dx;
                    double dx_ = (x - ex) / eye_r, dy_ = (y - eye_y) / (eye_r * 0.72);
                    if (dx_ * dx_ + dy_ * dy_ <= 1.0) {
                        v = 232;
                        tr = tg = tb = 1.0;
                        double pr = s.pupil_ratio;
                        if (dx_ * dx_ + dy_ * dy_ <= pr * pr) {
                            v = 24;
                        }
                    }
                    // brow bar
                    double brow_y = eye_y - (s.brow_dy + s.eye_r) * canvas;
                    if (std::abs(y - brow_y) <= s.brow_thick * canvas &&
                        std::abs(x - ex) <= s.brow_hw * canvas)
                        v = s.feature_tone;
                }

                // nose stem
                double nose_top = eye_y + eye_r * 1.2;
                if (y >= nose_top && y <= nose_top + s.nose_len * canvas &&
                    std::abs(x - cx) <= s.nose_hw * canvas)
                    v = s.skin_tone - 45;

                // mouth arc
                double mhw = s.mouth_hw * canvas;
                if (std::abs(x - cx) <= mhw) {
                    double t = (x - cx) / mhw;
                    double my = s.mouth_y * canvas + s.mouth_curve * canvas * (t * t - 0.5);
                    if (std::abs(y - my) <= s.mouth_thick * canvas) v = s.feature_tone;
                }
            } else {
                v = background_value(x, y, canvas);
                tr = tg = tb = 1.0;
            }
            put_rgb(img, x, y, v, tr, tg, tb);
        }

    if (with_patch) {
        PixelRect p = patch_rect(s, canvas);
        Rng patch_noise(mix_seed(s.seed, 0x70617463ULL));
        // strap band across the full width at the patch top
        int strap_h = std::max(2, canvas / 64);
        for (int y = p.y0; y < std::min(p.y0 + strap_h, canvas); ++y)
            for (int x = 0; x < canvas; ++x) put_rgb(img, x, y, 34, 1, 1, 1);
        for (int y = p.y0; y < p.y1; ++y)
            for (int x = p.x0; x < p.x1; ++x) {
                double v = 30 + (patch_noise.uniform() - 0.5) * 6.0;
                put_rgb(img, x, y, v, 1, 1, 1);
            }
    }
    return img;
}

} // namespace synthdetail

/**
 * @brief Renders the pre/post pair of an identity. The post image is the
 * same rendering with a dark eye patch and strap, shifted by a small
 * identity-specific brightness jitter; it differs from the pre image only
 * inside post_change_bounds() plus that jitter.
 */
inline std::pair<Image, Image> gen_identity_pair(const SynthIdentitySpec& spec, int canvas) {
    if (canvas < 64) throw ConfigError("gen_identity_pair: canvas must be at least 64");
    Image pre = synthdetail::render_face(spec, canvas, false);
    Image post = synthdetail::render_face(spec, canvas, true);
    for (auto& px : post.pixels)
        px = clamp_u8(static_cast<double>(px) + spec.post_jitter);
    return {std::move(pre), std::move(post)};
}

// ---------------------------------------------------------------------------
// Forensic fixtures
// ---------------------------------------------------------------------------

struct ForgeryFixture {
    std::vector<std::uint8_t> genuine_jpeg; // carrier saved once at q_carrier
    std::vector<std::uint8_t> forged_jpeg;  // carrier with a spliced patch, re-saved
    PixelRect splice_rect;                  // ground truth, in pixels
};

namespace synthdetail {

/// High-frequency donor texture with decorrelated channels; fine luma and
/// chroma detail survives a high-quality save and makes the spliced region
/// stand out after recompression.
inline Image render_donor(std::uint64_t seed, int w, int h) {
    Rng rng(mix_seed(seed, 0x646f6e6fULL));
    Image img(w, h, 3);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double base = ((x + y) % 2 == 0) ? 60.0 : 195.0;
            for (int c = 0; c < 3; ++c)
                img.at(x, y, c) = clamp_u8(base + (rng.uniform() - 0.5) * 200.0);
        }
    return img;
}

/// Channel-wise box blur with edge replication; tames the carrier's edges so
/// the genuine fixture has no high-frequency outliers of its own.
inline Image box_blur(const Image& img, int radius, int passes) {
    Image cur = img;
    for (int pass = 0; pass < passes; ++pass) {
        Image next(cur.width, cur.height, cur.channels);
        for (int y = 0; y < cur.height; ++y)
            for (int x = 0; x < cur.width; ++x)
                for (int c = 0; c < cur.channels; ++c) {
                    int sum = 0, count = 0;
                    for (int dy = -radius; dy <= radius; ++dy)
                        for (int dx = -radius; dx <= radius; ++dx) {
                            int xx = std::clamp(x + dx, 0, cur.width - 1);
                            int yy = std::clamp(y + dy, 0, cur.height - 1);
                            sum += cur.at(xx, yy, c);
                            ++count;
                        }
                    next.at(x, y, c) = static_cast<std::uint8_t>((sum + count / 2) / count);
                }
        cur = std::move(next);
    }
    return cur;
}

} // namespace synthdetail

/**
 * @brief Builds a genuine/forged fixture pair with known splice geometry.
 *
 * The forged image takes the carrier (saved at q_carrier), pastes a
 * 32x32 patch from a donor saved at q_splice — deliberately off the 8x8
 * grid — and re-saves at q_carrier.
 */
inline ForgeryFixture gen_forgery_fixture(std::uint64_t carrier_seed,
                                          std::uint64_t splice_seed, JpegQuality q_carrier,
                                          JpegQuality q_splice, int canvas = 160) {
    auto spec = SynthIdentitySpec::from_seed(carrier_seed);
    // soft-focus carrier: a genuine photo without high-frequency outliers
    Image carrier = synthdetail::box_blur(synthdetail::render_face(spec, canvas, false), 2, 2);

    ForgeryFixture fix;
    fix.genuine_jpeg = encode_jpeg(carrier, q_carrier);

    const int patch = 32;
    Rng rng(mix_seed(carrier_seed, splice_seed));
    int max_off = canvas - patch - 12;
    // offsets of 12 + 8k are congruent to 4 mod 8: the patch never lands on
    // the block grid
    int px = 12 + static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(max_off - 12) / 8)) * 8;
    int py = 12 + static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(max_off - 12) / 8)) * 8;
    fix.splice_rect = {px, py, px + patch, py + patch};

    Image donor = synthdetail::render_donor(splice_seed, patch, patch);
    Image donor_compressed = decode_jpeg(encode_jpeg(donor, q_splice));

    Image tampered = decode_jpeg(fix.genuine_jpeg);
    for (int y = 0; y < patch; ++y)
        for (int x = 0; x < patch; ++x)
            for (int c = 0; c < 3; ++c)
                tampered.at(px + x, py + y, c) = donor_compressed.at(x, y, c);
    fix.forged_jpeg = encode_jpeg(tampered, q_carrier);
    return fix;
}

/// Blocks (bx, by) of the 8x8 grid fully contained in a pixel rectangle;
/// the ground truth a splice localization is scored against.
inline std::vector<std::pair<int, int>> blocks_fully_inside(const PixelRect& r) {
    std::vector<std::pair<int, int>> out;
    int bx0 = (r.x0 + 7) / 8, bx1 = r.x1 / 8;
    int by0 = (r.y0 + 7) / 8, by1 = r.y1 / 8;
    for (int by = by0; by < by1; ++by)
        for (int bx = bx0; bx < bx1; ++bx) out.emplace_back(bx, by);
    return out;
}

// ---------------------------------------------------------------------------
// Corpus generation and sanity statistics
// ---------------------------------------------------------------------------

struct SeparabilityStats {
    double intra = 0; // mean |pre - augment(pre)| within identities
    double inter = 0; // mean |pre_i - pre_j| across identities
};

/// Pixel-space separability of a generated set; a meaningful corpus has
/// intra < inter, so verification failures implicate the model, not the data.
inline SeparabilityStats separability(const std::vector<Image>& pre_images,
                                      const AugmentConfig& aug, std::uint64_t seed) {
    SeparabilityStats st;
    if (pre_images.size() < 2) throw ConfigError("separability: need at least two identities");
    auto mean_abs = [](const Image& a, const Image& b) {
        double s = 0;
        for (std::size_t i = 0; i < a.pixels.size(); ++i)
            s += std::abs(static_cast<int>(a.pixels[i]) - static_cast<int>(b.pixels[i]));
        return s / static_cast<double>(a.pixels.size());
    };
    double intra = 0;
    for (std::size_t i = 0; i < pre_images.size(); ++i) {
        AugmentConfig cfg = aug;
        cfg.seed = mix_seed(seed, i);
        intra += mean_abs(pre_images[i], augment(pre_images[i], cfg));
    }
    st.intra = intra / static_cast<double>(pre_images.size());
    double inter = 0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < pre_images.size(); ++i)
        for (std::size_t j = i + 1; j < pre_images.size(); ++j) {
            inter += mean_abs(pre_images[i], pre_images[j]);
            ++pairs;
        }
    st.inter = inter / static_cast<double>(pairs);
    return st;
}

} // namespace ocuver

#endif // OCUVER_SYNTHDATA_HPP
