// Copyright 2026 the ocuverify authors.
// Licensed under the Apache License, Version 2.0. See LICENSE for details.

#ifndef OCUVER_PREPROCESS_HPP
#define OCUVER_PREPROCESS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "ocuver/errors.hpp"
#include "ocuver/image.hpp"
#include "ocuver/rng.hpp"

namespace ocuver {

/// Per-pixel boolean map with the source image's dimensions.
struct BinaryMap {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> bits;

    BinaryMap() = default;
    BinaryMap(int w, int h, bool fill = false)
        : width(w), height(h), bits(static_cast<std::size_t>(w) * h, fill ? 1 : 0) {}

    bool get(int x, int y) const { return bits[static_cast<std::size_t>(y) * width + x] != 0; }
    void set(int x, int y, bool v = true) {
        bits[static_cast<std::size_t>(y) * width + x] = v ? 1 : 0;
    }
    std::size_t count() const {
        std::size_t n = 0;
        for (auto b : bits) n += b;
        return n;
    }
    bool operator==(const BinaryMap& o) const {
        return width == o.width && height == o.height && bits == o.bits;
    }
};

/// Canny edge-detector parameters. Thresholds are on a 0-255 gradient scale
/// where a full-contrast (0 -> 255) step edge measures 255 after the
/// configured smoothing, so threshold meaning does not drift with sigma.
struct CannyParams {
    double gaussian_sigma = 1.4;
    double low_threshold = 30.0;
    double high_threshold = 90.0;

    void validate() const {
        if (gaussian_sigma <= 0) throw ConfigError("canny: sigma must be positive");
        if (!(low_threshold < high_threshold))
            throw ConfigError("canny: low threshold must be below high threshold");
    }
};

/// Affine / elastic augmentation parameters. Each transform fires
/// independently with its probability, in the fixed order
/// flip -> rotate -> zoom -> distort.
struct AugmentConfig {
    double flip_lr_prob = 0.5;
    double rotate_prob = 0.9;
    double rotate_max_left_deg = 20.0;
    double rotate_max_right_deg = 20.0;
    double zoom_prob = 0.3;
    double zoom_min_factor = 1.0;
    double zoom_max_factor = 1.3;
    double distort_prob = 0.6;
    int distort_grid_w = 4;
    int distort_grid_h = 4;
    double distort_magnitude = 1.0; // node jitter in pixels
    std::uint64_t seed = 0;

    void validate() const {
        auto prob_ok = [](double p) { return p >= 0.0 && p <= 1.0; };
        if (!prob_ok(flip_lr_prob) || !prob_ok(rotate_prob) || !prob_ok(zoom_prob) ||
            !prob_ok(distort_prob))
            throw ConfigError("augment: probabilities must lie in [0, 1]");
        if (zoom_min_factor > zoom_max_factor)
            throw ConfigError("augment: zoom_min_factor must not exceed zoom_max_factor");
        if (distort_grid_w < 2 || distort_grid_h < 2)
            throw ConfigError("augment: distortion grid must be at least 2x2");
    }
};

namespace detail {

inline std::vector<double> gaussian_kernel(double sigma) {
    int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
    double sum = 0;
    for (int i = -radius; i <= radius; ++i) {
        double v = std::exp(-(i * i) / (2.0 * sigma * sigma));
        k[static_cast<std::size_t>(i + radius)] = v;
        sum += v;
    }
    for (auto& v : k) v /= sum;
    return k;
}

/// Separable Gaussian blur with edge replication. Input is a 1-channel image.
inline std::vector<double> gaussian_blur(const Image& gray, double sigma) {
    const int w = gray.width, h = gray.height;
    auto k = gaussian_kernel(sigma);
    int radius = static_cast<int>(k.size() / 2);
    std::vector<double> tmp(static_cast<std::size_t>(w) * h), out(tmp.size());
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double s = 0;
            for (int i = -radius; i <= radius; ++i) {
                int xx = std::clamp(x + i, 0, w - 1);
                s += k[static_cast<std::size_t>(i + radius)] * gray.at(xx, y, 0);
            }
            tmp[static_cast<std::size_t>(y) * w + x] = s;
        }
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double s = 0;
            for (int i = -radius; i <= radius; ++i) {
                int yy = std::clamp(y + i, 0, h - 1);
                s += k[static_cast<std::size_t>(i + radius)] * tmp[static_cast<std::size_t>(yy) * w + x];
            }
            out[static_cast<std::size_t>(y) * w + x] = s;
        }
    return out;
}

/// Peak central-difference response of a blurred full-contrast step; the
/// denominator that keeps the gradient scale at "step edge = 255".
inline double step_response(double sigma) {
    auto k = gaussian_kernel(sigma);
    int radius = static_cast<int>(k.size() / 2);
    int n = 4 * radius + 8;
    std::vector<double> profile(static_cast<std::size_t>(n));
    for (int x = 0; x < n; ++x) {
        double s = 0;
        for (int i = -radius; i <= radius; ++i)
            s += k[static_cast<std::size_t>(i + radius)] * (x + i >= n / 2 ? 255.0 : 0.0);
        profile[static_cast<std::size_t>(x)] = s;
    }
    double best = 0;
    for (int x = 1; x + 1 < n; ++x)
        best = std::max(best, std::abs(profile[static_cast<std::size_t>(x + 1)] -
                                       profile[static_cast<std::size_t>(x - 1)]) / 2.0);
    return best;
}

/// Sobel gradients of a smoothed plane; magnitude in raw Sobel units
/// divided by 4 (so an unsmoothed 0->255 step measures 255). Edge
/// replication at borders.
inline void sobel(const std::vector<double>& plane, int w, int h,
                  std::vector<double>& mag, std::vector<double>& gx_out,
                  std::vector<double>& gy_out) {
    mag.assign(static_cast<std::size_t>(w) * h, 0.0);
    gx_out.assign(mag.size(), 0.0);
    gy_out.assign(mag.size(), 0.0);
    auto at = [&](int x, int y) {
        x = std::clamp(x, 0, w - 1);
        y = std::clamp(y, 0, h - 1);
        return plane[static_cast<std::size_t>(y) * w + x];
    };
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double gx = -at(x - 1, y - 1) + at(x + 1, y - 1) - 2 * at(x - 1, y) +
                        2 * at(x + 1, y) - at(x - 1, y + 1) + at(x + 1, y + 1);
            double gy = -at(x - 1, y - 1) - 2 * at(x, y - 1) - at(x + 1, y - 1) +
                        at(x - 1, y + 1) + 2 * at(x, y + 1) + at(x + 1, y + 1);
            std::size_t i = static_cast<std::size_t>(y) * w + x;
            gx_out[i] = gx;
            gy_out[i] = gy;
            mag[i] = std::sqrt(gx * gx + gy * gy) / 4.0;
        }
}

} // namespace detail

/**
 * @brief Canny edge detection: Gaussian smoothing, Sobel gradients,
 * non-maximum suppression, double-threshold hysteresis (8-connected).
 */
inline BinaryMap canny_edges(const Image& gray, const CannyParams& params) {
    if (gray.channels != 1) throw ConfigError("canny_edges expects a 1-channel image");
    params.validate();
    const int w = gray.width, h = gray.height;

    auto plane = detail::gaussian_blur(gray, params.gaussian_sigma);
    std::vector<double> mag, gx, gy;
    detail::sobel(plane, w, h, mag, gx, gy);

    // rescale so a full-contrast step measures 255 despite the smoothing
    const double scale = 255.0 / (2.0 * detail::step_response(params.gaussian_sigma));
    for (auto& m : mag) m *= scale;

    // Non-maximum suppression along the quantized gradient direction.
    std::vector<std::uint8_t> keep(mag.size(), 0);
    auto m = [&](int x, int y) -> double {
        if (x < 0 || y < 0 || x >= w || y >= h) return 0.0;
        return mag[static_cast<std::size_t>(y) * w + x];
    };
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            std::size_t i = static_cast<std::size_t>(y) * w + x;
            if (mag[i] < params.low_threshold) continue;
            double angle = std::atan2(gy[i], gx[i]) * 180.0 / 3.14159265358979323846;
            if (angle < 0) angle += 180.0;
            double a, b;
            if (angle < 22.5 || angle >= 157.5) {        // horizontal gradient
                a = m(x - 1, y); b = m(x + 1, y);
            } else if (angle < 67.5) {                   // diagonal
                a = m(x - 1, y - 1); b = m(x + 1, y + 1);
            } else if (angle < 112.5) {                  // vertical gradient
                a = m(x, y - 1); b = m(x, y + 1);
            } else {
                a = m(x + 1, y - 1); b = m(x - 1, y + 1);
            }
            if (mag[i] >= a && mag[i] >= b) keep[i] = 1;
        }

    // Hysteresis: strong pixels seed, weak pixels join if 8-connected.
    BinaryMap edges(w, h);
    std::vector<std::pair<int, int>> stack;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            std::size_t i = static_cast<std::size_t>(y) * w + x;
            if (keep[i] && mag[i] >= params.high_threshold && !edges.get(x, y)) {
                edges.set(x, y);
                stack.emplace_back(x, y);
                while (!stack.empty()) {
                    auto [cx, cy] = stack.back();
                    stack.pop_back();
                    for (int dy = -1; dy <= 1; ++dy)
                        for (int dx = -1; dx <= 1; ++dx) {
                            int nx = cx + dx, ny = cy + dy;
                            if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
                            std::size_t ni = static_cast<std::size_t>(ny) * w + nx;
                            if (keep[ni] && !edges.get(nx, ny)) {
                                edges.set(nx, ny);
                                stack.emplace_back(nx, ny);
                            }
                        }
                }
            }
        }
    return edges;
}

/// Square dilation: output set iff any input bit set within the
/// (2k+1)x(2k+1) neighborhood, clamped at borders.
inline BinaryMap dilate(const BinaryMap& map, int kernel_half_width) {
    if (kernel_half_width < 1) throw ConfigError("dilate: kernel half-width must be >= 1");
    const int w = map.width, h = map.height, k = kernel_half_width;
    BinaryMap out(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            if (!map.get(x, y)) continue;
            int x0 = std::max(0, x - k), x1 = std::min(w - 1, x + k);
            int y0 = std::max(0, y - k), y1 = std::min(h - 1, y + k);
            for (int yy = y0; yy <= y1; ++yy)
                for (int xx = x0; xx <= x1; ++xx) out.set(xx, yy);
        }
    return out;
}

/// 4-connected flood fill from every non-edge border pixel. Returned bits
/// mark background; edge pixels and enclosed interiors stay foreground.
inline BinaryMap background_mask(const BinaryMap& edges) {
    const int w = edges.width, h = edges.height;
    BinaryMap bg(w, h);
    std::vector<std::pair<int, int>> stack;
    auto push = [&](int x, int y) {
        if (x < 0 || y < 0 || x >= w || y >= h) return;
        if (edges.get(x, y) || bg.get(x, y)) return;
        bg.set(x, y);
        stack.emplace_back(x, y);
    };
    for (int x = 0; x < w; ++x) {
        push(x, 0);
        push(x, h - 1);
    }
    for (int y = 0; y < h; ++y) {
        push(0, y);
        push(w - 1, y);
    }
    while (!stack.empty()) {
        auto [x, y] = stack.back();
        stack.pop_back();
        push(x - 1, y);
        push(x + 1, y);
        push(x, y - 1);
        push(x, y + 1);
    }
    return bg;
}

/**
 * @brief Background removal: grayscale -> Canny -> dilate -> border flood
 * fill; background pixels are zeroed in a copy, foreground is untouched.
 */
inline Image remove_background(const Image& img, const CannyParams& canny = {},
                               int dilate_k = 2) {
    auto edges = canny_edges(to_grayscale(img), canny);
    auto bg = background_mask(dilate(edges, dilate_k));
    Image out = img;
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            if (bg.get(x, y))
                for (int c = 0; c < img.channels; ++c) out.at(x, y, c) = 0;
    return out;
}

/**
 * @brief Stochastic augmentation, a pure function of (image, config).
 *
 * Transforms are applied in fixed order, each with its own probability:
 * horizontal flip; rotation by a uniform angle in [-max_left, +max_right];
 * center zoom by a uniform factor with crop to the original size; elastic
 * distortion over a regular mesh whose interior nodes are jittered within
 * +-magnitude pixels. Rotation and zoom fill exposed regions with black.
 */
inline Image augment(const Image& img, const AugmentConfig& cfg) {
    cfg.validate();
    Rng rng(mix_seed(cfg.seed, 0x61756721ULL));
    Image cur = img;

    if (rng.chance(cfg.flip_lr_prob)) {
        Image flipped(cur.width, cur.height, cur.channels);
        for (int y = 0; y < cur.height; ++y)
            for (int x = 0; x < cur.width; ++x)
                for (int c = 0; c < cur.channels; ++c)
                    flipped.at(x, y, c) = cur.at(cur.width - 1 - x, y, c);
        cur = std::move(flipped);
    }

    if (rng.chance(cfg.rotate_prob)) {
        double deg = rng.uniform(-cfg.rotate_max_left_deg, cfg.rotate_max_right_deg);
        double rad = deg * 3.14159265358979323846 / 180.0;
        double cs = std::cos(rad), sn = std::sin(rad);
        double cx = (cur.width - 1) / 2.0, cy = (cur.height - 1) / 2.0;
        Image rotated(cur.width, cur.height, cur.channels);
        for (int y = 0; y < cur.height; ++y)
            for (int x = 0; x < cur.width; ++x) {
                // inverse rotation of the output coordinate
                double dx = x - cx, dy = y - cy;
                double sxf = cx + cs * dx + sn * dy;
                double syf = cy - sn * dx + cs * dy;
                for (int c = 0; c < cur.channels; ++c)
                    rotated.at(x, y, c) = clamp_u8(sample_bilinear(cur, sxf, syf, c, 0));
            }
        cur = std::move(rotated);
    }

    if (rng.chance(cfg.zoom_prob)) {
        double z = rng.uniform(cfg.zoom_min_factor, cfg.zoom_max_factor);
        double cx = (cur.width - 1) / 2.0, cy = (cur.height - 1) / 2.0;
        Image zoomed(cur.width, cur.height, cur.channels);
        for (int y = 0; y < cur.height; ++y)
            for (int x = 0; x < cur.width; ++x) {
                double sxf = cx + (x - cx) / z;
                double syf = cy + (y - cy) / z;
                for (int c = 0; c < cur.channels; ++c)
                    zoomed.at(x, y, c) = clamp_u8(sample_bilinear(cur, sxf, syf, c, 0));
            }
        cur = std::move(zoomed);
    }

    if (rng.chance(cfg.distort_prob)) {
        const int gw = cfg.distort_grid_w, gh = cfg.distort_grid_h;
        // Source position of each mesh node; interior nodes get jittered.
        std::vector<double> nx(static_cast<std::size_t>((gw + 1) * (gh + 1)));
        std::vector<double> ny(nx.size());
        for (int j = 0; j <= gh; ++j)
            for (int i = 0; i <= gw; ++i) {
                std::size_t idx = static_cast<std::size_t>(j) * (gw + 1) + i;
                double bx = static_cast<double>(i) * cur.width / gw;
                double by = static_cast<double>(j) * cur.height / gh;
                if (i > 0 && i < gw && j > 0 && j < gh) {
                    bx += rng.uniform(-cfg.distort_magnitude, cfg.distort_magnitude);
                    by += rng.uniform(-cfg.distort_magnitude, cfg.distort_magnitude);
                }
                nx[idx] = bx;
                ny[idx] = by;
            }
        Image warped(cur.width, cur.height, cur.channels);
        for (int y = 0; y < cur.height; ++y)
            for (int x = 0; x < cur.width; ++x) {
                // locate the regular output cell, then bilinearly interpolate
                // the jittered source positions of its corners
                double u = static_cast<double>(x) * gw / cur.width;
                double v = static_cast<double>(y) * gh / cur.height;
                int ci = std::min(static_cast<int>(u), gw - 1);
                int cj = std::min(static_cast<int>(v), gh - 1);
                double fu = u - ci, fv = v - cj;
                auto node = [&](int i, int j) {
                    std::size_t idx = static_cast<std::size_t>(j) * (gw + 1) + i;
                    return std::pair<double, double>(nx[idx], ny[idx]);
                };
                auto [x00, y00] = node(ci, cj);
                auto [x10, y10] = node(ci + 1, cj);
                auto [x01, y01] = node(ci, cj + 1);
                auto [x11, y11] = node(ci + 1, cj + 1);
                double sxf = (1 - fv) * ((1 - fu) * x00 + fu * x10) +
                             fv * ((1 - fu) * x01 + fu * x11);
                double syf = (1 - fv) * ((1 - fu) * y00 + fu * y10) +
                             fv * ((1 - fu) * y01 + fu * y11);
                for (int c = 0; c < cur.channels; ++c)
                    warped.at(x, y, c) = clamp_u8(sample_bilinear(cur, sxf, syf, c, 0));
            }
        cur = std::move(warped);
    }

    return cur;
}

} // namespace ocuver

#endif // OCUVER_PREPROCESS_HPP
