// Copyright 2026 the ocuverify authors.
// Licensed under the Apache License, Version 2.0. See LICENSE for details.

#ifndef OCUVER_IMAGE_HPP
#define OCUVER_IMAGE_HPP

#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "ocuver/errors.hpp"

namespace ocuver {

/**
 * @brief Decoded raster. Row-major, interleaved 8-bit samples.
 *
 * channels is 1 (grayscale) or 3 (RGB). Values are immutable by convention
 * once an operation has returned the image.
 */
struct Image {
    int width = 0;
    int height = 0;
    int channels = 0;
    std::vector<std::uint8_t> pixels;

    Image() = default;
    Image(int w, int h, int c, std::uint8_t fill = 0)
        : width(w), height(h), channels(c),
          pixels(static_cast<std::size_t>(w) * h * c, fill) {}

    std::uint8_t& at(int x, int y, int c = 0) {
        return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    std::uint8_t at(int x, int y, int c = 0) const {
        return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }

    bool valid() const {
        return width > 0 && height > 0 && (channels == 1 || channels == 3) &&
               pixels.size() == static_cast<std::size_t>(width) * height * channels;
    }

    bool operator==(const Image& o) const {
        return width == o.width && height == o.height && channels == o.channels &&
               pixels == o.pixels;
    }
};

/// JPEG quality factor, restricted to [1, 100].
class JpegQuality {
public:
    explicit JpegQuality(int q) : q_(q) {
        if (q < 1 || q > 100)
            throw ConfigError("JPEG quality must be in [1, 100], got " + std::to_string(q));
    }
    int value() const { return q_; }

private:
    int q_;
};

inline std::uint8_t clamp_u8(double v) {
    if (v <= 0.0) return 0;
    if (v >= 255.0) return 255;
    return static_cast<std::uint8_t>(std::lround(v));
}

/// BT.601 luma. A 1-channel input is returned unchanged.
inline Image to_grayscale(const Image& img) {
    if (img.channels == 1) return img;
    Image out(img.width, img.height, 1);
    const std::uint8_t* src = img.pixels.data();
    for (std::size_t i = 0, n = static_cast<std::size_t>(img.width) * img.height; i < n; ++i) {
        double luma = 0.299 * src[3 * i] + 0.587 * src[3 * i + 1] + 0.114 * src[3 * i + 2];
        out.pixels[i] = clamp_u8(luma);
    }
    return out;
}

/// Bilinear resize. Same-size resize returns the input verbatim.
inline Image resize(const Image& img, int w, int h) {
    if (w < 1 || h < 1) throw ConfigError("resize target must be at least 1x1");
    if (w == img.width && h == img.height) return img;

    Image out(w, h, img.channels);
    const double sx = static_cast<double>(img.width) / w;
    const double sy = static_cast<double>(img.height) / h;
    for (int y = 0; y < h; ++y) {
        double fy = (y + 0.5) * sy - 0.5;
        int y0 = static_cast<int>(std::floor(fy));
        double wy = fy - y0;
        int y1 = y0 + 1;
        if (y0 < 0) y0 = 0;
        if (y1 < 0) y1 = 0;
        if (y0 > img.height - 1) y0 = img.height - 1;
        if (y1 > img.height - 1) y1 = img.height - 1;
        for (int x = 0; x < w; ++x) {
            double fx = (x + 0.5) * sx - 0.5;
            int x0 = static_cast<int>(std::floor(fx));
            double wx = fx - x0;
            int x1 = x0 + 1;
            if (x0 < 0) x0 = 0;
            if (x1 < 0) x1 = 0;
            if (x0 > img.width - 1) x0 = img.width - 1;
            if (x1 > img.width - 1) x1 = img.width - 1;
            for (int c = 0; c < img.channels; ++c) {
                double v = (1 - wy) * ((1 - wx) * img.at(x0, y0, c) + wx * img.at(x1, y0, c)) +
                           wy * ((1 - wx) * img.at(x0, y1, c) + wx * img.at(x1, y1, c));
                out.at(x, y, c) = clamp_u8(v);
            }
        }
    }
    return out;
}

/// Bilinear sample at a fractional position; out-of-bounds reads as `fill`.
inline double sample_bilinear(const Image& img, double fx, double fy, int c,
                              std::uint8_t fill = 0) {
    int x0 = static_cast<int>(std::floor(fx));
    int y0 = static_cast<int>(std::floor(fy));
    double wx = fx - x0;
    double wy = fy - y0;
    auto px = [&](int x, int y) -> double {
        if (x < 0 || y < 0 || x >= img.width || y >= img.height) return fill;
        return img.at(x, y, c);
    };
    return (1 - wy) * ((1 - wx) * px(x0, y0) + wx * px(x0 + 1, y0)) +
           wy * ((1 - wx) * px(x0, y0 + 1) + wx * px(x0 + 1, y0 + 1));
}

// -------------------------------------------------------------------------
// PNM (binary P5/P6) — lossless debug raster for fixtures and visual dumps.
// -------------------------------------------------------------------------

inline void write_pnm(const Image& img, const std::string& path) {
    if (!img.valid()) throw StorageError("write_pnm: invalid image");
    std::ofstream f(path, std::ios::binary);
    if (!f) throw StorageError("write_pnm: cannot open " + path);
    f << (img.channels == 1 ? "P5" : "P6") << "\n"
      << img.width << " " << img.height << "\n255\n";
    f.write(reinterpret_cast<const char*>(img.pixels.data()),
            static_cast<std::streamsize>(img.pixels.size()));
    if (!f) throw StorageError("write_pnm: write failed for " + path);
}

inline Image read_pnm(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw StorageError("read_pnm: cannot open " + path);
    std::string magic;
    f >> magic;
    if (magic != "P5" && magic != "P6")
        throw DecodeError("read_pnm: unsupported magic '" + magic + "'", 0);
    int w = 0, h = 0, maxval = 0;
    f >> w >> h >> maxval;
    if (!f || w < 1 || h < 1 || maxval != 255)
        throw DecodeError("read_pnm: bad header in " + path,
                          static_cast<std::size_t>(f.tellg()));
    f.get(); // single whitespace after maxval
    Image img(w, h, magic == "P5" ? 1 : 3);
    f.read(reinterpret_cast<char*>(img.pixels.data()),
           static_cast<std::streamsize>(img.pixels.size()));
    if (static_cast<std::size_t>(f.gcount()) != img.pixels.size())
        throw DecodeError("read_pnm: truncated pixel data in " + path,
                          static_cast<std::size_t>(f.tellg()));
    return img;
}

} // namespace ocuver

#endif // OCUVER_IMAGE_HPP
