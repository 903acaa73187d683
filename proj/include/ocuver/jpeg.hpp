// Copyright 2026 the ocuverify authors.
// Licensed under the Apache License, Version 2.0. See LICENSE for details.

#ifndef OCUVER_JPEG_HPP
#define OCUVER_JPEG_HPP

// Self-contained baseline JPEG codec.
//
// Encoder: sequential DCT, 8-bit, 4:4:4 (no chroma subsampling), standard
// quantization and Huffman tables, quality scaling as in the common IJG
// convention. Grayscale images produce single-component streams.
//
// Decoder: baseline and extended-sequential Huffman streams (SOF0/SOF1),
// 1 or 3 components, sampling factors up to 2x2 (box upsampling), restart
// intervals. Progressive streams are rejected with a clear error.
//
// Error-level analysis depends on recompression at a controlled quality on
// a fixed 8x8 grid, which is exactly what this codec provides.

#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "ocuver/errors.hpp"
#include "ocuver/image.hpp"

namespace ocuver {
namespace jpegdetail {

inline const std::array<int, 64>& zigzag() {
    static const std::array<int, 64> z = {
        0,  1,  8,  16, 9,  2,  3,  10, 17, 24, 32, 25, 18, 11, 4,  5,
        12, 19, 26, 33, 40, 48, 41, 34, 27, 20, 13, 6,  7,  14, 21, 28,
        35, 42, 49, 56, 57, 50, 43, 36, 29, 22, 15, 23, 30, 37, 44, 51,
        58, 59, 52, 45, 38, 31, 39, 46, 53, 60, 61, 54, 47, 55, 62, 63};
    return z;
}

inline const std::array<int, 64>& base_luma_quant() {
    static const std::array<int, 64> q = {
        16, 11, 10, 16, 24,  40,  51,  61,  12, 12, 14, 19, 26,  58,  60,  55,
        14, 13, 16, 24, 40,  57,  69,  56,  14, 17, 22, 29, 51,  87,  80,  62,
        18, 22, 37, 56, 68,  109, 103, 77,  24, 35, 55, 64, 81,  104, 113, 92,
        49, 64, 78, 87, 103, 121, 120, 101, 72, 92, 95, 98, 112, 100, 103, 99};
    return q;
}

inline const std::array<int, 64>& base_chroma_quant() {
    static const std::array<int, 64> q = {
        17, 18, 24, 47, 99, 99, 99, 99, 18, 21, 26, 66, 99, 99, 99, 99,
        24, 26, 56, 99, 99, 99, 99, 99, 47, 66, 99, 99, 99, 99, 99, 99,
        99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99,
        99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99};
    return q;
}

/// Quality-scaled quantization table (IJG convention, entries in [1, 255]).
inline std::array<int, 64> scaled_quant(const std::array<int, 64>& base, int quality) {
    int s = quality < 50 ? 5000 / quality : 200 - 2 * quality;
    std::array<int, 64> out{};
    for (int i = 0; i < 64; ++i) {
        int v = (base[i] * s + 50) / 100;
        if (v < 1) v = 1;
        if (v > 255) v = 255;
        out[i] = v;
    }
    return out;
}

// Standard Huffman table specifications (BITS + HUFFVAL).
struct HuffSpec {
    const std::uint8_t* bits;   // counts for code lengths 1..16
    const std::uint8_t* vals;
    int nvals;
};

inline HuffSpec dc_luma_spec() {
    static const std::uint8_t bits[16] = {0, 1, 5, 1, 1, 1, 1, 1, 1, 0, 0, 0, 0, 0, 0, 0};
    static const std::uint8_t vals[12] = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11};
    return {bits, vals, 12};
}

inline HuffSpec dc_chroma_spec() {
    static const std::uint8_t bits[16] = {0, 3, 1, 1, 1, 1, 1, 1, 1, 1, 1, 0, 0, 0, 0, 0};
    static const std::uint8_t vals[12] = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11};
    return {bits, vals, 12};
}

inline HuffSpec ac_luma_spec() {
    static const std::uint8_t bits[16] = {0, 2, 1, 3, 3, 2, 4, 3, 5, 5, 4, 4, 0, 0, 1, 0x7d};
    static const std::uint8_t vals[162] = {
        0x01, 0x02, 0x03, 0x00, 0x04, 0x11, 0x05, 0x12, 0x21, 0x31, 0x41, 0x06,
        0x13, 0x51, 0x61, 0x07, 0x22, 0x71, 0x14, 0x32, 0x81, 0x91, 0xa1, 0x08,
        0x23, 0x42, 0xb1, 0xc1, 0x15, 0x52, 0xd1, 0xf0, 0x24, 0x33, 0x62, 0x72,
        0x82, 0x09, 0x0a, 0x16, 0x17, 0x18, 0x19, 0x1a, 0x25, 0x26, 0x27, 0x28,
        0x29, 0x2a, 0x34, 0x35, 0x36, 0x37, 0x38, 0x39, 0x3a, 0x43, 0x44, 0x45,
        0x46, 0x47, 0x48, 0x49, 0x4a, 0x53, 0x54, 0x55, 0x56, 0x57, 0x58, 0x59,
        0x5a, 0x63, 0x64, 0x65, 0x66, 0x67, 0x68, 0x69, 0x6a, 0x73, 0x74, 0x75,
        0x76, 0x77, 0x78, 0x79, 0x7a, 0x83, 0x84, 0x85, 0x86, 0x87, 0x88, 0x89,
        0x8a, 0x92, 0x93, 0x94, 0x95, 0x96, 0x97, 0x98, 0x99, 0x9a, 0xa2, 0xa3,
        0xa4, 0xa5, 0xa6, 0xa7, 0xa8, 0xa9, 0xaa, 0xb2, 0xb3, 0xb4, 0xb5, 0xb6,
        0xb7, 0xb8, 0xb9, 0xba, 0xc2, 0xc3, 0xc4, 0xc5, 0xc6, 0xc7, 0xc8, 0xc9,
        0xca, 0xd2, 0xd3, 0xd4, 0xd5, 0xd6, 0xd7, 0xd8, 0xd9, 0xda, 0xe1, 0xe2,
        0xe3, 0xe4, 0xe5, 0xe6, 0xe7, 0xe8, 0xe9, 0xea, 0xf1, 0xf2, 0xf3, 0xf4,
        0xf5, 0xf6, 0xf7, 0xf8, 0xf9, 0xfa};
    return {bits, vals, 162};
}

inline HuffSpec ac_chroma_spec() {
    static const std::uint8_t bits[16] = {0, 2, 1, 2, 4, 4, 3, 4, 7, 5, 4, 4, 0, 1, 2, 0x77};
    static const std::uint8_t vals[162] = {
        0x00, 0x01, 0x02, 0x03, 0x11, 0x04, 0x05, 0x21, 0x31, 0x06, 0x12, 0x41,
        0x51, 0x07, 0x61, 0x71, 0x13, 0x22, 0x32, 0x81, 0x08, 0x14, 0x42, 0x91,
        0xa1, 0xb1, 0xc1, 0x09, 0x23, 0x33, 0x52, 0xf0, 0x15, 0x62, 0x72, 0xd1,
        0x0a, 0x16, 0x24, 0x34, 0xe1, 0x25, 0xf1, 0x17, 0x18, 0x19, 0x1a, 0x26,
        0x27, 0x28, 0x29, 0x2a, 0x35, 0x36, 0x37, 0x38, 0x39, 0x3a, 0x43, 0x44,
        0x45, 0x46, 0x47, 0x48, 0x49, 0x4a, 0x53, 0x54, 0x55, 0x56, 0x57, 0x58,
        0x59, 0x5a, 0x63, 0x64, 0x65, 0x66, 0x67, 0x68, 0x69, 0x6a, 0x73, 0x74,
        0x75, 0x76, 0x77, 0x78, 0x79, 0x7a, 0x82, 0x83, 0x84, 0x85, 0x86, 0x87,
        0x88, 0x89, 0x8a, 0x92, 0x93, 0x94, 0x95, 0x96, 0x97, 0x98, 0x99, 0x9a,
        0xa2, 0xa3, 0xa4, 0xa5, 0xa6, 0xa7, 0xa8, 0xa9, 0xaa, 0xb2, 0xb3, 0xb4,
        0xb5, 0xb6, 0xb7, 0xb8, 0xb9, 0xba, 0xc2, 0xc3, 0xc4, 0xc5, 0xc6, 0xc7,
        0xc8, 0xc9, 0xca, 0xd2, 0xd3, 0xd4, 0xd5, 0xd6, 0xd7, 0xd8, 0xd9, 0xda,
        0xe2, 0xe3, 0xe4, 0xe5, 0xe6, 0xe7, 0xe8, 0xe9, 0xea, 0xf2, 0xf3, 0xf4,
        0xf5, 0xf6, 0xf7, 0xf8, 0xf9, 0xfa};
    return {bits, vals, 162};
}

/// Canonical code assignment for an encoder: code and length per symbol value.
struct HuffEncTable {
    std::array<std::uint16_t, 256> code{};
    std::array<std::uint8_t, 256> size{};

    explicit HuffEncTable(const HuffSpec& spec) {
        std::uint16_t c = 0;
        int k = 0;
        for (int len = 1; len <= 16; ++len) {
            for (int i = 0; i < spec.bits[len - 1]; ++i) {
                code[spec.vals[k]] = c;
                size[spec.vals[k]] = static_cast<std::uint8_t>(len);
                ++c;
                ++k;
            }
            c <<= 1;
        }
    }
};

/// 8x8 forward/inverse DCT matrices, c[u][x] = 0.5 * Cu * cos((2x+1) u pi / 16).
inline const std::array<std::array<double, 8>, 8>& dct_matrix() {
    static const auto m = [] {
        std::array<std::array<double, 8>, 8> c{};
        const double pi = 3.14159265358979323846;
        for (int u = 0; u < 8; ++u) {
            double cu = (u == 0) ? (1.0 / std::sqrt(2.0)) : 1.0;
            for (int x = 0; x < 8; ++x)
                c[u][x] = 0.5 * cu * std::cos((2 * x + 1) * u * pi / 16.0);
        }
        return c;
    }();
    return m;
}

inline void forward_dct(const double in[64], double out[64]) {
    const auto& c = dct_matrix();
    double tmp[64];
    for (int u = 0; u < 8; ++u)         // rows
        for (int x = 0; x < 8; ++x) {
            double s = 0;
            for (int k = 0; k < 8; ++k) s += c[x][k] * in[u * 8 + k];
            tmp[u * 8 + x] = s;
        }
    for (int v = 0; v < 8; ++v)         // columns
        for (int x = 0; x < 8; ++x) {
            double s = 0;
            for (int k = 0; k < 8; ++k) s += c[v][k] * tmp[k * 8 + x];
            out[v * 8 + x] = s;
        }
}

inline void inverse_dct(const double in[64], double out[64]) {
    const auto& c = dct_matrix();
    double tmp[64];
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) {
            double s = 0;
            for (int k = 0; k < 8; ++k) s += c[k][x] * in[y * 8 + k];
            tmp[y * 8 + x] = s;
        }
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) {
            double s = 0;
            for (int k = 0; k < 8; ++k) s += c[k][y] * tmp[k * 8 + x];
            out[y * 8 + x] = s;
        }
}

class BitWriter {
public:
    explicit BitWriter(std::vector<std::uint8_t>& out) : out_(out) {}

    void put(int bits, int nbits) {
        acc_ = (acc_ << nbits) | (static_cast<std::uint32_t>(bits) & ((1u << nbits) - 1));
        nacc_ += nbits;
        while (nacc_ >= 8) {
            std::uint8_t b = static_cast<std::uint8_t>((acc_ >> (nacc_ - 8)) & 0xff);
            out_.push_back(b);
            if (b == 0xff) out_.push_back(0x00); // byte stuffing
            nacc_ -= 8;
        }
    }

    void flush() {
        if (nacc_ > 0) put(0x7f, 7 - ((nacc_ + 7) % 8)); // pad with 1s to byte boundary
    }

private:
    std::vector<std::uint8_t>& out_;
    std::uint32_t acc_ = 0;
    int nacc_ = 0;
};

inline int bit_category(int v) {
    int a = v < 0 ? -v : v;
    int n = 0;
    while (a) {
        ++n;
        a >>= 1;
    }
    return n;
}

} // namespace jpegdetail

// ---------------------------------------------------------------------------
// Encoder
// ---------------------------------------------------------------------------

inline std::vector<std::uint8_t> encode_jpeg(const Image& img, JpegQuality quality) {
    using namespace jpegdetail;
    if (!img.valid()) throw ConfigError("encode_jpeg: invalid image");

    const int w = img.width, h = img.height;
    const int ncomp = img.channels == 1 ? 1 : 3;
    const auto qluma = scaled_quant(base_luma_quant(), quality.value());
    const auto qchroma = scaled_quant(base_chroma_quant(), quality.value());

    // Planar level-shifted component samples kept in double until quantization.
    std::vector<std::vector<double>> planes(ncomp,
        std::vector<double>(static_cast<std::size_t>(w) * h));
    if (ncomp == 1) {
        for (std::size_t i = 0, n = planes[0].size(); i < n; ++i)
            planes[0][i] = img.pixels[i] - 128.0;
    } else {
        for (std::size_t i = 0, n = static_cast<std::size_t>(w) * h; i < n; ++i) {
            double r = img.pixels[3 * i], g = img.pixels[3 * i + 1], b = img.pixels[3 * i + 2];
            planes[0][i] = 0.299 * r + 0.587 * g + 0.114 * b - 128.0;
            planes[1][i] = -0.168735892 * r - 0.331264108 * g + 0.5 * b;
            planes[2][i] = 0.5 * r - 0.418687589 * g - 0.081312411 * b;
        }
    }

    std::vector<std::uint8_t> out;
    out.reserve(static_cast<std::size_t>(w) * h / 2 + 1024);
    auto put16 = [&](int v) {
        out.push_back(static_cast<std::uint8_t>(v >> 8));
        out.push_back(static_cast<std::uint8_t>(v & 0xff));
    };
    auto marker = [&](std::uint8_t m) {
        out.push_back(0xff);
        out.push_back(m);
    };

    marker(0xd8); // SOI

    marker(0xe0); // APP0 / JFIF
    put16(16);
    const char jfif[5] = {'J', 'F', 'I', 'F', 0};
    out.insert(out.end(), jfif, jfif + 5);
    out.push_back(1); out.push_back(1);  // version 1.1
    out.push_back(0);                    // aspect-ratio units
    put16(1); put16(1);                  // density
    out.push_back(0); out.push_back(0);  // no thumbnail

    auto emit_dqt = [&](int id, const std::array<int, 64>& q) {
        marker(0xdb);
        put16(67);
        out.push_back(static_cast<std::uint8_t>(id)); // Pq=0 (8-bit), Tq=id
        for (int i = 0; i < 64; ++i)
            out.push_back(static_cast<std::uint8_t>(q[zigzag()[i]]));
    };
    emit_dqt(0, qluma);
    if (ncomp == 3) emit_dqt(1, qchroma);

    marker(0xc0); // SOF0, baseline
    put16(8 + 3 * ncomp);
    out.push_back(8); // precision
    put16(h);
    put16(w);
    out.push_back(static_cast<std::uint8_t>(ncomp));
    for (int c = 0; c < ncomp; ++c) {
        out.push_back(static_cast<std::uint8_t>(c + 1)); // component id
        out.push_back(0x11);                             // 1x1 sampling (4:4:4)
        out.push_back(c == 0 ? 0 : 1);                   // quant table id
    }

    auto emit_dht = [&](int cls, int id, const HuffSpec& spec) {
        marker(0xc4);
        put16(static_cast<int>(2 + 1 + 16 + spec.nvals));
        out.push_back(static_cast<std::uint8_t>((cls << 4) | id));
        for (int i = 0; i < 16; ++i) out.push_back(spec.bits[i]);
        for (int i = 0; i < spec.nvals; ++i) out.push_back(spec.vals[i]);
    };
    emit_dht(0, 0, dc_luma_spec());
    emit_dht(1, 0, ac_luma_spec());
    if (ncomp == 3) {
        emit_dht(0, 1, dc_chroma_spec());
        emit_dht(1, 1, ac_chroma_spec());
    }

    marker(0xda); // SOS
    put16(6 + 2 * ncomp);
    out.push_back(static_cast<std::uint8_t>(ncomp));
    for (int c = 0; c < ncomp; ++c) {
        out.push_back(static_cast<std::uint8_t>(c + 1));
        out.push_back(c == 0 ? 0x00 : 0x11); // DC/AC table ids
    }
    out.push_back(0);  // Ss
    out.push_back(63); // Se
    out.push_back(0);  // Ah/Al

    const HuffEncTable dcl(dc_luma_spec()), acl(ac_luma_spec());
    const HuffEncTable dcc(dc_chroma_spec()), acc_t(ac_chroma_spec());

    BitWriter bw(out);
    std::array<int, 3> pred{0, 0, 0};
    const int mcus_x = (w + 7) / 8, mcus_y = (h + 7) / 8;

    auto encode_block = [&](int comp, int bx, int by) {
        const auto& quant = comp == 0 ? qluma : qchroma;
        const HuffEncTable& dt = comp == 0 ? dcl : dcc;
        const HuffEncTable& at = comp == 0 ? acl : acc_t;

        double block[64];
        for (int y = 0; y < 8; ++y) {
            int sy = by * 8 + y;
            if (sy > h - 1) sy = h - 1; // edge replication for partial blocks
            for (int x = 0; x < 8; ++x) {
                int sx = bx * 8 + x;
                if (sx > w - 1) sx = w - 1;
                block[y * 8 + x] = planes[comp][static_cast<std::size_t>(sy) * w + sx];
            }
        }
        double freq[64];
        forward_dct(block, freq);

        int coef[64];
        for (int i = 0; i < 64; ++i) {
            int zi = zigzag()[i];
            coef[i] = static_cast<int>(std::lround(freq[zi] / quant[zi]));
        }

        int diff = coef[0] - pred[comp];
        pred[comp] = coef[0];
        int cat = bit_category(diff);
        bw.put(dt.code[cat], dt.size[cat]);
        if (cat > 0) bw.put(diff < 0 ? diff + (1 << cat) - 1 : diff, cat);

        int run = 0;
        for (int k = 1; k < 64; ++k) {
            if (coef[k] == 0) {
                ++run;
                continue;
            }
            while (run > 15) {
                bw.put(at.code[0xf0], at.size[0xf0]); // ZRL
                run -= 16;
            }
            int s = bit_category(coef[k]);
            int sym = (run << 4) | s;
            bw.put(at.code[sym], at.size[sym]);
            bw.put(coef[k] < 0 ? coef[k] + (1 << s) - 1 : coef[k], s);
            run = 0;
        }
        if (run > 0) bw.put(at.code[0x00], at.size[0x00]); // EOB
    };

    for (int by = 0; by < mcus_y; ++by)
        for (int bx = 0; bx < mcus_x; ++bx)
            for (int c = 0; c < ncomp; ++c)
                encode_block(c, bx, by);
    bw.flush();

    marker(0xd9); // EOI
    return out;
}

// ---------------------------------------------------------------------------
// Decoder
// ---------------------------------------------------------------------------

namespace jpegdetail {

class ByteReader {
public:
    ByteReader(const std::uint8_t* data, std::size_t size) : data_(data), size_(size) {}

    std::uint8_t u8() {
        if (pos_ >= size_) throw DecodeError("unexpected end of JPEG stream", pos_);
        return data_[pos_++];
    }
    int u16() {
        int hi = u8();
        return (hi << 8) | u8();
    }
    void skip(std::size_t n) {
        if (pos_ + n > size_) throw DecodeError("unexpected end of JPEG stream", size_);
        pos_ += n;
    }
    std::size_t pos() const { return pos_; }
    bool eof() const { return pos_ >= size_; }

private:
    const std::uint8_t* data_;
    std::size_t size_;
    std::size_t pos_ = 0;
};

/// Canonical Huffman decoding table built from a DHT segment.
struct HuffDecTable {
    std::array<int, 17> mincode{};
    std::array<int, 17> maxcode{}; // -1 when no codes of that length
    std::array<int, 17> valptr{};
    std::vector<std::uint8_t> vals;
    bool present = false;

    void build(const std::uint8_t bits[16], const std::vector<std::uint8_t>& values) {
        vals = values;
        int code = 0, k = 0;
        for (int len = 1; len <= 16; ++len) {
            if (bits[len - 1] == 0) {
                maxcode[len] = -1;
            } else {
                valptr[len] = k;
                mincode[len] = code;
                k += bits[len - 1];
                code += bits[len - 1];
                maxcode[len] = code - 1;
            }
            code <<= 1;
        }
        present = true;
    }
};

class BitReader {
public:
    explicit BitReader(ByteReader& br) : br_(&br) {}

    int bit() {
        if (navail_ == 0) {
            std::uint8_t b = br_->u8();
            if (b == 0xff) {
                std::uint8_t next = br_->u8();
                if (next == 0x00) {
                    // stuffed byte
                } else if (next >= 0xd0 && next <= 0xd7) {
                    throw DecodeError("restart marker inside entropy segment", br_->pos());
                } else {
                    throw DecodeError("unexpected marker inside entropy data", br_->pos());
                }
            }
            acc_ = b;
            navail_ = 8;
        }
        --navail_;
        return (acc_ >> navail_) & 1;
    }

    int bits(int n) {
        int v = 0;
        for (int i = 0; i < n; ++i) v = (v << 1) | bit();
        return v;
    }

    int decode(const HuffDecTable& t, std::size_t at) {
        if (!t.present) throw DecodeError("scan references an undefined Huffman table", at);
        int code = 0;
        for (int len = 1; len <= 16; ++len) {
            code = (code << 1) | bit();
            if (t.maxcode[len] >= 0 && code <= t.maxcode[len])
                return t.vals[static_cast<std::size_t>(t.valptr[len] + code - t.mincode[len])];
        }
        throw DecodeError("invalid Huffman code in entropy data", at);
    }

    void reset() { navail_ = 0; }

private:
    ByteReader* br_;
    std::uint8_t acc_ = 0;
    int navail_ = 0;
};

inline int extend_sign(int v, int s) {
    return (s > 0 && v < (1 << (s - 1))) ? v - (1 << s) + 1 : v;
}

} // namespace jpegdetail

inline Image decode_jpeg(const std::vector<std::uint8_t>& bytes) {
    using namespace jpegdetail;
    if (bytes.empty()) throw DecodeError("empty JPEG stream", 0);

    ByteReader rd(bytes.data(), bytes.size());
    if (rd.u8() != 0xff || rd.u8() != 0xd8)
        throw DecodeError("missing SOI marker", 0);

    struct Component {
        int id = 0, h = 1, v = 1, quant_id = 0;
        int dc_table = 0, ac_table = 0;
        int blocks_x = 0, blocks_y = 0;
        std::vector<double> plane; // padded to full blocks
        int plane_w = 0, plane_h = 0;
    };

    std::array<std::array<int, 64>, 4> quant{};
    std::array<bool, 4> quant_set{};
    std::array<HuffDecTable, 4> dc_tables, ac_tables;
    std::vector<Component> comps;
    int width = 0, height = 0, hmax = 1, vmax = 1;
    int restart_interval = 0;
    bool have_sof = false;

    auto segment_len = [&]() {
        std::size_t at = rd.pos();
        int len = rd.u16();
        if (len < 2) throw DecodeError("bad segment length", at);
        return len - 2;
    };

    auto read_dqt = [&]() {
        int len = segment_len();
        std::size_t end = rd.pos() + static_cast<std::size_t>(len);
        while (rd.pos() < end) {
            int pq_tq = rd.u8();
            int pq = pq_tq >> 4, tq = pq_tq & 15;
            if (tq > 3) throw DecodeError("bad quantization table id", rd.pos());
            for (int i = 0; i < 64; ++i) {
                int v = pq ? rd.u16() : rd.u8();
                quant[tq][zigzag()[i]] = v;
            }
            quant_set[tq] = true;
        }
    };

    auto read_dht = [&]() {
        int len = segment_len();
        std::size_t end = rd.pos() + static_cast<std::size_t>(len);
        while (rd.pos() < end) {
            int tc_th = rd.u8();
            int tc = tc_th >> 4, th = tc_th & 15;
            if (tc > 1 || th > 3) throw DecodeError("bad Huffman table class/id", rd.pos());
            std::uint8_t bits[16];
            int total = 0;
            for (int i = 0; i < 16; ++i) {
                bits[i] = rd.u8();
                total += bits[i];
            }
            if (total > 256) throw DecodeError("oversized Huffman table", rd.pos());
            std::vector<std::uint8_t> vals(static_cast<std::size_t>(total));
            for (int i = 0; i < total; ++i) vals[static_cast<std::size_t>(i)] = rd.u8();
            (tc == 0 ? dc_tables : ac_tables)[th].build(bits, vals);
        }
    };

    auto read_sof = [&](std::uint8_t m) {
        if (m == 0xc2)
            throw DecodeError("progressive JPEG is not supported", rd.pos());
        if (m != 0xc0 && m != 0xc1)
            throw DecodeError("unsupported SOF marker", rd.pos());
        rd.u16(); // length
        if (rd.u8() != 8) throw DecodeError("only 8-bit precision is supported", rd.pos());
        height = rd.u16();
        width = rd.u16();
        int n = rd.u8();
        if (n != 1 && n != 3)
            throw DecodeError("only 1- or 3-component streams are supported", rd.pos());
        if (width < 1 || height < 1) throw DecodeError("bad frame dimensions", rd.pos());
        comps.resize(static_cast<std::size_t>(n));
        for (auto& c : comps) {
            c.id = rd.u8();
            int hv = rd.u8();
            c.h = hv >> 4;
            c.v = hv & 15;
            if (c.h < 1 || c.h > 2 || c.v < 1 || c.v > 2)
                throw DecodeError("unsupported sampling factor", rd.pos());
            c.quant_id = rd.u8();
            hmax = std::max(hmax, c.h);
            vmax = std::max(vmax, c.v);
        }
        have_sof = true;
    };

    // Marker loop up to SOS.
    bool in_scan = false;
    while (!in_scan) {
        std::size_t mark_at = rd.pos();
        std::uint8_t ff = rd.u8();
        if (ff != 0xff) throw DecodeError("expected marker", mark_at);
        std::uint8_t m = rd.u8();
        while (m == 0xff) m = rd.u8();
        switch (m) {
            case 0xdb: read_dqt(); break;
            case 0xc4: read_dht(); break;
            case 0xdd: rd.u16(); restart_interval = rd.u16(); break;
            case 0xda: in_scan = true; break;
            case 0xd9: throw DecodeError("EOI before any scan", mark_at);
            default:
                if (m == 0xc0 || m == 0xc1 || m == 0xc2 || m == 0xc3 ||
                    (m >= 0xc5 && m <= 0xc7) || (m >= 0xc9 && m <= 0xcb) ||
                    (m >= 0xcd && m <= 0xcf)) {
                    read_sof(m);
                } else if (m == 0x01 || (m >= 0xd0 && m <= 0xd7)) {
                    // parameterless
                } else {
                    rd.skip(static_cast<std::size_t>(segment_len())); // APPn, COM, others
                }
        }
    }
    if (!have_sof) throw DecodeError("SOS before SOF", rd.pos());

    // SOS header.
    rd.u16();
    int ns = rd.u8();
    if (ns != static_cast<int>(comps.size()))
        throw DecodeError("only single interleaved scans are supported", rd.pos());
    for (int i = 0; i < ns; ++i) {
        int cs = rd.u8();
        int tables = rd.u8();
        bool found = false;
        for (auto& c : comps)
            if (c.id == cs) {
                c.dc_table = tables >> 4;
                c.ac_table = tables & 15;
                found = true;
            }
        if (!found) throw DecodeError("scan references unknown component", rd.pos());
    }
    rd.u8(); rd.u8(); rd.u8(); // Ss, Se, Ah/Al

    const int mcu_w = 8 * hmax, mcu_h = 8 * vmax;
    const int mcus_x = (width + mcu_w - 1) / mcu_w;
    const int mcus_y = (height + mcu_h - 1) / mcu_h;
    for (auto& c : comps) {
        if (!quant_set[c.quant_id])
            throw DecodeError("component references an undefined quantization table", rd.pos());
        c.plane_w = mcus_x * c.h * 8;
        c.plane_h = mcus_y * c.v * 8;
        c.plane.assign(static_cast<std::size_t>(c.plane_w) * c.plane_h, 0.0);
    }

    BitReader bits_r(rd);
    std::array<int, 4> pred{};
    int mcu_count = 0, rst_index = 0;

    auto decode_block = [&](Component& c, int bx, int by) {
        double coef[64] = {0};
        std::size_t at = rd.pos();
        int s = bits_r.decode(dc_tables[static_cast<std::size_t>(c.dc_table)], at);
        int diff = extend_sign(bits_r.bits(s), s);
        int comp_index = static_cast<int>(&c - comps.data());
        pred[static_cast<std::size_t>(comp_index)] += diff;
        coef[0] = static_cast<double>(pred[static_cast<std::size_t>(comp_index)]) *
                  quant[static_cast<std::size_t>(c.quant_id)][0];

        int k = 1;
        while (k < 64) {
            int rs = bits_r.decode(ac_tables[static_cast<std::size_t>(c.ac_table)], rd.pos());
            int r = rs >> 4, ssss = rs & 15;
            if (ssss == 0) {
                if (r == 15) {
                    k += 16;
                    continue;
                }
                break; // EOB
            }
            k += r;
            if (k > 63) throw DecodeError("AC coefficient index out of range", rd.pos());
            int zi = zigzag()[k];
            coef[zi] = static_cast<double>(extend_sign(bits_r.bits(ssss), ssss)) *
                       quant[static_cast<std::size_t>(c.quant_id)][zi];
            ++k;
        }

        double pix[64];
        inverse_dct(coef, pix);
        for (int y = 0; y < 8; ++y)
            for (int x = 0; x < 8; ++x) {
                int px = bx * 8 + x, py = by * 8 + y;
                c.plane[static_cast<std::size_t>(py) * c.plane_w + px] = pix[y * 8 + x] + 128.0;
            }
    };

    for (int my = 0; my < mcus_y; ++my) {
        for (int mx = 0; mx < mcus_x; ++mx) {
            if (restart_interval > 0 && mcu_count > 0 && mcu_count % restart_interval == 0) {
                bits_r.reset();
                std::size_t at = rd.pos();
                std::uint8_t ff = rd.u8();
                std::uint8_t m = rd.u8();
                if (ff != 0xff || m != static_cast<std::uint8_t>(0xd0 + rst_index))
                    throw DecodeError("expected restart marker", at);
                rst_index = (rst_index + 1) & 7;
                pred.fill(0);
            }
            for (auto& c : comps)
                for (int v = 0; v < c.v; ++v)
                    for (int hh = 0; hh < c.h; ++hh)
                        decode_block(c, mx * c.h + hh, my * c.v + v);
            ++mcu_count;
        }
    }

    // Assemble the output image: upsample chroma by box replication if needed,
    // color-convert in double, round once.
    Image img(width, height, comps.size() == 1 ? 1 : 3);
    if (comps.size() == 1) {
        for (int y = 0; y < height; ++y)
            for (int x = 0; x < width; ++x)
                img.at(x, y, 0) = clamp_u8(comps[0].plane[static_cast<std::size_t>(y) *
                                                          comps[0].plane_w + x]);
    } else {
        for (int y = 0; y < height; ++y) {
            for (int x = 0; x < width; ++x) {
                auto sample = [&](const Component& c) {
                    int sx = x * c.h / hmax, sy = y * c.v / vmax;
                    return c.plane[static_cast<std::size_t>(sy) * c.plane_w + sx];
                };
                double Y = sample(comps[0]);
                double Cb = sample(comps[1]) - 128.0;
                double Cr = sample(comps[2]) - 128.0;
                img.at(x, y, 0) = clamp_u8(Y + 1.402 * Cr);
                img.at(x, y, 1) = clamp_u8(Y - 0.344136286 * Cb - 0.714136286 * Cr);
                img.at(x, y, 2) = clamp_u8(Y + 1.772 * Cb);
            }
        }
    }
    return img;
}

// ---------------------------------------------------------------------------
// File helpers
// ---------------------------------------------------------------------------

inline std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw StorageError("cannot open " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                    std::istreambuf_iterator<char>());
    return bytes;
}

inline void write_file_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw StorageError("cannot open " + path + " for writing");
    f.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
    if (!f) throw StorageError("write failed for " + path);
}

inline Image read_jpeg_file(const std::string& path) {
    return decode_jpeg(read_file_bytes(path));
}

inline void write_jpeg_file(const std::string& path, const Image& img, JpegQuality q) {
    write_file_bytes(path, encode_jpeg(img, q));
}

} // namespace ocuver

#endif // OCUVER_JPEG_HPP
