// Copyright 2026 the ocuverify authors.
// Licensed under the Apache License, Version 2.0. See LICENSE for details.

#ifndef OCUVER_NETWORK_HPP
#define OCUVER_NETWORK_HPP

// Convolutional embedding network with hand-differentiated forward and
// backward passes. The topology is fixed: a sequence of
// (valid cross-correlation conv -> bias -> ReLU -> non-overlapping max-pool)
// blocks, a flatten, one fully-connected layer, and optional L2
// normalization of the embedding rows.
//
// Spatial arithmetic per block, for side s, kernel k, pool p:
//   conv (valid):  s -> s - k + 1
//   max-pool:      s -> floor(s / p)   (trailing rows/cols are dropped)

#include <array>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "ocuver/errors.hpp"
#include "ocuver/image.hpp"
#include "ocuver/rng.hpp"
#include "ocuver/tensor.hpp"

namespace ocuver {

/// Which image phases a model was trained to compare.
enum class ModelTag : std::uint8_t { PrePre = 0, PostPost = 1, PrePost = 2 };

inline std::string to_string(ModelTag t) {
    switch (t) {
        case ModelTag::PrePre: return "PRE-PRE";
        case ModelTag::PostPost: return "POST-POST";
        case ModelTag::PrePost: return "PRE-POST";
    }
    return "?";
}

inline ModelTag model_tag_from_string(const std::string& s) {
    if (s == "PRE-PRE") return ModelTag::PrePre;
    if (s == "POST-POST") return ModelTag::PostPost;
    if (s == "PRE-POST") return ModelTag::PrePost;
    throw ConfigError("unknown model tag '" + s + "'");
}

struct ConvBlockSpec {
    int out_channels = 0;
    int kernel = 0;
    int pool = 0;
};

/// Network architecture descriptor.
struct ArchConfig {
    int input_side = 96;
    int input_channels = 1;
    std::vector<ConvBlockSpec> conv_blocks = {{16, 3, 2}, {32, 3, 2}, {64, 3, 2}, {128, 3, 2}};
    int embedding_dim = 64;
    bool normalize_embeddings = true;

    /// Spatial side after each block; throws ConfigError if any stage
    /// collapses below 1x1.
    std::vector<int> spatial_chain() const {
        if (input_side < 1 || input_channels < 1)
            throw ConfigError("arch: input must be at least 1x1 with 1 channel");
        if (embedding_dim < 2) throw ConfigError("arch: embedding_dim must be >= 2");
        std::vector<int> sides{input_side};
        int s = input_side;
        for (std::size_t i = 0; i < conv_blocks.size(); ++i) {
            const auto& b = conv_blocks[i];
            if (b.out_channels < 1 || b.kernel < 1 || b.pool < 1)
                throw ConfigError("arch: conv block " + std::to_string(i) + " is malformed");
            s = s - b.kernel + 1;
            if (s < 1)
                throw ConfigError("arch: conv block " + std::to_string(i) +
                                  " shrinks the input below 1x1");
            s = s / b.pool;
            if (s < 1)
                throw ConfigError("arch: conv block " + std::to_string(i) +
                                  " pools the input below 1x1");
            sides.push_back(s);
        }
        return sides;
    }

    int final_side() const { return spatial_chain().back(); }

    int flat_dim() const {
        int side = final_side();
        int ch = conv_blocks.empty() ? input_channels : conv_blocks.back().out_channels;
        return ch * side * side;
    }

    bool operator==(const ArchConfig& o) const {
        if (input_side != o.input_side || input_channels != o.input_channels ||
            embedding_dim != o.embedding_dim ||
            normalize_embeddings != o.normalize_embeddings ||
            conv_blocks.size() != o.conv_blocks.size())
            return false;
        for (std::size_t i = 0; i < conv_blocks.size(); ++i)
            if (conv_blocks[i].out_channels != o.conv_blocks[i].out_channels ||
                conv_blocks[i].kernel != o.conv_blocks[i].kernel ||
                conv_blocks[i].pool != o.conv_blocks[i].pool)
                return false;
        return true;
    }
};

template <typename T>
struct NamedTensor {
    std::string name;
    Tensor<T> tensor;
};

/// The embedding model: architecture plus named parameters. Parameter order
/// is fixed (conv<i>.weight, conv<i>.bias, ..., fc.weight, fc.bias) and is
/// part of the serialized format.
template <typename T>
struct Network {
    ArchConfig arch;
    ModelTag tag = ModelTag::PrePost;
    std::vector<NamedTensor<T>> params;

    const Tensor<T>& param(const std::string& name) const {
        for (const auto& p : params)
            if (p.name == name) return p.tensor;
        throw ConfigError("network has no parameter '" + name + "'");
    }
};

/// L2-normalized embedding vector (or all zeros when the pre-normalization
/// norm is below 1e-12).
struct Embedding {
    std::vector<float> values;
};

inline double squared_distance(const std::vector<float>& a, const std::vector<float>& b) {
    double d = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double t = static_cast<double>(a[i]) - b[i];
        d += t * t;
    }
    return d;
}

inline double squared_distance(const Embedding& a, const Embedding& b) {
    return squared_distance(a.values, b.values);
}

// ---------------------------------------------------------------------------
// Initialization
// ---------------------------------------------------------------------------

/// He-style initialization: weights ~ N(0, 2/fan_in), biases zero.
/// Deterministic in (arch, seed).
template <typename T>
Network<T> init_network(const ArchConfig& arch, std::uint64_t seed, ModelTag tag) {
    arch.spatial_chain(); // validates
    Network<T> net;
    net.arch = arch;
    net.tag = tag;
    Rng rng(mix_seed(seed, 0x6e657469ULL));

    auto he_fill = [&](Tensor<T>& t, int fan_in) {
        double stddev = std::sqrt(2.0 / fan_in);
        for (auto& v : t.data) v = static_cast<T>(rng.normal() * stddev);
    };

    int in_c = arch.input_channels;
    for (std::size_t i = 0; i < arch.conv_blocks.size(); ++i) {
        const auto& b = arch.conv_blocks[i];
        Tensor<T> w({static_cast<std::size_t>(b.out_channels), static_cast<std::size_t>(in_c),
                     static_cast<std::size_t>(b.kernel), static_cast<std::size_t>(b.kernel)});
        he_fill(w, in_c * b.kernel * b.kernel);
        net.params.push_back({"conv" + std::to_string(i) + ".weight", std::move(w)});
        Tensor<T> bias({static_cast<std::size_t>(b.out_channels)});
        net.params.push_back({"conv" + std::to_string(i) + ".bias", std::move(bias)});
        in_c = b.out_channels;
    }
    Tensor<T> fcw({static_cast<std::size_t>(arch.flat_dim()),
                   static_cast<std::size_t>(arch.embedding_dim)});
    he_fill(fcw, arch.flat_dim());
    net.params.push_back({"fc.weight", std::move(fcw)});
    Tensor<T> fcb({static_cast<std::size_t>(arch.embedding_dim)});
    net.params.push_back({"fc.bias", std::move(fcb)});
    return net;
}

// ---------------------------------------------------------------------------
// Forward
// ---------------------------------------------------------------------------

template <typename T>
struct ForwardCache {
    bool valid = false;
    std::size_t batch = 0;
    Tensor<T> input;
    std::vector<Tensor<T>> conv_pre;                    // pre-ReLU conv outputs
    std::vector<Tensor<T>> block_out;                   // post-pool outputs
    std::vector<std::vector<std::size_t>> pool_argmax;  // source index per pooled element
    Tensor<T> fc_input;                                 // [B, flat]
    Tensor<T> fc_out;                                   // pre-normalization [B, d]
    std::vector<T> norms;                               // per-row L2 norm (if normalizing)
};

/// Forward pass over a [B, C, H, W] batch scaled to [0, 1]; returns [B, d]
/// embedding rows. Pass a cache to enable backward().
template <typename T>
Tensor<T> forward(const Network<T>& net, const Tensor<T>& batch,
                  ForwardCache<T>* cache = nullptr) {
    const auto& arch = net.arch;
    auto sides = arch.spatial_chain();
    if (batch.shape.size() != 4 || batch.shape[1] != static_cast<std::size_t>(arch.input_channels) ||
        batch.shape[2] != static_cast<std::size_t>(arch.input_side) ||
        batch.shape[3] != static_cast<std::size_t>(arch.input_side))
        throw ConfigError("forward: batch " + shape_string(batch) +
                          " does not match input layer [Bx" + std::to_string(arch.input_channels) +
                          "x" + std::to_string(arch.input_side) + "x" +
                          std::to_string(arch.input_side) + "]");
    const std::size_t B = batch.shape[0];

    if (cache) {
        *cache = ForwardCache<T>{};
        cache->batch = B;
        cache->input = batch;
    }

    Tensor<T> cur = batch;
    int in_c = arch.input_channels;
    int side = arch.input_side;

    for (std::size_t bi = 0; bi < arch.conv_blocks.size(); ++bi) {
        const auto& blk = arch.conv_blocks[bi];
        const auto& w = net.param("conv" + std::to_string(bi) + ".weight");
        const auto& bias = net.param("conv" + std::to_string(bi) + ".bias");
        const int oc = blk.out_channels, k = blk.kernel;
        const int cs = side - k + 1; // conv output side

        Tensor<T> conv({B, static_cast<std::size_t>(oc), static_cast<std::size_t>(cs),
                        static_cast<std::size_t>(cs)});
        for (std::size_t b = 0; b < B; ++b)
            for (int o = 0; o < oc; ++o) {
                const T* wbase = &w.data[static_cast<std::size_t>(o) * in_c * k * k];
                T bv = bias.data[static_cast<std::size_t>(o)];
                for (int oy = 0; oy < cs; ++oy)
                    for (int ox = 0; ox < cs; ++ox) {
                        T acc = bv;
                        for (int ic = 0; ic < in_c; ++ic) {
                            const T* in_base =
                                &cur.data[((b * in_c + ic) * side + oy) * side + ox];
                            const T* wrow = wbase + static_cast<std::size_t>(ic) * k * k;
                            for (int ky = 0; ky < k; ++ky) {
                                const T* in_row = in_base + static_cast<std::size_t>(ky) * side;
                                for (int kx = 0; kx < k; ++kx)
                                    acc += wrow[ky * k + kx] * in_row[kx];
                            }
                        }
                        conv.data[((b * oc + o) * cs + oy) * cs + ox] = acc;
                    }
            }
        if (cache) cache->conv_pre.push_back(conv);

        // ReLU + non-overlapping max-pool (gradient goes to the first argmax).
        const int p = blk.pool;
        const int ps = cs / p;
        Tensor<T> pooled({B, static_cast<std::size_t>(oc), static_cast<std::size_t>(ps),
                          static_cast<std::size_t>(ps)});
        std::vector<std::size_t> argmax(pooled.numel());
        for (std::size_t b = 0; b < B; ++b)
            for (int o = 0; o < oc; ++o)
                for (int py = 0; py < ps; ++py)
                    for (int px = 0; px < ps; ++px) {
                        T best = T(-1);
                        std::size_t best_idx = 0;
                        bool first = true;
                        for (int dy = 0; dy < p; ++dy)
                            for (int dx = 0; dx < p; ++dx) {
                                std::size_t idx =
                                    ((b * oc + o) * cs + (py * p + dy)) * cs + (px * p + dx);
                                T v = conv.data[idx];
                                if (v < T(0)) v = T(0); // ReLU
                                if (first || v > best) {
                                    best = v;
                                    best_idx = idx;
                                    first = false;
                                }
                            }
                        std::size_t pidx = ((b * oc + o) * ps + py) * ps + px;
                        pooled.data[pidx] = best;
                        argmax[pidx] = best_idx;
                    }
        if (cache) {
            cache->block_out.push_back(pooled);
            cache->pool_argmax.push_back(std::move(argmax));
        }
        cur = std::move(pooled);
        in_c = oc;
        side = ps;
    }

    // Flatten -> fully connected.
    const std::size_t flat = static_cast<std::size_t>(arch.flat_dim());
    Tensor<T> fc_in({B, flat});
    fc_in.data = cur.data; // already contiguous row-major per batch row
    if (cache) cache->fc_input = fc_in;

    const auto& fcw = net.param("fc.weight");
    const auto& fcb = net.param("fc.bias");
    const std::size_t d = static_cast<std::size_t>(arch.embedding_dim);
    Tensor<T> out({B, d});
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t j = 0; j < d; ++j) {
            T acc = fcb.data[j];
            const T* in_row = &fc_in.data[b * flat];
            for (std::size_t i = 0; i < flat; ++i) acc += in_row[i] * fcw.data[i * d + j];
            out.data[b * d + j] = acc;
        }
    if (cache) cache->fc_out = out;

    if (arch.normalize_embeddings) {
        if (cache) cache->norms.resize(B);
        for (std::size_t b = 0; b < B; ++b) {
            double n2 = 0;
            for (std::size_t j = 0; j < d; ++j) {
                double v = static_cast<double>(out.data[b * d + j]);
                n2 += v * v;
            }
            T n = static_cast<T>(std::sqrt(n2));
            if (cache) cache->norms[b] = n;
            if (static_cast<double>(n) < 1e-12) {
                for (std::size_t j = 0; j < d; ++j) out.data[b * d + j] = T(0);
            } else {
                for (std::size_t j = 0; j < d; ++j) out.data[b * d + j] /= n;
            }
        }
    }
    if (cache) cache->valid = true;
    return out;
}

// ---------------------------------------------------------------------------
// Backward
// ---------------------------------------------------------------------------

/// Exact gradients of sum(upstream * embeddings) w.r.t. every parameter.
/// Requires the cache of the matching forward call.
template <typename T>
std::vector<NamedTensor<T>> backward(const Network<T>& net, const ForwardCache<T>& cache,
                                     const Tensor<T>& upstream) {
    const auto& arch = net.arch;
    if (!cache.valid) throw ConfigError("backward: missing or stale forward cache");
    const std::size_t B = cache.batch;
    const std::size_t d = static_cast<std::size_t>(arch.embedding_dim);
    if (upstream.shape.size() != 2 || upstream.shape[0] != B || upstream.shape[1] != d)
        throw ConfigError("backward: upstream " + shape_string(upstream) +
                          " does not match embeddings [" + std::to_string(B) + "x" +
                          std::to_string(d) + "]");

    std::vector<NamedTensor<T>> grads;
    grads.reserve(net.params.size());
    for (const auto& p : net.params)
        grads.push_back({p.name, Tensor<T>(p.tensor.shape)});
    auto grad_of = [&](const std::string& name) -> Tensor<T>& {
        for (auto& g : grads)
            if (g.name == name) return g.tensor;
        throw ConfigError("backward: no gradient slot for '" + name + "'");
    };

    // Through L2 normalization: y = x / |x|, dx = (u - y (y.u)) / |x|.
    Tensor<T> dfc({B, d});
    if (arch.normalize_embeddings) {
        for (std::size_t b = 0; b < B; ++b) {
            T n = cache.norms[b];
            if (static_cast<double>(n) < 1e-12) {
                for (std::size_t j = 0; j < d; ++j) dfc.data[b * d + j] = T(0);
                continue;
            }
            double dot = 0;
            for (std::size_t j = 0; j < d; ++j) {
                double y = static_cast<double>(cache.fc_out.data[b * d + j]) / n;
                dot += y * static_cast<double>(upstream.data[b * d + j]);
            }
            for (std::size_t j = 0; j < d; ++j) {
                double y = static_cast<double>(cache.fc_out.data[b * d + j]) / n;
                dfc.data[b * d + j] =
                    static_cast<T>((static_cast<double>(upstream.data[b * d + j]) - y * dot) / n);
            }
        }
    } else {
        dfc = upstream;
    }

    // Fully connected.
    const std::size_t flat = static_cast<std::size_t>(arch.flat_dim());
    const auto& fcw = net.param("fc.weight");
    auto& dW = grad_of("fc.weight");
    auto& dB = grad_of("fc.bias");
    Tensor<T> dflat({B, flat});
    for (std::size_t b = 0; b < B; ++b) {
        const T* in_row = &cache.fc_input.data[b * flat];
        const T* u_row = &dfc.data[b * d];
        for (std::size_t j = 0; j < d; ++j) dB.data[j] += u_row[j];
        for (std::size_t i = 0; i < flat; ++i) {
            T acc = T(0);
            for (std::size_t j = 0; j < d; ++j) {
                dW.data[i * d + j] += in_row[i] * u_row[j];
                acc += fcw.data[i * d + j] * u_row[j];
            }
            dflat.data[b * flat + i] = acc;
        }
    }

    // Blocks in reverse: unpool -> ReLU mask -> conv backward.
    auto sides = arch.spatial_chain();
    Tensor<T> dcur = dflat; // logically [B, C, s, s] of the last block output
    for (int bi = static_cast<int>(arch.conv_blocks.size()) - 1; bi >= 0; --bi) {
        const auto& blk = arch.conv_blocks[static_cast<std::size_t>(bi)];
        const int k = blk.kernel, oc = blk.out_channels;
        const int in_side = sides[static_cast<std::size_t>(bi)];
        const int cs = in_side - k + 1;
        const int in_c = bi == 0 ? arch.input_channels
                                 : arch.conv_blocks[static_cast<std::size_t>(bi - 1)].out_channels;
        const auto& conv_pre = cache.conv_pre[static_cast<std::size_t>(bi)];
        const auto& argmax = cache.pool_argmax[static_cast<std::size_t>(bi)];
        const Tensor<T>& block_in =
            bi == 0 ? cache.input : cache.block_out[static_cast<std::size_t>(bi - 1)];

        // Scatter pooled gradients to the winning conv outputs; apply ReLU mask
        // (gradient at exactly zero pre-activation is zero).
        Tensor<T> dconv({B, static_cast<std::size_t>(oc), static_cast<std::size_t>(cs),
                         static_cast<std::size_t>(cs)});
        for (std::size_t i = 0; i < argmax.size(); ++i) {
            std::size_t src = argmax[i];
            if (conv_pre.data[src] > T(0)) dconv.data[src] += dcur.data[i];
        }

        const auto& w = net.param("conv" + std::to_string(bi) + ".weight");
        auto& dw = grad_of("conv" + std::to_string(bi) + ".weight");
        auto& db = grad_of("conv" + std::to_string(bi) + ".bias");
        Tensor<T> din({B, static_cast<std::size_t>(in_c), static_cast<std::size_t>(in_side),
                       static_cast<std::size_t>(in_side)});

        for (std::size_t b = 0; b < B; ++b)
            for (int o = 0; o < oc; ++o) {
                const T* dout_base = &dconv.data[((b * oc + o) * cs) * cs];
                for (int oy = 0; oy < cs; ++oy)
                    for (int ox = 0; ox < cs; ++ox) {
                        T g = dout_base[oy * cs + ox];
                        if (g == T(0)) continue;
                        db.data[static_cast<std::size_t>(o)] += g;
                        for (int ic = 0; ic < in_c; ++ic) {
                            const T* in_base =
                                &block_in.data[((b * in_c + ic) * in_side + oy) * in_side + ox];
                            T* din_base =
                                &din.data[((b * in_c + ic) * in_side + oy) * in_side + ox];
                            const T* wrow =
                                &w.data[(static_cast<std::size_t>(o) * in_c + ic) * k * k];
                            T* dwrow =
                                &dw.data[(static_cast<std::size_t>(o) * in_c + ic) * k * k];
                            for (int ky = 0; ky < k; ++ky)
                                for (int kx = 0; kx < k; ++kx) {
                                    dwrow[ky * k + kx] +=
                                        g * in_base[static_cast<std::size_t>(ky) * in_side + kx];
                                    din_base[static_cast<std::size_t>(ky) * in_side + kx] +=
                                        g * wrow[ky * k + kx];
                                }
                        }
                    }
            }
        dcur = std::move(din);
    }

    return grads;
}

// ---------------------------------------------------------------------------
// Optimizer
// ---------------------------------------------------------------------------

template <typename T>
struct SgdState {
    std::vector<Tensor<T>> velocity;
};

/// Classic momentum update: v <- mu v + g, p <- p - lr v.
/// Throws TrainError on a non-finite gradient, naming the parameter.
template <typename T>
void sgd_step(Network<T>& net, const std::vector<NamedTensor<T>>& grads, double lr,
              double momentum, SgdState<T>& state, std::size_t step_index = 0) {
    if (grads.size() != net.params.size())
        throw TrainError("sgd_step: gradient/parameter count mismatch");
    if (state.velocity.empty()) {
        state.velocity.reserve(net.params.size());
        for (const auto& p : net.params) state.velocity.emplace_back(p.tensor.shape);
    }
    for (std::size_t i = 0; i < net.params.size(); ++i) {
        auto& p = net.params[i].tensor;
        const auto& g = grads[i].tensor;
        auto& v = state.velocity[i];
        if (!p.same_shape(g))
            throw TrainError("sgd_step: gradient shape mismatch for " + net.params[i].name);
        if (!g.all_finite())
            throw TrainError("non-finite gradient in parameter '" + net.params[i].name +
                             "' at step " + std::to_string(step_index));
        for (std::size_t j = 0; j < p.numel(); ++j) {
            v.data[j] = static_cast<T>(momentum * v.data[j] + g.data[j]);
            p.data[j] = static_cast<T>(p.data[j] - lr * v.data[j]);
        }
    }
}

// ---------------------------------------------------------------------------
// Embedding entry point
// ---------------------------------------------------------------------------

/// Converts an image of any size to a [1, C, s, s] batch in [0, 1].
template <typename T>
Tensor<T> image_to_batch(const Image& img, const ArchConfig& arch) {
    Image gray = arch.input_channels == 1 ? to_grayscale(img) : img;
    Image sized = resize(gray, arch.input_side, arch.input_side);
    Tensor<T> batch({1, static_cast<std::size_t>(arch.input_channels),
                     static_cast<std::size_t>(arch.input_side),
                     static_cast<std::size_t>(arch.input_side)});
    for (std::size_t i = 0; i < sized.pixels.size(); ++i)
        batch.data[i] = static_cast<T>(sized.pixels[i] / 255.0);
    return batch;
}

inline Embedding embed(const Network<float>& net, const Image& img) {
    auto batch = image_to_batch<float>(img, net.arch);
    auto out = forward(net, batch);
    Embedding e;
    e.values.assign(out.data.begin(), out.data.end());
    return e;
}

// ---------------------------------------------------------------------------
// Model file format: magic "OCV1", tag, architecture, named float32 tensors.
// All integers little-endian. Round-trips bit-exactly.
// ---------------------------------------------------------------------------

namespace iodetail {

inline void put_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

inline void put_u64(std::ostream& os, std::uint64_t v) {
    put_u32(os, static_cast<std::uint32_t>(v));
    put_u32(os, static_cast<std::uint32_t>(v >> 32));
}

inline std::uint32_t get_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    if (!is) throw CorruptionError("model/database file truncated");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

inline std::uint64_t get_u64(std::istream& is) {
    std::uint64_t lo = get_u32(is);
    std::uint64_t hi = get_u32(is);
    return lo | (hi << 32);
}

} // namespace iodetail

inline void save_network(const Network<float>& net, const std::string& path) {
    using namespace iodetail;
    std::ofstream f(path, std::ios::binary);
    if (!f) throw StorageError("cannot open " + path + " for writing");
    f.write("OCV1", 4);
    f.put(static_cast<char>(net.tag));
    put_u32(f, static_cast<std::uint32_t>(net.arch.input_side));
    put_u32(f, static_cast<std::uint32_t>(net.arch.input_channels));
    put_u32(f, static_cast<std::uint32_t>(net.arch.conv_blocks.size()));
    for (const auto& b : net.arch.conv_blocks) {
        put_u32(f, static_cast<std::uint32_t>(b.out_channels));
        put_u32(f, static_cast<std::uint32_t>(b.kernel));
        put_u32(f, static_cast<std::uint32_t>(b.pool));
    }
    put_u32(f, static_cast<std::uint32_t>(net.arch.embedding_dim));
    f.put(net.arch.normalize_embeddings ? 1 : 0);
    put_u32(f, static_cast<std::uint32_t>(net.params.size()));
    for (const auto& p : net.params) {
        put_u32(f, static_cast<std::uint32_t>(p.name.size()));
        f.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
        put_u32(f, static_cast<std::uint32_t>(p.tensor.shape.size()));
        for (auto e : p.tensor.shape) put_u64(f, e);
        static_assert(sizeof(float) == 4);
        f.write(reinterpret_cast<const char*>(p.tensor.data.data()),
                static_cast<std::streamsize>(p.tensor.data.size() * 4));
    }
    if (!f) throw StorageError("write failed for " + path);
}

inline Network<float> load_network(const std::string& path) {
    using namespace iodetail;
    std::ifstream f(path, std::ios::binary);
    if (!f) throw StorageError("cannot open " + path);
    char magic[4];
    f.read(magic, 4);
    if (!f || std::memcmp(magic, "OCV1", 4) != 0)
        throw CorruptionError("bad model magic in " + path);
    Network<float> net;
    int tag = f.get();
    if (tag < 0 || tag > 2) throw CorruptionError("bad model tag in " + path);
    net.tag = static_cast<ModelTag>(tag);
    net.arch.input_side = static_cast<int>(get_u32(f));
    net.arch.input_channels = static_cast<int>(get_u32(f));
    std::uint32_t nblocks = get_u32(f);
    if (nblocks > 64) throw CorruptionError("implausible block count in " + path);
    net.arch.conv_blocks.clear();
    for (std::uint32_t i = 0; i < nblocks; ++i) {
        ConvBlockSpec b;
        b.out_channels = static_cast<int>(get_u32(f));
        b.kernel = static_cast<int>(get_u32(f));
        b.pool = static_cast<int>(get_u32(f));
        net.arch.conv_blocks.push_back(b);
    }
    net.arch.embedding_dim = static_cast<int>(get_u32(f));
    int norm = f.get();
    if (norm != 0 && norm != 1) throw CorruptionError("bad normalize flag in " + path);
    net.arch.normalize_embeddings = norm == 1;
    std::uint32_t nparams = get_u32(f);
    if (nparams > 4096) throw CorruptionError("implausible parameter count in " + path);
    for (std::uint32_t i = 0; i < nparams; ++i) {
        std::uint32_t name_len = get_u32(f);
        if (name_len > 4096) throw CorruptionError("implausible name length in " + path);
        std::string name(name_len, '\0');
        f.read(name.data(), name_len);
        std::uint32_t rank = get_u32(f);
        if (rank > 8) throw CorruptionError("implausible tensor rank in " + path);
        std::vector<std::size_t> shape;
        for (std::uint32_t r = 0; r < rank; ++r)
            shape.push_back(static_cast<std::size_t>(get_u64(f)));
        Tensor<float> t(shape);
        f.read(reinterpret_cast<char*>(t.data.data()),
               static_cast<std::streamsize>(t.data.size() * 4));
        if (!f) throw CorruptionError("model file truncated: " + path);
        net.params.push_back({std::move(name), std::move(t)});
    }
    return net;
}

/// Double-precision copy for gradient-oracle work.
inline Network<double> to_double(const Network<float>& net) {
    Network<double> out;
    out.arch = net.arch;
    out.tag = net.tag;
    for (const auto& p : net.params) {
        Tensor<double> t(p.tensor.shape);
        for (std::size_t i = 0; i < t.numel(); ++i)
            t.data[i] = static_cast<double>(p.tensor.data[i]);
        out.params.push_back({p.name, std::move(t)});
    }
    return out;
}

} // namespace ocuver

#endif // OCUVER_NETWORK_HPP
