// Copyright 2026 the ocuverify authors.
// Licensed under the Apache License, Version 2.0. See LICENSE for details.

#ifndef OCUVER_TRAINER_HPP
#define OCUVER_TRAINER_HPP

// Training loops for the three model variants (PRE-PRE, POST-POST,
// PRE-POST), verification metrics (accuracy, false acceptance, false
// rejection) and the threshold sweep / equal-error-rate search.

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "ocuver/dataset.hpp"
#include "ocuver/errors.hpp"
#include "ocuver/losses.hpp"
#include "ocuver/network.hpp"
#include "ocuver/preprocess.hpp"

namespace ocuver {

struct TrainConfig {
    ModelTag variant = ModelTag::PrePost;
    enum class LossKind { Contrastive, Triplet };
    LossKind loss = LossKind::Triplet;
    int epochs = 100;
    int batch_size = 32;
    double lr = 0.01;
    double momentum = 0.9;
    AugmentConfig augment{};
    int augment_copies = 8;
    std::uint64_t seed = 0;
    ArchConfig arch{};
    double margin = 1.0; // contrastive m
    double alpha = 0.2;  // triplet margin
    TripletStrategy strategy = TripletStrategy::SemiHard;

    void validate() const {
        if (epochs < 1) throw ConfigError("train: epochs must be >= 1");
        if (batch_size < 1) throw ConfigError("train: batch size must be >= 1");
        if (augment_copies < 0) throw ConfigError("train: augment_copies must be >= 0");
        augment.validate();
        arch.spatial_chain();
        LossConfig{margin, alpha, batch_size}.validate();
    }
};

/// Verification metrics at a fixed squared-distance threshold.
struct EvalMetrics {
    double accuracy = 0;
    double false_acceptance = 0; // impostor pairs accepted
    double false_rejection = 0;  // genuine pairs rejected
    double threshold_used = 0;
    std::size_t genuine_count = 0;
    std::size_t impostor_count = 0;
};

struct EvalPair {
    Image a;
    Image b;
};

struct TrainResult {
    Network<float> net;
    std::vector<double> epoch_loss; // mean step loss per epoch
};

// ---------------------------------------------------------------------------
// Dataset expansion
// ---------------------------------------------------------------------------

/// Appends `copies` augmented variants of every original item; each copy
/// records its source index. Deterministic in (items order, aug, seed).
inline std::vector<DatasetItem> expand_with_augmentation(const std::vector<DatasetItem>& originals,
                                                         const AugmentConfig& aug, int copies,
                                                         std::uint64_t seed) {
    std::vector<DatasetItem> out = originals;
    out.reserve(originals.size() * static_cast<std::size_t>(copies + 1));
    for (std::size_t i = 0; i < originals.size(); ++i) {
        for (int c = 0; c < copies; ++c) {
            AugmentConfig cfg = aug;
            cfg.seed = mix_seed(mix_seed(seed, 0x65787061ULL),
                                i * 1000003ULL + static_cast<std::uint64_t>(c));
            DatasetItem item;
            item.identity_id = originals[i].identity_id;
            item.phase = originals[i].phase;
            item.image = augment(originals[i].image, cfg);
            item.augmented_from = i;
            out.push_back(std::move(item));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

namespace traindetail {

/// Pre-scaled network input planes, one per dataset item (C*s*s floats).
inline std::vector<std::vector<float>> precompute_planes(const VariantView& view,
                                                         const ArchConfig& arch) {
    std::vector<std::vector<float>> planes(view.items->size());
    auto fill = [&](const std::vector<std::size_t>& side) {
        for (auto idx : side)
            if (planes[idx].empty())
                planes[idx] = image_to_batch<float>(view.item(idx).image, arch).data;
    };
    fill(view.side_a);
    fill(view.side_b);
    return planes;
}

inline Tensor<float> gather_batch(const std::vector<std::vector<float>>& planes,
                                  const std::vector<std::size_t>& indices,
                                  const ArchConfig& arch) {
    const std::size_t plane_size = static_cast<std::size_t>(arch.input_channels) *
                                   arch.input_side * arch.input_side;
    Tensor<float> batch({indices.size(), static_cast<std::size_t>(arch.input_channels),
                         static_cast<std::size_t>(arch.input_side),
                         static_cast<std::size_t>(arch.input_side)});
    for (std::size_t i = 0; i < indices.size(); ++i)
        std::copy(planes[indices[i]].begin(), planes[indices[i]].end(),
                  batch.data.begin() + static_cast<std::ptrdiff_t>(i * plane_size));
    return batch;
}

inline std::vector<float> row_of(const Tensor<float>& t, std::size_t r) {
    const std::size_t d = t.shape[1];
    return std::vector<float>(t.data.begin() + static_cast<std::ptrdiff_t>(r * d),
                              t.data.begin() + static_cast<std::ptrdiff_t>((r + 1) * d));
}

/// Batched embeddings of every view item with the current parameters.
inline std::vector<std::vector<float>> embed_view(const Network<float>& net,
                                                  const std::vector<std::vector<float>>& planes) {
    std::vector<std::size_t> indices;
    for (std::size_t i = 0; i < planes.size(); ++i)
        if (!planes[i].empty()) indices.push_back(i);
    auto batch = gather_batch(planes, indices, net.arch);
    auto out = forward(net, batch);
    std::vector<std::vector<float>> embs(planes.size());
    for (std::size_t i = 0; i < indices.size(); ++i) embs[indices[i]] = row_of(out, i);
    return embs;
}

inline void accumulate(std::vector<NamedTensor<float>>& into,
                       const std::vector<NamedTensor<float>>& from) {
    for (std::size_t i = 0; i < into.size(); ++i)
        for (std::size_t j = 0; j < into[i].tensor.numel(); ++j)
            into[i].tensor.data[j] += from[i].tensor.data[j];
}

} // namespace traindetail

/// The network train() starts from, for a given config.
inline Network<float> init_for_train(const TrainConfig& cfg) {
    return init_network<float>(cfg.arch, mix_seed(cfg.seed, 0x696e6974ULL), cfg.variant);
}

/**
 * @brief Trains a variant model. Weight sharing across the siamese/triplet
 * towers is realized by running the single network once per tower and
 * summing the parameter gradients. Fully deterministic given cfg.seed.
 */
inline TrainResult train(const std::vector<DatasetItem>& items, const TrainConfig& cfg) {
    using namespace traindetail;
    cfg.validate();
    {
        std::vector<std::string> ids;
        for (const auto& it : items)
            if (std::find(ids.begin(), ids.end(), it.identity_id) == ids.end())
                ids.push_back(it.identity_id);
        if (ids.size() < 2) throw ConfigError("train: need at least two identities");
    }

    auto expanded = expand_with_augmentation(items, cfg.augment, cfg.augment_copies,
                                             cfg.seed);
    auto view = build_variant_dataset(expanded, cfg.variant);
    auto planes = precompute_planes(view, cfg.arch);

    TrainResult result;
    result.net = init_for_train(cfg);
    SgdState<float> opt_state;
    LossConfig loss_cfg{cfg.margin, cfg.alpha, cfg.batch_size};

    const std::size_t steps_per_epoch =
        std::max<std::size_t>(1, view.item_count() / static_cast<std::size_t>(cfg.batch_size));
    const double inv_n = 1.0 / cfg.batch_size;
    std::size_t global_step = 0;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        double epoch_sum = 0;
        for (std::size_t step = 0; step < steps_per_epoch; ++step, ++global_step) {
            std::uint64_t step_seed = mix_seed(mix_seed(cfg.seed, 0x73746570ULL), global_step);
            double step_loss = 0;

            std::vector<NamedTensor<float>> total_grads;
            for (const auto& p : result.net.params)
                total_grads.push_back({p.name, Tensor<float>(p.tensor.shape)});

            if (cfg.loss == TrainConfig::LossKind::Triplet) {
                std::vector<std::vector<float>> pool_embs;
                const std::vector<std::vector<float>>* embs_ptr = nullptr;
                if (cfg.strategy == TripletStrategy::SemiHard) {
                    pool_embs = embed_view(result.net, planes);
                    embs_ptr = &pool_embs;
                }
                auto triplets = sample_triplets(view, embs_ptr, loss_cfg, cfg.strategy, step_seed);

                std::vector<std::size_t> ai, pi, ni;
                for (const auto& t : triplets) {
                    ai.push_back(t.anchor);
                    pi.push_back(t.positive);
                    ni.push_back(t.negative);
                }
                ForwardCache<float> ca, cp, cn;
                auto ea = forward(result.net, gather_batch(planes, ai, cfg.arch), &ca);
                auto ep = forward(result.net, gather_batch(planes, pi, cfg.arch), &cp);
                auto en = forward(result.net, gather_batch(planes, ni, cfg.arch), &cn);
                if (!ea.all_finite() || !ep.all_finite() || !en.all_finite())
                    throw TrainError("non-finite embedding at step " +
                                     std::to_string(global_step));

                const std::size_t d = ea.shape[1];
                Tensor<float> ua(ea.shape), up(ea.shape), un(ea.shape);
                for (std::size_t i = 0; i < triplets.size(); ++i) {
                    auto r = triplet_loss(row_of(ea, i), row_of(ep, i), row_of(en, i), cfg.alpha);
                    step_loss += r.loss;
                    for (std::size_t j = 0; j < d; ++j) {
                        ua.data[i * d + j] = static_cast<float>(r.grad_a[j] * inv_n);
                        up.data[i * d + j] = static_cast<float>(r.grad_p[j] * inv_n);
                        un.data[i * d + j] = static_cast<float>(r.grad_n[j] * inv_n);
                    }
                }
                step_loss *= inv_n;
                accumulate(total_grads, backward(result.net, ca, ua));
                accumulate(total_grads, backward(result.net, cp, up));
                accumulate(total_grads, backward(result.net, cn, un));
            } else {
                auto pairs = sample_pairs(view, cfg.batch_size, step_seed);
                std::vector<std::size_t> ui, vi;
                for (const auto& p : pairs) {
                    ui.push_back(p.u);
                    vi.push_back(p.v);
                }
                ForwardCache<float> cu, cv;
                auto eu = forward(result.net, gather_batch(planes, ui, cfg.arch), &cu);
                auto ev = forward(result.net, gather_batch(planes, vi, cfg.arch), &cv);
                if (!eu.all_finite() || !ev.all_finite())
                    throw TrainError("non-finite embedding at step " +
                                     std::to_string(global_step));

                const std::size_t d = eu.shape[1];
                Tensor<float> uu(eu.shape), uv(eu.shape);
                for (std::size_t i = 0; i < pairs.size(); ++i) {
                    auto r = contrastive_loss(row_of(eu, i), row_of(ev, i), pairs[i].label,
                                              cfg.margin);
                    step_loss += r.loss;
                    for (std::size_t j = 0; j < d; ++j) {
                        uu.data[i * d + j] = static_cast<float>(r.grad_u[j] * inv_n);
                        uv.data[i * d + j] = static_cast<float>(r.grad_v[j] * inv_n);
                    }
                }
                step_loss *= inv_n;
                accumulate(total_grads, backward(result.net, cu, uu));
                accumulate(total_grads, backward(result.net, cv, uv));
            }

            if (!std::isfinite(step_loss))
                throw TrainError("non-finite loss at step " + std::to_string(global_step));
            sgd_step(result.net, total_grads, cfg.lr, cfg.momentum, opt_state, global_step);
            for (const auto& p : result.net.params)
                if (!p.tensor.all_finite())
                    throw TrainError("non-finite parameter '" + p.name + "' after step " +
                                     std::to_string(global_step));
            epoch_sum += step_loss;
        }
        result.epoch_loss.push_back(epoch_sum / static_cast<double>(steps_per_epoch));
    }
    return result;
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

/// Squared embedding distance per pair.
inline std::vector<double> pair_squared_distances(const Network<float>& net,
                                                  const std::vector<EvalPair>& pairs) {
    std::vector<double> out;
    out.reserve(pairs.size());
    for (const auto& p : pairs)
        out.push_back(squared_distance(embed(net, p.a), embed(net, p.b)));
    return out;
}

/// Metrics from precomputed distances: a pair is accepted iff d^2 <= theta.
inline EvalMetrics metrics_from_distances(const std::vector<double>& genuine,
                                          const std::vector<double>& impostor, double theta) {
    if (genuine.empty() || impostor.empty())
        throw ConfigError("evaluate: genuine and impostor pair sets must be non-empty");
    std::size_t fr = 0, fa = 0;
    for (double d : genuine)
        if (d > theta) ++fr;
    for (double d : impostor)
        if (d <= theta) ++fa;
    EvalMetrics m;
    m.genuine_count = genuine.size();
    m.impostor_count = impostor.size();
    m.false_rejection = static_cast<double>(fr) / static_cast<double>(genuine.size());
    m.false_acceptance = static_cast<double>(fa) / static_cast<double>(impostor.size());
    m.accuracy = static_cast<double>((genuine.size() - fr) + (impostor.size() - fa)) /
                 static_cast<double>(genuine.size() + impostor.size());
    m.threshold_used = theta;
    return m;
}

inline EvalMetrics evaluate(const Network<float>& net, const std::vector<EvalPair>& genuine,
                            const std::vector<EvalPair>& impostor, double theta) {
    if (genuine.empty() || impostor.empty())
        throw ConfigError("evaluate: genuine and impostor pair sets must be non-empty");
    return metrics_from_distances(pair_squared_distances(net, genuine),
                                  pair_squared_distances(net, impostor), theta);
}

// ---------------------------------------------------------------------------
// Threshold sweep
// ---------------------------------------------------------------------------

struct SweepRow {
    double theta = 0;
    double false_acceptance = 0;
    double false_rejection = 0;
    double accuracy = 0;
};

struct SweepResult {
    std::vector<SweepRow> rows;
    double theta_eer = 0; // grid point minimizing |FA - FR|, ties toward smaller theta
};

inline SweepResult sweep_from_distances(const std::vector<double>& genuine,
                                        const std::vector<double>& impostor,
                                        const std::vector<double>& grid) {
    if (grid.empty()) throw ConfigError("sweep_threshold: empty grid");
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (grid[i] < grid[i - 1])
            throw ConfigError("sweep_threshold: grid must be sorted ascending");
    SweepResult res;
    double best_gap = -1;
    for (double theta : grid) {
        auto m = metrics_from_distances(genuine, impostor, theta);
        res.rows.push_back({theta, m.false_acceptance, m.false_rejection, m.accuracy});
        double gap = std::abs(m.false_acceptance - m.false_rejection);
        if (best_gap < 0 || gap < best_gap) {
            best_gap = gap;
            res.theta_eer = theta;
        }
    }
    return res;
}

inline SweepResult sweep_threshold(const Network<float>& net,
                                   const std::vector<EvalPair>& genuine,
                                   const std::vector<EvalPair>& impostor,
                                   const std::vector<double>& grid) {
    if (genuine.empty() || impostor.empty())
        throw ConfigError("sweep_threshold: genuine and impostor pair sets must be non-empty");
    return sweep_from_distances(pair_squared_distances(net, genuine),
                                pair_squared_distances(net, impostor), grid);
}

/// Evenly spaced threshold grid over [lo, hi].
inline std::vector<double> theta_grid(double lo, double hi, int points) {
    if (points < 1) throw ConfigError("theta_grid: need at least one point");
    std::vector<double> g;
    if (points == 1) {
        g.push_back(lo);
        return g;
    }
    for (int i = 0; i < points; ++i)
        g.push_back(lo + (hi - lo) * i / (points - 1));
    return g;
}

// ---------------------------------------------------------------------------
// CSV output
// ---------------------------------------------------------------------------

inline void write_loss_csv(const std::string& path, const std::vector<double>& epoch_loss) {
    std::ofstream f(path);
    if (!f) throw StorageError("cannot open " + path + " for writing");
    f << "epoch,mean_loss\n";
    char buf[64];
    for (std::size_t i = 0; i < epoch_loss.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%zu,%.6f\n", i + 1, epoch_loss[i]);
        f << buf;
    }
}

inline void write_sweep_csv(const std::string& path, const SweepResult& sweep) {
    std::ofstream f(path);
    if (!f) throw StorageError("cannot open " + path + " for writing");
    f << "theta,false_acceptance,false_rejection,accuracy\n";
    char buf[128];
    for (const auto& r : sweep.rows) {
        std::snprintf(buf, sizeof buf, "%.6f,%.6f,%.6f,%.6f\n", r.theta, r.false_acceptance,
                      r.false_rejection, r.accuracy);
        f << buf;
    }
}

inline void write_metrics_csv(const std::string& path, const EvalMetrics& m) {
    std::ofstream f(path);
    if (!f) throw StorageError("cannot open " + path + " for writing");
    char buf[160];
    std::snprintf(buf, sizeof buf, "accuracy,false_acceptance,false_rejection,theta\n%.6f,%.6f,%.6f,%.6f\n",
                  m.accuracy, m.false_acceptance, m.false_rejection, m.threshold_used);
    f << buf;
}

} // namespace ocuver

#endif // OCUVER_TRAINER_HPP
