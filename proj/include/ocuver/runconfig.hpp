// Copyright 2026 the ocuverify authors.
// Licensed under the Apache License, Version 2.0. See LICENSE for details.

#ifndef OCUVER_RUNCONFIG_HPP
#define OCUVER_RUNCONFIG_HPP

// Flat key=value run configuration binding every tunable of the toolkit.
// Files hold one key=value per line ('#' comments allowed); command-line
// --set flags override file values. Unknown keys are rejected. Defaults
// equal the module-level defaults.

#include <cstdint>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "ocuver/errors.hpp"
#include "ocuver/forensics.hpp"
#include "ocuver/network.hpp"
#include "ocuver/pipeline.hpp"
#include "ocuver/preprocess.hpp"
#include "ocuver/trainer.hpp"

namespace ocuver {

struct RunConfig {
    CannyParams canny{};
    int dilate_k = 2;
    bool background_removal = true;
    AugmentConfig augment{};
    TrainConfig train{};
    ArchConfig arch{};
    ElaConfig ela{};
    double theta = 0.5;
    // evaluation-pair construction
    int eval_copies = 0;
    std::uint64_t eval_seed = 7;
    double sweep_min = 0.0;
    double sweep_max = 4.0;
    int sweep_points = 81;
    // synthetic corpus generation
    int synth_identities = 20;
    int synth_canvas = 128;
    int synth_quality = 90;
    std::uint64_t synth_seed = 1;
    int forgery_count = 10;
    int forgery_q_carrier = 75;
    int forgery_q_splice = 95;
    std::uint64_t forgery_seed = 5;

    RunConfig() {
        // the nested TrainConfig carries its own augment/arch copies; keep
        // one authoritative copy at this level and sync before use
        sync_nested();
    }

    void sync_nested() {
        train.augment = augment;
        train.arch = arch;
    }
};

namespace cfgdetail {

struct KeyDef {
    std::string key;
    std::function<void(RunConfig&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

inline double parse_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError("config: key '" + key + "' expects a number, got '" + v + "'");
    }
}

inline long long parse_int(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        long long i = std::stoll(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return i;
    } catch (const std::exception&) {
        throw ConfigError("config: key '" + key + "' expects an integer, got '" + v + "'");
    }
}

inline bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "1" || v == "true") return true;
    if (v == "0" || v == "false") return false;
    throw ConfigError("config: key '" + key + "' expects 0/1, got '" + v + "'");
}

inline std::string fmt_double(double d) {
    std::ostringstream os;
    os << d;
    return os.str();
}

inline std::vector<ConvBlockSpec> parse_blocks(const std::string& key, const std::string& v) {
    std::vector<ConvBlockSpec> blocks;
    std::stringstream ss(v);
    std::string part;
    while (std::getline(ss, part, ',')) {
        ConvBlockSpec b;
        if (std::sscanf(part.c_str(), "%dx%dx%d", &b.out_channels, &b.kernel, &b.pool) != 3)
            throw ConfigError("config: key '" + key + "' expects C x K x P triples, got '" +
                              part + "'");
        blocks.push_back(b);
    }
    if (blocks.empty())
        throw ConfigError("config: key '" + key + "' expects at least one block");
    return blocks;
}

inline std::string fmt_blocks(const std::vector<ConvBlockSpec>& blocks) {
    std::string s;
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(blocks[i].out_channels) + "x" + std::to_string(blocks[i].kernel) +
             "x" + std::to_string(blocks[i].pool);
    }
    return s;
}

inline const std::vector<KeyDef>& key_table() {
    static const std::vector<KeyDef> defs = [] {
        std::vector<KeyDef> t;
        auto add_d = [&](const std::string& k, double RunConfig::* field) {
            t.push_back({k,
                         [k, field](RunConfig& c, const std::string& v) {
                             c.*field = parse_double(k, v);
                         },
                         [field](const RunConfig& c) { return fmt_double(c.*field); }});
        };
        auto add = [&](const std::string& k, auto setter, auto getter) {
            t.push_back({k, setter, getter});
        };

        add("canny.sigma",
            [](RunConfig& c, const std::string& v) {
                c.canny.gaussian_sigma = parse_double("canny.sigma", v);
            },
            [](const RunConfig& c) { return fmt_double(c.canny.gaussian_sigma); });
        add("canny.low",
            [](RunConfig& c, const std::string& v) {
                c.canny.low_threshold = parse_double("canny.low", v);
            },
            [](const RunConfig& c) { return fmt_double(c.canny.low_threshold); });
        add("canny.high",
            [](RunConfig& c, const std::string& v) {
                c.canny.high_threshold = parse_double("canny.high", v);
            },
            [](const RunConfig& c) { return fmt_double(c.canny.high_threshold); });
        add("dilate.k",
            [](RunConfig& c, const std::string& v) {
                c.dilate_k = static_cast<int>(parse_int("dilate.k", v));
            },
            [](const RunConfig& c) { return std::to_string(c.dilate_k); });
        add("preprocess.background_removal",
            [](RunConfig& c, const std::string& v) {
                c.background_removal = parse_bool("preprocess.background_removal", v);
            },
            [](const RunConfig& c) { return std::string(c.background_removal ? "1" : "0"); });

        add("augment.flip_prob",
            [](RunConfig& c, const std::string& v) {
                c.augment.flip_lr_prob = parse_double("augment.flip_prob", v);
            },
            [](const RunConfig& c) { return fmt_double(c.augment.flip_lr_prob); });
        add("augment.rotate_prob",
            [](RunConfig& c, const std::string& v) {
                c.augment.rotate_prob = parse_double("augment.rotate_prob", v);
            },
            [](const RunConfig& c) { return fmt_double(c.augment.rotate_prob); });
        add("augment.rotate_max_left",
            [](RunConfig& c, const std::string& v) {
                c.augment.rotate_max_left_deg = parse_double("augment.rotate_max_left", v);
            },
            [](const RunConfig& c) { return fmt_double(c.augment.rotate_max_left_deg); });
        add("augment.rotate_max_right",
            [](RunConfig& c, const std::string& v) {
                c.augment.rotate_max_right_deg = parse_double("augment.rotate_max_right", v);
            },
            [](const RunConfig& c) { return fmt_double(c.augment.rotate_max_right_deg); });
        add("augment.zoom_prob",
            [](RunConfig& c, const std::string& v) {
                c.augment.zoom_prob = parse_double("augment.zoom_prob", v);
            },
            [](const RunConfig& c) { return fmt_double(c.augment.zoom_prob); });
        add("augment.zoom_min",
            [](RunConfig& c, const std::string& v) {
                c.augment.zoom_min_factor = parse_double("augment.zoom_min", v);
            },
            [](const RunConfig& c) { return fmt_double(c.augment.zoom_min_factor); });
        add("augment.zoom_max",
            [](RunConfig& c, const std::string& v) {
                c.augment.zoom_max_factor = parse_double("augment.zoom_max", v);
            },
            [](const RunConfig& c) { return fmt_double(c.augment.zoom_max_factor); });
        add("augment.distort_prob",
            [](RunConfig& c, const std::string& v) {
                c.augment.distort_prob = parse_double("augment.distort_prob", v);
            },
            [](const RunConfig& c) { return fmt_double(c.augment.distort_prob); });
        add("augment.distort_grid_w",
            [](RunConfig& c, const std::string& v) {
                c.augment.distort_grid_w = static_cast<int>(parse_int("augment.distort_grid_w", v));
            },
            [](const RunConfig& c) { return std::to_string(c.augment.distort_grid_w); });
        add("augment.distort_grid_h",
            [](RunConfig& c, const std::string& v) {
                c.augment.distort_grid_h = static_cast<int>(parse_int("augment.distort_grid_h", v));
            },
            [](const RunConfig& c) { return std::to_string(c.augment.distort_grid_h); });
        add("augment.distort_magnitude",
            [](RunConfig& c, const std::string& v) {
                c.augment.distort_magnitude = parse_double("augment.distort_magnitude", v);
            },
            [](const RunConfig& c) { return fmt_double(c.augment.distort_magnitude); });

        add("train.variant",
            [](RunConfig& c, const std::string& v) { c.train.variant = model_tag_from_string(v); },
            [](const RunConfig& c) { return to_string(c.train.variant); });
        add("train.loss",
            [](RunConfig& c, const std::string& v) {
                if (v == "triplet")
                    c.train.loss = TrainConfig::LossKind::Triplet;
                else if (v == "contrastive")
                    c.train.loss = TrainConfig::LossKind::Contrastive;
                else
                    throw ConfigError("config: train.loss expects triplet|contrastive");
            },
            [](const RunConfig& c) {
                return std::string(c.train.loss == TrainConfig::LossKind::Triplet
                                       ? "triplet"
                                       : "contrastive");
            });
        add("train.epochs",
            [](RunConfig& c, const std::string& v) {
                c.train.epochs = static_cast<int>(parse_int("train.epochs", v));
            },
            [](const RunConfig& c) { return std::to_string(c.train.epochs); });
        add("train.batch",
            [](RunConfig& c, const std::string& v) {
                c.train.batch_size = static_cast<int>(parse_int("train.batch", v));
            },
            [](const RunConfig& c) { return std::to_string(c.train.batch_size); });
        add("train.lr",
            [](RunConfig& c, const std::string& v) { c.train.lr = parse_double("train.lr", v); },
            [](const RunConfig& c) { return fmt_double(c.train.lr); });
        add("train.momentum",
            [](RunConfig& c, const std::string& v) {
                c.train.momentum = parse_double("train.momentum", v);
            },
            [](const RunConfig& c) { return fmt_double(c.train.momentum); });
        add("train.copies",
            [](RunConfig& c, const std::string& v) {
                c.train.augment_copies = static_cast<int>(parse_int("train.copies", v));
            },
            [](const RunConfig& c) { return std::to_string(c.train.augment_copies); });
        add("train.seed",
            [](RunConfig& c, const std::string& v) {
                c.train.seed = static_cast<std::uint64_t>(parse_int("train.seed", v));
            },
            [](const RunConfig& c) { return std::to_string(c.train.seed); });
        add("train.margin",
            [](RunConfig& c, const std::string& v) {
                c.train.margin = parse_double("train.margin", v);
            },
            [](const RunConfig& c) { return fmt_double(c.train.margin); });
        add("train.alpha",
            [](RunConfig& c, const std::string& v) {
                c.train.alpha = parse_double("train.alpha", v);
            },
            [](const RunConfig& c) { return fmt_double(c.train.alpha); });
        add("train.strategy",
            [](RunConfig& c, const std::string& v) {
                c.train.strategy = triplet_strategy_from_string(v);
            },
            [](const RunConfig& c) {
                return std::string(c.train.strategy == TripletStrategy::Random ? "random"
                                                                               : "semi-hard");
            });

        add("arch.input_side",
            [](RunConfig& c, const std::string& v) {
                c.arch.input_side = static_cast<int>(parse_int("arch.input_side", v));
            },
            [](const RunConfig& c) { return std::to_string(c.arch.input_side); });
        add("arch.blocks",
            [](RunConfig& c, const std::string& v) {
                c.arch.conv_blocks = parse_blocks("arch.blocks", v);
            },
            [](const RunConfig& c) { return fmt_blocks(c.arch.conv_blocks); });
        add("arch.embedding_dim",
            [](RunConfig& c, const std::string& v) {
                c.arch.embedding_dim = static_cast<int>(parse_int("arch.embedding_dim", v));
            },
            [](const RunConfig& c) { return std::to_string(c.arch.embedding_dim); });
        add("arch.normalize",
            [](RunConfig& c, const std::string& v) {
                c.arch.normalize_embeddings = parse_bool("arch.normalize", v);
            },
            [](const RunConfig& c) {
                return std::string(c.arch.normalize_embeddings ? "1" : "0");
            });

        add("ela.requality",
            [](RunConfig& c, const std::string& v) {
                c.ela.requality = static_cast<int>(parse_int("ela.requality", v));
            },
            [](const RunConfig& c) { return std::to_string(c.ela.requality); });
        add("ela.factor",
            [](RunConfig& c, const std::string& v) {
                c.ela.outlier_factor = parse_double("ela.factor", v);
            },
            [](const RunConfig& c) { return fmt_double(c.ela.outlier_factor); });
        add("ela.floor",
            [](RunConfig& c, const std::string& v) {
                c.ela.absolute_floor = parse_double("ela.floor", v);
            },
            [](const RunConfig& c) { return fmt_double(c.ela.absolute_floor); });
        add("ela.min_region",
            [](RunConfig& c, const std::string& v) {
                c.ela.min_region = static_cast<int>(parse_int("ela.min_region", v));
            },
            [](const RunConfig& c) { return std::to_string(c.ela.min_region); });
        add("ela.gain",
            [](RunConfig& c, const std::string& v) {
                c.ela.display_gain = parse_double("ela.gain", v);
            },
            [](const RunConfig& c) { return fmt_double(c.ela.display_gain); });

        add_d("theta", &RunConfig::theta);
        add("eval.copies",
            [](RunConfig& c, const std::string& v) {
                c.eval_copies = static_cast<int>(parse_int("eval.copies", v));
            },
            [](const RunConfig& c) { return std::to_string(c.eval_copies); });
        add("eval.seed",
            [](RunConfig& c, const std::string& v) {
                c.eval_seed = static_cast<std::uint64_t>(parse_int("eval.seed", v));
            },
            [](const RunConfig& c) { return std::to_string(c.eval_seed); });
        add_d("sweep.min", &RunConfig::sweep_min);
        add_d("sweep.max", &RunConfig::sweep_max);
        add("sweep.points",
            [](RunConfig& c, const std::string& v) {
                c.sweep_points = static_cast<int>(parse_int("sweep.points", v));
            },
            [](const RunConfig& c) { return std::to_string(c.sweep_points); });

        add("synth.identities",
            [](RunConfig& c, const std::string& v) {
                c.synth_identities = static_cast<int>(parse_int("synth.identities", v));
            },
            [](const RunConfig& c) { return std::to_string(c.synth_identities); });
        add("synth.canvas",
            [](RunConfig& c, const std::string& v) {
                c.synth_canvas = static_cast<int>(parse_int("synth.canvas", v));
            },
            [](const RunConfig& c) { return std::to_string(c.synth_canvas); });
        add("synth.quality",
            [](RunConfig& c, const std::string& v) {
                c.synth_quality = static_cast<int>(parse_int("synth.quality", v));
            },
            [](const RunConfig& c) { return std::to_string(c.synth_quality); });
        add("synth.seed",
            [](RunConfig& c, const std::string& v) {
                c.synth_seed = static_cast<std::uint64_t>(parse_int("synth.seed", v));
            },
            [](const RunConfig& c) { return std::to_string(c.synth_seed); });
        add("forgery.count",
            [](RunConfig& c, const std::string& v) {
                c.forgery_count = static_cast<int>(parse_int("forgery.count", v));
            },
            [](const RunConfig& c) { return std::to_string(c.forgery_count); });
        add("forgery.q_carrier",
            [](RunConfig& c, const std::string& v) {
                c.forgery_q_carrier = static_cast<int>(parse_int("forgery.q_carrier", v));
            },
            [](const RunConfig& c) { return std::to_string(c.forgery_q_carrier); });
        add("forgery.q_splice",
            [](RunConfig& c, const std::string& v) {
                c.forgery_q_splice = static_cast<int>(parse_int("forgery.q_splice", v));
            },
            [](const RunConfig& c) { return std::to_string(c.forgery_q_splice); });
        add("forgery.seed",
            [](RunConfig& c, const std::string& v) {
                c.forgery_seed = static_cast<std::uint64_t>(parse_int("forgery.seed", v));
            },
            [](const RunConfig& c) { return std::to_string(c.forgery_seed); });
        return t;
    }();
    return defs;
}

} // namespace cfgdetail

/// Applies one key=value assignment. Unknown keys are rejected.
inline void config_set(RunConfig& cfg, const std::string& key, const std::string& value) {
    for (const auto& def : cfgdetail::key_table())
        if (def.key == key) {
            def.set(cfg, value);
            cfg.sync_nested();
            return;
        }
    throw ConfigError("config: unknown key '" + key + "'");
}

/// Parses "key=value"; whitespace around tokens is trimmed.
inline void config_set_line(RunConfig& cfg, const std::string& line) {
    auto eq = line.find('=');
    if (eq == std::string::npos)
        throw ConfigError("config: expected key=value, got '" + line + "'");
    auto trim = [](std::string s) {
        auto b = s.find_first_not_of(" \t");
        auto e = s.find_last_not_of(" \t");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    config_set(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
}

/// Loads a flat key=value file; '#' starts a comment, blank lines ignored.
inline void config_load_file(RunConfig& cfg, const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("config: cannot open " + path);
    std::string line;
    while (std::getline(f, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        auto b = line.find_first_not_of(" \t\r\n");
        if (b == std::string::npos) continue;
        auto e = line.find_last_not_of(" \t\r\n");
        config_set_line(cfg, line.substr(b, e - b + 1));
    }
}

/// Effective configuration as ordered key=value lines (echoed into
/// manifests so every artifact records how it was produced).
inline std::vector<std::string> config_dump(const RunConfig& cfg) {
    std::vector<std::string> out;
    for (const auto& def : cfgdetail::key_table())
        out.push_back(def.key + "=" + def.get(cfg));
    return out;
}

} // namespace ocuver

#endif // OCUVER_RUNCONFIG_HPP
