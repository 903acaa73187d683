// Copyright 2026 the ocuverify authors.
// Licensed under the Apache License, Version 2.0. See LICENSE for details.

// ocuverify — batch front door for the one-shot face-verification and
// image-forensics toolkit. One binary, one subcommand per pipeline stage.
//
// Exit codes: 0 success / pair accepted, 1 operational error,
// 2 negative verdict (forged image, rejected pair, duplicates found).

#include <algorithm>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "ocuver/ocuver.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace ocuver;

namespace {

struct CommonOpts {
    std::string config_path;
    std::vector<std::string> sets;
};

void attach_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_path, "flat key=value config file");
    cmd->add_option("--set", opts.sets, "override a config key (key=value), repeatable");
}

RunConfig load_config(const CommonOpts& opts) {
    RunConfig cfg;
    if (!opts.config_path.empty()) config_load_file(cfg, opts.config_path);
    for (const auto& s : opts.sets) config_set_line(cfg, s);
    return cfg;
}

// ---------------------------------------------------------------------------
// Manifest I/O
// ---------------------------------------------------------------------------

struct ManifestRow {
    std::string identity;
    Phase phase;
    std::string path;   // relative to the manifest directory
    std::string source; // informational
};

void write_manifest(const std::string& path, const RunConfig& cfg,
                    const std::vector<ManifestRow>& rows, const std::string& kind) {
    std::ofstream f(path);
    if (!f) throw StorageError("cannot open " + path + " for writing");
    f << "# ocuverify " << kind << " manifest\n";
    for (const auto& line : config_dump(cfg)) f << "# config: " << line << "\n";
    f << "identity,phase,path,source\n";
    for (const auto& r : rows)
        f << r.identity << "," << to_string(r.phase) << "," << r.path << "," << r.source
          << "\n";
    if (!f) throw StorageError("write failed for " + path);
}

std::vector<ManifestRow> read_manifest(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open manifest " + path);
    std::vector<ManifestRow> rows;
    std::string line;
    bool header_seen = false;
    while (std::getline(f, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {
            if (line != "identity,phase,path,source")
                throw ConfigError("manifest " + path + ": unexpected header '" + line + "'");
            header_seen = true;
            continue;
        }
        std::vector<std::string> cols;
        std::stringstream ss(line);
        std::string col;
        while (std::getline(ss, col, ',')) cols.push_back(col);
        if (cols.size() != 4)
            throw ConfigError("manifest " + path + ": malformed row '" + line + "'");
        rows.push_back({cols[0], phase_from_string(cols[1]), cols[2], cols[3]});
    }
    if (!header_seen) throw ConfigError("manifest " + path + ": missing header row");
    return rows;
}

std::vector<DatasetItem> load_items(const std::string& manifest_path,
                                    const std::vector<ManifestRow>& rows) {
    fs::path base = fs::path(manifest_path).parent_path();
    std::vector<DatasetItem> items;
    for (const auto& r : rows) {
        DatasetItem item;
        item.identity_id = r.identity;
        item.phase = r.phase;
        fs::path p = fs::path(r.path).is_absolute() ? fs::path(r.path) : base / r.path;
        if (p.extension() == ".pnm" || p.extension() == ".pgm" || p.extension() == ".ppm")
            item.image = read_pnm(p.string());
        else
            item.image = read_jpeg_file(p.string());
        items.push_back(std::move(item));
    }
    return items;
}

/// Parses "<identity>_<PRE|POST>" from a file stem; the phase marker is the
/// token after the last underscore.
bool parse_stem(const std::string& stem, std::string& identity, Phase& phase) {
    auto us = stem.rfind('_');
    if (us == std::string::npos || us == 0) return false;
    std::string tail = stem.substr(us + 1);
    if (tail == "PRE")
        phase = Phase::Pre;
    else if (tail == "POST")
        phase = Phase::Post;
    else
        return false;
    identity = stem.substr(0, us);
    return true;
}

std::vector<fs::path> sorted_images(const std::string& dir) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (!e.is_regular_file()) continue;
        auto ext = e.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
        if (ext == ".jpg" || ext == ".jpeg") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    return files;
}

json ela_report_json(const ElaReport& rep, const ElaMap& map) {
    json j;
    j["verdict"] = rep.verdict == ElaReport::Verdict::Forged ? "forged" : "genuine";
    j["requality"] = map.requality;
    j["blocks_w"] = map.blocks_w;
    j["blocks_h"] = map.blocks_h;
    j["median_block_mean"] = rep.median_block_mean;
    j["max_block_mean"] = rep.max_block_mean;
    auto blocks = json::array();
    for (const auto& [bx, by] : rep.suspect_blocks) blocks.push_back({bx, by});
    j["suspect_blocks"] = std::move(blocks);
    return j;
}

ModelSet load_models(const std::string& dir) {
    ModelSet m;
    m.pre_pre = load_network((fs::path(dir) / "pre-pre.ocv").string());
    m.post_post = load_network((fs::path(dir) / "post-post.ocv").string());
    m.pre_post = load_network((fs::path(dir) / "pre-post.ocv").string());
    if (m.pre_pre.tag != ModelTag::PrePre || m.post_post.tag != ModelTag::PostPost ||
        m.pre_post.tag != ModelTag::PrePost)
        throw CorruptionError("model files in " + dir + " carry mismatched tags");
    return m;
}

EmbeddingDb load_or_create_db(const std::string& path) {
    if (fs::exists(path)) return EmbeddingDb::load(path);
    return EmbeddingDb{};
}

/// Evaluation pairs for a model variant from manifest items: all genuine
/// pairs of the (optionally augmented) view plus an equal number of sampled
/// impostor pairs.
void build_eval_pairs(const std::vector<DatasetItem>& originals, const RunConfig& cfg,
                      ModelTag variant, std::vector<EvalPair>& genuine,
                      std::vector<EvalPair>& impostor) {
    auto items = expand_with_augmentation(originals, cfg.augment, cfg.eval_copies,
                                          cfg.eval_seed);
    auto view = build_variant_dataset(items, variant);
    auto gidx = genuine_pairs(view);
    for (const auto& [a, b] : gidx) genuine.push_back({items[a].image, items[b].image});

    Rng rng(mix_seed(cfg.eval_seed, 0x696d70ULL));
    std::size_t guard = 0;
    while (impostor.size() < genuine.size() && guard < genuine.size() * 1000) {
        ++guard;
        std::size_t a = view.side_a[rng.uniform_int(view.side_a.size())];
        std::size_t b = view.side_b[rng.uniform_int(view.side_b.size())];
        if (items[a].identity_id == items[b].identity_id) continue;
        impostor.push_back({items[a].image, items[b].image});
    }
    if (impostor.size() < genuine.size())
        throw ConfigError("could not sample impostor pairs; need at least two identities");
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

int cmd_synth(const RunConfig& cfg, const std::string& out_dir) {
    fs::create_directories(out_dir);
    JpegQuality q(cfg.synth_quality);
    for (int i = 0; i < cfg.synth_identities; ++i) {
        auto spec = SynthIdentitySpec::from_seed(mix_seed(cfg.synth_seed, i));
        auto [pre, post] = gen_identity_pair(spec, cfg.synth_canvas);
        char name[32];
        std::snprintf(name, sizeof name, "p%02d", i);
        write_jpeg_file((fs::path(out_dir) / (std::string(name) + "_PRE.jpg")).string(), pre, q);
        write_jpeg_file((fs::path(out_dir) / (std::string(name) + "_POST.jpg")).string(), post,
                        q);
    }
    std::cout << "wrote " << cfg.synth_identities << " identity pairs to " << out_dir << "\n";
    return 0;
}

int cmd_synth_forgery(const RunConfig& cfg, const std::string& out_dir) {
    fs::create_directories(out_dir);
    std::ofstream man((fs::path(out_dir) / "forgeries.csv").string());
    man << "genuine,forged,splice_x0,splice_y0,splice_x1,splice_y1\n";
    for (int i = 0; i < cfg.forgery_count; ++i) {
        auto fix = gen_forgery_fixture(mix_seed(cfg.forgery_seed, i),
                                       mix_seed(cfg.forgery_seed, 1000 + i),
                                       JpegQuality(cfg.forgery_q_carrier),
                                       JpegQuality(cfg.forgery_q_splice));
        char g[32], f[32];
        std::snprintf(g, sizeof g, "genuine_%02d.jpg", i);
        std::snprintf(f, sizeof f, "forged_%02d.jpg", i);
        write_file_bytes((fs::path(out_dir) / g).string(), fix.genuine_jpeg);
        write_file_bytes((fs::path(out_dir) / f).string(), fix.forged_jpeg);
        man << g << "," << f << "," << fix.splice_rect.x0 << "," << fix.splice_rect.y0 << ","
            << fix.splice_rect.x1 << "," << fix.splice_rect.y1 << "\n";
    }
    std::cout << "wrote " << cfg.forgery_count << " fixture pairs to " << out_dir << "\n";
    return 0;
}

int cmd_preprocess(const RunConfig& cfg, const std::string& in_dir, const std::string& out_dir) {
    fs::create_directories(out_dir);
    std::vector<ManifestRow> rows;
    int failures = 0;
    for (const auto& file : sorted_images(in_dir)) {
        std::string identity;
        Phase phase;
        if (!parse_stem(file.stem().string(), identity, phase)) {
            std::cerr << "error: " << file.string()
                      << ": filename must be <identity>_<PRE|POST>.jpg\n";
            ++failures;
            continue;
        }
        try {
            Image img = read_jpeg_file(file.string());
            Image processed = cfg.background_removal
                                  ? remove_background(img, cfg.canny, cfg.dilate_k)
                                  : img;
            std::string out_name = file.filename().string();
            write_jpeg_file((fs::path(out_dir) / out_name).string(), processed,
                            JpegQuality(95));
            rows.push_back({identity, phase, out_name, file.string()});
        } catch (const std::exception& e) {
            std::cerr << "error: " << file.string() << ": " << e.what() << "\n";
            ++failures;
        }
    }
    write_manifest((fs::path(out_dir) / "manifest.csv").string(), cfg, rows, "preprocess");
    std::cout << "processed " << rows.size() << " images, " << failures << " failures\n";
    return failures == 0 ? 0 : 1;
}

int cmd_augment(const RunConfig& cfg, const std::string& manifest_path,
                const std::string& out_dir) {
    fs::create_directories(out_dir);
    auto rows = read_manifest(manifest_path);
    auto items = load_items(manifest_path, rows);
    auto expanded = expand_with_augmentation(items, cfg.augment, cfg.train.augment_copies,
                                             cfg.train.seed);
    std::vector<ManifestRow> out_rows;
    for (std::size_t i = items.size(); i < expanded.size(); ++i) {
        const auto& item = expanded[i];
        std::size_t src = *item.augmented_from;
        std::size_t copy = (i - items.size()) % static_cast<std::size_t>(cfg.train.augment_copies);
        char name[160];
        std::snprintf(name, sizeof name, "%s_%s_aug%02zu.jpg", item.identity_id.c_str(),
                      to_string(item.phase).c_str(), copy);
        write_jpeg_file((fs::path(out_dir) / name).string(), item.image, JpegQuality(95));
        out_rows.push_back({item.identity_id, item.phase, name, rows[src].path});
    }
    write_manifest((fs::path(out_dir) / "manifest.csv").string(), cfg, out_rows, "augment");
    std::cout << "wrote " << out_rows.size() << " augmented images to " << out_dir << "\n";
    return 0;
}

int cmd_train(const RunConfig& cfg, const std::string& manifest_path,
              const std::string& model_out, const std::string& curve_out) {
    auto rows = read_manifest(manifest_path);
    auto items = load_items(manifest_path, rows);
    auto result = train(items, cfg.train);
    save_network(result.net, model_out);
    if (!curve_out.empty()) write_loss_csv(curve_out, result.epoch_loss);
    char buf[256];
    std::snprintf(buf, sizeof buf, "model=%s variant=%s epochs=%d first_loss=%.6f final_loss=%.6f\n",
                  model_out.c_str(), to_string(cfg.train.variant).c_str(), cfg.train.epochs,
                  result.epoch_loss.front(), result.epoch_loss.back());
    std::cout << buf;
    return 0;
}

int cmd_evaluate(const RunConfig& cfg, const std::string& manifest_path,
                 const std::string& model_path, const std::string& out_csv) {
    auto rows = read_manifest(manifest_path);
    auto items = load_items(manifest_path, rows);
    auto net = load_network(model_path);
    std::vector<EvalPair> genuine, impostor;
    build_eval_pairs(items, cfg, net.tag, genuine, impostor);
    auto metrics = evaluate(net, genuine, impostor, cfg.theta);
    char buf[200];
    std::snprintf(buf, sizeof buf, "accuracy,false_acceptance,false_rejection,theta\n%.6f,%.6f,%.6f,%.6f\n",
                  metrics.accuracy, metrics.false_acceptance, metrics.false_rejection,
                  metrics.threshold_used);
    std::cout << buf;
    if (!out_csv.empty()) write_metrics_csv(out_csv, metrics);
    return 0;
}

int cmd_sweep(const RunConfig& cfg, const std::string& manifest_path,
              const std::string& model_path, const std::string& out_csv) {
    auto rows = read_manifest(manifest_path);
    auto items = load_items(manifest_path, rows);
    auto net = load_network(model_path);
    std::vector<EvalPair> genuine, impostor;
    build_eval_pairs(items, cfg, net.tag, genuine, impostor);
    auto sweep = sweep_threshold(net, genuine, impostor,
                                 theta_grid(cfg.sweep_min, cfg.sweep_max, cfg.sweep_points));
    if (!out_csv.empty()) write_sweep_csv(out_csv, sweep);
    char buf[64];
    std::snprintf(buf, sizeof buf, "theta_eer=%.6f\n", sweep.theta_eer);
    std::cout << buf;
    return 0;
}

int cmd_ela(const RunConfig& cfg, const std::string& image_path, std::string ela_out,
            const std::string& report_out) {
    auto bytes = read_file_bytes(image_path);
    auto [rep, result] = analyze_jpeg(bytes, cfg.ela);
    if (ela_out.empty()) {
        fs::path p(image_path);
        ela_out = (p.parent_path() / (p.stem().string() + ".ela.jpg")).string();
    }
    write_jpeg_file(ela_out, result.ela_image, JpegQuality(95));

    json j;
    j["file"] = image_path;
    auto rj = ela_report_json(rep, result.map);
    for (auto& [k, v] : rj.items()) j[k] = v;
    j["ela_image"] = ela_out;
    std::string text = j.dump(2) + "\n";
    std::cout << text;
    if (!report_out.empty()) {
        std::ofstream f(report_out);
        f << text;
    }
    return rep.verdict == ElaReport::Verdict::Forged ? 2 : 0;
}

int cmd_verify(const RunConfig& cfg, const std::string& pre_path, const std::string& post_path,
               const std::string& model_dir, const std::string& db_path, std::uint64_t now,
               const std::string& hint_pre, const std::string& hint_post) {
    auto models = load_models(model_dir);
    PipelineConfig pipe;
    pipe.theta = cfg.theta;
    pipe.ela = cfg.ela;
    pipe.canny = cfg.canny;
    pipe.dilate_k = cfg.dilate_k;
    pipe.background_removal = cfg.background_removal;
    Verifier verifier(std::move(models), pipe);

    auto pre_bytes = read_file_bytes(pre_path);
    auto post_bytes = read_file_bytes(post_path);
    Verdict verdict = verifier.verify_pair(pre_bytes, post_bytes);

    json j;
    j["outcome"] = to_string(verdict.outcome);
    j["theta"] = verdict.theta;
    if (verdict.distance) j["distance"] = *verdict.distance;

    if (verdict.outcome == VerifyOutcome::RejectedForgery) {
        json ela;
        for (const auto& [which, rep] : verdict.ela_reports) {
            json rj;
            rj["verdict"] = rep.verdict == ElaReport::Verdict::Forged ? "forged" : "genuine";
            rj["median_block_mean"] = rep.median_block_mean;
            rj["max_block_mean"] = rep.max_block_mean;
            auto blocks = json::array();
            for (const auto& [bx, by] : rep.suspect_blocks) blocks.push_back({bx, by});
            rj["suspect_blocks"] = std::move(blocks);
            ela[which] = std::move(rj);
            fs::path p(which == "pre" ? pre_path : post_path);
            std::string ela_path = (p.parent_path() / (p.stem().string() + ".ela.jpg")).string();
            write_jpeg_file(ela_path, verdict.ela_images.at(which), JpegQuality(95));
            ela[which]["ela_image"] = ela_path;
        }
        j["ela"] = std::move(ela);
    } else {
        // both images passed the forgery gate; run duplicate lookups and
        // store the new embeddings for the audit trail
        EmbeddingDb db = load_or_create_db(db_path);
        auto dup_pre = verifier.check_duplicates(pre_bytes, Phase::Pre, db,
                                                 hint_pre.empty() ? pre_path : hint_pre, now);
        auto dup_post = verifier.check_duplicates(post_bytes, Phase::Post, db,
                                                  hint_post.empty() ? post_path : hint_post, now);
        db.save(db_path);
        json dups;
        dups["pre"] = dup_pre.duplicates;
        dups["post"] = dup_post.duplicates;
        j["duplicates"] = std::move(dups);
        j["db_records_added"] = {dup_pre.new_record_id, dup_post.new_record_id};
    }
    std::cout << j.dump(2) << "\n";
    return verdict.outcome == VerifyOutcome::Accepted ? 0 : 2;
}

int cmd_dedupe(const RunConfig& cfg, const std::string& in_dir, const std::string& model_dir,
               const std::string& db_path, std::uint64_t now) {
    auto models = load_models(model_dir);
    PipelineConfig pipe;
    pipe.theta = cfg.theta;
    pipe.ela = cfg.ela;
    pipe.canny = cfg.canny;
    pipe.dilate_k = cfg.dilate_k;
    pipe.background_removal = cfg.background_removal;
    Verifier verifier(std::move(models), pipe);
    EmbeddingDb db = load_or_create_db(db_path);

    bool any_dup = false;
    int failures = 0;
    for (const auto& file : sorted_images(in_dir)) {
        std::string identity;
        Phase phase;
        if (!parse_stem(file.stem().string(), identity, phase)) {
            std::cerr << "error: " << file.string()
                      << ": filename must be <identity>_<PRE|POST>.jpg\n";
            ++failures;
            continue;
        }
        try {
            auto bytes = read_file_bytes(file.string());
            json j;
            j["file"] = file.filename().string();
            j["identity"] = identity;
            j["phase"] = to_string(phase);
            auto [rep, result] = analyze_jpeg(bytes, cfg.ela);
            if (rep.verdict == ElaReport::Verdict::Forged) {
                j["forged"] = true; // forged images never reach the database
                std::cout << j.dump() << "\n";
                any_dup = true;
                continue;
            }
            j["forged"] = false;
            auto dup = verifier.check_duplicates(bytes, phase, db, identity, now);
            j["duplicates"] = dup.duplicates;
            j["record_id"] = dup.new_record_id;
            if (!dup.duplicates.empty()) any_dup = true;
            std::cout << j.dump() << "\n";
        } catch (const std::exception& e) {
            std::cerr << "error: " << file.string() << ": " << e.what() << "\n";
            ++failures;
        }
    }
    db.save(db_path);
    if (failures > 0) return 1;
    return any_dup ? 2 : 0;
}

int cmd_db_dump(const std::string& db_path, bool vectors) {
    EmbeddingDb db = EmbeddingDb::load(db_path);
    for (const auto& r : db.records()) {
        json j;
        j["id"] = r.record_id;
        j["tag"] = to_string(r.model_tag);
        j["label"] = r.identity_hint;
        j["created_at"] = r.created_at;
        j["dim"] = r.vector.size();
        if (vectors) j["vector"] = r.vector;
        std::cout << j.dump() << "\n";
    }
    return 0;
}

int cmd_config_dump(const RunConfig& cfg) {
    for (const auto& line : config_dump(cfg)) std::cout << line << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"ocuverify — one-shot face verification and JPEG forensics"};
    app.require_subcommand(1);

    CommonOpts common;
    std::string in_dir, out_dir, manifest, model_out, curve_out, model_path, out_csv;
    std::string image_path, ela_out, report_out;
    std::string pre_path, post_path, model_dir, db_path, hint_pre, hint_post;
    std::uint64_t now = 0;
    bool now_set = false;
    double theta_flag = 0;
    bool vectors = false;

    auto* synth = app.add_subcommand("synth", "generate a synthetic identity corpus");
    attach_common(synth, common);
    synth->add_option("--out", out_dir, "output directory")->required();

    auto* synthf = app.add_subcommand("synth-forgery", "generate genuine/forged JPEG fixtures");
    attach_common(synthf, common);
    synthf->add_option("--out", out_dir, "output directory")->required();

    auto* prep = app.add_subcommand("preprocess", "background-remove a directory of images");
    attach_common(prep, common);
    prep->add_option("--in", in_dir, "input directory of <identity>_<PRE|POST>.jpg")->required();
    prep->add_option("--out", out_dir, "output directory")->required();

    auto* aug = app.add_subcommand("augment", "write augmented copies of manifest images");
    attach_common(aug, common);
    aug->add_option("--manifest", manifest, "preprocess manifest")->required();
    aug->add_option("--out", out_dir, "output directory")->required();

    auto* tr = app.add_subcommand("train", "train a variant model from a manifest");
    attach_common(tr, common);
    tr->add_option("--manifest", manifest, "preprocess manifest")->required();
    tr->add_option("--model-out", model_out, "output model file")->required();
    tr->add_option("--curve-out", curve_out, "per-epoch loss CSV");

    auto* ev = app.add_subcommand("evaluate", "verification metrics at a fixed threshold");
    attach_common(ev, common);
    ev->add_option("--manifest", manifest, "manifest of evaluation images")->required();
    ev->add_option("--model", model_path, "model file")->required();
    ev->add_option("--out", out_csv, "metrics CSV");
    auto* ev_theta = ev->add_option("--theta", theta_flag, "squared-distance threshold");

    auto* sw = app.add_subcommand("sweep", "threshold sweep and equal-error-rate search");
    attach_common(sw, common);
    sw->add_option("--manifest", manifest, "manifest of evaluation images")->required();
    sw->add_option("--model", model_path, "model file")->required();
    sw->add_option("--out", out_csv, "sweep table CSV");

    auto* ela = app.add_subcommand("ela", "error level analysis of one JPEG");
    attach_common(ela, common);
    ela->add_option("--image", image_path, "JPEG to analyze")->required();
    ela->add_option("--ela-out", ela_out, "difference image output path");
    ela->add_option("--report", report_out, "also write the JSON report here");

    auto* ver = app.add_subcommand("verify", "full pair verification (forgery gate, distance, duplicates)");
    attach_common(ver, common);
    ver->add_option("--pre", pre_path, "pre-op JPEG")->required();
    ver->add_option("--post", post_path, "post-op JPEG")->required();
    ver->add_option("--models", model_dir, "directory with pre-pre.ocv, post-post.ocv, pre-post.ocv")->required();
    ver->add_option("--db", db_path, "embedding database file")->required();
    auto* ver_theta = ver->add_option("--theta", theta_flag, "squared-distance threshold");
    ver->add_option("--now", now, "record timestamp (seconds since epoch)")->each([&](const std::string&) { now_set = true; });
    ver->add_option("--hint-pre", hint_pre, "identity hint stored with the pre embedding");
    ver->add_option("--hint-post", hint_post, "identity hint stored with the post embedding");

    auto* dd = app.add_subcommand("dedupe", "duplicate scan over a directory of images");
    attach_common(dd, common);
    dd->add_option("--in", in_dir, "input directory")->required();
    dd->add_option("--models", model_dir, "model directory")->required();
    dd->add_option("--db", db_path, "embedding database file")->required();
    auto* dd_theta = dd->add_option("--theta", theta_flag, "squared-distance threshold");
    dd->add_option("--now", now, "record timestamp (seconds since epoch)")->each([&](const std::string&) { now_set = true; });

    auto* dump = app.add_subcommand("db-dump", "print database records as JSON lines");
    dump->add_option("--db", db_path, "embedding database file")->required();
    dump->add_flag("--vectors", vectors, "include embedding vectors");

    auto* cdump = app.add_subcommand("config-dump", "print the effective configuration");
    attach_common(cdump, common);

    CLI11_PARSE(app, argc, argv);

    try {
        RunConfig cfg = load_config(common);
        if (ev_theta->count() || ver_theta->count() || dd_theta->count()) cfg.theta = theta_flag;
        if (!now_set) now = static_cast<std::uint64_t>(std::time(nullptr));

        if (synth->parsed()) return cmd_synth(cfg, out_dir);
        if (synthf->parsed()) return cmd_synth_forgery(cfg, out_dir);
        if (prep->parsed()) return cmd_preprocess(cfg, in_dir, out_dir);
        if (aug->parsed()) return cmd_augment(cfg, manifest, out_dir);
        if (tr->parsed()) return cmd_train(cfg, manifest, model_out, curve_out);
        if (ev->parsed()) return cmd_evaluate(cfg, manifest, model_path, out_csv);
        if (sw->parsed()) return cmd_sweep(cfg, manifest, model_path, out_csv);
        if (ela->parsed()) return cmd_ela(cfg, image_path, ela_out, report_out);
        if (ver->parsed())
            return cmd_verify(cfg, pre_path, post_path, model_dir, db_path, now, hint_pre,
                              hint_post);
        if (dd->parsed()) return cmd_dedupe(cfg, in_dir, model_dir, db_path, now);
        if (dump->parsed()) return cmd_db_dump(db_path, vectors);
        if (cdump->parsed()) return cmd_config_dump(cfg);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
