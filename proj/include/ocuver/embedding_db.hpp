// Copyright 2026 the ocuverify authors.
// Licensed under the Apache License, Version 2.0. See LICENSE for details.

#ifndef OCUVER_EMBEDDING_DB_HPP
#define OCUVER_EMBEDDING_DB_HPP

// Append-only embedding store. One file holds records for all three model
// tags; per-tag vector dimensions are fixed by the first write and recorded
// in the header. Record ids are sequential and never reused.
//
// File format (all integers little-endian):
//   "OCDB" | u32 version | u32 dim[3]
//   records until EOF:
//     u64 id | u8 tag | u32 label_len | label | u64 created_at | f32[dim[tag]]

#include <array>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "ocuver/errors.hpp"
#include "ocuver/network.hpp"

namespace ocuver {

struct EmbeddingRecord {
    std::uint64_t record_id = 0;
    std::string identity_hint;
    ModelTag model_tag = ModelTag::PrePost;
    std::vector<float> vector;
    std::uint64_t created_at = 0; // seconds since epoch
};

class EmbeddingDb {
public:
    EmbeddingDb() = default;

    /// Appends a record; the id is assigned here. The first record of a tag
    /// fixes that tag's dimension; later mismatches are rejected.
    std::uint64_t put(ModelTag tag, const std::string& identity_hint,
                      std::vector<float> vec, std::uint64_t created_at) {
        if (vec.empty()) throw ConfigError("db_put: empty embedding vector");
        auto& dim = dims_[static_cast<std::size_t>(tag)];
        if (dim == 0) {
            dim = static_cast<std::uint32_t>(vec.size());
        } else if (dim != vec.size()) {
            throw ConfigError("db_put: dimension mismatch for tag " + to_string(tag) +
                              " (db has " + std::to_string(dim) + ", got " +
                              std::to_string(vec.size()) + "); write rejected");
        }
        EmbeddingRecord rec;
        rec.record_id = next_id_++;
        rec.identity_hint = identity_hint;
        rec.model_tag = tag;
        rec.vector = std::move(vec);
        rec.created_at = created_at;
        records_.push_back(std::move(rec));
        return records_.back().record_id;
    }

    /// Records of one tag in insertion order.
    std::vector<const EmbeddingRecord*> scan(ModelTag tag) const {
        std::vector<const EmbeddingRecord*> out;
        for (const auto& r : records_)
            if (r.model_tag == tag) out.push_back(&r);
        return out;
    }

    const std::vector<EmbeddingRecord>& records() const { return records_; }
    std::uint32_t dim(ModelTag tag) const { return dims_[static_cast<std::size_t>(tag)]; }
    std::size_t size() const { return records_.size(); }

    void save(const std::string& path) const {
        using namespace iodetail;
        std::ofstream f(path, std::ios::binary);
        if (!f) throw StorageError("cannot open " + path + " for writing");
        f.write("OCDB", 4);
        put_u32(f, 1);
        for (auto d : dims_) put_u32(f, d);
        for (const auto& r : records_) {
            put_u64(f, r.record_id);
            f.put(static_cast<char>(r.model_tag));
            put_u32(f, static_cast<std::uint32_t>(r.identity_hint.size()));
            f.write(r.identity_hint.data(),
                    static_cast<std::streamsize>(r.identity_hint.size()));
            put_u64(f, r.created_at);
            static_assert(sizeof(float) == 4);
            f.write(reinterpret_cast<const char*>(r.vector.data()),
                    static_cast<std::streamsize>(r.vector.size() * 4));
        }
        if (!f) throw StorageError("write failed for " + path);
    }

    static EmbeddingDb load(const std::string& path) {
        using namespace iodetail;
        std::ifstream f(path, std::ios::binary);
        if (!f) throw StorageError("cannot open " + path);
        char magic[4];
        f.read(magic, 4);
        if (!f || std::memcmp(magic, "OCDB", 4) != 0)
            throw CorruptionError("bad database magic in " + path);
        if (get_u32(f) != 1) throw CorruptionError("unsupported database version in " + path);
        EmbeddingDb db;
        for (auto& d : db.dims_) d = get_u32(f);
        while (true) {
            f.peek();
            if (f.eof()) break;
            EmbeddingRecord r;
            r.record_id = get_u64(f);
            int tag = f.get();
            if (tag < 0 || tag > 2)
                throw CorruptionError("bad record tag in " + path);
            r.model_tag = static_cast<ModelTag>(tag);
            std::uint32_t dim = db.dims_[static_cast<std::size_t>(tag)];
            if (dim == 0)
                throw CorruptionError("record with unregistered tag dimension in " + path);
            std::uint32_t label_len = get_u32(f);
            if (label_len > 1u << 20)
                throw CorruptionError("implausible label length in " + path);
            r.identity_hint.assign(label_len, '\0');
            f.read(r.identity_hint.data(), label_len);
            r.created_at = get_u64(f);
            r.vector.resize(dim);
            f.read(reinterpret_cast<char*>(r.vector.data()),
                   static_cast<std::streamsize>(dim * 4u));
            if (!f) throw CorruptionError("database file truncated: " + path);
            if (r.record_id >= db.next_id_) db.next_id_ = r.record_id + 1;
            db.records_.push_back(std::move(r));
        }
        return db;
    }

private:
    std::vector<EmbeddingRecord> records_;
    std::array<std::uint32_t, 3> dims_{0, 0, 0};
    std::uint64_t next_id_ = 0;
};

} // namespace ocuver

#endif // OCUVER_EMBEDDING_DB_HPP
