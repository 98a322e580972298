// Copyright (c) 2026 the simvae authors
// SPDX-License-Identifier: Apache-2.0
//
// Checkpoint container. On-disk layout, all integers little-endian:
//
//   bytes 0..3   magic "SVAE"
//   u32          format version
//   u64          metadata byte length, then that many bytes of
//                "key=value\n" lines (insertion-ordered)
//   u64          array count
//   per array    u32 name length + name bytes, u8 dtype, u32 rank,
//                rank x i64 dims, u64 offset into the data block
//   u64          data block byte length, then the raw arrays
//
// Save -> load -> save is byte-identical because both metadata and arrays
// keep insertion order.

#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "simvae/errors.hpp"
#include "simvae/nn.hpp"
#include "simvae/tensor.hpp"

namespace simvae {

static_assert(std::endian::native == std::endian::little,
              "checkpoint i/o assumes a little-endian host");

enum class Dtype : std::uint8_t { F32 = 0, F64 = 1, I64 = 2, U8 = 3 };

inline std::size_t dtype_size(Dtype d) {
    switch (d) {
        case Dtype::F32: return 4;
        case Dtype::F64: return 8;
        case Dtype::I64: return 8;
        case Dtype::U8: return 1;
    }
    throw CheckpointError(CheckpointError::Kind::Io, "unknown dtype");
}

namespace detail {

template <typename T>
constexpr Dtype dtype_of() {
    if constexpr (std::is_same_v<T, float>) return Dtype::F32;
    else if constexpr (std::is_same_v<T, double>) return Dtype::F64;
    else if constexpr (std::is_same_v<T, std::int64_t>) return Dtype::I64;
    else return Dtype::U8;
}

} // namespace detail

struct ArrayRecord {
    std::string name;
    Dtype dtype = Dtype::F32;
    Shape shape;
    std::vector<std::uint8_t> bytes;

    std::int64_t count() const { return numel(shape); }
};

class Checkpoint {
public:
    static constexpr std::uint32_t kFormatVersion = 1;
    static constexpr char kMagic[5] = "SVAE";

    std::uint32_t version = kFormatVersion;

    // -- metadata ----------------------------------------------------------
    void set_meta(const std::string& key, const std::string& value) {
        for (auto& [k, v] : meta_)
            if (k == key) {
                v = value;
                return;
            }
        meta_.emplace_back(key, value);
    }
    void set_meta(const std::string& key, std::int64_t value) {
        set_meta(key, std::to_string(value));
    }
    void set_meta(const std::string& key, std::uint64_t value) {
        set_meta(key, std::to_string(value));
    }

    std::optional<std::string> meta(const std::string& key) const {
        for (const auto& [k, v] : meta_)
            if (k == key) return v;
        return std::nullopt;
    }
    std::string require_meta(const std::string& key) const {
        auto v = meta(key);
        if (!v)
            throw CheckpointError(CheckpointError::Kind::NameMismatch,
                                  "checkpoint metadata key missing: " + key);
        return *v;
    }
    std::int64_t meta_i64(const std::string& key) const {
        return std::stoll(require_meta(key));
    }
    std::uint64_t meta_u64(const std::string& key) const {
        return std::stoull(require_meta(key));
    }
    const std::vector<std::pair<std::string, std::string>>& all_meta() const { return meta_; }

    // -- arrays ------------------------------------------------------------
    template <typename T>
    void put(const std::string& name, const Shape& shape, const std::vector<T>& values) {
        if (numel(shape) != static_cast<std::int64_t>(values.size()))
            throw CheckpointError(CheckpointError::Kind::ShapeMismatch,
                                  "array " + name + " data does not match shape " +
                                      shape_str(shape));
        ArrayRecord rec;
        rec.name = name;
        rec.dtype = detail::dtype_of<T>();
        rec.shape = shape;
        rec.bytes.resize(values.size() * sizeof(T));
        std::memcpy(rec.bytes.data(), values.data(), rec.bytes.size());
        for (auto& existing : arrays_)
            if (existing.name == name) {
                existing = std::move(rec);
                return;
            }
        arrays_.push_back(std::move(rec));
    }

    template <typename T>
    void put(const std::string& name, const Tensor<T>& t) {
        put(name, t.shape(), t.data());
    }

    bool has(const std::string& name) const {
        for (const auto& a : arrays_)
            if (a.name == name) return true;
        return false;
    }

    const ArrayRecord& record(const std::string& name) const {
        for (const auto& a : arrays_)
            if (a.name == name) return a;
        throw CheckpointError(CheckpointError::Kind::NameMismatch,
                              "checkpoint array missing: " + name);
    }

    template <typename T>
    std::vector<T> get(const std::string& name) const {
        const auto& rec = record(name);
        if (rec.dtype != detail::dtype_of<T>())
            throw CheckpointError(CheckpointError::Kind::ShapeMismatch,
                                  "array " + name + " has a different dtype than requested");
        std::vector<T> out(static_cast<std::size_t>(rec.count()));
        std::memcpy(out.data(), rec.bytes.data(), rec.bytes.size());
        return out;
    }

    template <typename T>
    Tensor<T> get_tensor(const std::string& name, const Shape& expected) const {
        const auto& rec = record(name);
        if (rec.shape != expected)
            throw CheckpointError(CheckpointError::Kind::ShapeMismatch,
                                  "array " + name + " has shape " + shape_str(rec.shape) +
                                      ", expected " + shape_str(expected));
        return Tensor<T>(rec.shape, get<T>(name));
    }

    const std::vector<ArrayRecord>& arrays() const { return arrays_; }

    // -- i/o -----------------------------------------------------------------
    void save(const std::string& path) const {
        std::ofstream f(path, std::ios::binary | std::ios::trunc);
        if (!f)
            throw CheckpointError(CheckpointError::Kind::Io, "cannot open for write: " + path);

        f.write(kMagic, 4);
        write_u32(f, version);

        std::string meta_text;
        for (const auto& [k, v] : meta_) meta_text += k + "=" + v + "\n";
        write_u64(f, meta_text.size());
        f.write(meta_text.data(), static_cast<std::streamsize>(meta_text.size()));

        write_u64(f, arrays_.size());
        std::uint64_t offset = 0;
        for (const auto& a : arrays_) {
            write_u32(f, static_cast<std::uint32_t>(a.name.size()));
            f.write(a.name.data(), static_cast<std::streamsize>(a.name.size()));
            const std::uint8_t d = static_cast<std::uint8_t>(a.dtype);
            f.write(reinterpret_cast<const char*>(&d), 1);
            write_u32(f, static_cast<std::uint32_t>(a.shape.size()));
            for (auto dim : a.shape) write_i64(f, dim);
            write_u64(f, offset);
            offset += a.bytes.size();
        }
        write_u64(f, offset);
        for (const auto& a : arrays_)
            f.write(reinterpret_cast<const char*>(a.bytes.data()),
                    static_cast<std::streamsize>(a.bytes.size()));
        if (!f) throw CheckpointError(CheckpointError::Kind::Io, "write failed: " + path);
    }

    static Checkpoint load(const std::string& path) {
        std::ifstream f(path, std::ios::binary);
        if (!f)
            throw CheckpointError(CheckpointError::Kind::Io, "cannot open for read: " + path);

        char magic[4];
        read_bytes(f, magic, 4, "magic");
        if (std::memcmp(magic, kMagic, 4) != 0)
            throw CheckpointError(CheckpointError::Kind::BadMagic,
                                  "not a checkpoint file: bad magic bytes in " + path);
        Checkpoint c;
        c.version = read_u32(f);
        if (c.version != kFormatVersion)
            throw CheckpointError(CheckpointError::Kind::BadVersion,
                                  "unsupported checkpoint version " + std::to_string(c.version) +
                                      " (expected " + std::to_string(kFormatVersion) + ")");

        const std::uint64_t meta_len = read_u64(f);
        std::string meta_text(meta_len, '\0');
        read_bytes(f, meta_text.data(), meta_len, "metadata");
        std::size_t pos = 0;
        while (pos < meta_text.size()) {
            const std::size_t nl = meta_text.find('\n', pos);
            const std::string line =
                meta_text.substr(pos, nl == std::string::npos ? std::string::npos : nl - pos);
            pos = nl == std::string::npos ? meta_text.size() : nl + 1;
            if (line.empty()) continue;
            const std::size_t eq = line.find('=');
            if (eq == std::string::npos)
                throw CheckpointError(CheckpointError::Kind::Io,
                                      "malformed metadata line: " + line);
            c.meta_.emplace_back(line.substr(0, eq), line.substr(eq + 1));
        }

        const std::uint64_t n_arrays = read_u64(f);
        std::vector<std::uint64_t> offsets(n_arrays);
        c.arrays_.resize(n_arrays);
        for (std::uint64_t i = 0; i < n_arrays; ++i) {
            auto& a = c.arrays_[i];
            const std::uint32_t name_len = read_u32(f);
            a.name.resize(name_len);
            read_bytes(f, a.name.data(), name_len, "array name");
            std::uint8_t d;
            read_bytes(f, reinterpret_cast<char*>(&d), 1, "array dtype");
            if (d > static_cast<std::uint8_t>(Dtype::U8))
                throw CheckpointError(CheckpointError::Kind::Io,
                                      "array " + a.name + " has unknown dtype tag");
            a.dtype = static_cast<Dtype>(d);
            const std::uint32_t rank = read_u32(f);
            a.shape.resize(rank);
            for (auto& dim : a.shape) dim = read_i64(f);
            offsets[i] = read_u64(f);
        }
        const std::uint64_t data_len = read_u64(f);
        std::vector<std::uint8_t> block(data_len);
        read_bytes(f, reinterpret_cast<char*>(block.data()), data_len, "array data");
        for (std::uint64_t i = 0; i < n_arrays; ++i) {
            auto& a = c.arrays_[i];
            const std::uint64_t nbytes =
                static_cast<std::uint64_t>(a.count()) * dtype_size(a.dtype);
            if (offsets[i] + nbytes > data_len)
                throw CheckpointError(CheckpointError::Kind::Truncated,
                                      "array " + a.name + " extends past end of data block");
            a.bytes.assign(block.begin() + static_cast<std::ptrdiff_t>(offsets[i]),
                           block.begin() + static_cast<std::ptrdiff_t>(offsets[i] + nbytes));
        }
        return c;
    }

private:
    static void write_u32(std::ofstream& f, std::uint32_t v) {
        f.write(reinterpret_cast<const char*>(&v), 4);
    }
    static void write_u64(std::ofstream& f, std::uint64_t v) {
        f.write(reinterpret_cast<const char*>(&v), 8);
    }
    static void write_i64(std::ofstream& f, std::int64_t v) {
        f.write(reinterpret_cast<const char*>(&v), 8);
    }
    static void read_bytes(std::ifstream& f, char* dst, std::uint64_t n, const char* what) {
        f.read(dst, static_cast<std::streamsize>(n));
        if (static_cast<std::uint64_t>(f.gcount()) != n)
            throw CheckpointError(CheckpointError::Kind::Truncated,
                                  std::string("truncated checkpoint while reading ") + what);
    }
    static std::uint32_t read_u32(std::ifstream& f) {
        std::uint32_t v;
        read_bytes(f, reinterpret_cast<char*>(&v), 4, "u32");
        return v;
    }
    static std::uint64_t read_u64(std::ifstream& f) {
        std::uint64_t v;
        read_bytes(f, reinterpret_cast<char*>(&v), 8, "u64");
        return v;
    }
    static std::int64_t read_i64(std::ifstream& f) {
        std::int64_t v;
        read_bytes(f, reinterpret_cast<char*>(&v), 8, "i64");
        return v;
    }

    std::vector<std::pair<std::string, std::string>> meta_;
    std::vector<ArrayRecord> arrays_;
};

// ---------------------------------------------------------------------------
// Model-level (de)serialization
// ---------------------------------------------------------------------------

namespace detail {

inline std::string widths_to_string(const std::vector<std::int64_t>& ws) {
    std::string s;
    for (std::size_t i = 0; i < ws.size(); ++i) s += (i ? "," : "") + std::to_string(ws[i]);
    return s;
}

inline std::vector<std::int64_t> widths_from_string(const std::string& s) {
    std::vector<std::int64_t> out;
    std::size_t pos = 0;
    while (pos < s.size()) {
        const std::size_t comma = s.find(',', pos);
        out.push_back(std::stoll(s.substr(pos, comma - pos)));
        pos = comma == std::string::npos ? s.size() : comma + 1;
    }
    return out;
}

} // namespace detail

// Writes model architecture, parameters and Adam state into `ckpt`.
template <typename T>
void put_model(Checkpoint& ckpt, const Model<T>& m, const AdamState<T>* adam = nullptr) {
    ckpt.set_meta("model.latent_dim", m.latent_dim);
    ckpt.set_meta("model.encoder_widths", detail::widths_to_string(m.encoder.widths));
    ckpt.set_meta("model.decoder_widths", detail::widths_to_string(m.decoder.widths));
    ckpt.set_meta("model.init", "fan_in_normal");
    ckpt.set_meta("model.dtype", std::is_same_v<T, double> ? "f64" : "f32");

    const auto params = m.parameters();
    const auto names = m.parameter_names();
    for (std::size_t i = 0; i < params.size(); ++i) ckpt.put(names[i], params[i]);
    if (adam) {
        ckpt.set_meta("adam.t", adam->t);
        for (std::size_t i = 0; i < params.size(); ++i) {
            ckpt.put("adam.m." + names[i], params[i].shape(), adam->m[i]);
            ckpt.put("adam.v." + names[i], params[i].shape(), adam->v[i]);
        }
    }
}

// Rebuilds the model (and optionally Adam state) saved by put_model.
template <typename T>
Model<T> get_model(const Checkpoint& ckpt, AdamState<T>* adam = nullptr) {
    Model<T> m;
    m.latent_dim = ckpt.meta_i64("model.latent_dim");
    m.encoder =
        MlpSpec::with_relu_hidden(detail::widths_from_string(ckpt.require_meta("model.encoder_widths")));
    m.decoder =
        MlpSpec::with_relu_hidden(detail::widths_from_string(ckpt.require_meta("model.decoder_widths")));

    auto load_layer = [&](const std::string& prefix, const MlpSpec& spec, MlpParams<T>& out) {
        for (std::size_t l = 0; l < spec.num_layers(); ++l) {
            const Shape ws{spec.widths[l], spec.widths[l + 1]};
            const Shape bs{spec.widths[l + 1]};
            auto w = ckpt.get_tensor<T>(prefix + ".w" + std::to_string(l), ws);
            auto b = ckpt.get_tensor<T>(prefix + ".b" + std::to_string(l), bs);
            out.weights.push_back(Tensor<T>::parameter(w.shape(), w.data()));
            out.biases.push_back(Tensor<T>::parameter(b.shape(), b.data()));
        }
    };
    load_layer("enc", m.encoder, m.enc_params);
    load_layer("dec", m.decoder, m.dec_params);

    if (adam) {
        const auto params = m.parameters();
        const auto names = m.parameter_names();
        *adam = AdamState<T>::init(params);
        adam->t = ckpt.meta_i64("adam.t");
        for (std::size_t i = 0; i < params.size(); ++i) {
            adam->m[i] = ckpt.get<T>("adam.m." + names[i]);
            adam->v[i] = ckpt.get<T>("adam.v." + names[i]);
        }
    }
    return m;
}

} // namespace simvae
