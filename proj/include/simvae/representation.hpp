// Copyright (c) 2026 the simvae authors
// SPDX-License-Identifier: Apache-2.0
//
// Frozen-representation tables: the interchange format between training
// (which exports encoder outputs) and evaluation (which probes them).

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "simvae/checkpoint.hpp"
#include "simvae/errors.hpp"

namespace simvae {

// N rows of representations with aligned content labels and, when the
// dataset provides them, per-row style variables.
struct RepresentationTable {
    std::int64_t n = 0, d = 0, s = 0; // rows, representation dim, style dim
    std::vector<float> z;             // [n, d]
    std::vector<std::int64_t> y;      // [n]
    std::vector<float> style;         // [n, s]; empty when s == 0
    std::string checkpoint_id;
    std::string dataset_id;

    const float* row(std::int64_t i) const { return z.data() + i * d; }

    void validate() const {
        if (static_cast<std::int64_t>(z.size()) != n * d)
            throw DimensionError("representation table: z size does not match n*d");
        if (static_cast<std::int64_t>(y.size()) != n)
            throw DimensionError("representation table: label count does not match n");
        if (static_cast<std::int64_t>(style.size()) != n * s)
            throw DimensionError("representation table: style size does not match n*s");
        for (float v : z)
            if (!std::isfinite(v)) throw NumericError("representation table has non-finite entries");
    }
};

inline void save_table(const std::string& path, const RepresentationTable& t) {
    t.validate();
    Checkpoint c;
    c.set_meta("kind", "representation_table");
    c.set_meta("checkpoint_id", t.checkpoint_id);
    c.set_meta("dataset_id", t.dataset_id);
    c.set_meta("style_dim", t.s);
    c.put("z", Shape{t.n, t.d}, t.z);
    c.put("y", Shape{t.n}, t.y);
    if (t.s > 0) c.put("style", Shape{t.n, t.s}, t.style);
    c.save(path);
}

inline RepresentationTable load_table(const std::string& path) {
    Checkpoint c = Checkpoint::load(path);
    if (c.meta("kind").value_or("") != "representation_table")
        throw DataError("not a representation table file: " + path);
    RepresentationTable t;
    const Shape zs = c.record("z").shape;
    t.n = zs[0];
    t.d = zs[1];
    t.s = c.meta_i64("style_dim");
    t.z = c.get<float>("z");
    t.y = c.get<std::int64_t>("y");
    if (t.s > 0) t.style = c.get<float>("style");
    t.checkpoint_id = c.require_meta("checkpoint_id");
    t.dataset_id = c.require_meta("dataset_id");
    t.validate();
    return t;
}

} // namespace simvae
