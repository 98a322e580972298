// Copyright (c) 2026 the simvae authors
// SPDX-License-Identifier: Apache-2.0
//
// Minimal PGM (portable graymap) export for reconstructions and samples.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "simvae/errors.hpp"

namespace simvae {

namespace detail {

// Values are clamped to [0,1] at export and quantized to 8 bits.
inline std::uint8_t quantize_pixel(float v) {
    const float c = std::clamp(v, 0.0f, 1.0f);
    return static_cast<std::uint8_t>(std::lround(c * 255.0f));
}

} // namespace detail

// Binary PGM (P5).
inline void write_pgm(const std::string& path, const std::vector<float>& img, std::int64_t h,
                      std::int64_t w) {
    if (static_cast<std::int64_t>(img.size()) != h * w)
        throw DimensionError("write_pgm: pixel count does not match h*w");
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("write_pgm: cannot open " + path);
    f << "P5\n" << w << " " << h << "\n255\n";
    std::vector<std::uint8_t> row(static_cast<std::size_t>(w));
    for (std::int64_t y = 0; y < h; ++y) {
        for (std::int64_t x = 0; x < w; ++x)
            row[static_cast<std::size_t>(x)] =
                detail::quantize_pixel(img[static_cast<std::size_t>(y * w + x)]);
        f.write(reinterpret_cast<const char*>(row.data()), w);
    }
    if (!f) throw DataError("write_pgm: write failed for " + path);
}

// ASCII PGM (P2), for eyeballing output in a terminal.
inline void write_pgm_ascii(const std::string& path, const std::vector<float>& img,
                            std::int64_t h, std::int64_t w) {
    if (static_cast<std::int64_t>(img.size()) != h * w)
        throw DimensionError("write_pgm_ascii: pixel count does not match h*w");
    std::ofstream f(path);
    if (!f) throw DataError("write_pgm_ascii: cannot open " + path);
    f << "P2\n" << w << " " << h << "\n255\n";
    for (std::int64_t y = 0; y < h; ++y) {
        for (std::int64_t x = 0; x < w; ++x) {
            f << int(detail::quantize_pixel(img[static_cast<std::size_t>(y * w + x)]));
            f << (x + 1 == w ? '\n' : ' ');
        }
    }
    if (!f) throw DataError("write_pgm_ascii: write failed for " + path);
}

// Reads back either P2 or P5 (used by tests and tooling round trips).
struct PgmImage {
    std::int64_t h = 0, w = 0;
    std::vector<float> pixels; // [0,1]
};

inline PgmImage read_pgm(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("read_pgm: cannot open " + path);
    std::string magic;
    f >> magic;
    if (magic != "P2" && magic != "P5") throw DataError("read_pgm: bad magic in " + path);
    std::int64_t w = 0, h = 0, maxval = 0;
    f >> w >> h >> maxval;
    if (w <= 0 || h <= 0 || maxval != 255)
        throw DataError("read_pgm: unsupported header in " + path);
    PgmImage img;
    img.h = h;
    img.w = w;
    img.pixels.resize(static_cast<std::size_t>(h * w));
    if (magic == "P5") {
        f.get(); // single whitespace after maxval
        std::vector<std::uint8_t> raw(img.pixels.size());
        f.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
        if (f.gcount() != static_cast<std::streamsize>(raw.size()))
            throw DataError("read_pgm: truncated payload in " + path);
        for (std::size_t i = 0; i < raw.size(); ++i) img.pixels[i] = raw[i] / 255.0f;
    } else {
        for (auto& p : img.pixels) {
            int v;
            if (!(f >> v)) throw DataError("read_pgm: truncated payload in " + path);
            p = static_cast<float>(v) / 255.0f;
        }
    }
    return img;
}

} // namespace simvae
